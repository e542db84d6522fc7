#include "dhlink/keycache.hpp"

namespace dhlink {

KeyCache::KeyCache(size_t capacity, int64_t ttl_seconds)
    : capacity_(capacity == 0 ? 1 : capacity), ttl_seconds_(ttl_seconds) {}

std::string KeyCache::make_key(const std::string& topic,
                               const std::string& section_id, KeyKind kind) {
  return topic + "/" + section_id +
         (kind == KeyKind::Public ? "/public" : "/private");
}

std::optional<KeyCache::CachedKey> KeyCache::get(const std::string& topic,
                                                 const std::string& section_id,
                                                 KeyKind kind, int64_t now_ms) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(make_key(topic, section_id, kind));
  if (it == index_.end()) return std::nullopt;
  Entry& entry = *it->second;
  if (now_ms >= entry.fetched_at + entry.ttl_seconds * 1000) {
    lru_.erase(it->second);
    index_.erase(it);
    return std::nullopt;
  }
  lru_.splice(lru_.begin(), lru_, it->second);
  return entry.value;
}

void KeyCache::put(const std::string& topic, const std::string& section_id,
                   KeyKind kind, const std::string& key_id,
                   const crypto::Bytes& key, int64_t now_ms) {
  std::lock_guard lock(mutex_);
  std::string cache_key = make_key(topic, section_id, kind);
  auto it = index_.find(cache_key);
  if (it != index_.end()) {
    lru_.erase(it->second);
    index_.erase(it);
  }
  while (lru_.size() >= capacity_) {
    index_.erase(lru_.back().cache_key);
    lru_.pop_back();
  }
  Entry entry;
  entry.cache_key = cache_key;
  entry.value = {key_id, key};
  entry.fetched_at = now_ms;
  entry.ttl_seconds = ttl_seconds_;
  lru_.push_front(std::move(entry));
  index_[cache_key] = lru_.begin();
}

void KeyCache::invalidate(const std::string& topic,
                          const std::string& section_id) {
  std::lock_guard lock(mutex_);
  for (KeyKind kind : {KeyKind::Public, KeyKind::Private}) {
    auto it = index_.find(make_key(topic, section_id, kind));
    if (it == index_.end()) continue;
    lru_.erase(it->second);
    index_.erase(it);
  }
}

size_t KeyCache::size() const {
  std::lock_guard lock(mutex_);
  return lru_.size();
}

}  // namespace dhlink
