#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "dhlink/crypto.hpp"

namespace dhlink {

enum class KeyKind { Public, Private };

// Bounded LRU of section keys with per-entry TTL. An entry is usable strictly
// before fetchedAt + ttl; at the boundary it is already expired. Both hits
// and puts refresh recency.
class KeyCache {
 public:
  explicit KeyCache(size_t capacity = 1024, int64_t ttl_seconds = 300);

  struct CachedKey {
    std::string key_id;
    crypto::Bytes key;
  };

  std::optional<CachedKey> get(const std::string& topic,
                               const std::string& section_id, KeyKind kind,
                               int64_t now_ms);
  void put(const std::string& topic, const std::string& section_id,
           KeyKind kind, const std::string& key_id, const crypto::Bytes& key,
           int64_t now_ms);
  void invalidate(const std::string& topic, const std::string& section_id);

  size_t size() const;
  int64_t ttl_seconds() const { return ttl_seconds_; }

 private:
  struct Entry {
    std::string cache_key;
    CachedKey value;
    int64_t fetched_at = 0;
    int64_t ttl_seconds = 0;
  };

  static std::string make_key(const std::string& topic,
                              const std::string& section_id, KeyKind kind);

  size_t capacity_;
  int64_t ttl_seconds_;
  mutable std::mutex mutex_;
  std::list<Entry> lru_;  // front = most recently used
  std::map<std::string, std::list<Entry>::iterator> index_;
};

}  // namespace dhlink
