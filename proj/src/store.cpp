#include "dhlink/store.hpp"

#include <fstream>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

namespace {

constexpr size_t kWatchQueueLimit = 1024;

}  // namespace

std::vector<Store::Change> Store::Watch::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Change> out(queue_.begin(), queue_.end());
  queue_.clear();
  return out;
}

bool Store::Watch::overflowed() const {
  std::lock_guard lock(mutex_);
  return overflowed_;
}

Store::Store(std::string data_dir) : data_dir_(std::move(data_dir)) {
  util::ensure_dir(data_dir_);
  load();
  wal_ = std::make_unique<std::ofstream>(data_dir_ + "/store.jsonl",
                                         std::ios::app);
  if (!wal_->good()) {
    fail(ErrorCode::IoError, "cannot open store log in " + data_dir_);
  }
}

Store::~Store() = default;

void Store::load() {
  std::ifstream in(data_dir_ + "/store.jsonl");
  if (!in.good()) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json entry = Json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.is_object()) continue;  // torn tail
    if (!entry.contains("seq") || !entry.contains("op") ||
        !entry.contains("key")) {
      continue;
    }
    int64_t seq = entry["seq"].get<int64_t>();
    std::string op = entry["op"].get<std::string>();
    std::string key = entry["key"].get<std::string>();
    if (op == "put") {
      data_[key] = entry.value("value", Json::object());
    } else if (op == "del") {
      data_.erase(key);
    }
    next_seq_ = std::max(next_seq_, seq + 1);
  }
}

void Store::commit(const std::string& op, const std::string& key,
                   const Json& value) {
  Change change;
  change.seq = next_seq_++;
  change.op = op;
  change.key = key;
  change.value = value;

  Json line = {{"seq", change.seq}, {"op", op}, {"key", key}};
  if (op == "put") line["value"] = value;
  (*wal_) << line.dump() << "\n";
  wal_->flush();
  if (!wal_->good()) {
    fail(ErrorCode::IoError, "store log write failed");
  }

  if (op == "put") {
    data_[key] = value;
  } else {
    data_.erase(key);
  }

  auto alive = watchers_.begin();
  for (auto it = watchers_.begin(); it != watchers_.end(); ++it) {
    auto watcher = it->lock();
    if (!watcher) continue;
    *alive++ = *it;
    if (key.rfind(watcher->prefix_, 0) != 0) continue;
    std::lock_guard wlock(watcher->mutex_);
    if (watcher->queue_.size() >= kWatchQueueLimit) {
      watcher->overflowed_ = true;
      continue;
    }
    watcher->queue_.push_back(change);
  }
  watchers_.erase(alive, watchers_.end());
}

void Store::put(const std::string& key, const Json& value) {
  if (key.empty()) fail(ErrorCode::BadRequest, "empty store key");
  std::lock_guard lock(mutex_);
  commit("put", key, value);
}

std::optional<Json> Store::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

bool Store::remove(const std::string& key) {
  std::lock_guard lock(mutex_);
  if (data_.find(key) == data_.end()) return false;
  commit("del", key, Json::object());
  return true;
}

std::vector<std::pair<std::string, Json>> Store::list(
    const std::string& prefix) const {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<std::string, Json>> out;
  for (auto it = data_.lower_bound(prefix); it != data_.end(); ++it) {
    if (it->first.rfind(prefix, 0) != 0) break;
    out.emplace_back(it->first, it->second);
  }
  return out;
}

size_t Store::size() const {
  std::lock_guard lock(mutex_);
  return data_.size();
}

std::shared_ptr<Store::Watch> Store::watch(const std::string& prefix) {
  std::lock_guard lock(mutex_);
  auto watcher = std::shared_ptr<Watch>(new Watch());
  watcher->prefix_ = prefix;
  watchers_.push_back(watcher);
  return watcher;
}

}  // namespace dhlink
