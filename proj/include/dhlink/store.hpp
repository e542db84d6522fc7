#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dhlink/json.hpp"

namespace dhlink {

// Ordered key-value store with a JSON-lines write-ahead log and watchable
// change feeds. A put is flushed to the log before it returns. Watchers see
// every committed change under their prefix exactly once, in commit order;
// a slow watcher overflows its own bounded queue without affecting others.
class Store {
 public:
  struct Change {
    int64_t seq = 0;
    std::string op;  // put | del
    std::string key;
    Json value;  // empty object for del
  };

  class Watch {
   public:
    // Returns accumulated changes in commit order and clears the queue.
    std::vector<Change> drain();
    bool overflowed() const;

   private:
    friend class Store;
    std::string prefix_;
    mutable std::mutex mutex_;
    std::deque<Change> queue_;
    bool overflowed_ = false;
  };

  explicit Store(std::string data_dir);
  ~Store();

  void put(const std::string& key, const Json& value);
  std::optional<Json> get(const std::string& key) const;
  bool remove(const std::string& key);
  // Key-ordered (key, value) pairs under prefix.
  std::vector<std::pair<std::string, Json>> list(
      const std::string& prefix) const;
  size_t size() const;

  std::shared_ptr<Watch> watch(const std::string& prefix);

 private:
  void commit(const std::string& op, const std::string& key, const Json& value);
  void load();

  std::string data_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, Json> data_;
  int64_t next_seq_ = 1;
  std::vector<std::weak_ptr<Watch>> watchers_;
  std::unique_ptr<std::ofstream> wal_;
};

}  // namespace dhlink
