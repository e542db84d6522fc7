#include "dhlink/store.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using testing::code_of;
using testing::TempDir;

TEST(StoreBasics, PutGetRemove) {
  TempDir dir;
  Store store(dir.path);
  EXPECT_EQ(store.size(), 0u);
  EXPECT_FALSE(store.get("a").has_value());

  store.put("a", Json{{"v", 1}});
  store.put("b", Json{{"v", 2}});
  ASSERT_TRUE(store.get("a").has_value());
  EXPECT_EQ((*store.get("a"))["v"], 1);
  EXPECT_EQ(store.size(), 2u);

  store.put("a", Json{{"v", 10}});  // overwrite
  EXPECT_EQ((*store.get("a"))["v"], 10);
  EXPECT_EQ(store.size(), 2u);

  EXPECT_TRUE(store.remove("a"));
  EXPECT_FALSE(store.get("a").has_value());
  EXPECT_FALSE(store.remove("a"));  // second removal reports absence
  EXPECT_EQ(store.size(), 1u);
}

TEST(StoreBasics, EmptyKeyRejected) {
  TempDir dir;
  Store store(dir.path);
  EXPECT_EQ(code_of([&] { store.put("", Json::object()); }),
            ErrorCode::BadRequest);
}

TEST(StoreBasics, ListIsKeyOrderedAndPrefixBounded) {
  TempDir dir;
  Store store(dir.path);
  store.put("users/b", Json{{"n", 2}});
  store.put("users/a", Json{{"n", 1}});
  store.put("users0", Json{{"n", 99}});  // '0' > '/', sorts after the prefix
  store.put("user", Json{{"n", 0}});
  store.put("users/c/nested", Json{{"n", 3}});

  auto rows = store.list("users/");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].first, "users/a");
  EXPECT_EQ(rows[1].first, "users/b");
  EXPECT_EQ(rows[2].first, "users/c/nested");

  EXPECT_EQ(store.list("").size(), 5u);
  EXPECT_TRUE(store.list("nothing/").empty());
}

TEST(StoreDurability, ReloadsFromLogAndContinuesSequence) {
  TempDir dir;
  {
    Store store(dir.path);
    store.put("k1", Json{{"x", 1}});
    store.put("k2", Json{{"x", 2}});
    store.put("k1", Json{{"x", 3}});
    store.remove("k2");
  }
  Store store(dir.path);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ((*store.get("k1"))["x"], 3);
  EXPECT_FALSE(store.get("k2").has_value());

  // Sequence numbers continue past everything in the log.
  auto watch = store.watch("");
  store.put("k3", Json{{"x", 4}});
  auto changes = watch->drain();
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].seq, 5);
}

TEST(StoreDurability, TornTailLineIsIgnored) {
  TempDir dir;
  {
    Store store(dir.path);
    store.put("good", Json{{"v", 1}});
  }
  {
    std::ofstream wal(dir.path + "/store.jsonl", std::ios::app);
    wal << "{\"seq\":2,\"op\":\"put\",\"key\":\"torn\",\"value\":{\"v";  // no newline, cut mid-record
  }
  Store store(dir.path);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_TRUE(store.get("good").has_value());
  EXPECT_FALSE(store.get("torn").has_value());
  // The store stays writable after recovery.
  store.put("after", Json{{"v", 2}});
  Store reread(dir.path);
  EXPECT_TRUE(reread.get("after").has_value());
}

TEST(StoreDurability, PutIsOnDiskBeforeReturning) {
  TempDir dir;
  Store store(dir.path);
  store.put("k", Json{{"v", 42}});
  // A second instance reading the same directory sees the committed put even
  // though the first store is still open.
  std::ifstream in(dir.path + "/store.jsonl");
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  Json entry = Json::parse(line);
  EXPECT_EQ(entry["op"], "put");
  EXPECT_EQ(entry["key"], "k");
  EXPECT_EQ(entry["value"]["v"], 42);
}

TEST(StoreWatch, DeliversCommitOrderExactlyOnce) {
  TempDir dir;
  Store store(dir.path);
  auto watch = store.watch("");

  store.put("a", Json{{"v", 1}});
  store.put("b", Json{{"v", 2}});
  store.remove("a");

  auto changes = watch->drain();
  ASSERT_EQ(changes.size(), 3u);
  EXPECT_EQ(changes[0].op, "put");
  EXPECT_EQ(changes[0].key, "a");
  EXPECT_EQ(changes[1].key, "b");
  EXPECT_EQ(changes[2].op, "del");
  EXPECT_EQ(changes[2].key, "a");
  EXPECT_LT(changes[0].seq, changes[1].seq);
  EXPECT_LT(changes[1].seq, changes[2].seq);

  // Drain clears: nothing is delivered twice.
  EXPECT_TRUE(watch->drain().empty());
}

TEST(StoreWatch, PrefixFilters) {
  TempDir dir;
  Store store(dir.path);
  auto nudges = store.watch("nudges/");
  auto all = store.watch("");

  store.put("nudges/u1", Json{{"v", 1}});
  store.put("alerts/u1", Json{{"v", 2}});
  store.put("nudges/u2", Json{{"v", 3}});

  auto filtered = nudges->drain();
  ASSERT_EQ(filtered.size(), 2u);
  EXPECT_EQ(filtered[0].key, "nudges/u1");
  EXPECT_EQ(filtered[1].key, "nudges/u2");
  EXPECT_EQ(all->drain().size(), 3u);
}

TEST(StoreWatch, MissesNothingBeforeItStartedButNothingAfter) {
  TempDir dir;
  Store store(dir.path);
  store.put("early", Json{{"v", 1}});
  auto watch = store.watch("");
  store.put("late", Json{{"v", 2}});
  auto changes = watch->drain();
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].key, "late");
}

TEST(StoreWatch, SlowWatcherOverflowsAloneKeepingEarliestChanges) {
  TempDir dir;
  Store store(dir.path);
  auto slow = store.watch("");
  auto fast = store.watch("");

  for (int i = 0; i < 1100; ++i) {
    store.put("k" + std::to_string(i), Json{{"i", i}});
    if (i % 100 == 0) fast->drain();
  }

  EXPECT_TRUE(slow->overflowed());
  auto kept = slow->drain();
  EXPECT_EQ(kept.size(), 1024u);
  EXPECT_EQ(kept.front().key, "k0");
  EXPECT_EQ(kept.back().key, "k1023");

  EXPECT_FALSE(fast->overflowed());
  // After a drain the slow watcher receives changes again.
  store.put("fresh", Json{{"v", 1}});
  auto next = slow->drain();
  ASSERT_EQ(next.size(), 1u);
  EXPECT_EQ(next[0].key, "fresh");
}

TEST(StoreWatch, DroppedWatcherStopsReceiving) {
  TempDir dir;
  Store store(dir.path);
  auto watch = store.watch("");
  watch.reset();
  store.put("a", Json{{"v", 1}});  // must not crash on the expired watcher
  auto other = store.watch("");
  store.put("b", Json{{"v", 2}});
  EXPECT_EQ(other->drain().size(), 1u);
}

TEST(StoreWatch, ConcurrentWritersDeliverEverySeqOnce) {
  TempDir dir;
  Store store(dir.path);
  auto watch = store.watch("");
  constexpr int kPerThread = 200;

  std::thread a([&] {
    for (int i = 0; i < kPerThread; ++i)
      store.put("a" + std::to_string(i), Json{{"i", i}});
  });
  std::thread b([&] {
    for (int i = 0; i < kPerThread; ++i)
      store.put("b" + std::to_string(i), Json{{"i", i}});
  });
  a.join();
  b.join();

  auto changes = watch->drain();
  ASSERT_EQ(changes.size(), 2u * kPerThread);
  std::set<int64_t> seqs;
  int64_t prev = 0;
  for (const auto& change : changes) {
    EXPECT_GT(change.seq, prev);  // strictly increasing commit order
    prev = change.seq;
    seqs.insert(change.seq);
  }
  EXPECT_EQ(seqs.size(), changes.size());
}

}  // namespace
}  // namespace dhlink
