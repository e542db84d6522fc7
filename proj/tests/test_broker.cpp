#include "dhlink/broker.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "dhlink/errors.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using testing::code_of;
using testing::TempDir;

Envelope make_envelope(const std::string& topic, const std::string& section,
                       const std::string& message_id,
                       const std::string& body = "{\"v\":1}") {
  Envelope e;
  e.topic = topic;
  e.section = section;
  e.schema = "vitals";
  e.schema_version = 1;
  e.sender = "sender-1";
  e.message_id = message_id;
  e.sent_at = 1767600000000;
  e.encrypted = false;
  e.payload = body;
  return e;
}

struct TestClock {
  std::shared_ptr<std::atomic<int64_t>> now =
      std::make_shared<std::atomic<int64_t>>(1767600000000);
  util::Clock fn() const {
    auto ptr = now;
    return [ptr] { return ptr->load(); };
  }
};

TEST(SectionIds, DerivedFromTopicAndReceiver) {
  // sha256("vitals:recv-1") and sha256("alpha:r2"), first 12 hex digits,
  // computed with an external tool.
  EXPECT_EQ(Broker::section_id_for("vitals", "recv-1"), "s-269a1c33087a");
  EXPECT_EQ(Broker::section_id_for("alpha", "r2"), "s-18324437b2e6");
  EXPECT_NE(Broker::section_id_for("vitals", "recv-1"),
            Broker::section_id_for("vitals", "recv-2"));
  EXPECT_NE(Broker::section_id_for("vitals", "recv-1"),
            Broker::section_id_for("vitals2", "recv-1"));
}

TEST(TopicLifecycle, CreateListDescribeDelete) {
  TempDir dir;
  Broker broker(dir.path);
  TopicConfig config;
  TopicInfo info = broker.create_topic("vitals", TopicPolicy::Retained,
                                       "vitals", 1, config);
  EXPECT_EQ(info.name, "vitals");
  EXPECT_EQ(info.status, TopicStatus::Created);

  EXPECT_EQ(code_of([&] {
              broker.create_topic("vitals", TopicPolicy::Retained, "vitals", 1,
                                  config);
            }),
            ErrorCode::DuplicateName);
  EXPECT_EQ(code_of([&] {
              broker.create_topic("Bad Name", TopicPolicy::Retained, "v", 1,
                                  config);
            }),
            ErrorCode::BadRequest);

  broker.create_topic("alerts", TopicPolicy::Realtime, "alert", 1, config);
  EXPECT_EQ(broker.list_topics().size(), 2u);
  EXPECT_EQ(broker.topic_info("alerts").policy, TopicPolicy::Realtime);

  broker.delete_topic("alerts");
  EXPECT_EQ(broker.list_topics().size(), 1u);
  EXPECT_EQ(code_of([&] { broker.topic_info("alerts"); }),
            ErrorCode::UnknownTopic);
  EXPECT_EQ(code_of([&] { broker.delete_topic("alerts"); }),
            ErrorCode::UnknownTopic);
}

TEST(TopicLifecycle, StatusMovesOneWay) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Retained, "v", 1, TopicConfig{});

  broker.set_topic_status("vitals", TopicStatus::Ready);
  EXPECT_EQ(broker.topic_info("vitals").status, TopicStatus::Ready);
  // Same-status set is a no-op, not an error.
  broker.set_topic_status("vitals", TopicStatus::Ready);

  broker.set_topic_status("vitals", TopicStatus::Retired);
  EXPECT_EQ(code_of([&] {
              broker.set_topic_status("vitals", TopicStatus::Ready);
            }),
            ErrorCode::IllegalTransition);
  EXPECT_EQ(code_of([&] {
              broker.set_topic_status("vitals", TopicStatus::Created);
            }),
            ErrorCode::IllegalTransition);
}

TEST(TopicConfigJson, PerPolicyParsing) {
  TopicConfig rt = topic_config_from_json(TopicPolicy::Realtime,
                                          Json{{"bufferSize", 64}});
  EXPECT_EQ(rt.buffer_size, 64);
  EXPECT_EQ(topic_config_from_json(TopicPolicy::Realtime, Json::object())
                .buffer_size,
            1024);
  EXPECT_EQ(code_of([] {
              topic_config_from_json(TopicPolicy::Realtime,
                                     Json{{"bufferSize", 0}});
            }),
            ErrorCode::BadRequest);

  TopicConfig rd = topic_config_from_json(TopicPolicy::Retained,
                                          Json{{"maxAgeSeconds", 3600}});
  ASSERT_TRUE(rd.max_age_seconds.has_value());
  EXPECT_EQ(*rd.max_age_seconds, 3600);
  EXPECT_FALSE(topic_config_from_json(TopicPolicy::Retained, Json::object())
                   .max_age_seconds.has_value());

  TopicConfig tr = topic_config_from_json(TopicPolicy::Transient,
                                          Json::object());
  EXPECT_EQ(tr.max_age_seconds.value_or(0), 60);
}

TEST(Sections, AllocationIsIdempotentPerReceiver) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Retained, "v", 1, TopicConfig{});

  std::string sid = broker.allocate_section("vitals", "recv-1");
  EXPECT_EQ(sid, Broker::section_id_for("vitals", "recv-1"));
  EXPECT_EQ(broker.allocate_section("vitals", "recv-1"), sid);
  EXPECT_EQ(broker.topic_info("vitals").sections.size(), 1u);

  EXPECT_EQ(broker.find_section("vitals", "recv-1").value_or(""), sid);
  EXPECT_FALSE(broker.find_section("vitals", "recv-2").has_value());

  broker.set_topic_status("vitals", TopicStatus::Retired);
  EXPECT_EQ(code_of([&] { broker.allocate_section("vitals", "recv-3"); }),
            ErrorCode::TopicRetired);
}

TEST(Append, RequiresReadyTopicAndMatchingEnvelope) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Retained, "v", 1, TopicConfig{});
  std::string sid = broker.allocate_section("vitals", "recv-1");
  Envelope e = make_envelope("vitals", sid, "m-1");

  EXPECT_EQ(code_of([&] { broker.append("vitals", sid, e); }),
            ErrorCode::TopicNotReady);

  broker.set_topic_status("vitals", TopicStatus::Ready);
  EXPECT_EQ(broker.append("vitals", sid, e), 0);

  Envelope wrong_topic = make_envelope("other", sid, "m-2");
  EXPECT_EQ(code_of([&] { broker.append("vitals", sid, wrong_topic); }),
            ErrorCode::EnvelopeMismatch);
  Envelope wrong_section = make_envelope("vitals", "s-000000000000", "m-3");
  EXPECT_EQ(code_of([&] { broker.append("vitals", sid, wrong_section); }),
            ErrorCode::EnvelopeMismatch);

  EXPECT_EQ(code_of([&] { broker.append("nope", sid, e); }),
            ErrorCode::UnknownTopic);
  Envelope other_section_env = make_envelope("vitals", "s-beadbeadbead", "m-4");
  EXPECT_EQ(code_of([&] {
              broker.append("vitals", "s-beadbeadbead", other_section_env);
            }),
            ErrorCode::UnknownSection);

  broker.set_topic_status("vitals", TopicStatus::Retired);
  EXPECT_EQ(code_of([&] { broker.append("vitals", sid, e); }),
            ErrorCode::TopicRetired);
}

TEST(Append, OffsetsAreDenseFromZero) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Retained, "v", 1, TopicConfig{});
  std::string sid = broker.allocate_section("vitals", "recv-1");
  broker.set_topic_status("vitals", TopicStatus::Ready);

  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(broker.append("vitals", sid,
                            make_envelope("vitals", sid,
                                          "m-" + std::to_string(i))),
              i);
  }
  auto records = broker.fetch("vitals", sid, 0, 100);
  ASSERT_EQ(records.size(), 20u);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(records[i].offset, i);
    EXPECT_EQ(records[i].envelope.message_id, "m-" + std::to_string(i));
  }
}

TEST(Fetch, WindowsByOffsetAndCount) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Retained, "v", 1, TopicConfig{});
  std::string sid = broker.allocate_section("vitals", "recv-1");
  broker.set_topic_status("vitals", TopicStatus::Ready);
  for (int i = 0; i < 10; ++i)
    broker.append("vitals", sid,
                  make_envelope("vitals", sid, "m-" + std::to_string(i)));

  auto page = broker.fetch("vitals", sid, 3, 4);
  ASSERT_EQ(page.size(), 4u);
  EXPECT_EQ(page.front().offset, 3);
  EXPECT_EQ(page.back().offset, 6);

  EXPECT_TRUE(broker.fetch("vitals", sid, 10, 5).empty());
  EXPECT_EQ(broker.fetch("vitals", sid, 9, 100).size(), 1u);

  EXPECT_EQ(code_of([&] { broker.fetch("vitals", sid, -1, 5); }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([&] { broker.fetch("vitals", sid, 0, 0); }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([&] { broker.fetch("vitals", sid, 0, 100001); }),
            ErrorCode::BadRequest);
  EXPECT_EQ(code_of([&] { broker.fetch("vitals", "s-000000000000", 0, 5); }),
            ErrorCode::UnknownSection);
}

TEST(Fetch, SectionsAreIsolated) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Retained, "v", 1, TopicConfig{});
  std::string s1 = broker.allocate_section("vitals", "recv-1");
  std::string s2 = broker.allocate_section("vitals", "recv-2");
  broker.set_topic_status("vitals", TopicStatus::Ready);

  broker.append("vitals", s1, make_envelope("vitals", s1, "to-r1"));
  broker.append("vitals", s2, make_envelope("vitals", s2, "to-r2-a"));
  broker.append("vitals", s2, make_envelope("vitals", s2, "to-r2-b"));

  auto r1 = broker.fetch("vitals", s1, 0, 10);
  auto r2 = broker.fetch("vitals", s2, 0, 10);
  ASSERT_EQ(r1.size(), 1u);
  ASSERT_EQ(r2.size(), 2u);
  EXPECT_EQ(r1[0].envelope.message_id, "to-r1");
  EXPECT_EQ(r2[0].envelope.message_id, "to-r2-a");
}

TEST(Retention, RealtimeRingKeepsNewest) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("stream", TopicPolicy::Realtime, "v", 1,
                      topic_config_from_json(TopicPolicy::Realtime,
                                             Json{{"bufferSize", 16}}));
  std::string sid = broker.allocate_section("stream", "recv-1");
  broker.set_topic_status("stream", TopicStatus::Ready);

  for (int i = 0; i < 40; ++i)
    broker.append("stream", sid,
                  make_envelope("stream", sid, "m-" + std::to_string(i)));

  auto records = broker.fetch("stream", sid, 0, 100);
  ASSERT_EQ(records.size(), 16u);
  EXPECT_EQ(records.front().offset, 24);  // offsets keep advancing
  EXPECT_EQ(records.back().offset, 39);
  EXPECT_EQ(records.front().envelope.message_id, "m-24");
}

TEST(Retention, RetainedDropsOnlyRecordsOlderThanMaxAge) {
  TempDir dir;
  TestClock clock;
  Broker broker(dir.path, clock.fn());
  broker.create_topic("history", TopicPolicy::Retained, "v", 1,
                      topic_config_from_json(TopicPolicy::Retained,
                                             Json{{"maxAgeSeconds", 100}}));
  std::string sid = broker.allocate_section("history", "recv-1");
  broker.set_topic_status("history", TopicStatus::Ready);

  const int64_t t0 = clock.now->load();
  broker.append("history", sid, make_envelope("history", sid, "old"));
  clock.now->store(t0 + 50'000);
  broker.append("history", sid, make_envelope("history", sid, "young"));

  // Nothing is old enough yet.
  EXPECT_EQ(broker.enforce_retention("history", t0 + 99'999), 0);
  // At exactly maxAge the first record is still within its lifetime.
  EXPECT_EQ(broker.enforce_retention("history", t0 + 100'000), 0);
  // One millisecond later it is stale.
  EXPECT_EQ(broker.enforce_retention("history", t0 + 100'001), 1);

  auto records = broker.fetch("history", sid, 0, 10);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].envelope.message_id, "young");
}

TEST(Retention, RetainedWithoutMaxAgeKeepsForever) {
  TempDir dir;
  TestClock clock;
  Broker broker(dir.path, clock.fn());
  broker.create_topic("keep", TopicPolicy::Retained, "v", 1, TopicConfig{});
  std::string sid = broker.allocate_section("keep", "recv-1");
  broker.set_topic_status("keep", TopicStatus::Ready);
  broker.append("keep", sid, make_envelope("keep", sid, "m-1"));
  EXPECT_EQ(broker.enforce_retention("keep",
                                     clock.now->load() + 365LL * 86400'000),
            0);
  EXPECT_EQ(broker.fetch("keep", sid, 0, 10).size(), 1u);
}

TEST(Retention, TransientPurgesOnDelivery) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("inbox", TopicPolicy::Transient, "v", 1,
                      topic_config_from_json(TopicPolicy::Transient,
                                             Json::object()));
  std::string sid = broker.allocate_section("inbox", "recv-1");
  broker.set_topic_status("inbox", TopicStatus::Ready);
  for (int i = 0; i < 3; ++i)
    broker.append("inbox", sid,
                  make_envelope("inbox", sid, "m-" + std::to_string(i)));

  auto first = broker.fetch("inbox", sid, 0, 10);
  ASSERT_EQ(first.size(), 3u);
  EXPECT_TRUE(first[0].delivered);

  // Delivered records are gone; offsets are not reused.
  EXPECT_TRUE(broker.fetch("inbox", sid, 0, 10).empty());
  EXPECT_EQ(broker.append("inbox", sid, make_envelope("inbox", sid, "m-3")),
            3);
  auto second = broker.fetch("inbox", sid, 0, 10);
  ASSERT_EQ(second.size(), 1u);
  EXPECT_EQ(second[0].offset, 3);
}

TEST(Retention, TransientBackstopDropsNeverFetchedRecords) {
  TempDir dir;
  TestClock clock;
  Broker broker(dir.path, clock.fn());
  broker.create_topic("inbox", TopicPolicy::Transient, "v", 1,
                      topic_config_from_json(TopicPolicy::Transient,
                                             Json::object()));
  std::string sid = broker.allocate_section("inbox", "recv-1");
  broker.set_topic_status("inbox", TopicStatus::Ready);
  const int64_t t0 = clock.now->load();
  broker.append("inbox", sid, make_envelope("inbox", sid, "stale"));

  EXPECT_EQ(broker.enforce_retention_all(t0 + 60'000), 0);
  EXPECT_EQ(broker.enforce_retention_all(t0 + 60'001), 1);
  EXPECT_TRUE(broker.fetch("inbox", sid, 0, 10).empty());
}

TEST(Durability, SurvivesRestartWithOffsetsIntact) {
  TempDir dir;
  std::string sid;
  {
    Broker broker(dir.path);
    broker.create_topic("vitals", TopicPolicy::Retained, "v", 3,
                        TopicConfig{});
    sid = broker.allocate_section("vitals", "recv-1");
    broker.set_topic_status("vitals", TopicStatus::Ready);
    for (int i = 0; i < 5; ++i)
      broker.append("vitals", sid,
                    make_envelope("vitals", sid, "m-" + std::to_string(i)));
  }
  Broker broker(dir.path);
  TopicInfo info = broker.topic_info("vitals");
  EXPECT_EQ(info.status, TopicStatus::Ready);
  EXPECT_EQ(info.schema_version, 3);
  ASSERT_EQ(info.sections.size(), 1u);
  EXPECT_EQ(info.sections[0].next_offset, 5);

  auto records = broker.fetch("vitals", sid, 0, 10);
  ASSERT_EQ(records.size(), 5u);
  EXPECT_EQ(records[4].envelope.message_id, "m-4");
  EXPECT_EQ(broker.append("vitals", sid, make_envelope("vitals", sid, "m-5")),
            5);
}

TEST(Durability, TransientOffsetsNeverRewindAfterRestart) {
  TempDir dir;
  std::string sid;
  {
    Broker broker(dir.path);
    broker.create_topic("inbox", TopicPolicy::Transient, "v", 1,
                        topic_config_from_json(TopicPolicy::Transient,
                                               Json::object()));
    sid = broker.allocate_section("inbox", "recv-1");
    broker.set_topic_status("inbox", TopicStatus::Ready);
    for (int i = 0; i < 3; ++i)
      broker.append("inbox", sid,
                    make_envelope("inbox", sid, "m-" + std::to_string(i)));
    broker.fetch("inbox", sid, 0, 10);  // purges all three on delivery
  }
  Broker broker(dir.path);
  EXPECT_EQ(broker.append("inbox", sid, make_envelope("inbox", sid, "m-3")),
            3);
}

TEST(Durability, TornLogTailIsSkipped) {
  TempDir dir;
  std::string sid;
  {
    Broker broker(dir.path);
    broker.create_topic("vitals", TopicPolicy::Retained, "v", 1,
                        TopicConfig{});
    sid = broker.allocate_section("vitals", "recv-1");
    broker.set_topic_status("vitals", TopicStatus::Ready);
    broker.append("vitals", sid, make_envelope("vitals", sid, "m-0"));
  }
  {
    std::ofstream log(dir.path + "/vitals/" + sid + ".log", std::ios::app);
    log << "{\"offset\":1,\"appendedAt\":12345,\"env";  // cut mid-record
  }
  Broker broker(dir.path);
  auto records = broker.fetch("vitals", sid, 0, 10);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].envelope.message_id, "m-0");
  EXPECT_EQ(broker.append("vitals", sid, make_envelope("vitals", sid, "m-1")),
            1);
}

TEST(Concurrency, ParallelSectionsStayFifoWithDenseOffsets) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("load", TopicPolicy::Retained, "v", 1, TopicConfig{});
  broker.set_topic_status("load", TopicStatus::Ready);

  constexpr int kSections = 8;
  constexpr int kPerSection = 400;
  std::vector<std::string> sids;
  for (int s = 0; s < kSections; ++s)
    sids.push_back(broker.allocate_section("load", "recv-" + std::to_string(s)));

  std::vector<std::thread> writers;
  for (int s = 0; s < kSections; ++s) {
    writers.emplace_back([&, s] {
      for (int i = 0; i < kPerSection; ++i) {
        Envelope e = make_envelope("load", sids[s],
                                   "m-" + std::to_string(s) + "-" +
                                       std::to_string(i),
                                   "{\"i\":" + std::to_string(i) + "}");
        broker.append("load", sids[s], e);
      }
    });
  }
  for (auto& t : writers) t.join();

  for (int s = 0; s < kSections; ++s) {
    auto records = broker.fetch("load", sids[s], 0, kPerSection + 10);
    ASSERT_EQ(records.size(), static_cast<size_t>(kPerSection));
    for (int i = 0; i < kPerSection; ++i) {
      EXPECT_EQ(records[i].offset, i);
      EXPECT_EQ(records[i].envelope.message_id,
                "m-" + std::to_string(s) + "-" + std::to_string(i));
    }
  }
}

TEST(InfoJson, TopicInfoRoundTrips) {
  TempDir dir;
  Broker broker(dir.path);
  broker.create_topic("vitals", TopicPolicy::Realtime, "v", 2,
                      topic_config_from_json(TopicPolicy::Realtime,
                                             Json{{"bufferSize", 8}}));
  broker.allocate_section("vitals", "recv-1");
  TopicInfo info = broker.topic_info("vitals");
  Json doc = info;
  TopicInfo back = doc.get<TopicInfo>();
  EXPECT_EQ(back.name, info.name);
  EXPECT_EQ(back.policy, info.policy);
  EXPECT_EQ(back.config, info.config);
  ASSERT_EQ(back.sections.size(), 1u);
  EXPECT_EQ(back.sections[0].section_id, info.sections[0].section_id);
}

}  // namespace
}  // namespace dhlink
