#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dhlink/envelope.hpp"
#include "dhlink/json.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

enum class TopicPolicy { Realtime, Retained, Transient };
enum class TopicStatus { Created, Ready, Retired };

const char* topic_policy_name(TopicPolicy policy);
TopicPolicy topic_policy_from_name(const std::string& name);
const char* topic_status_name(TopicStatus status);
TopicStatus topic_status_from_name(const std::string& name);

struct TopicConfig {
  // Realtime: each section keeps the newest bufferSize records.
  int64_t buffer_size = 1024;
  // Retained: drop records older than maxAge seconds; absent = keep forever.
  // Transient: maxAge backstop for never-fetched records (default 60 s).
  std::optional<int64_t> max_age_seconds;

  bool operator==(const TopicConfig&) const = default;
};

TopicConfig topic_config_from_json(TopicPolicy policy, const Json& doc);
Json topic_config_to_json(TopicPolicy policy, const TopicConfig& config);

struct RoutedRecord {
  int64_t offset = 0;
  Envelope envelope;
  int64_t appended_at = 0;
  bool delivered = false;
};

struct SectionInfo {
  std::string section_id;
  std::string receiver_id;
  int64_t next_offset = 0;
  int64_t record_count = 0;
};

struct TopicInfo {
  std::string name;
  TopicPolicy policy = TopicPolicy::Retained;
  std::string schema_name;
  int schema_version = 1;
  TopicStatus status = TopicStatus::Created;
  TopicConfig config;
  std::vector<SectionInfo> sections;
};

void to_json(Json& j, const RoutedRecord& r);
void from_json(const Json& j, RoutedRecord& r);
void to_json(Json& j, const SectionInfo& s);
void from_json(const Json& j, SectionInfo& s);
void to_json(Json& j, const TopicInfo& t);
void from_json(const Json& j, TopicInfo& t);

// Store-and-forward hub: named topics, one FIFO sub-log per receiver section,
// pull-based consumption, per-policy retention. Persists everything under
// data_dir (topics.json plus one JSON-lines log per section) and reloads on
// construction; an append is flushed to its log before the call returns.
//
// Callers are trusted here: identity and ACL checks happen in the service
// layer before these methods run.
class Broker {
 public:
  struct Section;
  struct Topic;

  explicit Broker(std::string data_dir, util::Clock clock = util::system_clock());
  ~Broker();

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  TopicInfo create_topic(const std::string& name, TopicPolicy policy,
                         const std::string& schema_name, int schema_version,
                         const TopicConfig& config);
  void delete_topic(const std::string& name);
  // One-way created -> ready -> retired.
  void set_topic_status(const std::string& name, TopicStatus status);
  TopicInfo topic_info(const std::string& name) const;
  std::vector<TopicInfo> list_topics() const;

  // Idempotent per receiver: repeated calls return the existing sectionId.
  std::string allocate_section(const std::string& topic,
                               const std::string& receiver_id);
  std::optional<std::string> find_section(const std::string& topic,
                                          const std::string& receiver_id) const;

  int64_t append(const std::string& topic, const std::string& section_id,
                 const Envelope& envelope);
  std::vector<RoutedRecord> fetch(const std::string& topic,
                                  const std::string& section_id,
                                  int64_t from_offset, int64_t max_count);
  int64_t enforce_retention(const std::string& topic, int64_t now_ms);
  int64_t enforce_retention_all(int64_t now_ms);

  // Deterministic: derived from topic and receiver, stable across restarts.
  static std::string section_id_for(const std::string& topic,
                                    const std::string& receiver_id);

 private:
  std::shared_ptr<Topic> topic_ref(const std::string& name) const;
  std::shared_ptr<Section> section_ref(const Topic& topic,
                                       const std::string& section_id) const;
  void save_registry_locked() const;
  void load();
  int64_t purge_section(Topic& topic, Section& section, int64_t now_ms);

  std::string data_dir_;
  util::Clock clock_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Topic>> topics_;
};

}  // namespace dhlink
