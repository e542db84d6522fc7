#include "dhlink/broker.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <fstream>
#include <mutex>

#include "dhlink/canonical.hpp"
#include "dhlink/crypto.hpp"
#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

constexpr int64_t kDefaultRealtimeBuffer = 1024;
constexpr int64_t kDefaultTransientMaxAge = 60;
constexpr int64_t kMaxFetchCount = 100000;

int64_t require_int(const Json& doc, const char* key) {
  if (!doc.contains(key) ||
      !(doc[key].is_number_integer() || doc[key].is_number_unsigned()))
    fail(ErrorCode::BadRequest, std::string("expected integer field: ") + key);
  return doc[key].get<int64_t>();
}

}  // namespace

const char* topic_policy_name(TopicPolicy policy) {
  switch (policy) {
    case TopicPolicy::Realtime: return "realtime";
    case TopicPolicy::Retained: return "retained";
    case TopicPolicy::Transient: return "transient";
  }
  return "retained";
}

TopicPolicy topic_policy_from_name(const std::string& name) {
  if (name == "realtime") return TopicPolicy::Realtime;
  if (name == "retained") return TopicPolicy::Retained;
  if (name == "transient") return TopicPolicy::Transient;
  fail(ErrorCode::BadRequest, "unknown topic policy: " + name);
}

const char* topic_status_name(TopicStatus status) {
  switch (status) {
    case TopicStatus::Created: return "created";
    case TopicStatus::Ready: return "ready";
    case TopicStatus::Retired: return "retired";
  }
  return "created";
}

TopicStatus topic_status_from_name(const std::string& name) {
  if (name == "created") return TopicStatus::Created;
  if (name == "ready") return TopicStatus::Ready;
  if (name == "retired") return TopicStatus::Retired;
  fail(ErrorCode::BadRequest, "unknown topic status: " + name);
}

TopicConfig topic_config_from_json(TopicPolicy policy, const Json& doc) {
  if (!doc.is_object()) fail(ErrorCode::BadRequest, "config must be an object");
  TopicConfig config;
  switch (policy) {
    case TopicPolicy::Realtime:
      config.buffer_size = doc.contains("bufferSize")
                               ? require_int(doc, "bufferSize")
                               : kDefaultRealtimeBuffer;
      if (config.buffer_size < 1)
        fail(ErrorCode::BadRequest, "bufferSize must be >= 1");
      break;
    case TopicPolicy::Retained:
      if (doc.contains("maxAgeSeconds")) {
        config.max_age_seconds = require_int(doc, "maxAgeSeconds");
        if (*config.max_age_seconds < 1)
          fail(ErrorCode::BadRequest, "maxAgeSeconds must be >= 1");
      }
      break;
    case TopicPolicy::Transient:
      config.max_age_seconds = doc.contains("maxAgeSeconds")
                                   ? require_int(doc, "maxAgeSeconds")
                                   : kDefaultTransientMaxAge;
      if (*config.max_age_seconds < 1)
        fail(ErrorCode::BadRequest, "maxAgeSeconds must be >= 1");
      break;
  }
  return config;
}

Json topic_config_to_json(TopicPolicy policy, const TopicConfig& config) {
  Json doc = Json::object();
  if (policy == TopicPolicy::Realtime) doc["bufferSize"] = config.buffer_size;
  if (config.max_age_seconds) doc["maxAgeSeconds"] = *config.max_age_seconds;
  return doc;
}

struct Broker::Section {
  std::string section_id;
  std::string receiver_id;
  mutable std::mutex mutex;
  std::deque<RoutedRecord> log;
  int64_t next_offset = 0;
  std::ofstream writer;  // kept open in append mode

  std::string log_path(const std::string& dir) const {
    return dir + "/" + section_id + ".log";
  }
  std::string meta_path(const std::string& dir) const {
    return dir + "/" + section_id + ".meta";
  }
};

struct Broker::Topic {
  std::string name;
  TopicPolicy policy = TopicPolicy::Retained;
  std::string schema_name;
  int schema_version = 1;
  TopicStatus status = TopicStatus::Created;
  TopicConfig config;
  std::atomic<bool> deleted{false};
  mutable std::shared_mutex mutex;  // guards sections map and status
  std::map<std::string, std::shared_ptr<Section>> sections;

  std::string dir(const std::string& data_dir) const {
    return data_dir + "/" + name;
  }
};

namespace {

Json record_to_json(const RoutedRecord& record) {
  Json doc = Json::object();
  doc["offset"] = record.offset;
  doc["appendedAt"] = record.appended_at;
  doc["delivered"] = record.delivered;
  doc["envelope"] = envelope_to_json(record.envelope);
  return doc;
}

RoutedRecord record_from_json(const Json& doc) {
  RoutedRecord record;
  record.offset = require_int(doc, "offset");
  record.appended_at = require_int(doc, "appendedAt");
  record.delivered = doc.value("delivered", false);
  if (!doc.contains("envelope"))
    fail(ErrorCode::IoError, "record line missing envelope");
  record.envelope = envelope_from_json(doc["envelope"]);
  return record;
}

void write_section_meta(const std::string& path, const std::string& receiver_id,
                        int64_t next_offset_floor) {
  Json meta = Json::object();
  meta["receiverId"] = receiver_id;
  meta["nextOffsetFloor"] = next_offset_floor;
  util::write_file_atomic(path, canonical_encode(meta) + "\n");
}

// Rewrites the log from scratch (used after purges) and records the floor so
// a restart never reuses a purged offset.
void compact_section(const std::string& dir, Broker::Section& section);

}  // namespace

namespace {

void open_writer(const std::string& dir, Broker::Section& section) {
  section.writer.open(section.log_path(dir), std::ios::app);
  if (!section.writer)
    fail(ErrorCode::IoError, "cannot open section log: " + section.log_path(dir));
}

void compact_section(const std::string& dir, Broker::Section& section) {
  if (section.writer.is_open()) section.writer.close();
  std::string body;
  for (const auto& record : section.log)
    body += canonical_encode(record_to_json(record)) + "\n";
  util::write_file_atomic(section.log_path(dir), body);
  write_section_meta(section.meta_path(dir), section.receiver_id,
                     section.next_offset);
  open_writer(dir, section);
}

}  // namespace

Broker::Broker(std::string data_dir, util::Clock clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  util::ensure_dir(data_dir_);
  load();
}

Broker::~Broker() = default;

std::string Broker::section_id_for(const std::string& topic,
                                   const std::string& receiver_id) {
  return "s-" + crypto::sha256_hex(topic + ":" + receiver_id).substr(0, 12);
}

void Broker::load() {
  std::string registry_path = data_dir_ + "/topics.json";
  if (!util::file_exists(registry_path)) return;
  Json doc = canonical_parse(util::read_file(registry_path));
  for (const auto& entry : doc["topics"]) {
    auto topic = std::make_shared<Topic>();
    topic->name = entry["name"].get<std::string>();
    topic->policy = topic_policy_from_name(entry["policy"].get<std::string>());
    topic->schema_name = entry["schema"].get<std::string>();
    topic->schema_version = entry["schemaVersion"].get<int>();
    topic->status = topic_status_from_name(entry["status"].get<std::string>());
    topic->config = topic_config_from_json(topic->policy, entry["config"]);
    std::string dir = topic->dir(data_dir_);
    for (const auto& section_doc : entry["sections"]) {
      auto section = std::make_shared<Section>();
      section->section_id = section_doc["sectionId"].get<std::string>();
      section->receiver_id = section_doc["receiverId"].get<std::string>();
      int64_t floor = 0;
      if (util::file_exists(section->meta_path(dir))) {
        Json meta = canonical_parse(util::read_file(section->meta_path(dir)));
        floor = require_int(meta, "nextOffsetFloor");
      }
      if (util::file_exists(section->log_path(dir))) {
        std::ifstream in(section->log_path(dir));
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          Json record_doc = Json::parse(line, nullptr, false);
          if (record_doc.is_discarded()) continue;  // torn tail line from a kill
          section->log.push_back(record_from_json(record_doc));
        }
      }
      section->next_offset =
          section->log.empty() ? floor
                               : std::max(floor, section->log.back().offset + 1);
      open_writer(dir, *section);
      topic->sections[section->section_id] = section;
    }
    topics_[topic->name] = topic;
  }
}

void Broker::save_registry_locked() const {
  Json topics = Json::array();
  for (const auto& [name, topic] : topics_) {
    (void)name;
    Json entry = Json::object();
    entry["name"] = topic->name;
    entry["policy"] = topic_policy_name(topic->policy);
    entry["schema"] = topic->schema_name;
    entry["schemaVersion"] = topic->schema_version;
    entry["status"] = topic_status_name(topic->status);
    entry["config"] = topic_config_to_json(topic->policy, topic->config);
    Json sections = Json::array();
    for (const auto& [sid, section] : topic->sections) {
      (void)sid;
      Json section_doc = Json::object();
      section_doc["sectionId"] = section->section_id;
      section_doc["receiverId"] = section->receiver_id;
      sections.push_back(section_doc);
    }
    entry["sections"] = sections;
    topics.push_back(entry);
  }
  Json doc = Json::object();
  doc["topics"] = topics;
  util::write_file_atomic(data_dir_ + "/topics.json",
                          canonical_encode(doc) + "\n");
}

std::shared_ptr<Broker::Topic> Broker::topic_ref(const std::string& name) const {
  std::shared_lock lock(registry_mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end())
    fail(ErrorCode::UnknownTopic, "unknown topic: " + name);
  return it->second;
}

std::shared_ptr<Broker::Section> Broker::section_ref(
    const Topic& topic, const std::string& section_id) const {
  std::shared_lock lock(topic.mutex);
  auto it = topic.sections.find(section_id);
  if (it == topic.sections.end())
    fail(ErrorCode::UnknownSection,
         "unknown section: " + topic.name + "/" + section_id);
  return it->second;
}

TopicInfo Broker::create_topic(const std::string& name, TopicPolicy policy,
                               const std::string& schema_name,
                               int schema_version, const TopicConfig& config) {
  if (!util::is_valid_topic_name(name))
    fail(ErrorCode::BadRequest, "invalid topic name: " + name);
  if (schema_version < 1)
    fail(ErrorCode::BadRequest, "schemaVersion must be >= 1");
  std::unique_lock lock(registry_mutex_);
  if (topics_.count(name))
    fail(ErrorCode::DuplicateName, "topic exists: " + name);
  auto topic = std::make_shared<Topic>();
  topic->name = name;
  topic->policy = policy;
  topic->schema_name = schema_name;
  topic->schema_version = schema_version;
  topic->config = config;
  util::ensure_dir(topic->dir(data_dir_));
  topics_[name] = topic;
  save_registry_locked();
  TopicInfo info;
  info.name = name;
  info.policy = policy;
  info.schema_name = schema_name;
  info.schema_version = schema_version;
  info.status = TopicStatus::Created;
  info.config = config;
  return info;
}

void Broker::delete_topic(const std::string& name) {
  std::shared_ptr<Topic> topic;
  {
    std::unique_lock lock(registry_mutex_);
    auto it = topics_.find(name);
    if (it == topics_.end())
      fail(ErrorCode::UnknownTopic, "unknown topic: " + name);
    topic = it->second;
    topics_.erase(it);
    save_registry_locked();
  }
  std::unique_lock topic_lock(topic->mutex);
  topic->deleted = true;
  for (auto& [sid, section] : topic->sections) {
    (void)sid;
    std::lock_guard section_lock(section->mutex);
    if (section->writer.is_open()) section->writer.close();
  }
  topic->sections.clear();
  util::remove_all(topic->dir(data_dir_));
}

void Broker::set_topic_status(const std::string& name, TopicStatus status) {
  auto topic = topic_ref(name);
  {
    std::unique_lock lock(topic->mutex);
    if (topic->deleted) fail(ErrorCode::UnknownTopic, "unknown topic: " + name);
    if (static_cast<int>(status) < static_cast<int>(topic->status))
      fail(ErrorCode::IllegalTransition,
           std::string("cannot move topic back to ") +
               topic_status_name(status));
    topic->status = status;
  }
  std::unique_lock lock(registry_mutex_);
  save_registry_locked();
}

TopicInfo Broker::topic_info(const std::string& name) const {
  auto topic = topic_ref(name);
  std::shared_lock lock(topic->mutex);
  if (topic->deleted) fail(ErrorCode::UnknownTopic, "unknown topic: " + name);
  TopicInfo info;
  info.name = topic->name;
  info.policy = topic->policy;
  info.schema_name = topic->schema_name;
  info.schema_version = topic->schema_version;
  info.status = topic->status;
  info.config = topic->config;
  for (const auto& [sid, section] : topic->sections) {
    (void)sid;
    std::lock_guard section_lock(section->mutex);
    SectionInfo si;
    si.section_id = section->section_id;
    si.receiver_id = section->receiver_id;
    si.next_offset = section->next_offset;
    si.record_count = static_cast<int64_t>(section->log.size());
    info.sections.push_back(si);
  }
  return info;
}

std::vector<TopicInfo> Broker::list_topics() const {
  std::vector<std::string> names;
  {
    std::shared_lock lock(registry_mutex_);
    for (const auto& [name, topic] : topics_) {
      (void)topic;
      names.push_back(name);
    }
  }
  std::vector<TopicInfo> out;
  for (const auto& name : names) {
    try {
      out.push_back(topic_info(name));
    } catch (const Error&) {
      // raced with delete_topic
    }
  }
  return out;
}

std::string Broker::allocate_section(const std::string& topic_name,
                                     const std::string& receiver_id) {
  if (!util::is_valid_identifier(receiver_id))
    fail(ErrorCode::BadRequest, "invalid receiver id");
  auto topic = topic_ref(topic_name);
  std::unique_lock lock(topic->mutex);
  if (topic->deleted)
    fail(ErrorCode::UnknownTopic, "unknown topic: " + topic_name);
  if (topic->status == TopicStatus::Retired)
    fail(ErrorCode::TopicRetired, "topic retired: " + topic_name);
  for (const auto& [sid, section] : topic->sections)
    if (section->receiver_id == receiver_id) return sid;
  auto section = std::make_shared<Section>();
  section->section_id = section_id_for(topic_name, receiver_id);
  section->receiver_id = receiver_id;
  std::string dir = topic->dir(data_dir_);
  util::ensure_dir(dir);
  write_section_meta(section->meta_path(dir), receiver_id, 0);
  open_writer(dir, *section);
  topic->sections[section->section_id] = section;
  std::string section_id = section->section_id;
  lock.unlock();
  std::unique_lock registry_lock(registry_mutex_);
  save_registry_locked();
  return section_id;
}

std::optional<std::string> Broker::find_section(
    const std::string& topic_name, const std::string& receiver_id) const {
  auto topic = topic_ref(topic_name);
  std::shared_lock lock(topic->mutex);
  for (const auto& [sid, section] : topic->sections)
    if (section->receiver_id == receiver_id) return sid;
  return std::nullopt;
}

int64_t Broker::append(const std::string& topic_name,
                       const std::string& section_id,
                       const Envelope& envelope) {
  check_envelope(envelope);
  auto topic = topic_ref(topic_name);
  TopicStatus status;
  {
    std::shared_lock lock(topic->mutex);
    if (topic->deleted)
      fail(ErrorCode::UnknownTopic, "unknown topic: " + topic_name);
    status = topic->status;
  }
  if (status == TopicStatus::Retired)
    fail(ErrorCode::TopicRetired, "topic retired: " + topic_name);
  if (status != TopicStatus::Ready)
    fail(ErrorCode::TopicNotReady, "topic not ready: " + topic_name);
  if (envelope.topic != topic_name || envelope.section != section_id)
    fail(ErrorCode::EnvelopeMismatch,
         "envelope topic/section does not match the target");
  auto section = section_ref(*topic, section_id);

  std::lock_guard section_lock(section->mutex);
  if (topic->deleted)
    fail(ErrorCode::UnknownTopic, "unknown topic: " + topic_name);
  RoutedRecord record;
  record.offset = section->next_offset;
  record.envelope = envelope;
  record.appended_at = clock_();
  section->writer << canonical_encode(record_to_json(record)) << "\n";
  section->writer.flush();
  if (!section->writer)
    fail(ErrorCode::IoError, "section log write failed");
  section->log.push_back(record);
  section->next_offset = record.offset + 1;
  if (topic->policy == TopicPolicy::Realtime &&
      static_cast<int64_t>(section->log.size()) > topic->config.buffer_size) {
    while (static_cast<int64_t>(section->log.size()) >
           topic->config.buffer_size)
      section->log.pop_front();
    compact_section(topic->dir(data_dir_), *section);
  }
  return record.offset;
}

std::vector<RoutedRecord> Broker::fetch(const std::string& topic_name,
                                        const std::string& section_id,
                                        int64_t from_offset,
                                        int64_t max_count) {
  if (from_offset < 0) fail(ErrorCode::BadRequest, "offset must be >= 0");
  if (max_count < 1 || max_count > kMaxFetchCount)
    fail(ErrorCode::BadRequest, "max must be in 1..100000");
  auto topic = topic_ref(topic_name);
  {
    std::shared_lock lock(topic->mutex);
    if (topic->deleted)
      fail(ErrorCode::UnknownTopic, "unknown topic: " + topic_name);
  }
  auto section = section_ref(*topic, section_id);

  std::lock_guard section_lock(section->mutex);
  if (topic->deleted)
    fail(ErrorCode::UnknownTopic, "unknown topic: " + topic_name);
  std::vector<RoutedRecord> out;
  auto it = std::lower_bound(
      section->log.begin(), section->log.end(), from_offset,
      [](const RoutedRecord& r, int64_t offset) { return r.offset < offset; });
  for (; it != section->log.end() &&
         static_cast<int64_t>(out.size()) < max_count;
       ++it)
    out.push_back(*it);

  if (topic->policy == TopicPolicy::Transient && !out.empty()) {
    for (auto& record : out) record.delivered = true;
    auto delivered = [&](const RoutedRecord& r) {
      return r.offset >= out.front().offset && r.offset <= out.back().offset;
    };
    section->log.erase(
        std::remove_if(section->log.begin(), section->log.end(), delivered),
        section->log.end());
    compact_section(topic->dir(data_dir_), *section);
  }
  return out;
}

int64_t Broker::purge_section(Topic& topic, Section& section, int64_t now_ms) {
  std::lock_guard section_lock(section.mutex);
  size_t before = section.log.size();
  switch (topic.policy) {
    case TopicPolicy::Realtime:
      while (static_cast<int64_t>(section.log.size()) >
             topic.config.buffer_size)
        section.log.pop_front();
      break;
    case TopicPolicy::Retained:
      if (topic.config.max_age_seconds) {
        int64_t cutoff = now_ms - *topic.config.max_age_seconds * 1000;
        auto stale = [&](const RoutedRecord& r) {
          return r.appended_at < cutoff;
        };
        section.log.erase(
            std::remove_if(section.log.begin(), section.log.end(), stale),
            section.log.end());
      }
      break;
    case TopicPolicy::Transient: {
      int64_t cutoff =
          now_ms - topic.config.max_age_seconds.value_or(60) * 1000;
      auto drop = [&](const RoutedRecord& r) {
        return r.delivered || r.appended_at < cutoff;
      };
      section.log.erase(
          std::remove_if(section.log.begin(), section.log.end(), drop),
          section.log.end());
      break;
    }
  }
  int64_t purged = static_cast<int64_t>(before - section.log.size());
  if (purged > 0) compact_section(topic.dir(data_dir_), section);
  return purged;
}

int64_t Broker::enforce_retention(const std::string& topic_name,
                                  int64_t now_ms) {
  auto topic = topic_ref(topic_name);
  std::vector<std::shared_ptr<Section>> sections;
  {
    std::shared_lock lock(topic->mutex);
    if (topic->deleted)
      fail(ErrorCode::UnknownTopic, "unknown topic: " + topic_name);
    for (const auto& [sid, section] : topic->sections) {
      (void)sid;
      sections.push_back(section);
    }
  }
  int64_t purged = 0;
  for (const auto& section : sections)
    purged += purge_section(*topic, *section, now_ms);
  return purged;
}

int64_t Broker::enforce_retention_all(int64_t now_ms) {
  std::vector<std::string> names;
  {
    std::shared_lock lock(registry_mutex_);
    for (const auto& [name, topic] : topics_) {
      (void)topic;
      names.push_back(name);
    }
  }
  int64_t purged = 0;
  for (const auto& name : names) {
    try {
      purged += enforce_retention(name, now_ms);
    } catch (const Error&) {
      // raced with delete_topic
    }
  }
  return purged;
}

void to_json(Json& j, const RoutedRecord& r) { j = record_to_json(r); }

void from_json(const Json& j, RoutedRecord& r) { r = record_from_json(j); }

void to_json(Json& j, const SectionInfo& s) {
  j = Json{{"sectionId", s.section_id},
           {"receiverId", s.receiver_id},
           {"nextOffset", s.next_offset},
           {"recordCount", s.record_count}};
}

void from_json(const Json& j, SectionInfo& s) {
  j.at("sectionId").get_to(s.section_id);
  j.at("receiverId").get_to(s.receiver_id);
  j.at("nextOffset").get_to(s.next_offset);
  j.at("recordCount").get_to(s.record_count);
}

void to_json(Json& j, const TopicInfo& t) {
  j = Json{{"name", t.name},
           {"policy", topic_policy_name(t.policy)},
           {"schemaName", t.schema_name},
           {"schemaVersion", t.schema_version},
           {"status", topic_status_name(t.status)},
           {"config", topic_config_to_json(t.policy, t.config)},
           {"sections", t.sections}};
}

void from_json(const Json& j, TopicInfo& t) {
  j.at("name").get_to(t.name);
  t.policy = topic_policy_from_name(j.at("policy").get<std::string>());
  j.at("schemaName").get_to(t.schema_name);
  j.at("schemaVersion").get_to(t.schema_version);
  t.status = topic_status_from_name(j.at("status").get<std::string>());
  t.config = topic_config_from_json(t.policy, j.at("config"));
  j.at("sections").get_to(t.sections);
}

}  // namespace dhlink
