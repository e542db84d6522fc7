#include "dhlink/discovery.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "dhlink/canonical.hpp"
#include "dhlink/errors.hpp"
#include "dhlink/schema.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

namespace {

constexpr const char* kRegistryFile = "/registry.json";

std::string lower(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return text;
}

bool matches(const std::string& filter, const std::string& name,
             const std::string& description) {
  if (filter.empty()) return true;
  std::string needle = lower(filter);
  return lower(name).find(needle) != std::string::npos ||
         lower(description).find(needle) != std::string::npos;
}

void check_transition(EntryStatus from, EntryStatus to) {
  if (static_cast<int>(to) < static_cast<int>(from))
    fail(ErrorCode::IllegalTransition,
         std::string("cannot move back to ") + entry_status_name(to));
}

}  // namespace

const char* entry_status_name(EntryStatus status) {
  switch (status) {
    case EntryStatus::Initialising: return "initialising";
    case EntryStatus::Ready: return "ready";
    case EntryStatus::Retired: return "retired";
  }
  return "initialising";
}

EntryStatus entry_status_from_name(const std::string& name) {
  if (name == "initialising") return EntryStatus::Initialising;
  if (name == "ready") return EntryStatus::Ready;
  if (name == "retired") return EntryStatus::Retired;
  fail(ErrorCode::BadRequest, "unknown status: " + name);
}

Json discovery_topic_to_json(const DiscoveryTopicInfo& info) {
  Json doc = Json::object();
  doc["name"] = info.name;
  doc["description"] = info.description;
  doc["status"] = entry_status_name(info.status);
  doc["schemaSpec"] = info.schema_spec;
  return doc;
}

DiscoveryTopicInfo discovery_topic_from_json(const Json& doc) {
  DiscoveryTopicInfo info;
  if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string())
    fail(ErrorCode::BadRequest, "topic info needs a string name");
  info.name = doc["name"].get<std::string>();
  info.description = doc.value("description", "");
  if (doc.contains("status"))
    info.status = entry_status_from_name(doc["status"].get<std::string>());
  if (!doc.contains("schemaSpec"))
    fail(ErrorCode::BadRequest, "topic info needs a schemaSpec");
  info.schema_spec = doc["schemaSpec"];
  return info;
}

Json discovery_service_to_json(const DiscoveryServiceInfo& info) {
  Json doc = Json::object();
  doc["name"] = info.name;
  doc["description"] = info.description;
  doc["url"] = info.url;
  doc["status"] = entry_status_name(info.status);
  doc["ownerAppId"] = info.owner_app_id;
  return doc;
}

DiscoveryServiceInfo discovery_service_from_json(const Json& doc) {
  DiscoveryServiceInfo info;
  if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string())
    fail(ErrorCode::BadRequest, "service info needs a string name");
  info.name = doc["name"].get<std::string>();
  info.description = doc.value("description", "");
  info.url = doc.value("url", "");
  if (doc.contains("status"))
    info.status = entry_status_from_name(doc["status"].get<std::string>());
  info.owner_app_id = doc.value("ownerAppId", "");
  return info;
}

DiscoveryCore::DiscoveryCore(std::string data_dir)
    : data_dir_(std::move(data_dir)) {
  util::ensure_dir(data_dir_);
  load();
}

void DiscoveryCore::load() {
  std::string path = data_dir_ + kRegistryFile;
  if (!util::file_exists(path)) return;
  Json doc = canonical_parse(util::read_file(path));
  for (const auto& entry : doc["topics"]) {
    DiscoveryTopicInfo info = discovery_topic_from_json(entry);
    topics_[info.name] = info;
  }
  for (const auto& entry : doc["services"]) {
    DiscoveryServiceInfo info = discovery_service_from_json(entry);
    services_[info.name] = info;
  }
}

void DiscoveryCore::save_locked() const {
  Json topics = Json::array();
  for (const auto& [name, info] : topics_) {
    (void)name;
    topics.push_back(discovery_topic_to_json(info));
  }
  Json services = Json::array();
  for (const auto& [name, info] : services_) {
    (void)name;
    services.push_back(discovery_service_to_json(info));
  }
  Json doc = Json::object();
  doc["topics"] = topics;
  doc["services"] = services;
  util::write_file_atomic(data_dir_ + kRegistryFile,
                          canonical_encode(doc) + "\n");
}

void DiscoveryCore::register_topic(const DiscoveryTopicInfo& info) {
  if (!util::is_valid_topic_name(info.name))
    fail(ErrorCode::BadRequest, "invalid topic name: " + info.name);
  DataSchema schema = parse_schema(info.schema_spec);  // well-formedness
  std::unique_lock lock(mutex_);
  if (topics_.count(info.name))
    fail(ErrorCode::DuplicateName, "topic info exists: " + info.name);
  for (const auto& [name, existing] : topics_) {
    (void)name;
    DataSchema other = parse_schema(existing.schema_spec);
    if (other.name == schema.name && other.version == schema.version &&
        existing.schema_spec != info.schema_spec)
      fail(ErrorCode::DuplicateName,
           "schema " + schema.name + " v" + std::to_string(schema.version) +
               " already registered with different fields");
  }
  topics_[info.name] = info;
  save_locked();
}

void DiscoveryCore::register_service(const DiscoveryServiceInfo& info) {
  if (!util::is_valid_identifier(info.name))
    fail(ErrorCode::BadRequest, "invalid service name: " + info.name);
  if (info.status == EntryStatus::Ready && info.url.empty())
    fail(ErrorCode::BadRequest, "ready services need a url");
  std::unique_lock lock(mutex_);
  if (services_.count(info.name))
    fail(ErrorCode::DuplicateName, "service info exists: " + info.name);
  services_[info.name] = info;
  save_locked();
}

void DiscoveryCore::set_topic_status(const std::string& name,
                                     EntryStatus status) {
  std::unique_lock lock(mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end())
    fail(ErrorCode::UnknownName, "unknown topic info: " + name);
  check_transition(it->second.status, status);
  it->second.status = status;
  save_locked();
}

void DiscoveryCore::set_service_status(const std::string& name,
                                       EntryStatus status) {
  std::unique_lock lock(mutex_);
  auto it = services_.find(name);
  if (it == services_.end())
    fail(ErrorCode::UnknownName, "unknown service info: " + name);
  check_transition(it->second.status, status);
  if (status == EntryStatus::Ready && it->second.url.empty())
    fail(ErrorCode::BadRequest, "ready services need a url");
  it->second.status = status;
  save_locked();
}

void DiscoveryCore::remove_topic(const std::string& name) {
  std::unique_lock lock(mutex_);
  if (!topics_.erase(name))
    fail(ErrorCode::UnknownName, "unknown topic info: " + name);
  save_locked();
}

void DiscoveryCore::remove_service(const std::string& name) {
  std::unique_lock lock(mutex_);
  if (!services_.erase(name))
    fail(ErrorCode::UnknownName, "unknown service info: " + name);
  save_locked();
}

std::vector<DiscoveryTopicInfo> DiscoveryCore::query_topics(
    const std::string& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<DiscoveryTopicInfo> out;
  for (const auto& [name, info] : topics_) {
    (void)name;
    if (matches(filter, info.name, info.description)) out.push_back(info);
  }
  return out;
}

std::vector<DiscoveryServiceInfo> DiscoveryCore::query_services(
    const std::string& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<DiscoveryServiceInfo> out;
  for (const auto& [name, info] : services_) {
    (void)name;
    if (matches(filter, info.name, info.description)) out.push_back(info);
  }
  return out;
}

std::optional<DiscoveryTopicInfo> DiscoveryCore::find_topic(
    const std::string& name) const {
  std::shared_lock lock(mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end()) return std::nullopt;
  return it->second;
}

std::optional<DiscoveryServiceInfo> DiscoveryCore::find_service(
    const std::string& name) const {
  std::shared_lock lock(mutex_);
  auto it = services_.find(name);
  if (it == services_.end()) return std::nullopt;
  return it->second;
}

std::optional<Json> DiscoveryCore::find_schema(const std::string& schema_name,
                                               int version) const {
  std::shared_lock lock(mutex_);
  for (const auto& [name, info] : topics_) {
    (void)name;
    DataSchema schema = parse_schema(info.schema_spec);
    if (schema.name == schema_name && schema.version == version)
      return info.schema_spec;
  }
  return std::nullopt;
}

}  // namespace dhlink
