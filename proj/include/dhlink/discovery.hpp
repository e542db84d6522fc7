#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dhlink/json.hpp"

namespace dhlink {

enum class EntryStatus { Initialising, Ready, Retired };

const char* entry_status_name(EntryStatus status);
EntryStatus entry_status_from_name(const std::string& name);

struct DiscoveryTopicInfo {
  std::string name;
  std::string description;
  EntryStatus status = EntryStatus::Initialising;
  Json schema_spec;  // DataSchema document
};

struct DiscoveryServiceInfo {
  std::string name;
  std::string description;
  std::string url;
  EntryStatus status = EntryStatus::Initialising;
  std::string owner_app_id;
};

// Queryable registry of topic and microservice metadata. Who may see what is
// decided a layer up; this core stores, filters, and walks lifecycle states.
// Persisted as one JSON snapshot rewritten atomically on change.
class DiscoveryCore {
 public:
  explicit DiscoveryCore(std::string data_dir);

  void register_topic(const DiscoveryTopicInfo& info);
  void register_service(const DiscoveryServiceInfo& info);

  // Transitions only initialising -> ready -> retired.
  void set_topic_status(const std::string& name, EntryStatus status);
  void set_service_status(const std::string& name, EntryStatus status);
  void remove_topic(const std::string& name);
  void remove_service(const std::string& name);

  // Case-insensitive substring over name + description; empty filter matches
  // everything; results in name order.
  std::vector<DiscoveryTopicInfo> query_topics(const std::string& filter) const;
  std::vector<DiscoveryServiceInfo> query_services(
      const std::string& filter) const;

  std::optional<DiscoveryTopicInfo> find_topic(const std::string& name) const;
  std::optional<DiscoveryServiceInfo> find_service(
      const std::string& name) const;

  // Resolves a schema reference against registered topic schemaSpecs.
  std::optional<Json> find_schema(const std::string& schema_name,
                                  int version) const;

 private:
  void save_locked() const;
  void load();

  std::string data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, DiscoveryTopicInfo> topics_;
  std::map<std::string, DiscoveryServiceInfo> services_;
};

Json discovery_topic_to_json(const DiscoveryTopicInfo& info);
DiscoveryTopicInfo discovery_topic_from_json(const Json& doc);
Json discovery_service_to_json(const DiscoveryServiceInfo& info);
DiscoveryServiceInfo discovery_service_from_json(const Json& doc);

}  // namespace dhlink
