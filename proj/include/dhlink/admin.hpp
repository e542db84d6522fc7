#pragma once

#include <string>
#include <vector>

#include "dhlink/apis.hpp"
#include "dhlink/json.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

enum class AppState { Proposed, Initialising, Working, Decommissioned };

std::string app_state_name(AppState state);
AppState app_state_from_name(const std::string& name);

struct AppService {
  std::string service_id;
  std::string name;
  std::string description;
  std::string url;
  std::string api_key;  // issued at approval
};

struct AppTopic {
  std::string name;
  std::string description;
  TopicPolicy policy = TopicPolicy::Retained;
  TopicConfig config;
  std::string schema_name;
  int schema_version = 1;
  Json schema;  // inline schema document; empty when joining an existing topic
  std::vector<std::string> senders;
  std::vector<std::string> receivers;
};

// Append-only transition log entry; one per accepted state change.
struct AppTransition {
  int64_t at = 0;
  std::string transition;  // proposed | initialising | working | decommissioned
  std::string admin_id;
};

struct ApplicationRecord {
  std::string app_id;
  std::string name;
  std::string description;
  AppState state = AppState::Proposed;
  std::vector<AppService> services;
  std::vector<AppTopic> topics;
  std::vector<AppTransition> history;
};

void to_json(Json& j, const AppService& s);
void from_json(const Json& j, AppService& s);
void to_json(Json& j, const AppTopic& t);
void from_json(const Json& j, AppTopic& t);
void to_json(Json& j, const AppTransition& t);
void from_json(const Json& j, AppTransition& t);
void to_json(Json& j, const ApplicationRecord& r);
void from_json(const Json& j, ApplicationRecord& r);

// Throws malformed-proposal. A topic either embeds its schema document or
// points at an existing one with schemaRef; every topic names at least one
// declared sender and one declared receiver.
ApplicationRecord parse_proposal(const Json& proposal);

// Application lifecycle driver: proposed -> initialising -> working ->
// decommissioned, acting on the three service surfaces so the same flows
// run in process or over HTTP. Approval is re-runnable: every provisioning
// step checks before it creates, so a crashed run completes on retry.
class AdminCore {
 public:
  AdminCore(BrokerApi* broker, SecurityApi* security, DiscoveryApi* discovery,
            std::string admin_token, std::string data_dir,
            util::Clock clock = util::system_clock());

  ApplicationRecord propose(const Json& proposal);
  ApplicationRecord approve_and_initialise(const std::string& app_id);
  ApplicationRecord mark_ready(const std::string& app_id);
  ApplicationRecord decommission(const std::string& app_id, bool confirmed);

  ApplicationRecord application(const std::string& app_id) const;
  std::vector<ApplicationRecord> list_applications() const;

 private:
  Caller admin() const;
  ApplicationRecord& must_find(const std::string& app_id);
  void record_transition(ApplicationRecord& app);
  void save() const;
  void load();

  BrokerApi* broker_;
  SecurityApi* security_;
  DiscoveryApi* discovery_;
  std::string admin_token_;
  std::string data_dir_;
  util::Clock clock_;
  std::vector<ApplicationRecord> apps_;
};

// Single-admin guard: holds data_dir/admin.lock exclusively, refusing with
// admin-locked when another process holds it.
class AdminLock {
 public:
  explicit AdminLock(const std::string& data_dir);
  ~AdminLock();
  AdminLock(const AdminLock&) = delete;
  AdminLock& operator=(const AdminLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

}  // namespace dhlink
