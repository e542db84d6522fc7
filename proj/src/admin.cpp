#include "dhlink/admin.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <set>

#include "dhlink/errors.hpp"
#include "dhlink/schema.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

std::string app_state_name(AppState state) {
  switch (state) {
    case AppState::Proposed:
      return "proposed";
    case AppState::Initialising:
      return "initialising";
    case AppState::Working:
      return "working";
    case AppState::Decommissioned:
      return "decommissioned";
  }
  return "proposed";
}

AppState app_state_from_name(const std::string& name) {
  if (name == "proposed") return AppState::Proposed;
  if (name == "initialising") return AppState::Initialising;
  if (name == "working") return AppState::Working;
  if (name == "decommissioned") return AppState::Decommissioned;
  fail(ErrorCode::BadRequest, "unknown application state: " + name);
}

void to_json(Json& j, const AppService& s) {
  j = Json{{"serviceId", s.service_id}, {"name", s.name},
           {"description", s.description}, {"url", s.url},
           {"apiKey", s.api_key}};
}

void from_json(const Json& j, AppService& s) {
  j.at("serviceId").get_to(s.service_id);
  s.name = j.value("name", "");
  s.description = j.value("description", "");
  s.url = j.value("url", "");
  s.api_key = j.value("apiKey", "");
}

void to_json(Json& j, const AppTopic& t) {
  j = Json{{"name", t.name},
           {"description", t.description},
           {"policy", topic_policy_name(t.policy)},
           {"config", topic_config_to_json(t.policy, t.config)},
           {"schemaName", t.schema_name},
           {"schemaVersion", t.schema_version},
           {"senders", t.senders},
           {"receivers", t.receivers}};
  if (!t.schema.empty()) j["schema"] = t.schema;
}

void from_json(const Json& j, AppTopic& t) {
  j.at("name").get_to(t.name);
  t.description = j.value("description", "");
  t.policy = topic_policy_from_name(j.at("policy").get<std::string>());
  t.config = topic_config_from_json(t.policy, j.value("config", Json::object()));
  j.at("schemaName").get_to(t.schema_name);
  j.at("schemaVersion").get_to(t.schema_version);
  j.at("senders").get_to(t.senders);
  j.at("receivers").get_to(t.receivers);
  t.schema = j.value("schema", Json::object());
}

void to_json(Json& j, const AppTransition& t) {
  j = Json{{"at", t.at}, {"transition", t.transition}, {"adminId", t.admin_id}};
}

void from_json(const Json& j, AppTransition& t) {
  j.at("at").get_to(t.at);
  j.at("transition").get_to(t.transition);
  t.admin_id = j.value("adminId", "");
}

void to_json(Json& j, const ApplicationRecord& r) {
  j = Json{{"appId", r.app_id},       {"name", r.name},
           {"description", r.description}, {"state", app_state_name(r.state)},
           {"microservices", r.services},  {"topics", r.topics},
           {"history", r.history}};
}

void from_json(const Json& j, ApplicationRecord& r) {
  j.at("appId").get_to(r.app_id);
  r.name = j.value("name", "");
  r.description = j.value("description", "");
  r.state = app_state_from_name(j.at("state").get<std::string>());
  j.at("microservices").get_to(r.services);
  j.at("topics").get_to(r.topics);
  r.history.clear();
  if (j.contains("history")) j.at("history").get_to(r.history);
}

namespace {

[[noreturn]] void malformed(const std::string& why) {
  fail(ErrorCode::MalformedProposal, why);
}

}  // namespace

ApplicationRecord parse_proposal(const Json& proposal) {
  if (!proposal.is_object()) malformed("proposal must be an object");

  ApplicationRecord app;
  try {
    proposal.at("appId").get_to(app.app_id);
    app.name = proposal.value("name", "");
    app.description = proposal.value("description", "");

    if (!proposal.contains("microservices") ||
        !proposal["microservices"].is_array() ||
        proposal["microservices"].empty()) {
      malformed("proposal needs at least one microservice");
    }
    for (const auto& doc : proposal["microservices"]) {
      AppService s;
      doc.at("serviceId").get_to(s.service_id);
      s.name = doc.value("name", s.service_id);
      s.description = doc.value("description", "");
      s.url = doc.value("url", "");
      app.services.push_back(std::move(s));
    }

    if (!proposal.contains("topics") || !proposal["topics"].is_array() ||
        proposal["topics"].empty()) {
      malformed("proposal needs at least one topic");
    }
    for (const auto& doc : proposal["topics"]) {
      AppTopic t;
      doc.at("name").get_to(t.name);
      t.description = doc.value("description", "");
      t.policy = topic_policy_from_name(doc.value("policy", "retained"));
      t.config =
          topic_config_from_json(t.policy, doc.value("config", Json::object()));
      if (doc.contains("schema") == doc.contains("schemaRef")) {
        malformed("topic '" + t.name +
                  "' needs either a schema document or a schemaRef");
      }
      if (doc.contains("schema")) {
        DataSchema parsed = parse_schema(doc["schema"]);
        t.schema = doc["schema"];
        t.schema_name = parsed.name;
        t.schema_version = parsed.version;
      } else {
        doc["schemaRef"].at("name").get_to(t.schema_name);
        doc["schemaRef"].at("version").get_to(t.schema_version);
      }
      t.senders = doc.value("senders", std::vector<std::string>{});
      t.receivers = doc.value("receivers", std::vector<std::string>{});
      app.topics.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    malformed(std::string("proposal does not parse: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedProposal) throw;
    malformed(std::string("proposal does not parse: ") + e.what());
  }

  if (!util::is_valid_identifier(app.app_id)) malformed("bad appId");
  std::set<std::string> service_ids;
  for (const auto& s : app.services) {
    if (!util::is_valid_identifier(s.service_id)) {
      malformed("bad serviceId '" + s.service_id + "'");
    }
    if (!service_ids.insert(s.service_id).second) {
      malformed("serviceId '" + s.service_id + "' declared twice");
    }
  }
  std::set<std::string> topic_names;
  for (const auto& t : app.topics) {
    if (!util::is_valid_topic_name(t.name)) {
      malformed("bad topic name '" + t.name + "'");
    }
    if (!topic_names.insert(t.name).second) {
      malformed("topic '" + t.name + "' declared twice");
    }
    if (t.senders.empty() || t.receivers.empty()) {
      malformed("topic '" + t.name +
                "' needs at least one sender and one receiver");
    }
    for (const auto& sid : t.senders) {
      if (!service_ids.count(sid)) {
        malformed("topic '" + t.name + "' names undeclared sender '" + sid +
                  "'");
      }
    }
    for (const auto& sid : t.receivers) {
      if (!service_ids.count(sid)) {
        malformed("topic '" + t.name + "' names undeclared receiver '" + sid +
                  "'");
      }
    }
  }
  return app;
}

AdminCore::AdminCore(BrokerApi* broker, SecurityApi* security,
                     DiscoveryApi* discovery, std::string admin_token,
                     std::string data_dir, util::Clock clock)
    : broker_(broker),
      security_(security),
      discovery_(discovery),
      admin_token_(std::move(admin_token)),
      data_dir_(std::move(data_dir)),
      clock_(std::move(clock)) {
  util::ensure_dir(data_dir_);
  load();
}

void AdminCore::record_transition(ApplicationRecord& app) {
  app.history.push_back(
      AppTransition{clock_(), app_state_name(app.state), "admin"});
}

Caller AdminCore::admin() const { return Caller::admin(admin_token_); }

void AdminCore::save() const {
  Json doc = Json{{"applications", apps_}};
  util::write_file_atomic(data_dir_ + "/applications.json", doc.dump(2) + "\n");
}

void AdminCore::load() {
  std::string path = data_dir_ + "/applications.json";
  if (!util::file_exists(path)) return;
  Json doc = Json::parse(util::read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return;
  doc.value("applications", Json::array()).get_to(apps_);
}

ApplicationRecord& AdminCore::must_find(const std::string& app_id) {
  for (auto& app : apps_) {
    if (app.app_id == app_id) return app;
  }
  fail(ErrorCode::UnknownApp, "no application " + app_id);
}

ApplicationRecord AdminCore::application(const std::string& app_id) const {
  for (const auto& app : apps_) {
    if (app.app_id == app_id) return app;
  }
  fail(ErrorCode::UnknownApp, "no application " + app_id);
}

std::vector<ApplicationRecord> AdminCore::list_applications() const {
  return apps_;
}

ApplicationRecord AdminCore::propose(const Json& proposal) {
  ApplicationRecord app = parse_proposal(proposal);
  for (auto it = apps_.begin(); it != apps_.end(); ++it) {
    if (it->app_id != app.app_id) continue;
    if (it->state != AppState::Decommissioned) {
      fail(ErrorCode::DuplicateApp,
           "application " + app.app_id + " already exists in state " +
               app_state_name(it->state));
    }
    apps_.erase(it);  // a decommissioned id may be proposed afresh
    break;
  }
  record_transition(app);
  apps_.push_back(app);
  save();
  return app;
}

ApplicationRecord AdminCore::approve_and_initialise(const std::string& app_id) {
  ApplicationRecord& app = must_find(app_id);
  if (app.state != AppState::Proposed && app.state != AppState::Initialising) {
    fail(ErrorCode::WrongState, "application " + app_id + " is " +
                                    app_state_name(app.state) +
                                    ", not proposed");
  }
  if (app.state == AppState::Proposed) {
    app.state = AppState::Initialising;
    record_transition(app);
  }
  save();

  // Credentials. Existing keys survive a re-run unchanged.
  for (auto& service : app.services) {
    if (service.api_key.empty()) {
      service.api_key = util::random_hex(32);
      save();
    }
  }
  std::set<std::string> registered;
  for (const auto& profile : security_->list_profiles(admin())) {
    registered.insert(profile.service_id);
  }
  for (const auto& service : app.services) {
    if (!registered.count(service.service_id)) {
      security_->register_profile(admin(), service.service_id, service.api_key,
                                  app.app_id);
    }
  }

  // Topics: create, or join an existing one with the same schema.
  for (const auto& topic : app.topics) {
    bool exists = true;
    TopicInfo info;
    try {
      info = broker_->topic_info(admin(), topic.name);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownTopic) throw;
      exists = false;
    }
    if (exists) {
      if (info.schema_name != topic.schema_name ||
          info.schema_version != topic.schema_version) {
        fail(ErrorCode::MalformedProposal,
             "topic '" + topic.name + "' exists with schema " +
                 info.schema_name + " v" +
                 std::to_string(info.schema_version) +
                 ", proposal wants " + topic.schema_name + " v" +
                 std::to_string(topic.schema_version));
      }
      continue;
    }
    if (!topic.schema.empty() &&
        !discovery_->get_schema(admin(), topic.schema_name,
                                topic.schema_version)) {
      DiscoveryTopicInfo entry;
      entry.name = topic.name;
      entry.description = topic.description;
      entry.status = EntryStatus::Initialising;
      entry.schema_spec = topic.schema;
      discovery_->register_topic(admin(), entry);
    }
    broker_->create_topic(admin(), topic.name, topic.policy, topic.schema_name,
                          topic.schema_version, topic.config);
  }

  // Discovery entries for topics that joined before registration above.
  for (const auto& topic : app.topics) {
    bool found = false;
    for (const auto& entry : discovery_->query_topics(admin(), topic.name)) {
      if (entry.name == topic.name) found = true;
    }
    if (!found) {
      if (topic.schema.empty()) {
        fail(ErrorCode::UnknownSchema,
             "topic '" + topic.name +
                 "' joins an existing topic that is not registered");
      }
      DiscoveryTopicInfo entry;
      entry.name = topic.name;
      entry.description = topic.description;
      entry.status = EntryStatus::Initialising;
      entry.schema_spec = topic.schema;
      discovery_->register_topic(admin(), entry);
    }
  }

  // Sections, grants, and keypairs per receiver; one send grant per sender.
  std::vector<AccessControlEntry> acl = security_->list_acl(admin());
  auto granted = [&acl](const AccessControlEntry& entry) {
    return std::find(acl.begin(), acl.end(), entry) != acl.end();
  };
  for (const auto& topic : app.topics) {
    for (const auto& sender : topic.senders) {
      AccessControlEntry entry{sender, topic.name, "send", std::nullopt};
      if (!granted(entry)) {
        security_->add_acl_entry(admin(), entry);
        acl.push_back(entry);
      }
    }
    for (const auto& receiver : topic.receivers) {
      std::string section =
          broker_->allocate_section(admin(), topic.name, receiver);
      AccessControlEntry entry{receiver, topic.name, "receive", section};
      if (!granted(entry)) {
        security_->add_acl_entry(admin(), entry);
        acl.push_back(entry);
      }
      try {
        security_->generate_keypair(admin(), topic.name, section, false);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ActiveKeyExists) throw;
      }
    }
  }

  // Discovery entries for the microservices.
  std::set<std::string> known_services;
  for (const auto& entry : discovery_->query_services(admin(), "")) {
    known_services.insert(entry.name);
  }
  for (const auto& service : app.services) {
    if (known_services.count(service.service_id)) continue;
    DiscoveryServiceInfo entry;
    entry.name = service.service_id;
    entry.description = service.description;
    entry.url = service.url;
    entry.status = EntryStatus::Initialising;
    entry.owner_app_id = app.app_id;
    discovery_->register_service(admin(), entry);
  }

  save();
  return app;
}

ApplicationRecord AdminCore::mark_ready(const std::string& app_id) {
  ApplicationRecord& app = must_find(app_id);
  if (app.state != AppState::Initialising) {
    fail(ErrorCode::WrongState, "application " + app_id + " is " +
                                    app_state_name(app.state) +
                                    ", not initialising");
  }

  // Connectivity self-test: every service performs one authorized check
  // with its own credentials before anything is declared ready.
  for (const auto& service : app.services) {
    Identity identity{service.service_id, service.api_key};
    bool checked = false;
    bool passed = false;
    try {
      for (const auto& topic : app.topics) {
        if (std::find(topic.senders.begin(), topic.senders.end(),
                      service.service_id) != topic.senders.end()) {
          passed = security_->authorize(identity, topic.name, "send",
                                        std::nullopt);
          checked = true;
          break;
        }
        if (std::find(topic.receivers.begin(), topic.receivers.end(),
                      service.service_id) != topic.receivers.end()) {
          std::string section =
              Broker::section_id_for(topic.name, service.service_id);
          passed =
              security_->authorize(identity, topic.name, "receive", section);
          checked = true;
          break;
        }
      }
      if (!checked) {
        security_->authenticate(identity);
        passed = true;
      }
    } catch (const Error&) {
      passed = false;
    }
    if (!passed) {
      fail(ErrorCode::ConnectivityCheckFailed,
           "service " + service.service_id + " failed its connectivity check");
    }
  }

  for (const auto& topic : app.topics) {
    broker_->set_topic_status(admin(), topic.name, TopicStatus::Ready);
    discovery_->set_status(admin(), EntryKind::Topic, topic.name,
                           EntryStatus::Ready);
  }
  for (const auto& service : app.services) {
    discovery_->set_status(admin(), EntryKind::Service, service.service_id,
                           EntryStatus::Ready);
  }

  app.state = AppState::Working;
  record_transition(app);
  save();
  return app;
}

ApplicationRecord AdminCore::decommission(const std::string& app_id,
                                          bool confirmed) {
  ApplicationRecord& app = must_find(app_id);
  if (!confirmed) {
    fail(ErrorCode::NotConfirmed,
         "decommissioning " + app_id + " requires explicit confirmation");
  }
  if (app.state != AppState::Working) {
    fail(ErrorCode::WrongState, "application " + app_id + " is " +
                                    app_state_name(app.state) +
                                    ", not working");
  }

  std::set<std::string> own_services;
  for (const auto& service : app.services) {
    own_services.insert(service.service_id);
  }

  // Revoke access first, then keys, then identities.
  for (const auto& entry : security_->list_acl(admin())) {
    if (own_services.count(entry.service_id)) {
      security_->remove_acl_entry(admin(), entry);
    }
  }
  for (const auto& topic : app.topics) {
    for (const auto& receiver : topic.receivers) {
      security_->revoke_keys(admin(), topic.name,
                             Broker::section_id_for(topic.name, receiver));
    }
  }

  // A topic goes away only when no other application holds access to it.
  std::vector<AccessControlEntry> remaining = security_->list_acl(admin());
  for (const auto& topic : app.topics) {
    bool shared = false;
    for (const auto& entry : remaining) {
      if (entry.topic == topic.name && !own_services.count(entry.service_id)) {
        shared = true;
        break;
      }
    }
    if (shared) continue;
    try {
      broker_->delete_topic(admin(), topic.name);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownTopic) throw;
    }
    try {
      discovery_->remove(admin(), EntryKind::Topic, topic.name);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownName) throw;
    }
  }

  for (const auto& service : app.services) {
    try {
      security_->remove_profile(admin(), service.service_id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownService) throw;
    }
    try {
      discovery_->remove(admin(), EntryKind::Service, service.service_id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownName) throw;
    }
  }

  app.state = AppState::Decommissioned;
  record_transition(app);
  save();
  return app;
}

AdminLock::AdminLock(const std::string& data_dir) {
  util::ensure_dir(data_dir);
  path_ = data_dir + "/admin.lock";
  fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0600);
  if (fd_ < 0) {
    fail(ErrorCode::AdminLocked,
         "another administration run holds " + path_);
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] ssize_t n = ::write(fd_, pid.data(), pid.size());
}

AdminLock::~AdminLock() {
  if (fd_ >= 0) {
    ::close(fd_);
    ::unlink(path_.c_str());
  }
}

}  // namespace dhlink
