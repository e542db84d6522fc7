#include "dhlink/local_apis.hpp"

#include <algorithm>
#include <set>

#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

void check_admin_token(const Caller& caller, const std::string& expected) {
  if (expected.empty() || !caller.admin_token ||
      *caller.admin_token != expected)
    fail(ErrorCode::NotAdmin, "administrator token required");
}

}  // namespace

LocalSecurityApi::LocalSecurityApi(SecurityCore* security,
                                   KeyManagementCore* keys,
                                   std::string admin_token,
                                   std::string keys_admin_token)
    : security_(security),
      keys_(keys),
      admin_token_(std::move(admin_token)),
      keys_admin_token_(std::move(keys_admin_token)) {}

void LocalSecurityApi::require_admin(const Caller& caller) const {
  check_admin_token(caller, admin_token_);
}

void LocalSecurityApi::require_keys_admin(const Caller& caller) const {
  check_admin_token(
      caller, keys_admin_token_.empty() ? admin_token_ : keys_admin_token_);
}

MicroserviceProfile LocalSecurityApi::authenticate(const Identity& identity) {
  return security_->authenticate(identity.service_id, identity.api_key);
}

bool LocalSecurityApi::authorize(const Identity& identity,
                                 const std::string& topic,
                                 const std::string& operation,
                                 const std::optional<std::string>& section_id) {
  authenticate(identity);
  return security_->authorize(identity.service_id, topic, operation,
                              section_id);
}

PublicKeyResult LocalSecurityApi::get_public_key(const Identity& identity,
                                                 const std::string& topic,
                                                 const std::string& section_id) {
  authenticate(identity);
  if (!security_->authorize(identity.service_id, topic, "send", std::nullopt))
    fail(ErrorCode::Deny, identity.service_id + " is not a sender on " + topic);
  return keys_->active_public(topic, section_id);
}

PrivateKeyResult LocalSecurityApi::get_private_key(
    const Identity& identity, const std::string& topic,
    const std::string& section_id) {
  authenticate(identity);
  if (!security_->authorize(identity.service_id, topic, "receive", section_id))
    fail(ErrorCode::Deny, identity.service_id +
                              " is not the assigned receiver of " + topic +
                              "/" + section_id);
  return keys_->active_private(topic, section_id);
}

void LocalSecurityApi::register_profile(const Caller& caller,
                                        const std::string& service_id,
                                        const std::string& api_key,
                                        const std::string& owner_app_id) {
  require_admin(caller);
  security_->register_profile(service_id, api_key, owner_app_id);
}

void LocalSecurityApi::remove_profile(const Caller& caller,
                                      const std::string& service_id) {
  require_admin(caller);
  security_->remove_profile(service_id);
}

std::vector<MicroserviceProfile> LocalSecurityApi::list_profiles(
    const Caller& caller) {
  require_admin(caller);
  return security_->list_profiles();
}

void LocalSecurityApi::add_acl_entry(const Caller& caller,
                                     const AccessControlEntry& entry) {
  require_admin(caller);
  security_->add_acl_entry(entry);
}

void LocalSecurityApi::remove_acl_entry(const Caller& caller,
                                        const AccessControlEntry& entry) {
  require_admin(caller);
  security_->remove_acl_entry(entry);
}

std::vector<AccessControlEntry> LocalSecurityApi::list_acl(
    const Caller& caller) {
  require_admin(caller);
  return security_->list_acl();
}

PublicKeyResult LocalSecurityApi::generate_keypair(const Caller& caller,
                                                   const std::string& topic,
                                                   const std::string& section_id,
                                                   bool rotate) {
  require_keys_admin(caller);
  return keys_->generate_keypair(topic, section_id, rotate);
}

int64_t LocalSecurityApi::revoke_keys(const Caller& caller,
                                      const std::string& topic,
                                      const std::string& section_id) {
  require_keys_admin(caller);
  return keys_->revoke_section(topic, section_id);
}

Json LocalSecurityApi::list_keys(const Caller& caller) {
  require_keys_admin(caller);
  Json out = Json::array();
  for (const auto& record : keys_->list_records()) {
    out.push_back(Json{{"keyId", record.key_id},
                       {"topic", record.topic},
                       {"sectionId", record.section_id},
                       {"createdAt", record.created_at},
                       {"status", record.status},
                       {"suite", record.suite}});
  }
  return Json{{"keys", out}};
}

Json LocalSecurityApi::stats(const Caller& caller) {
  require_keys_admin(caller);
  Json doc = keys_->stats();
  doc["authorizeCalls"] = security_->authorize_calls();
  return doc;
}

LocalBrokerApi::LocalBrokerApi(Broker* broker, SecurityApi* security,
                               DiscoveryApi* discovery,
                               std::string admin_token, Caller peer_caller)
    : broker_(broker),
      security_(security),
      discovery_(discovery),
      admin_token_(std::move(admin_token)),
      peer_caller_(std::move(peer_caller)) {}

void LocalBrokerApi::require_admin(const Caller& caller) const {
  check_admin_token(caller, admin_token_);
}

void LocalBrokerApi::authenticate_caller(const Caller& caller) const {
  if (caller.admin_token && *caller.admin_token == admin_token_ &&
      !admin_token_.empty())
    return;
  if (!caller.identity) fail(ErrorCode::UnknownService, "identity required");
  security_->authenticate(*caller.identity);
}

TopicInfo LocalBrokerApi::create_topic(const Caller& caller,
                                       const std::string& name,
                                       TopicPolicy policy,
                                       const std::string& schema_name,
                                       int schema_version,
                                       const TopicConfig& config) {
  require_admin(caller);
  if (discovery_ &&
      !discovery_->get_schema(peer_caller_, schema_name, schema_version))
    fail(ErrorCode::UnknownSchema,
         "schema not registered: " + schema_name + " v" +
             std::to_string(schema_version));
  return broker_->create_topic(name, policy, schema_name, schema_version,
                               config);
}

void LocalBrokerApi::delete_topic(const Caller& caller,
                                  const std::string& name) {
  require_admin(caller);
  broker_->delete_topic(name);
}

void LocalBrokerApi::set_topic_status(const Caller& caller,
                                      const std::string& name,
                                      TopicStatus status) {
  require_admin(caller);
  broker_->set_topic_status(name, status);
}

std::vector<TopicInfo> LocalBrokerApi::list_topics(const Caller& caller) {
  authenticate_caller(caller);
  return broker_->list_topics();
}

TopicInfo LocalBrokerApi::topic_info(const Caller& caller,
                                     const std::string& name) {
  authenticate_caller(caller);
  return broker_->topic_info(name);
}

std::string LocalBrokerApi::allocate_section(const Caller& caller,
                                             const std::string& topic,
                                             const std::string& receiver_id) {
  bool admin = caller.admin_token && *caller.admin_token == admin_token_ &&
               !admin_token_.empty();
  if (!admin) {
    if (!caller.identity)
      fail(ErrorCode::NotAdmin, "administrator token or identity required");
    security_->authenticate(*caller.identity);
    if (caller.identity->service_id != receiver_id)
      fail(ErrorCode::NotAdmin,
           "services may only allocate their own section");
  }
  return broker_->allocate_section(topic, receiver_id);
}

int64_t LocalBrokerApi::append(const Identity& identity,
                               const std::string& topic,
                               const std::string& section_id,
                               const Envelope& envelope) {
  if (!security_->authorize(identity, topic, "send", std::nullopt))
    fail(ErrorCode::Unauthorized,
         identity.service_id + " may not send on " + topic);
  if (envelope.sender != identity.service_id)
    fail(ErrorCode::EnvelopeMismatch, "envelope sender is not the caller");
  return broker_->append(topic, section_id, envelope);
}

std::vector<RoutedRecord> LocalBrokerApi::fetch(const Identity& identity,
                                                const std::string& topic,
                                                const std::string& section_id,
                                                int64_t from_offset,
                                                int64_t max_count) {
  if (!security_->authorize(identity, topic, "receive", section_id))
    fail(ErrorCode::Unauthorized,
         identity.service_id + " may not receive on " + topic + "/" +
             section_id);
  TopicInfo info = broker_->topic_info(topic);
  const SectionInfo* section = nullptr;
  for (const auto& s : info.sections)
    if (s.section_id == section_id) section = &s;
  if (!section)
    fail(ErrorCode::UnknownSection, "unknown section: " + section_id);
  if (section->receiver_id != identity.service_id)
    fail(ErrorCode::NotSectionOwner,
         section_id + " is not assigned to " + identity.service_id);
  return broker_->fetch(topic, section_id, from_offset, max_count);
}

LocalDiscoveryApi::LocalDiscoveryApi(DiscoveryCore* discovery,
                                     SecurityApi* security,
                                     std::string admin_token,
                                     Caller peer_caller)
    : discovery_(discovery),
      security_(security),
      admin_token_(std::move(admin_token)),
      peer_caller_(std::move(peer_caller)) {}

void LocalDiscoveryApi::bind_broker(BrokerApi* broker) { broker_ = broker; }

void LocalDiscoveryApi::require_admin(const Caller& caller) const {
  check_admin_token(caller, admin_token_);
}

bool LocalDiscoveryApi::is_admin(const Caller& caller) const {
  return !admin_token_.empty() && caller.admin_token &&
         *caller.admin_token == admin_token_;
}

void LocalDiscoveryApi::authenticate_caller(const Caller& caller) const {
  if (is_admin(caller)) return;
  if (!caller.identity) fail(ErrorCode::UnknownService, "identity required");
  security_->authenticate(*caller.identity);
}

std::vector<DiscoveryTopicInfo> LocalDiscoveryApi::query_topics(
    const Caller& caller, const std::string& filter) {
  authenticate_caller(caller);
  return discovery_->query_topics(filter);
}

std::vector<DiscoveryServiceInfo> LocalDiscoveryApi::query_services(
    const Caller& caller, const std::string& filter) {
  if (is_admin(caller)) return discovery_->query_services(filter);
  if (!caller.identity) fail(ErrorCode::UnknownService, "identity required");
  security_->authenticate(*caller.identity);

  // A sender sees exactly the receivers holding sections on topics it may
  // send to; everyone else sees nothing.
  std::set<std::string> visible;
  std::vector<AccessControlEntry> acl = security_->list_acl(peer_caller_);
  for (const auto& entry : acl) {
    if (entry.service_id != caller.identity->service_id ||
        entry.operation != "send")
      continue;
    if (!broker_) continue;
    try {
      TopicInfo info = broker_->topic_info(peer_caller_, entry.topic);
      for (const auto& section : info.sections)
        visible.insert(section.receiver_id);
    } catch (const Error&) {
      // topic not created on the broker yet
    }
  }
  std::vector<DiscoveryServiceInfo> out;
  for (const auto& info : discovery_->query_services(filter))
    if (visible.count(info.name)) out.push_back(info);
  return out;
}

std::optional<Json> LocalDiscoveryApi::get_schema(const Caller& caller,
                                                  const std::string& schema_name,
                                                  int version) {
  authenticate_caller(caller);
  return discovery_->find_schema(schema_name, version);
}

void LocalDiscoveryApi::register_topic(const Caller& caller,
                                       const DiscoveryTopicInfo& info) {
  require_admin(caller);
  discovery_->register_topic(info);
}

void LocalDiscoveryApi::register_service(const Caller& caller,
                                         const DiscoveryServiceInfo& info) {
  require_admin(caller);
  discovery_->register_service(info);
}

void LocalDiscoveryApi::set_status(const Caller& caller, EntryKind kind,
                                   const std::string& name,
                                   EntryStatus status) {
  require_admin(caller);
  if (kind == EntryKind::Topic)
    discovery_->set_topic_status(name, status);
  else
    discovery_->set_service_status(name, status);
}

void LocalDiscoveryApi::remove(const Caller& caller, EntryKind kind,
                               const std::string& name) {
  require_admin(caller);
  if (kind == EntryKind::Topic)
    discovery_->remove_topic(name);
  else
    discovery_->remove_service(name);
}

}  // namespace dhlink
