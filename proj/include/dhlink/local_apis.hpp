#pragma once

#include <memory>
#include <string>

#include "dhlink/apis.hpp"

namespace dhlink {

// In-process service surfaces over the core objects. The embedded platform
// and the HTTP servers both route through these, so enforcement is identical
// whether a caller is local or remote.

class LocalSecurityApi : public SecurityApi {
 public:
  LocalSecurityApi(SecurityCore* security, KeyManagementCore* keys,
                   std::string admin_token, std::string keys_admin_token = "");

  MicroserviceProfile authenticate(const Identity& identity) override;
  bool authorize(const Identity& identity, const std::string& topic,
                 const std::string& operation,
                 const std::optional<std::string>& section_id) override;
  PublicKeyResult get_public_key(const Identity& identity,
                                 const std::string& topic,
                                 const std::string& section_id) override;
  PrivateKeyResult get_private_key(const Identity& identity,
                                   const std::string& topic,
                                   const std::string& section_id) override;
  void register_profile(const Caller& caller, const std::string& service_id,
                        const std::string& api_key,
                        const std::string& owner_app_id) override;
  void remove_profile(const Caller& caller,
                      const std::string& service_id) override;
  std::vector<MicroserviceProfile> list_profiles(const Caller& caller) override;
  void add_acl_entry(const Caller& caller,
                     const AccessControlEntry& entry) override;
  void remove_acl_entry(const Caller& caller,
                        const AccessControlEntry& entry) override;
  std::vector<AccessControlEntry> list_acl(const Caller& caller) override;
  PublicKeyResult generate_keypair(const Caller& caller,
                                   const std::string& topic,
                                   const std::string& section_id,
                                   bool rotate) override;
  int64_t revoke_keys(const Caller& caller, const std::string& topic,
                      const std::string& section_id) override;
  Json list_keys(const Caller& caller) override;
  Json stats(const Caller& caller) override;

 private:
  void require_admin(const Caller& caller) const;
  void require_keys_admin(const Caller& caller) const;

  SecurityCore* security_;
  KeyManagementCore* keys_;
  std::string admin_token_;
  std::string keys_admin_token_;  // empty: the main admin token governs keys
};

class LocalBrokerApi : public BrokerApi {
 public:
  // discovery may be null only when schema checks are handled elsewhere
  // (never in production wiring).
  LocalBrokerApi(Broker* broker, SecurityApi* security, DiscoveryApi* discovery,
                 std::string admin_token, Caller peer_caller);

  TopicInfo create_topic(const Caller& caller, const std::string& name,
                         TopicPolicy policy, const std::string& schema_name,
                         int schema_version, const TopicConfig& config) override;
  void delete_topic(const Caller& caller, const std::string& name) override;
  void set_topic_status(const Caller& caller, const std::string& name,
                        TopicStatus status) override;
  std::vector<TopicInfo> list_topics(const Caller& caller) override;
  TopicInfo topic_info(const Caller& caller, const std::string& name) override;
  std::string allocate_section(const Caller& caller, const std::string& topic,
                               const std::string& receiver_id) override;
  int64_t append(const Identity& identity, const std::string& topic,
                 const std::string& section_id,
                 const Envelope& envelope) override;
  std::vector<RoutedRecord> fetch(const Identity& identity,
                                  const std::string& topic,
                                  const std::string& section_id,
                                  int64_t from_offset,
                                  int64_t max_count) override;

 private:
  void require_admin(const Caller& caller) const;
  void authenticate_caller(const Caller& caller) const;

  Broker* broker_;
  SecurityApi* security_;
  DiscoveryApi* discovery_;
  std::string admin_token_;
  Caller peer_caller_;  // used for the schema-existence check
};

class LocalDiscoveryApi : public DiscoveryApi {
 public:
  // security/broker power the sender-sees-its-receivers visibility walk;
  // peer_caller must carry their admin tokens.
  LocalDiscoveryApi(DiscoveryCore* discovery, SecurityApi* security,
                    std::string admin_token, Caller peer_caller);
  void bind_broker(BrokerApi* broker);

  std::vector<DiscoveryTopicInfo> query_topics(const Caller& caller,
                                               const std::string& filter) override;
  std::vector<DiscoveryServiceInfo> query_services(
      const Caller& caller, const std::string& filter) override;
  std::optional<Json> get_schema(const Caller& caller,
                                 const std::string& schema_name,
                                 int version) override;
  void register_topic(const Caller& caller,
                      const DiscoveryTopicInfo& info) override;
  void register_service(const Caller& caller,
                        const DiscoveryServiceInfo& info) override;
  void set_status(const Caller& caller, EntryKind kind, const std::string& name,
                  EntryStatus status) override;
  void remove(const Caller& caller, EntryKind kind,
              const std::string& name) override;

 private:
  void require_admin(const Caller& caller) const;
  bool is_admin(const Caller& caller) const;
  void authenticate_caller(const Caller& caller) const;

  DiscoveryCore* discovery_;
  SecurityApi* security_;
  BrokerApi* broker_ = nullptr;
  std::string admin_token_;
  Caller peer_caller_;
};

}  // namespace dhlink
