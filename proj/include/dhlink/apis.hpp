#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dhlink/broker.hpp"
#include "dhlink/discovery.hpp"
#include "dhlink/envelope.hpp"
#include "dhlink/security.hpp"

namespace dhlink {

struct Identity {
  std::string service_id;
  std::string api_key;
};

// A request principal: a service identity, an admin token, or both.
struct Caller {
  std::optional<Identity> identity;
  std::optional<std::string> admin_token;

  static Caller service(Identity id) { return {std::move(id), std::nullopt}; }
  static Caller admin(std::string token) {
    return {std::nullopt, std::move(token)};
  }
};

enum class EntryKind { Topic, Service };

// The three service surfaces. Local implementations wrap the in-process cores
// and enforce identity, ACL, and ownership checks; HTTP implementations speak
// to a remote service that applies the same checks. Either way a denied
// operation changes no state.
class SecurityApi {
 public:
  virtual ~SecurityApi() = default;

  virtual MicroserviceProfile authenticate(const Identity& identity) = 0;
  virtual bool authorize(const Identity& identity, const std::string& topic,
                         const std::string& operation,
                         const std::optional<std::string>& section_id) = 0;
  // Key access rides on the ACL: public keys for senders of the topic,
  // private keys only for the section's assigned receiver.
  virtual PublicKeyResult get_public_key(const Identity& identity,
                                         const std::string& topic,
                                         const std::string& section_id) = 0;
  virtual PrivateKeyResult get_private_key(const Identity& identity,
                                           const std::string& topic,
                                           const std::string& section_id) = 0;

  virtual void register_profile(const Caller& caller,
                                const std::string& service_id,
                                const std::string& api_key,
                                const std::string& owner_app_id) = 0;
  virtual void remove_profile(const Caller& caller,
                              const std::string& service_id) = 0;
  virtual std::vector<MicroserviceProfile> list_profiles(
      const Caller& caller) = 0;
  virtual void add_acl_entry(const Caller& caller,
                             const AccessControlEntry& entry) = 0;
  virtual void remove_acl_entry(const Caller& caller,
                                const AccessControlEntry& entry) = 0;
  virtual std::vector<AccessControlEntry> list_acl(const Caller& caller) = 0;
  virtual PublicKeyResult generate_keypair(const Caller& caller,
                                           const std::string& topic,
                                           const std::string& section_id,
                                           bool rotate) = 0;
  virtual int64_t revoke_keys(const Caller& caller, const std::string& topic,
                              const std::string& section_id) = 0;
  // Admin inventory of key records: public fields only, never key material.
  virtual Json list_keys(const Caller& caller) = 0;
  virtual Json stats(const Caller& caller) = 0;
};

class BrokerApi {
 public:
  virtual ~BrokerApi() = default;

  virtual TopicInfo create_topic(const Caller& caller, const std::string& name,
                                 TopicPolicy policy,
                                 const std::string& schema_name,
                                 int schema_version,
                                 const TopicConfig& config) = 0;
  virtual void delete_topic(const Caller& caller, const std::string& name) = 0;
  virtual void set_topic_status(const Caller& caller, const std::string& name,
                                TopicStatus status) = 0;
  virtual std::vector<TopicInfo> list_topics(const Caller& caller) = 0;
  virtual TopicInfo topic_info(const Caller& caller,
                               const std::string& name) = 0;
  // Admin, or a service allocating its own section.
  virtual std::string allocate_section(const Caller& caller,
                                       const std::string& topic,
                                       const std::string& receiver_id) = 0;

  virtual int64_t append(const Identity& identity, const std::string& topic,
                         const std::string& section_id,
                         const Envelope& envelope) = 0;
  virtual std::vector<RoutedRecord> fetch(const Identity& identity,
                                          const std::string& topic,
                                          const std::string& section_id,
                                          int64_t from_offset,
                                          int64_t max_count) = 0;
};

class DiscoveryApi {
 public:
  virtual ~DiscoveryApi() = default;

  virtual std::vector<DiscoveryTopicInfo> query_topics(
      const Caller& caller, const std::string& filter) = 0;
  virtual std::vector<DiscoveryServiceInfo> query_services(
      const Caller& caller, const std::string& filter) = 0;
  virtual std::optional<Json> get_schema(const Caller& caller,
                                         const std::string& schema_name,
                                         int version) = 0;

  virtual void register_topic(const Caller& caller,
                              const DiscoveryTopicInfo& info) = 0;
  virtual void register_service(const Caller& caller,
                                const DiscoveryServiceInfo& info) = 0;
  virtual void set_status(const Caller& caller, EntryKind kind,
                          const std::string& name, EntryStatus status) = 0;
  virtual void remove(const Caller& caller, EntryKind kind,
                      const std::string& name) = 0;
};

}  // namespace dhlink
