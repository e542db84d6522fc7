#pragma once

#include <memory>
#include <string>

#include "dhlink/apis.hpp"
#include "dhlink/errors.hpp"

namespace dhlink {

// Paths to a PEM certificate and key; both empty runs plain HTTP.
struct TlsConfig {
  std::string cert_path;
  std::string key_path;
  bool enabled() const { return !cert_path.empty() && !key_path.empty(); }
};

// The servers expose an already-enforcing api over HTTP; they add transport
// and identity-header handling, never policy. Callers authenticate with
// X-DHLink-Service-Id / X-DHLink-Api-Key, admins with X-DHLink-Admin-Token.

class SecurityServer {
 public:
  explicit SecurityServer(SecurityApi* api, TlsConfig tls = {});
  ~SecurityServer();
  // Binds host:port (port 0 picks a free one) and serves on a background
  // thread; returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class BrokerServer {
 public:
  explicit BrokerServer(BrokerApi* api, TlsConfig tls = {});
  ~BrokerServer();
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class DiscoveryServer {
 public:
  explicit DiscoveryServer(DiscoveryApi* api, TlsConfig tls = {});
  ~DiscoveryServer();
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// HTTP-side implementations of the service surfaces. Server errors carry
// their error code in the body and are rethrown client-side under the same
// code, so callers cannot tell local from remote enforcement.

class HttpSecurityApi : public SecurityApi {
 public:
  explicit HttpSecurityApi(std::string base_url);
  ~HttpSecurityApi();

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
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class HttpBrokerApi : public BrokerApi {
 public:
  explicit HttpBrokerApi(std::string base_url);
  ~HttpBrokerApi();

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
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class HttpDiscoveryApi : public DiscoveryApi {
 public:
  explicit HttpDiscoveryApi(std::string base_url);
  ~HttpDiscoveryApi();

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
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Maps an error code onto the HTTP status its category belongs to.
int http_status_for_error(ErrorCode code);

}  // namespace dhlink
