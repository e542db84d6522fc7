#pragma once

#include <memory>
#include <string>

#include "dhlink/admin.hpp"
#include "dhlink/apis.hpp"
#include "dhlink/http.hpp"
#include "dhlink/local_apis.hpp"

namespace dhlink {

struct PlatformConfig {
  std::string data_dir;
  std::string admin_token = "admin-token";
  util::Clock clock = util::system_clock();
  bool with_http = false;  // also serve the three surfaces on loopback
  TlsConfig tls;
};

// Everything a deployment is made of, wired in one process: the three cores,
// their enforcing local surfaces, the application-lifecycle driver, and
// (optionally) loopback HTTP servers plus clients bound to them. The HTTP
// route and the local route hit the same enforcement, so either can stand in
// for a full deployment.
class EmbeddedPlatform {
 public:
  explicit EmbeddedPlatform(PlatformConfig config);
  ~EmbeddedPlatform();

  EmbeddedPlatform(const EmbeddedPlatform&) = delete;
  EmbeddedPlatform& operator=(const EmbeddedPlatform&) = delete;

  SecurityApi& security();
  BrokerApi& broker();
  DiscoveryApi& discovery();
  AdminCore& admin();

  // HTTP side; only with with_http.
  std::string security_url() const;
  std::string broker_url() const;
  std::string discovery_url() const;
  SecurityApi& http_security();
  BrokerApi& http_broker();
  DiscoveryApi& http_discovery();

  Caller admin_caller() const;
  const std::string& admin_token() const;

  SecurityCore& security_core();
  KeyManagementCore& keys_core();
  Broker& broker_core();
  DiscoveryCore& discovery_core();

 private:
  PlatformConfig config_;

  std::unique_ptr<SecurityCore> security_core_;
  std::unique_ptr<KeyManagementCore> keys_core_;
  std::unique_ptr<Broker> broker_core_;
  std::unique_ptr<DiscoveryCore> discovery_core_;

  std::unique_ptr<LocalSecurityApi> security_api_;
  std::unique_ptr<LocalDiscoveryApi> discovery_api_;
  std::unique_ptr<LocalBrokerApi> broker_api_;
  std::unique_ptr<AdminCore> admin_;

  std::unique_ptr<SecurityServer> security_server_;
  std::unique_ptr<BrokerServer> broker_server_;
  std::unique_ptr<DiscoveryServer> discovery_server_;
  std::string security_url_;
  std::string broker_url_;
  std::string discovery_url_;
  std::unique_ptr<HttpSecurityApi> http_security_;
  std::unique_ptr<HttpBrokerApi> http_broker_;
  std::unique_ptr<HttpDiscoveryApi> http_discovery_;
};

}  // namespace dhlink
