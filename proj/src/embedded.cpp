#include "dhlink/embedded.hpp"

#include "dhlink/errors.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

EmbeddedPlatform::EmbeddedPlatform(PlatformConfig config)
    : config_(std::move(config)) {
  if (config_.data_dir.empty()) {
    fail(ErrorCode::BadRequest, "platform needs a data directory");
  }
  util::ensure_dir(config_.data_dir);

  security_core_ = std::make_unique<SecurityCore>(
      config_.data_dir + "/security", config_.clock);
  keys_core_ = std::make_unique<KeyManagementCore>(
      config_.data_dir + "/security", config_.clock);
  broker_core_ =
      std::make_unique<Broker>(config_.data_dir + "/broker", config_.clock);
  discovery_core_ =
      std::make_unique<DiscoveryCore>(config_.data_dir + "/discovery");

  Caller peer = Caller::admin(config_.admin_token);
  security_api_ = std::make_unique<LocalSecurityApi>(
      security_core_.get(), keys_core_.get(), config_.admin_token);
  discovery_api_ = std::make_unique<LocalDiscoveryApi>(
      discovery_core_.get(), security_api_.get(), config_.admin_token, peer);
  broker_api_ = std::make_unique<LocalBrokerApi>(
      broker_core_.get(), security_api_.get(), discovery_api_.get(),
      config_.admin_token, peer);
  discovery_api_->bind_broker(broker_api_.get());

  admin_ = std::make_unique<AdminCore>(broker_api_.get(), security_api_.get(),
                                       discovery_api_.get(),
                                       config_.admin_token,
                                       config_.data_dir + "/admin",
                                       config_.clock);

  if (config_.with_http) {
    const std::string scheme = config_.tls.enabled() ? "https" : "http";
    security_server_ =
        std::make_unique<SecurityServer>(security_api_.get(), config_.tls);
    int port = security_server_->start("127.0.0.1", 0);
    security_url_ = scheme + "://127.0.0.1:" + std::to_string(port);

    broker_server_ =
        std::make_unique<BrokerServer>(broker_api_.get(), config_.tls);
    port = broker_server_->start("127.0.0.1", 0);
    broker_url_ = scheme + "://127.0.0.1:" + std::to_string(port);

    discovery_server_ =
        std::make_unique<DiscoveryServer>(discovery_api_.get(), config_.tls);
    port = discovery_server_->start("127.0.0.1", 0);
    discovery_url_ = scheme + "://127.0.0.1:" + std::to_string(port);

    http_security_ = std::make_unique<HttpSecurityApi>(security_url_);
    http_broker_ = std::make_unique<HttpBrokerApi>(broker_url_);
    http_discovery_ = std::make_unique<HttpDiscoveryApi>(discovery_url_);
  }
}

EmbeddedPlatform::~EmbeddedPlatform() {
  if (security_server_) security_server_->stop();
  if (broker_server_) broker_server_->stop();
  if (discovery_server_) discovery_server_->stop();
}

SecurityApi& EmbeddedPlatform::security() { return *security_api_; }
BrokerApi& EmbeddedPlatform::broker() { return *broker_api_; }
DiscoveryApi& EmbeddedPlatform::discovery() { return *discovery_api_; }
AdminCore& EmbeddedPlatform::admin() { return *admin_; }

namespace {

[[noreturn]] void no_http() {
  fail(ErrorCode::SetupIncomplete, "platform started without HTTP servers");
}

}  // namespace

std::string EmbeddedPlatform::security_url() const {
  if (security_url_.empty()) no_http();
  return security_url_;
}

std::string EmbeddedPlatform::broker_url() const {
  if (broker_url_.empty()) no_http();
  return broker_url_;
}

std::string EmbeddedPlatform::discovery_url() const {
  if (discovery_url_.empty()) no_http();
  return discovery_url_;
}

SecurityApi& EmbeddedPlatform::http_security() {
  if (!http_security_) no_http();
  return *http_security_;
}

BrokerApi& EmbeddedPlatform::http_broker() {
  if (!http_broker_) no_http();
  return *http_broker_;
}

DiscoveryApi& EmbeddedPlatform::http_discovery() {
  if (!http_discovery_) no_http();
  return *http_discovery_;
}

Caller EmbeddedPlatform::admin_caller() const {
  return Caller::admin(config_.admin_token);
}

const std::string& EmbeddedPlatform::admin_token() const {
  return config_.admin_token;
}

SecurityCore& EmbeddedPlatform::security_core() { return *security_core_; }
KeyManagementCore& EmbeddedPlatform::keys_core() { return *keys_core_; }
Broker& EmbeddedPlatform::broker_core() { return *broker_core_; }
DiscoveryCore& EmbeddedPlatform::discovery_core() { return *discovery_core_; }

}  // namespace dhlink
