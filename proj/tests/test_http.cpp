#include "dhlink/http.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <optional>
#include <string>

#include "dhlink/canonical.hpp"
#include "dhlink/connector.hpp"
#include "dhlink/errors.hpp"
#include "dhlink/local_apis.hpp"
#include "test_support.hpp"

namespace dhlink {
namespace {

using testing::code_of;
using testing::TempDir;

constexpr const char* kAdminToken = "http-admin";

Json schema_doc() {
  return Json{{"name", "obs"},
              {"version", 1},
              {"fields", Json::array({Json{{"name", "v"},
                                           {"kind", "integer"}}})}};
}

// The full platform behind real sockets: local cores wrapped by the
// enforcing apis, served over HTTP, exercised through the HTTP clients.
class HttpStack : public ::testing::Test {
 protected:
  HttpStack()
      : broker_core(dir.sub("broker")),
        security_core(dir.sub("security")),
        keys_core(dir.sub("security")),
        discovery_core(dir.sub("discovery")),
        local_security(&security_core, &keys_core, kAdminToken),
        local_discovery(&discovery_core, &local_security, kAdminToken,
                        Caller::admin(kAdminToken)),
        local_broker(&broker_core, &local_security, &local_discovery,
                     kAdminToken, Caller::admin(kAdminToken)),
        security_server(&local_security),
        broker_server(&local_broker),
        discovery_server(&local_discovery) {
    local_discovery.bind_broker(&local_broker);
    int security_port = security_server.start("127.0.0.1", 0);
    int broker_port = broker_server.start("127.0.0.1", 0);
    int discovery_port = discovery_server.start("127.0.0.1", 0);
    security = std::make_unique<HttpSecurityApi>(
        "http://127.0.0.1:" + std::to_string(security_port));
    broker = std::make_unique<HttpBrokerApi>(
        "http://127.0.0.1:" + std::to_string(broker_port));
    discovery = std::make_unique<HttpDiscoveryApi>(
        "http://127.0.0.1:" + std::to_string(discovery_port));
    admin = Caller::admin(kAdminToken);
  }

  ~HttpStack() override {
    security_server.stop();
    broker_server.stop();
    discovery_server.stop();
  }

  // Registers the usual cast and a Ready encrypted topic, all over the wire.
  std::string provision() {
    security->register_profile(admin, "src-svc", "key-src", "app-1");
    security->register_profile(admin, "recv-a", "key-a", "app-1");
    DiscoveryTopicInfo info;
    info.name = "vitals";
    info.schema_spec = schema_doc();
    discovery->register_topic(admin, info);
    broker->create_topic(admin, "vitals", TopicPolicy::Retained, "obs", 1,
                         TopicConfig{});
    broker->set_topic_status(admin, "vitals", TopicStatus::Ready);
    std::string section = broker->allocate_section(admin, "vitals", "recv-a");
    security->add_acl_entry(admin,
                            {"src-svc", "vitals", "send", std::nullopt});
    security->add_acl_entry(admin, {"recv-a", "vitals", "receive", section});
    security->generate_keypair(admin, "vitals", section, false);
    return section;
  }

  TempDir dir;
  Broker broker_core;
  SecurityCore security_core;
  KeyManagementCore keys_core;
  DiscoveryCore discovery_core;
  LocalSecurityApi local_security;
  LocalDiscoveryApi local_discovery;
  LocalBrokerApi local_broker;
  SecurityServer security_server;
  BrokerServer broker_server;
  DiscoveryServer discovery_server;
  std::unique_ptr<HttpSecurityApi> security;
  std::unique_ptr<HttpBrokerApi> broker;
  std::unique_ptr<HttpDiscoveryApi> discovery;
  Caller admin;
};

TEST_F(HttpStack, ConnectorsRunUnchangedOverTheWire) {
  std::string section = provision();
  DataSchema schema = parse_schema(schema_doc());

  ConnectorConfig src;
  src.service_id = "src-svc";
  src.api_key = "key-src";
  src.topic = "vitals";
  src.role = "source";
  SourceConnector source(src, schema, broker.get(), security.get());

  auto outcomes = source.send(Json{{"v", 41}});
  ASSERT_EQ(outcomes.size(), 1u);
  EXPECT_EQ(outcomes[0].outcome, "appended");
  EXPECT_TRUE(outcomes[0].encrypted);

  ConnectorConfig snk = src;
  snk.service_id = "recv-a";
  snk.api_key = "key-a";
  snk.role = "sink";
  SinkConnector sink(snk, schema, broker.get(), security.get());
  EXPECT_EQ(sink.section_id(), section);
  PollResult polled = sink.poll();
  ASSERT_EQ(polled.records.size(), 1u);
  EXPECT_EQ(polled.records[0].value, Json({{"v", 41}}));
  EXPECT_TRUE(polled.skipped.empty());
  EXPECT_FALSE(polled.halted);
}

TEST_F(HttpStack, BinaryPayloadsSurviveTheWire) {
  std::string section = provision();
  Envelope e;
  e.topic = "vitals";
  e.section = section;
  e.schema = "obs";
  e.schema_version = 1;
  e.sender = "src-svc";
  e.message_id = "m-bin";
  e.sent_at = 5;
  e.encrypted = false;
  e.payload = std::string("\x00\x01\xfe\xffraw", 7);
  int64_t offset = broker->append(Identity{"src-svc", "key-src"}, "vitals",
                                  section, e);
  EXPECT_EQ(offset, 0);
  auto records = broker->fetch(Identity{"recv-a", "key-a"}, "vitals", section,
                               0, 10);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].envelope, e);
  EXPECT_EQ(records[0].offset, 0);
}

TEST_F(HttpStack, FetchWindowsMatchTheLocalApi) {
  std::string section = provision();
  Identity sender{"src-svc", "key-src"};
  for (int i = 0; i < 5; ++i) {
    Envelope e;
    e.topic = "vitals";
    e.section = section;
    e.schema = "obs";
    e.schema_version = 1;
    e.sender = "src-svc";
    e.message_id = "m-" + std::to_string(i);
    e.sent_at = i;
    e.payload = canonical_encode(Json{{"v", i}});
    broker->append(sender, "vitals", section, e);
  }
  Identity receiver{"recv-a", "key-a"};
  auto window = broker->fetch(receiver, "vitals", section, 2, 2);
  ASSERT_EQ(window.size(), 2u);
  EXPECT_EQ(window[0].offset, 2);
  EXPECT_EQ(window[1].offset, 3);
  EXPECT_TRUE(broker->fetch(receiver, "vitals", section, 5, 10).empty());

  auto remote = broker->topic_info(admin, "vitals");
  auto local = local_broker.topic_info(admin, "vitals");
  EXPECT_EQ(canonical_encode(Json(remote)), canonical_encode(Json(local)));
}

TEST_F(HttpStack, ErrorCodesCrossTheWireIntact) {
  std::string section = provision();
  Identity sender{"src-svc", "key-src"};
  Identity receiver{"recv-a", "key-a"};

  EXPECT_EQ(code_of([&] { broker->topic_info(admin, "absent"); }),
            ErrorCode::UnknownTopic);
  EXPECT_EQ(code_of([&] {
              broker->create_topic(Caller::admin("wrong"), "x",
                                   TopicPolicy::Retained, "obs", 1,
                                   TopicConfig{});
            }),
            ErrorCode::NotAdmin);
  EXPECT_EQ(code_of([&] {
              broker->create_topic(admin, "vitals", TopicPolicy::Retained,
                                   "obs", 1, TopicConfig{});
            }),
            ErrorCode::DuplicateName);
  EXPECT_EQ(code_of([&] {
              broker->create_topic(admin, "next", TopicPolicy::Retained,
                                   "ghost", 1, TopicConfig{});
            }),
            ErrorCode::UnknownSchema);
  EXPECT_EQ(code_of([&] { security->authenticate({"src-svc", "bad"}); }),
            ErrorCode::BadCredential);
  EXPECT_EQ(code_of([&] { security->authenticate({"ghost", "k"}); }),
            ErrorCode::UnknownService);
  EXPECT_EQ(code_of([&] {
              security->generate_keypair(admin, "vitals", section, false);
            }),
            ErrorCode::ActiveKeyExists);
  EXPECT_EQ(code_of([&] {
              security->get_private_key(sender, "vitals", section);
            }),
            ErrorCode::Deny);
  EXPECT_EQ(code_of([&] { broker->fetch(receiver, "vitals", "s-none", 0, 10); }),
            ErrorCode::Unauthorized);
  security->add_acl_entry(admin, {"recv-a", "vitals", "receive", "s-none"});
  EXPECT_EQ(code_of([&] { broker->fetch(receiver, "vitals", "s-none", 0, 10); }),
            ErrorCode::UnknownSection);

  Envelope bad;
  bad.topic = "vitals";
  bad.section = section;
  bad.schema = "obs";
  bad.schema_version = 1;
  bad.sender = "src-svc";
  bad.message_id = "m";
  bad.payload = "";  // never valid
  EXPECT_EQ(code_of([&] { broker->append(sender, "vitals", section, bad); }),
            ErrorCode::MalformedEnvelope);
}

TEST_F(HttpStack, AuthorizationProbesReturnPlainAnswers) {
  std::string section = provision();
  EXPECT_TRUE(security->authorize({"src-svc", "key-src"}, "vitals", "send",
                                  std::nullopt));
  EXPECT_FALSE(security->authorize({"recv-a", "key-a"}, "vitals", "send",
                                   std::nullopt));
  EXPECT_TRUE(security->authorize({"recv-a", "key-a"}, "vitals", "receive",
                                  section));
  EXPECT_FALSE(security->authorize({"recv-a", "key-a"}, "vitals", "receive",
                                   std::nullopt));
}

TEST_F(HttpStack, SecurityAdministrationOverTheWire) {
  provision();
  auto profiles = security->list_profiles(admin);
  EXPECT_EQ(profiles.size(), 2u);
  for (const auto& p : profiles) {
    EXPECT_FALSE(p.credential_fingerprint.empty());
    EXPECT_NE(p.credential_fingerprint, "key-src");
    EXPECT_NE(p.credential_fingerprint, "key-a");
  }
  auto acl = security->list_acl(admin);
  EXPECT_EQ(acl.size(), 2u);

  Json keys = security->list_keys(admin);
  ASSERT_EQ(keys["keys"].size(), 1u);
  EXPECT_FALSE(keys["keys"][0].contains("publicKey"));
  Json stats = security->stats(admin);
  EXPECT_TRUE(stats.contains("publicLookups"));
  EXPECT_TRUE(stats.contains("authorizeCalls"));

  security->remove_profile(admin, "src-svc");
  EXPECT_EQ(security->list_profiles(admin).size(), 1u);
  EXPECT_EQ(code_of([&] { security->authenticate({"src-svc", "key-src"}); }),
            ErrorCode::UnknownService);
}

TEST_F(HttpStack, DiscoveryQueriesAndLifecycleOverTheWire) {
  provision();
  DiscoveryServiceInfo svc;
  svc.name = "recv-a";
  svc.description = "Vitals dashboard";
  svc.url = "https://example.test";
  svc.status = EntryStatus::Ready;
  discovery->register_service(admin, svc);

  auto topics = discovery->query_topics(
      Caller::service(Identity{"src-svc", "key-src"}), "VIT");
  ASSERT_EQ(topics.size(), 1u);
  EXPECT_EQ(topics[0].name, "vitals");
  EXPECT_EQ(canonical_encode(topics[0].schema_spec),
            canonical_encode(schema_doc()));

  auto schema = discovery->get_schema(admin, "obs", 1);
  ASSERT_TRUE(schema.has_value());
  EXPECT_FALSE(discovery->get_schema(admin, "obs", 2).has_value());

  // The sender's visibility walk runs server-side.
  auto visible = discovery->query_services(
      Caller::service(Identity{"src-svc", "key-src"}), "");
  ASSERT_EQ(visible.size(), 1u);
  EXPECT_EQ(visible[0].name, "recv-a");
  EXPECT_TRUE(discovery->query_services(
                  Caller::service(Identity{"recv-a", "key-a"}), "")
                  .empty());

  discovery->set_status(admin, EntryKind::Service, "recv-a",
                        EntryStatus::Retired);
  EXPECT_EQ(code_of([&] {
              discovery->set_status(admin, EntryKind::Service, "recv-a",
                                    EntryStatus::Ready);
            }),
            ErrorCode::IllegalTransition);
  discovery->remove(admin, EntryKind::Service, "recv-a");
  EXPECT_TRUE(discovery->query_services(admin, "recv").empty());
  EXPECT_EQ(code_of([&] {
              discovery->remove(admin, EntryKind::Service, "recv-a");
            }),
            ErrorCode::UnknownName);
}

TEST_F(HttpStack, UnreachableEndpointsFailCleanly) {
  HttpBrokerApi dead("http://127.0.0.1:9");
  EXPECT_EQ(code_of([&] { dead.list_topics(admin); }),
            ErrorCode::EndpointUnreachable);
}

TEST(HttpTls, EncryptedTransportServesTheSameApi) {
  TempDir dir;
  SecurityCore security_core(dir.sub("security"));
  KeyManagementCore keys_core(dir.sub("security"));
  LocalSecurityApi local(&security_core, &keys_core, kAdminToken);

  TlsConfig tls;
  tls.cert_path = std::string(DHLINK_TEST_DATA_DIR) + "/test_cert.pem";
  tls.key_path = std::string(DHLINK_TEST_DATA_DIR) + "/test_key.pem";
  ASSERT_TRUE(tls.enabled());
  SecurityServer server(&local, tls);
  int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);

  HttpSecurityApi client("https://127.0.0.1:" + std::to_string(port));
  Caller admin = Caller::admin(kAdminToken);
  client.register_profile(admin, "tls-svc", "tls-key", "app-1");
  MicroserviceProfile profile = client.authenticate({"tls-svc", "tls-key"});
  EXPECT_EQ(profile.service_id, "tls-svc");

  // A cleartext client cannot speak to the TLS port.
  HttpSecurityApi wrong_scheme("http://127.0.0.1:" + std::to_string(port));
  EXPECT_NE(code_of([&] { wrong_scheme.authenticate({"tls-svc", "tls-key"}); }),
            std::nullopt);
  server.stop();
}

TEST(HttpStatus, ErrorCategoriesMapToHttpCodes) {
  EXPECT_EQ(http_status_for_error(ErrorCode::BadRequest), 400);
  EXPECT_EQ(http_status_for_error(ErrorCode::MalformedEnvelope), 400);
  EXPECT_EQ(http_status_for_error(ErrorCode::BadCredential), 401);
  EXPECT_EQ(http_status_for_error(ErrorCode::UnknownService), 401);
  EXPECT_EQ(http_status_for_error(ErrorCode::NotAdmin), 403);
  EXPECT_EQ(http_status_for_error(ErrorCode::Deny), 403);
  EXPECT_EQ(http_status_for_error(ErrorCode::Unauthorized), 403);
  EXPECT_EQ(http_status_for_error(ErrorCode::UnknownTopic), 404);
  EXPECT_EQ(http_status_for_error(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status_for_error(ErrorCode::DuplicateName), 409);
  EXPECT_EQ(http_status_for_error(ErrorCode::ActiveKeyExists), 409);
  EXPECT_EQ(http_status_for_error(ErrorCode::EndpointUnreachable), 503);
  EXPECT_EQ(http_status_for_error(ErrorCode::IoError), 500);
}

}  // namespace
}  // namespace dhlink
