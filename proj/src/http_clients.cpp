#include "dhlink/http.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace dhlink {

namespace {

constexpr const char* kServiceIdHeader = "X-DHLink-Service-Id";
constexpr const char* kApiKeyHeader = "X-DHLink-Api-Key";
constexpr const char* kAdminTokenHeader = "X-DHLink-Admin-Token";

crypto::Bytes b64_bytes(const std::string& text) {
  std::string raw = util::base64url_decode(text);
  return crypto::Bytes(raw.begin(), raw.end());
}

MicroserviceProfile profile_from_json(const Json& doc) {
  MicroserviceProfile profile;
  doc.at("serviceId").get_to(profile.service_id);
  doc.at("credentialFingerprint").get_to(profile.credential_fingerprint);
  profile.owner_app_id = doc.value("ownerAppId", "");
  return profile;
}

// One HTTP origin plus the request/decode/rethrow plumbing shared by the
// three client classes.
struct ClientCore {
  httplib::Client client;
  std::string base_url;

  explicit ClientCore(std::string url) : client(url), base_url(std::move(url)) {
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);
    client.set_write_timeout(60, 0);
    // Test and desk deployments run on self-signed certificates; transport
    // privacy is what TLS provides here, payload secrecy never depends on it.
    client.enable_server_certificate_verification(false);
    client.set_keep_alive(true);
  }

  static httplib::Headers headers_for(const Caller& caller) {
    httplib::Headers headers;
    if (caller.identity) {
      headers.emplace(kServiceIdHeader, caller.identity->service_id);
      headers.emplace(kApiKeyHeader, caller.identity->api_key);
    }
    if (caller.admin_token) {
      headers.emplace(kAdminTokenHeader, *caller.admin_token);
    }
    return headers;
  }

  static httplib::Headers headers_for(const Identity& identity) {
    return {{kServiceIdHeader, identity.service_id},
            {kApiKeyHeader, identity.api_key}};
  }

  Json finish(const httplib::Result& res) {
    if (!res) {
      fail(ErrorCode::EndpointUnreachable,
           base_url + ": " + httplib::to_string(res.error()));
    }
    Json body = Json::parse(res->body, nullptr, false);
    if (res->status == 200) {
      if (body.is_discarded()) {
        fail(ErrorCode::IoError, base_url + " returned a non-JSON body");
      }
      return body;
    }
    if (body.is_object() && body.contains("error")) {
      fail(error_code_from_name(body["error"].get<std::string>()),
           body.value("message", "remote error"));
    }
    fail(ErrorCode::IoError, base_url + " returned HTTP " +
                                 std::to_string(res->status));
  }

  Json get(const std::string& path, const httplib::Headers& headers) {
    return finish(client.Get(path, headers));
  }

  Json post(const std::string& path, const httplib::Headers& headers,
            const Json& body) {
    return finish(
        client.Post(path, headers, body.dump(), "application/json"));
  }

  Json del(const std::string& path, const httplib::Headers& headers) {
    return finish(client.Delete(path, headers));
  }

  Json del(const std::string& path, const httplib::Headers& headers,
           const Json& body) {
    return finish(
        client.Delete(path, headers, body.dump(), "application/json"));
  }

  Json put(const std::string& path, const httplib::Headers& headers,
           const Json& body) {
    return finish(client.Put(path, headers, body.dump(), "application/json"));
  }
};

}  // namespace

struct HttpSecurityApi::Impl : ClientCore {
  using ClientCore::ClientCore;
};

HttpSecurityApi::HttpSecurityApi(std::string base_url)
    : impl_(std::make_unique<Impl>(std::move(base_url))) {}
HttpSecurityApi::~HttpSecurityApi() = default;

MicroserviceProfile HttpSecurityApi::authenticate(const Identity& identity) {
  Json body = impl_->post("/v1/authn", {},
                          Json{{"serviceId", identity.service_id},
                               {"apiKey", identity.api_key}});
  return profile_from_json(body);
}

bool HttpSecurityApi::authorize(const Identity& identity,
                                const std::string& topic,
                                const std::string& operation,
                                const std::optional<std::string>& section_id) {
  Json req = Json{{"topic", topic}, {"operation", operation}};
  if (section_id) req["sectionId"] = *section_id;
  Json body =
      impl_->post("/v1/authz/check", ClientCore::headers_for(identity), req);
  return body.at("allowed").get<bool>();
}

PublicKeyResult HttpSecurityApi::get_public_key(const Identity& identity,
                                                const std::string& topic,
                                                const std::string& section_id) {
  Json body = impl_->get(
      "/v1/keys/public?topic=" + topic + "&section=" + section_id,
      ClientCore::headers_for(identity));
  return {body.at("keyId").get<std::string>(),
          b64_bytes(body.at("publicKey").get<std::string>())};
}

PrivateKeyResult HttpSecurityApi::get_private_key(
    const Identity& identity, const std::string& topic,
    const std::string& section_id) {
  Json body = impl_->get(
      "/v1/keys/private?topic=" + topic + "&section=" + section_id,
      ClientCore::headers_for(identity));
  return {body.at("keyId").get<std::string>(),
          b64_bytes(body.at("privateKey").get<std::string>())};
}

void HttpSecurityApi::register_profile(const Caller& caller,
                                       const std::string& service_id,
                                       const std::string& api_key,
                                       const std::string& owner_app_id) {
  impl_->post("/v1/profiles", ClientCore::headers_for(caller),
              Json{{"serviceId", service_id},
                   {"apiKey", api_key},
                   {"ownerAppId", owner_app_id}});
}

void HttpSecurityApi::remove_profile(const Caller& caller,
                                     const std::string& service_id) {
  impl_->del("/v1/profiles/" + service_id, ClientCore::headers_for(caller));
}

std::vector<MicroserviceProfile> HttpSecurityApi::list_profiles(
    const Caller& caller) {
  Json body = impl_->get("/v1/profiles", ClientCore::headers_for(caller));
  std::vector<MicroserviceProfile> out;
  for (const auto& doc : body.at("profiles")) {
    out.push_back(profile_from_json(doc));
  }
  return out;
}

void HttpSecurityApi::add_acl_entry(const Caller& caller,
                                    const AccessControlEntry& entry) {
  impl_->post("/v1/acl", ClientCore::headers_for(caller),
              acl_entry_to_json(entry));
}

void HttpSecurityApi::remove_acl_entry(const Caller& caller,
                                       const AccessControlEntry& entry) {
  impl_->del("/v1/acl", ClientCore::headers_for(caller),
             acl_entry_to_json(entry));
}

std::vector<AccessControlEntry> HttpSecurityApi::list_acl(
    const Caller& caller) {
  Json body = impl_->get("/v1/acl", ClientCore::headers_for(caller));
  std::vector<AccessControlEntry> out;
  for (const auto& doc : body.at("entries")) {
    out.push_back(acl_entry_from_json(doc));
  }
  return out;
}

PublicKeyResult HttpSecurityApi::generate_keypair(
    const Caller& caller, const std::string& topic,
    const std::string& section_id, bool rotate) {
  Json body = impl_->post(
      std::string("/v1/keys?rotate=") + (rotate ? "true" : "false"),
      ClientCore::headers_for(caller),
      Json{{"topic", topic}, {"sectionId", section_id}});
  return {body.at("keyId").get<std::string>(),
          b64_bytes(body.at("publicKey").get<std::string>())};
}

int64_t HttpSecurityApi::revoke_keys(const Caller& caller,
                                     const std::string& topic,
                                     const std::string& section_id) {
  Json body =
      impl_->del("/v1/keys?topic=" + topic + "&section=" + section_id,
                 ClientCore::headers_for(caller));
  return body.at("removed").get<int64_t>();
}

Json HttpSecurityApi::list_keys(const Caller& caller) {
  return impl_->get("/v1/keys", ClientCore::headers_for(caller));
}

Json HttpSecurityApi::stats(const Caller& caller) {
  return impl_->get("/v1/stats", ClientCore::headers_for(caller));
}

struct HttpBrokerApi::Impl : ClientCore {
  using ClientCore::ClientCore;
};

HttpBrokerApi::HttpBrokerApi(std::string base_url)
    : impl_(std::make_unique<Impl>(std::move(base_url))) {}
HttpBrokerApi::~HttpBrokerApi() = default;

TopicInfo HttpBrokerApi::create_topic(const Caller& caller,
                                      const std::string& name,
                                      TopicPolicy policy,
                                      const std::string& schema_name,
                                      int schema_version,
                                      const TopicConfig& config) {
  Json body = impl_->post(
      "/v1/topics", ClientCore::headers_for(caller),
      Json{{"name", name},
           {"policy", topic_policy_name(policy)},
           {"schemaName", schema_name},
           {"schemaVersion", schema_version},
           {"config", topic_config_to_json(policy, config)}});
  return body.get<TopicInfo>();
}

void HttpBrokerApi::delete_topic(const Caller& caller,
                                 const std::string& name) {
  impl_->del("/v1/topics/" + name, ClientCore::headers_for(caller));
}

void HttpBrokerApi::set_topic_status(const Caller& caller,
                                     const std::string& name,
                                     TopicStatus status) {
  impl_->post("/v1/topics/" + name + "/status",
              ClientCore::headers_for(caller),
              Json{{"status", topic_status_name(status)}});
}

std::vector<TopicInfo> HttpBrokerApi::list_topics(const Caller& caller) {
  Json body = impl_->get("/v1/topics", ClientCore::headers_for(caller));
  return body.at("topics").get<std::vector<TopicInfo>>();
}

TopicInfo HttpBrokerApi::topic_info(const Caller& caller,
                                    const std::string& name) {
  return impl_->get("/v1/topics/" + name, ClientCore::headers_for(caller))
      .get<TopicInfo>();
}

std::string HttpBrokerApi::allocate_section(const Caller& caller,
                                            const std::string& topic,
                                            const std::string& receiver_id) {
  Json body = impl_->post("/v1/topics/" + topic + "/sections",
                          ClientCore::headers_for(caller),
                          Json{{"receiverId", receiver_id}});
  return body.at("sectionId").get<std::string>();
}

int64_t HttpBrokerApi::append(const Identity& identity,
                              const std::string& topic,
                              const std::string& section_id,
                              const Envelope& envelope) {
  Json body = impl_->post(
      "/v1/topics/" + topic + "/sections/" + section_id + "/records",
      ClientCore::headers_for(identity), envelope_to_json(envelope));
  return body.at("offset").get<int64_t>();
}

std::vector<RoutedRecord> HttpBrokerApi::fetch(const Identity& identity,
                                               const std::string& topic,
                                               const std::string& section_id,
                                               int64_t from_offset,
                                               int64_t max_count) {
  Json body = impl_->get(
      "/v1/topics/" + topic + "/sections/" + section_id +
          "/records?offset=" + std::to_string(from_offset) +
          "&max=" + std::to_string(max_count),
      ClientCore::headers_for(identity));
  return body.at("records").get<std::vector<RoutedRecord>>();
}

struct HttpDiscoveryApi::Impl : ClientCore {
  using ClientCore::ClientCore;
};

HttpDiscoveryApi::HttpDiscoveryApi(std::string base_url)
    : impl_(std::make_unique<Impl>(std::move(base_url))) {}
HttpDiscoveryApi::~HttpDiscoveryApi() = default;

namespace {

std::string discovery_kind_path(EntryKind kind, const std::string& name) {
  return std::string("/v1/discovery/") +
         (kind == EntryKind::Topic ? "topics/" : "services/") + name;
}

}  // namespace

std::vector<DiscoveryTopicInfo> HttpDiscoveryApi::query_topics(
    const Caller& caller, const std::string& filter) {
  Json body = impl_->get("/v1/discovery/topics?query=" +
                             httplib::detail::encode_query_param(filter),
                         ClientCore::headers_for(caller));
  std::vector<DiscoveryTopicInfo> out;
  for (const auto& doc : body.at("topics")) {
    out.push_back(discovery_topic_from_json(doc));
  }
  return out;
}

std::vector<DiscoveryServiceInfo> HttpDiscoveryApi::query_services(
    const Caller& caller, const std::string& filter) {
  Json body = impl_->get("/v1/discovery/services?query=" +
                             httplib::detail::encode_query_param(filter),
                         ClientCore::headers_for(caller));
  std::vector<DiscoveryServiceInfo> out;
  for (const auto& doc : body.at("services")) {
    out.push_back(discovery_service_from_json(doc));
  }
  return out;
}

std::optional<Json> HttpDiscoveryApi::get_schema(const Caller& caller,
                                                 const std::string& schema_name,
                                                 int version) {
  try {
    return impl_->get("/v1/discovery/schemas/" + schema_name + "/" +
                          std::to_string(version),
                      ClientCore::headers_for(caller));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownSchema) return std::nullopt;
    throw;
  }
}

void HttpDiscoveryApi::register_topic(const Caller& caller,
                                      const DiscoveryTopicInfo& info) {
  impl_->post(discovery_kind_path(EntryKind::Topic, info.name),
              ClientCore::headers_for(caller), discovery_topic_to_json(info));
}

void HttpDiscoveryApi::register_service(const Caller& caller,
                                        const DiscoveryServiceInfo& info) {
  impl_->post(discovery_kind_path(EntryKind::Service, info.name),
              ClientCore::headers_for(caller), discovery_service_to_json(info));
}

void HttpDiscoveryApi::set_status(const Caller& caller, EntryKind kind,
                                  const std::string& name, EntryStatus status) {
  impl_->put(discovery_kind_path(kind, name), ClientCore::headers_for(caller),
             Json{{"status", entry_status_name(status)}});
}

void HttpDiscoveryApi::remove(const Caller& caller, EntryKind kind,
                              const std::string& name) {
  impl_->del(discovery_kind_path(kind, name), ClientCore::headers_for(caller));
}

}  // namespace dhlink
