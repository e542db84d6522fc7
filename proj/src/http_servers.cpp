#include <atomic>
#include <functional>
#include <thread>

#include "dhlink/http.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace dhlink {

int http_status_for_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::MalformedEnvelope:
    case ErrorCode::NonEncodable:
    case ErrorCode::SchemaViolation:
    case ErrorCode::MalformedProposal:
    case ErrorCode::MixedUserInput:
    case ErrorCode::InvalidAnswer:
      return 400;
    case ErrorCode::BadCredential:
    case ErrorCode::UnknownService:
      return 401;
    case ErrorCode::Deny:
    case ErrorCode::NotAdmin:
    case ErrorCode::Unauthorized:
    case ErrorCode::NotSectionOwner:
      return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownTopic:
    case ErrorCode::UnknownSection:
    case ErrorCode::UnknownSchema:
    case ErrorCode::UnknownName:
    case ErrorCode::UnknownEntry:
    case ErrorCode::UnknownApp:
    case ErrorCode::UnknownQuestionnaire:
    case ErrorCode::UnknownConfirmedToken:
      return 404;
    case ErrorCode::DuplicateName:
    case ErrorCode::DuplicateEntry:
    case ErrorCode::DuplicateApp:
    case ErrorCode::DuplicateUser:
    case ErrorCode::ActiveKeyExists:
    case ErrorCode::WrongState:
    case ErrorCode::IllegalTransition:
    case ErrorCode::TopicRetired:
    case ErrorCode::TopicNotReady:
    case ErrorCode::NotConfirmed:
    case ErrorCode::AdminLocked:
    case ErrorCode::EnvelopeMismatch:
      return 409;
    case ErrorCode::BrokerUnreachable:
    case ErrorCode::EndpointUnreachable:
    case ErrorCode::ConnectivityCheckFailed:
    case ErrorCode::KeyUnavailable:
      return 503;
    default:
      return 500;
  }
}

namespace {

constexpr const char* kServiceIdHeader = "X-DHLink-Service-Id";
constexpr const char* kApiKeyHeader = "X-DHLink-Api-Key";
constexpr const char* kAdminTokenHeader = "X-DHLink-Admin-Token";

Caller caller_of(const httplib::Request& req) {
  Caller caller;
  if (req.has_header(kServiceIdHeader)) {
    caller.identity = Identity{req.get_header_value(kServiceIdHeader),
                               req.get_header_value(kApiKeyHeader)};
  }
  if (req.has_header(kAdminTokenHeader)) {
    caller.admin_token = req.get_header_value(kAdminTokenHeader);
  }
  return caller;
}

Identity identity_of(const httplib::Request& req) {
  if (!req.has_header(kServiceIdHeader)) {
    fail(ErrorCode::BadCredential, "missing identity headers");
  }
  return Identity{req.get_header_value(kServiceIdHeader),
                  req.get_header_value(kApiKeyHeader)};
}

void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void handle(httplib::Response& res, const std::function<Json()>& fn) {
  try {
    reply_json(res, 200, fn());
  } catch (const Error& e) {
    reply_json(res, http_status_for_error(e.code()),
               Json{{"error", error_code_name(e.code())},
                    {"message", e.what()}});
  } catch (const Json::exception& e) {
    reply_json(res, 400,
               Json{{"error", error_code_name(ErrorCode::BadRequest)},
                    {"message", e.what()}});
  } catch (const std::exception& e) {
    reply_json(res, 500,
               Json{{"error", error_code_name(ErrorCode::IoError)},
                    {"message", e.what()}});
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json doc = Json::parse(req.body, nullptr, false);
  if (doc.is_discarded()) {
    fail(ErrorCode::BadRequest, "request body is not JSON");
  }
  return doc;
}

std::string b64(const crypto::Bytes& bytes) {
  return util::base64url_encode(std::string_view(
      reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Json profile_to_json(const MicroserviceProfile& profile) {
  return Json{{"serviceId", profile.service_id},
              {"credentialFingerprint", profile.credential_fingerprint},
              {"ownerAppId", profile.owner_app_id}};
}

int64_t query_int(const httplib::Request& req, const std::string& name,
                  int64_t fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    return std::stoll(req.get_param_value(name));
  } catch (const std::exception&) {
    fail(ErrorCode::BadRequest, "query parameter " + name + " not a number");
  }
}

// Owns the listener (plain or TLS), its thread, and the bound port.
struct ServerBase {
  std::unique_ptr<httplib::Server> server;
  std::thread thread;
  int port = 0;

  explicit ServerBase(const TlsConfig& tls) {
    if (tls.enabled()) {
      auto ssl = std::make_unique<httplib::SSLServer>(tls.cert_path.c_str(),
                                                      tls.key_path.c_str());
      if (!ssl->is_valid()) {
        fail(ErrorCode::BadRequest,
             "cannot load TLS material from " + tls.cert_path);
      }
      server = std::move(ssl);
    } else {
      server = std::make_unique<httplib::Server>();
    }
  }

  int start(const std::string& host, int want_port) {
    if (want_port == 0) {
      port = server->bind_to_any_port(host);
    } else {
      if (!server->bind_to_port(host, want_port)) {
        fail(ErrorCode::IoError,
             "cannot bind " + host + ":" + std::to_string(want_port));
      }
      port = want_port;
    }
    thread = std::thread([this] { server->listen_after_bind(); });
    server->wait_until_ready();
    return port;
  }

  void stop() {
    if (server) server->stop();
    if (thread.joinable()) thread.join();
  }

  ~ServerBase() { stop(); }
};

}  // namespace

struct SecurityServer::Impl : ServerBase {
  SecurityApi* api;

  Impl(SecurityApi* api_in, const TlsConfig& tls) : ServerBase(tls), api(api_in) {
    auto& s = *server;

    s.Post("/v1/authn", [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        Identity id{body.at("serviceId").get<std::string>(),
                    body.at("apiKey").get<std::string>()};
        return profile_to_json(api->authenticate(id));
      });
    });

    s.Post("/v1/authz/check", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        std::optional<std::string> section;
        if (body.contains("sectionId")) {
          section = body["sectionId"].get<std::string>();
        }
        bool allowed = api->authorize(identity_of(req),
                                      body.at("topic").get<std::string>(),
                                      body.at("operation").get<std::string>(),
                                      section);
        return Json{{"allowed", allowed}};
      });
    });

    s.Get("/v1/keys/public", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      handle(res, [&] {
        auto result = api->get_public_key(identity_of(req),
                                          req.get_param_value("topic"),
                                          req.get_param_value("section"));
        return Json{{"keyId", result.key_id},
                    {"publicKey", b64(result.public_key)}};
      });
    });

    s.Get("/v1/keys/private", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      handle(res, [&] {
        auto result = api->get_private_key(identity_of(req),
                                           req.get_param_value("topic"),
                                           req.get_param_value("section"));
        return Json{{"keyId", result.key_id},
                    {"privateKey", b64(result.private_key)}};
      });
    });

    s.Post("/v1/keys", [this](const httplib::Request& req,
                              httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        bool rotate = req.has_param("rotate")
                          ? req.get_param_value("rotate") == "true"
                          : body.value("rotate", false);
        auto result = api->generate_keypair(
            caller_of(req), body.at("topic").get<std::string>(),
            body.at("sectionId").get<std::string>(), rotate);
        return Json{{"keyId", result.key_id},
                    {"publicKey", b64(result.public_key)}};
      });
    });

    s.Delete("/v1/keys", [this](const httplib::Request& req,
                                httplib::Response& res) {
      handle(res, [&] {
        int64_t removed = api->revoke_keys(caller_of(req),
                                           req.get_param_value("topic"),
                                           req.get_param_value("section"));
        return Json{{"removed", removed}};
      });
    });

    s.Get("/v1/keys", [this](const httplib::Request& req,
                             httplib::Response& res) {
      handle(res, [&] { return api->list_keys(caller_of(req)); });
    });

    s.Get("/v1/profiles", [this](const httplib::Request& req,
                                 httplib::Response& res) {
      handle(res, [&] {
        Json out = Json::array();
        for (const auto& profile : api->list_profiles(caller_of(req))) {
          out.push_back(profile_to_json(profile));
        }
        return Json{{"profiles", out}};
      });
    });

    s.Post("/v1/profiles", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        api->register_profile(caller_of(req),
                              body.at("serviceId").get<std::string>(),
                              body.at("apiKey").get<std::string>(),
                              body.value("ownerAppId", ""));
        return Json::object();
      });
    });

    s.Delete(R"(/v1/profiles/([A-Za-z0-9_-]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               handle(res, [&] {
                 api->remove_profile(caller_of(req), req.matches[1]);
                 return Json::object();
               });
             });

    s.Get("/v1/acl", [this](const httplib::Request& req,
                            httplib::Response& res) {
      handle(res, [&] {
        Json out = Json::array();
        for (const auto& entry : api->list_acl(caller_of(req))) {
          out.push_back(acl_entry_to_json(entry));
        }
        return Json{{"entries", out}};
      });
    });

    s.Post("/v1/acl", [this](const httplib::Request& req,
                             httplib::Response& res) {
      handle(res, [&] {
        api->add_acl_entry(caller_of(req), acl_entry_from_json(parse_body(req)));
        return Json::object();
      });
    });

    s.Delete("/v1/acl", [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        api->remove_acl_entry(caller_of(req),
                              acl_entry_from_json(parse_body(req)));
        return Json::object();
      });
    });

    s.Get("/v1/stats", [this](const httplib::Request& req,
                              httplib::Response& res) {
      handle(res, [&] { return api->stats(caller_of(req)); });
    });
  }
};

SecurityServer::SecurityServer(SecurityApi* api, TlsConfig tls)
    : impl_(std::make_unique<Impl>(api, tls)) {}
SecurityServer::~SecurityServer() = default;
int SecurityServer::start(const std::string& host, int port) {
  return impl_->start(host, port);
}
void SecurityServer::stop() { impl_->stop(); }

struct BrokerServer::Impl : ServerBase {
  BrokerApi* api;

  Impl(BrokerApi* api_in, const TlsConfig& tls) : ServerBase(tls), api(api_in) {
    auto& s = *server;
    const std::string topic_pat = R"(/v1/topics/([a-z0-9-]+))";

    s.Get("/v1/topics", [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        return Json{{"topics", api->list_topics(caller_of(req))}};
      });
    });

    s.Post("/v1/topics", [this](const httplib::Request& req,
                                httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        TopicPolicy policy =
            topic_policy_from_name(body.at("policy").get<std::string>());
        TopicConfig config = topic_config_from_json(
            policy, body.value("config", Json::object()));
        return Json(api->create_topic(caller_of(req),
                                      body.at("name").get<std::string>(),
                                      policy,
                                      body.at("schemaName").get<std::string>(),
                                      body.at("schemaVersion").get<int>(),
                                      config));
      });
    });

    s.Get(topic_pat, [this](const httplib::Request& req,
                            httplib::Response& res) {
      handle(res, [&] {
        return Json(api->topic_info(caller_of(req), req.matches[1]));
      });
    });

    s.Delete(topic_pat, [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        api->delete_topic(caller_of(req), req.matches[1]);
        return Json::object();
      });
    });

    s.Post(topic_pat + "/status", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        api->set_topic_status(
            caller_of(req), req.matches[1],
            topic_status_from_name(body.at("status").get<std::string>()));
        return Json::object();
      });
    });

    s.Post(topic_pat + "/sections", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        std::string section = api->allocate_section(
            caller_of(req), req.matches[1],
            body.at("receiverId").get<std::string>());
        return Json{{"sectionId", section}};
      });
    });

    const std::string records_pat = topic_pat + R"(/sections/([a-z0-9-]+)/records)";

    s.Post(records_pat, [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        Envelope envelope = envelope_from_json(parse_body(req));
        int64_t offset = api->append(identity_of(req), req.matches[1],
                                     req.matches[2], envelope);
        return Json{{"offset", offset}};
      });
    });

    s.Get(records_pat, [this](const httplib::Request& req,
                              httplib::Response& res) {
      handle(res, [&] {
        auto records =
            api->fetch(identity_of(req), req.matches[1], req.matches[2],
                       query_int(req, "offset", 0), query_int(req, "max", 100));
        return Json{{"records", records}};
      });
    });
  }
};

BrokerServer::BrokerServer(BrokerApi* api, TlsConfig tls)
    : impl_(std::make_unique<Impl>(api, tls)) {}
BrokerServer::~BrokerServer() = default;
int BrokerServer::start(const std::string& host, int port) {
  return impl_->start(host, port);
}
void BrokerServer::stop() { impl_->stop(); }

struct DiscoveryServer::Impl : ServerBase {
  DiscoveryApi* api;

  Impl(DiscoveryApi* api_in, const TlsConfig& tls) : ServerBase(tls), api(api_in) {
    auto& s = *server;
    const std::string topic_pat = R"(/v1/discovery/topics/([A-Za-z0-9_-]+))";
    const std::string service_pat = R"(/v1/discovery/services/([A-Za-z0-9_-]+))";

    s.Get("/v1/discovery/topics", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      handle(res, [&] {
        Json out = Json::array();
        for (const auto& info :
             api->query_topics(caller_of(req), req.get_param_value("query"))) {
          out.push_back(discovery_topic_to_json(info));
        }
        return Json{{"topics", out}};
      });
    });

    s.Get("/v1/discovery/services", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      handle(res, [&] {
        Json out = Json::array();
        for (const auto& info : api->query_services(
                 caller_of(req), req.get_param_value("query"))) {
          out.push_back(discovery_service_to_json(info));
        }
        return Json{{"services", out}};
      });
    });

    s.Get(R"(/v1/discovery/schemas/([A-Za-z0-9_-]+)/(\d+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
              auto doc = api->get_schema(caller_of(req), req.matches[1],
                                         std::stoi(req.matches[2]));
              if (!doc) {
                fail(ErrorCode::UnknownSchema,
                     std::string("no schema ") + std::string(req.matches[1]));
              }
              return *doc;
            });
          });

    s.Post(topic_pat, [this](const httplib::Request& req,
                             httplib::Response& res) {
      handle(res, [&] {
        auto entry = discovery_topic_from_json(parse_body(req));
        if (entry.name != std::string(req.matches[1])) {
          fail(ErrorCode::BadRequest, "entry name does not match the path");
        }
        api->register_topic(caller_of(req), entry);
        return Json::object();
      });
    });

    s.Post(service_pat, [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        auto entry = discovery_service_from_json(parse_body(req));
        if (entry.name != std::string(req.matches[1])) {
          fail(ErrorCode::BadRequest, "entry name does not match the path");
        }
        api->register_service(caller_of(req), entry);
        return Json::object();
      });
    });

    s.Put(topic_pat, [this](const httplib::Request& req,
                            httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        api->set_status(caller_of(req), EntryKind::Topic, req.matches[1],
                        entry_status_from_name(
                            body.at("status").get<std::string>()));
        return Json::object();
      });
    });

    s.Put(service_pat, [this](const httplib::Request& req,
                              httplib::Response& res) {
      handle(res, [&] {
        Json body = parse_body(req);
        api->set_status(caller_of(req), EntryKind::Service, req.matches[1],
                        entry_status_from_name(
                            body.at("status").get<std::string>()));
        return Json::object();
      });
    });

    s.Delete(topic_pat, [this](const httplib::Request& req,
                               httplib::Response& res) {
      handle(res, [&] {
        api->remove(caller_of(req), EntryKind::Topic, req.matches[1]);
        return Json::object();
      });
    });

    s.Delete(service_pat, [this](const httplib::Request& req,
                                 httplib::Response& res) {
      handle(res, [&] {
        api->remove(caller_of(req), EntryKind::Service, req.matches[1]);
        return Json::object();
      });
    });
  }
};

DiscoveryServer::DiscoveryServer(DiscoveryApi* api, TlsConfig tls)
    : impl_(std::make_unique<Impl>(api, tls)) {}
DiscoveryServer::~DiscoveryServer() = default;
int DiscoveryServer::start(const std::string& host, int port) {
  return impl_->start(host, port);
}
void DiscoveryServer::stop() { impl_->stop(); }

}  // namespace dhlink
