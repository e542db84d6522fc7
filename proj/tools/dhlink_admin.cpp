#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dhlink/admin.hpp"
#include "dhlink/broker.hpp"
#include "dhlink/errors.hpp"
#include "dhlink/http.hpp"
#include "dhlink/security.hpp"
#include "dhlink/util.hpp"

namespace {

using namespace dhlink;

// 0 success, 2 validation error, 3 state error, 4 connectivity error.
int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::WrongState:
    case ErrorCode::IllegalTransition:
    case ErrorCode::NotConfirmed:
    case ErrorCode::DuplicateApp:
    case ErrorCode::DuplicateName:
    case ErrorCode::DuplicateEntry:
    case ErrorCode::ActiveKeyExists:
    case ErrorCode::TopicRetired:
    case ErrorCode::TopicNotReady:
    case ErrorCode::AdminLocked:
      return 3;
    case ErrorCode::EndpointUnreachable:
    case ErrorCode::BrokerUnreachable:
    case ErrorCode::ConnectivityCheckFailed:
    case ErrorCode::KeyUnavailable:
      return 4;
    default:
      return 2;
  }
}

struct Connection {
  std::string broker_url = "http://127.0.0.1:7401";
  std::string security_url = "http://127.0.0.1:7402";
  std::string discovery_url = "http://127.0.0.1:7403";
  std::string admin_token;
  std::string data_dir = "./dhlink-admin";

  std::unique_ptr<HttpBrokerApi> broker;
  std::unique_ptr<HttpSecurityApi> security;
  std::unique_ptr<HttpDiscoveryApi> discovery;
  std::unique_ptr<AdminCore> admin;
  std::unique_ptr<AdminLock> lock;

  void connect() {
    broker = std::make_unique<HttpBrokerApi>(broker_url);
    security = std::make_unique<HttpSecurityApi>(security_url);
    discovery = std::make_unique<HttpDiscoveryApi>(discovery_url);
    admin = std::make_unique<AdminCore>(broker.get(), security.get(),
                                        discovery.get(), admin_token,
                                        data_dir);
  }

  // Mutating commands run under the single-admin lock.
  void take_lock() { lock = std::make_unique<AdminLock>(data_dir); }

  Caller caller() const { return Caller::admin(admin_token); }
};

void print_json(const Json& doc) { std::cout << doc.dump(2) << "\n"; }

Json app_to_json(const ApplicationRecord& app) { return Json(app); }

std::optional<std::string> opt_of(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"DHLink administration"};
  cli.require_subcommand(1);

  Connection conn;
  cli.add_option("--broker-url", conn.broker_url, "broker endpoint");
  cli.add_option("--security-url", conn.security_url, "security endpoint");
  cli.add_option("--discovery-url", conn.discovery_url, "discovery endpoint");
  cli.add_option("--admin-token", conn.admin_token, "administrator token")
      ->required();
  cli.add_option("--data-dir", conn.data_dir,
                 "admin state directory (applications.json, lock file)");

  // ---- app ----------------------------------------------------------------
  auto* app_cmd = cli.add_subcommand("app", "application lifecycle");
  app_cmd->require_subcommand(1);

  std::string proposal_file;
  auto* app_propose = app_cmd->add_subcommand("propose", "submit a proposal");
  app_propose->add_option("--file", proposal_file, "proposal JSON document")
      ->required();

  std::string app_id;
  auto* app_approve =
      app_cmd->add_subcommand("approve", "approve and provision an app");
  app_approve->add_option("appId", app_id)->required();

  auto* app_ready =
      app_cmd->add_subcommand("ready", "run connectivity checks, mark working");
  app_ready->add_option("appId", app_id)->required();

  bool confirmed = false;
  auto* app_decommission =
      app_cmd->add_subcommand("decommission", "tear an application down");
  app_decommission->add_option("appId", app_id)->required();
  app_decommission->add_flag("--confirm", confirmed,
                             "confirm the agreed decommissioning");

  auto* app_list = app_cmd->add_subcommand("list", "list known applications");

  // ---- topic --------------------------------------------------------------
  auto* topic_cmd = cli.add_subcommand("topic", "broker topics");
  topic_cmd->require_subcommand(1);

  std::string topic_name, topic_policy = "retained", schema_name;
  int schema_version = 1;
  std::string topic_config_json = "{}";
  auto* topic_create = topic_cmd->add_subcommand("create", "create a topic");
  topic_create->add_option("name", topic_name)->required();
  topic_create->add_option("--policy", topic_policy,
                           "realtime | retained | transient");
  topic_create->add_option("--schema-name", schema_name)->required();
  topic_create->add_option("--schema-version", schema_version);
  topic_create->add_option("--config", topic_config_json,
                           "policy configuration JSON");

  auto* topic_delete = topic_cmd->add_subcommand("delete", "delete a topic");
  topic_delete->add_option("name", topic_name)->required();

  auto* topic_list = topic_cmd->add_subcommand("list", "list topics");

  // ---- acl ----------------------------------------------------------------
  auto* acl_cmd = cli.add_subcommand("acl", "access control entries");
  acl_cmd->require_subcommand(1);

  std::string acl_service, acl_topic, acl_operation, acl_section;
  auto* acl_grant = acl_cmd->add_subcommand("grant", "add an entry");
  acl_grant->add_option("--service", acl_service)->required();
  acl_grant->add_option("--topic", acl_topic)->required();
  acl_grant->add_option("--operation", acl_operation, "send | receive")
      ->required();
  acl_grant->add_option("--section", acl_section,
                        "section id (receive entries)");

  auto* acl_revoke = acl_cmd->add_subcommand("revoke", "remove an entry");
  acl_revoke->add_option("--service", acl_service)->required();
  acl_revoke->add_option("--topic", acl_topic)->required();
  acl_revoke->add_option("--operation", acl_operation, "send | receive")
      ->required();
  acl_revoke->add_option("--section", acl_section,
                         "section id (receive entries)");

  auto* acl_list = acl_cmd->add_subcommand("list", "list entries");

  // ---- keys ---------------------------------------------------------------
  auto* keys_cmd = cli.add_subcommand("keys", "section encryption keys");
  keys_cmd->require_subcommand(1);

  std::string keys_topic, keys_section;
  auto* keys_generate =
      keys_cmd->add_subcommand("generate", "generate a section keypair");
  keys_generate->add_option("--topic", keys_topic)->required();
  keys_generate->add_option("--section", keys_section)->required();

  auto* keys_rotate =
      keys_cmd->add_subcommand("rotate", "rotate a section keypair");
  keys_rotate->add_option("--topic", keys_topic)->required();
  keys_rotate->add_option("--section", keys_section)->required();

  auto* keys_list = keys_cmd->add_subcommand("list", "list key records");

  // ---- service ------------------------------------------------------------
  auto* service_cmd = cli.add_subcommand("service", "discovery service entries");
  service_cmd->require_subcommand(1);

  std::string svc_name, svc_url, svc_description, svc_owner, svc_set_status;
  auto* service_register =
      service_cmd->add_subcommand("register", "register a microservice");
  service_register->add_option("name", svc_name)->required();
  service_register->add_option("--url", svc_url);
  service_register->add_option("--description", svc_description);
  service_register->add_option("--owner-app", svc_owner);

  auto* service_deregister =
      service_cmd->add_subcommand("deregister", "remove a microservice entry");
  service_deregister->add_option("name", svc_name)->required();

  auto* service_status =
      service_cmd->add_subcommand("status", "show or change an entry's status");
  service_status->add_option("name", svc_name)->required();
  service_status->add_option("--set", svc_set_status,
                             "initialising | ready | retired");

  CLI11_PARSE(cli, argc, argv);

  try {
    conn.connect();

    if (*app_propose) {
      conn.take_lock();
      Json doc = Json::parse(util::read_file(proposal_file), nullptr, false);
      if (doc.is_discarded()) {
        fail(ErrorCode::MalformedProposal, proposal_file + " is not JSON");
      }
      print_json(app_to_json(conn.admin->propose(doc)));
    } else if (*app_approve) {
      conn.take_lock();
      print_json(app_to_json(conn.admin->approve_and_initialise(app_id)));
    } else if (*app_ready) {
      conn.take_lock();
      print_json(app_to_json(conn.admin->mark_ready(app_id)));
    } else if (*app_decommission) {
      conn.take_lock();
      print_json(app_to_json(conn.admin->decommission(app_id, confirmed)));
    } else if (*app_list) {
      Json out = Json::array();
      for (const auto& app : conn.admin->list_applications()) {
        out.push_back(Json{{"appId", app.app_id},
                           {"state", app_state_name(app.state)}});
      }
      print_json(out);
    } else if (*topic_create) {
      conn.take_lock();
      Json config_doc = Json::parse(topic_config_json, nullptr, false);
      if (config_doc.is_discarded()) {
        fail(ErrorCode::BadRequest, "--config is not JSON");
      }
      TopicPolicy policy = topic_policy_from_name(topic_policy);
      TopicInfo info = conn.broker->create_topic(
          conn.caller(), topic_name, policy, schema_name, schema_version,
          topic_config_from_json(policy, config_doc));
      print_json(Json(info));
    } else if (*topic_delete) {
      conn.take_lock();
      conn.broker->delete_topic(conn.caller(), topic_name);
      std::puts("deleted");
    } else if (*topic_list) {
      print_json(Json(conn.broker->list_topics(conn.caller())));
    } else if (*acl_grant) {
      conn.take_lock();
      conn.security->add_acl_entry(
          conn.caller(),
          AccessControlEntry{acl_service, acl_topic, acl_operation,
                             opt_of(acl_section)});
      std::puts("granted");
    } else if (*acl_revoke) {
      conn.take_lock();
      conn.security->remove_acl_entry(
          conn.caller(),
          AccessControlEntry{acl_service, acl_topic, acl_operation,
                             opt_of(acl_section)});
      std::puts("revoked");
    } else if (*acl_list) {
      Json out = Json::array();
      for (const auto& entry : conn.security->list_acl(conn.caller())) {
        out.push_back(acl_entry_to_json(entry));
      }
      print_json(out);
    } else if (*keys_generate) {
      conn.take_lock();
      auto result = conn.security->generate_keypair(conn.caller(), keys_topic,
                                                    keys_section, false);
      print_json(Json{{"keyId", result.key_id}});
    } else if (*keys_rotate) {
      conn.take_lock();
      auto result = conn.security->generate_keypair(conn.caller(), keys_topic,
                                                    keys_section, true);
      print_json(Json{{"keyId", result.key_id}});
    } else if (*keys_list) {
      print_json(conn.security->list_keys(conn.caller()));
    } else if (*service_register) {
      conn.take_lock();
      DiscoveryServiceInfo info;
      info.name = svc_name;
      info.url = svc_url;
      info.description = svc_description;
      info.owner_app_id = svc_owner;
      info.status = EntryStatus::Initialising;
      conn.discovery->register_service(conn.caller(), info);
      std::puts("registered");
    } else if (*service_deregister) {
      conn.take_lock();
      conn.discovery->remove(conn.caller(), EntryKind::Service, svc_name);
      std::puts("deregistered");
    } else if (*service_status) {
      if (!svc_set_status.empty()) {
        conn.take_lock();
        conn.discovery->set_status(conn.caller(), EntryKind::Service, svc_name,
                                   entry_status_from_name(svc_set_status));
      }
      for (const auto& info :
           conn.discovery->query_services(conn.caller(), svc_name)) {
        if (info.name != svc_name) continue;
        print_json(discovery_service_to_json(info));
        return 0;
      }
      fail(ErrorCode::UnknownName, "no service entry " + svc_name);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s (%s)\n", e.what(),
                 error_code_name(e.code()));
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
