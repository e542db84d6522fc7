#include "dhlink/scenario.hpp"

#include <chrono>
#include <memory>
#include <set>

#include "dhlink/canonical.hpp"
#include "dhlink/connector.hpp"
#include "dhlink/crypto.hpp"
#include "dhlink/embedded.hpp"
#include "dhlink/errors.hpp"
#include "dhlink/geo.hpp"
#include "dhlink/proximity.hpp"
#include "dhlink/questionnaire.hpp"
#include "dhlink/store.hpp"
#include "dhlink/traces.hpp"
#include "dhlink/users.hpp"
#include "dhlink/util.hpp"

namespace dhlink {

namespace {

constexpr int64_t kDay = 86400LL * 1000;
constexpr int64_t kHour = 3600LL * 1000;
// Fixed simulated origin so timestamps, and with them every digest, come out
// of the config alone.
constexpr int64_t kSimEpochMs = 1767600000000LL;

std::string pad4(int64_t n) {
  std::string s = std::to_string(n);
  return std::string(s.size() >= 4 ? 0 : 4 - s.size(), '0') + s;
}

Json endpoints_to_json(const ScenarioEndpoints& e) {
  return Json{{"brokerUrl", e.broker_url},
              {"securityUrl", e.security_url},
              {"discoveryUrl", e.discovery_url},
              {"adminToken", e.admin_token}};
}

ScenarioEndpoints endpoints_from_json(const Json& doc) {
  ScenarioEndpoints e;
  e.broker_url = doc.value("brokerUrl", "");
  e.security_url = doc.value("securityUrl", "");
  e.discovery_url = doc.value("discoveryUrl", "");
  e.admin_token = doc.value("adminToken", "");
  return e;
}

// The platform a scenario drives: either a fully embedded deployment or
// clients bound to remote endpoints. Same surfaces either way.
struct PlatformParts {
  std::unique_ptr<EmbeddedPlatform> embedded;
  std::unique_ptr<HttpSecurityApi> http_security;
  std::unique_ptr<HttpBrokerApi> http_broker;
  std::unique_ptr<HttpDiscoveryApi> http_discovery;
  std::unique_ptr<AdminCore> remote_admin;

  SecurityApi* security = nullptr;
  BrokerApi* broker = nullptr;
  DiscoveryApi* discovery = nullptr;
  AdminCore* admin = nullptr;
};

PlatformParts make_platform(const ScenarioConfig& config,
                            const util::Clock& clock) {
  PlatformParts parts;
  if (config.endpoints.remote()) {
    const auto& e = config.endpoints;
    if (e.broker_url.empty() || e.security_url.empty() ||
        e.discovery_url.empty() || e.admin_token.empty()) {
      fail(ErrorCode::SetupIncomplete,
           "remote runs need broker, security, and discovery urls plus an "
           "admin token");
    }
    parts.http_security = std::make_unique<HttpSecurityApi>(e.security_url);
    parts.http_broker = std::make_unique<HttpBrokerApi>(e.broker_url);
    parts.http_discovery = std::make_unique<HttpDiscoveryApi>(e.discovery_url);
    parts.security = parts.http_security.get();
    parts.broker = parts.http_broker.get();
    parts.discovery = parts.http_discovery.get();
    try {
      parts.security->stats(Caller::admin(e.admin_token));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::EndpointUnreachable) throw;
      throw;
    }
    parts.remote_admin = std::make_unique<AdminCore>(
        parts.broker, parts.security, parts.discovery, e.admin_token,
        config.work_dir + "/admin");
    parts.admin = parts.remote_admin.get();
  } else {
    PlatformConfig pc;
    pc.data_dir = config.work_dir + "/platform";
    pc.admin_token = "scenario-admin";
    pc.clock = clock;
    parts.embedded = std::make_unique<EmbeddedPlatform>(std::move(pc));
    parts.security = &parts.embedded->security();
    parts.broker = &parts.embedded->broker();
    parts.discovery = &parts.embedded->discovery();
    parts.admin = &parts.embedded->admin();
  }
  return parts;
}

struct SimRun {
  Transcript transcript;
  std::shared_ptr<int64_t> sim_now = std::make_shared<int64_t>(kSimEpochMs);

  void event(const std::string& actor, const std::string& action,
             const Json& detail) {
    transcript.events.push_back(
        {*sim_now, actor, action, canonical_digest(detail)});
  }
  void count(const std::string& key, int64_t n = 1) {
    transcript.counters[key] += n;
  }
};

void require_fresh_workdir(const ScenarioConfig& config) {
  if (config.work_dir.empty()) {
    fail(ErrorCode::SetupIncomplete, "scenario needs a working directory");
  }
  if (util::file_exists(config.work_dir) &&
      !util::list_dir(config.work_dir).empty()) {
    fail(ErrorCode::SetupIncomplete,
         "working directory " + config.work_dir +
             " is not empty; a run needs a fresh one");
  }
  util::ensure_dir(config.work_dir);
}

std::vector<std::string> provision_users(const ScenarioConfig& config,
                                         UserDirectory& directory) {
  std::vector<std::string> tokens;
  for (int i = 0; i < config.user_count; ++i) {
    std::string uid = directory.register_user("participant-" + pad4(i),
                                              "pw-" + std::to_string(i), {});
    tokens.push_back(directory.deid_token(uid));
  }
  return tokens;
}

ConnectorConfig connector_for(const std::string& service_id,
                              const std::string& api_key,
                              const std::string& topic,
                              const std::string& role) {
  ConnectorConfig cc;
  cc.service_id = service_id;
  cc.api_key = api_key;
  cc.topic = topic;
  cc.role = role;
  cc.cache_ttl_seconds = 90LL * 86400;  // no churn over a simulated week
  return cc;
}

Json app_summary(const ApplicationRecord& app) {
  Json topics = Json::array();
  for (const auto& t : app.topics) topics.push_back(t.name);
  Json services = Json::array();
  for (const auto& s : app.services) services.push_back(s.service_id);
  return Json{{"appId", app.app_id},
              {"state", app_state_name(app.state)},
              {"topics", topics},
              {"services", services}};
}

Json outcomes_json(const std::vector<SendOutcome>& outcomes) {
  Json arr = Json::array();
  for (const auto& o : outcomes) {
    arr.push_back(Json{{"section", o.section_id},
                       {"outcome", o.outcome},
                       {"encrypted", o.encrypted},
                       {"offset", o.offset}});
  }
  return arr;
}

Json offsets_json(const PollResult& poll) {
  Json offsets = Json::array();
  for (const auto& r : poll.records) offsets.push_back(r.offset);
  Json skipped = Json::array();
  for (const auto& s : poll.skipped) {
    skipped.push_back(Json{{"offset", s.offset}, {"reason", s.reason}});
  }
  return Json{{"offsets", offsets},
              {"skipped", skipped},
              {"halted", poll.halted}};
}

void finish(SimRun& run, const ScenarioConfig& config,
            std::chrono::steady_clock::time_point started) {
  Transcript& t = run.transcript;
  t.scenario = config.scenario;
  t.seed = config.seed;
  t.config = Json{{"scenario", config.scenario},
                  {"seed", config.seed},
                  {"userCount", config.user_count},
                  {"durationDays", config.duration_days},
                  {"tickMs", config.tick_ms},
                  {"params", config.params}};
  t.digest = transcript_digest(t);
  auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  t.metrics = Json{{"wallMs", wall.count()},
                   {"eventCount", t.events.size()}};
}

// ---------------------------------------------------------------------------
// ai2-mindtick: daily medication questionnaires flow to an analysis service,
// which raises an anomaly alert when the reported refill gap exceeds the
// refill interval plus grace; alerts flow back and become nudges plus a
// reminder-plan customization.

Json mindtick_params(const Json& given) {
  Json p = Json{{"refillIntervalDays", 30},
                {"graceDays", 7},
                {"plantGapDays", Json{{"1", 40}, {"2", 35}}}};
  for (const auto& [key, value] : given.items()) p[key] = value;
  return p;
}

const char* kResponsesSchema = R"({
  "name": "questionnaire-response",
  "version": 1,
  "fields": [
    {"name": "resourceType", "kind": "string"},
    {"name": "userToken", "kind": "string"},
    {"name": "questionnaireId", "kind": "string"},
    {"name": "submittedAt", "kind": "timestamp"},
    {"name": "lastRefillAt", "kind": "timestamp"},
    {"name": "adherence", "kind": "string"}
  ]
})";

const char* kAnomalyAlertSchema = R"({
  "name": "anomaly-alert",
  "version": 1,
  "fields": [
    {"name": "resourceType", "kind": "string"},
    {"name": "alertId", "kind": "string"},
    {"name": "userToken", "kind": "string"},
    {"name": "gapDays", "kind": "integer"},
    {"name": "thresholdDays", "kind": "integer"},
    {"name": "latest", "kind": "record", "fields": [
      {"name": "questionnaireId", "kind": "string"},
      {"name": "submittedAt", "kind": "timestamp"},
      {"name": "adherence", "kind": "string"}
    ]},
    {"name": "createdAt", "kind": "timestamp"}
  ]
})";

Transcript run_ai2_mindtick(const ScenarioConfig& config) {
  auto started = std::chrono::steady_clock::now();
  ScenarioConfig cfg = config;
  cfg.params = mindtick_params(config.params);
  require_fresh_workdir(cfg);
  if (cfg.user_count < 1 || cfg.duration_days < 1) {
    fail(ErrorCode::SetupIncomplete, "need at least one user and one day");
  }

  const int64_t threshold = cfg.params["refillIntervalDays"].get<int64_t>() +
                            cfg.params["graceDays"].get<int64_t>();

  SimRun run;
  util::Clock clock = [now = run.sim_now] { return *now; };
  PlatformParts platform = make_platform(cfg, clock);

  UserDirectory directory(
      cfg.work_dir + "/users",
      crypto::sha256_hex("dhlink-scenario-" + std::to_string(cfg.seed)));
  std::vector<std::string> tokens = provision_users(cfg, directory);

  Store store(cfg.work_dir + "/services");
  QuestionnaireService questionnaires(&store);
  {
    QuestionnaireDef def;
    def.questionnaire_id = "daily-medication";
    def.title = "Daily medication check-in";
    Question q1;
    q1.qid = "adherence";
    q1.text = "Did you take your medication today?";
    q1.kind = QuestionKind::SingleChoice;
    q1.options = {"taken", "missed"};
    def.questions.push_back(q1);
    Question q2;
    q2.qid = "note";
    q2.text = "Anything to add?";
    q2.kind = QuestionKind::FreeText;
    def.questions.push_back(q2);
    questionnaires.register_definition(def);
  }

  Json proposal = Json{
      {"appId", "ai2-mindtick"},
      {"name", "MINDtick with AI2 analysis"},
      {"description", "daily questionnaires with anomaly detection"},
      {"microservices",
       Json::array({Json{{"serviceId", "mindtick-app"},
                         {"description", "participant-facing app"},
                         {"url", "local://mindtick-app"}},
                    Json{{"serviceId", "ai2-core"},
                         {"description", "adherence analysis"},
                         {"url", "local://ai2-core"}}})},
      {"topics",
       Json::array(
           {Json{{"name", "responses"},
                 {"description", "questionnaire responses"},
                 {"policy", "retained"},
                 {"schema", Json::parse(kResponsesSchema)},
                 {"senders", Json::array({"mindtick-app"})},
                 {"receivers", Json::array({"ai2-core"})}},
            Json{{"name", "anomaly-alerts"},
                 {"description", "adherence anomaly alerts"},
                 {"policy", "retained"},
                 {"schema", Json::parse(kAnomalyAlertSchema)},
                 {"senders", Json::array({"ai2-core"})},
                 {"receivers", Json::array({"mindtick-app"})}}})}};

  ApplicationRecord app = platform.admin->propose(proposal);
  run.event("admin", "app-proposed", app_summary(app));
  app = platform.admin->approve_and_initialise("ai2-mindtick");
  run.event("admin", "app-initialised", app_summary(app));
  app = platform.admin->mark_ready("ai2-mindtick");
  run.event("admin", "app-ready", app_summary(app));

  std::map<std::string, std::string> keys;
  for (const auto& s : app.services) keys[s.service_id] = s.api_key;

  DataSchema responses_schema = parse_schema(Json::parse(kResponsesSchema));
  DataSchema alert_schema = parse_schema(Json::parse(kAnomalyAlertSchema));
  std::string state_dir = cfg.work_dir + "/connectors";

  SourceConnector respond(
      connector_for("mindtick-app", keys["mindtick-app"], "responses",
                    "source"),
      responses_schema, platform.broker, platform.security, state_dir, clock);
  SinkConnector analyse(
      connector_for("ai2-core", keys["ai2-core"], "responses", "sink"),
      responses_schema, platform.broker, platform.security, state_dir, clock);
  SourceConnector raise(
      connector_for("ai2-core", keys["ai2-core"], "anomaly-alerts", "source"),
      alert_schema, platform.broker, platform.security, state_dir, clock);
  SinkConnector nudge(
      connector_for("mindtick-app", keys["mindtick-app"], "anomaly-alerts",
                    "sink"),
      alert_schema, platform.broker, platform.security, state_dir, clock);

  auto nudge_watch = store.watch("nudges/");

  const int64_t last_submission =
      kSimEpochMs + (cfg.duration_days - 1) * kDay + 8 * kHour;
  auto gap_for = [&](int user_index) -> int64_t {
    const Json& plants = cfg.params["plantGapDays"];
    auto it = plants.find(std::to_string(user_index));
    if (it != plants.end()) return it->get<int64_t>();
    return 7;
  };

  std::set<std::pair<std::string, int64_t>> alerted;

  for (int day = 0; day < cfg.duration_days; ++day) {
    *run.sim_now = kSimEpochMs + day * kDay + 8 * kHour;

    for (int i = 0; i < cfg.user_count; ++i) {
      const std::string& token = tokens[i];
      int64_t submitted_at = *run.sim_now;
      int64_t last_refill = last_submission - gap_for(i) * kDay;

      QuestionnaireResponse response;
      response.user_token = token;
      response.questionnaire_id = "daily-medication";
      response.submitted_at = submitted_at;
      response.answers.push_back(Answer{"adherence", Json("taken")});
      questionnaires.submit_response(response);
      run.event("mindtick-app", "submit-response", Json(response));
      run.count("responses");

      Json payload = Json{{"resourceType", "QuestionnaireResponse"},
                          {"userToken", token},
                          {"questionnaireId", "daily-medication"},
                          {"submittedAt", submitted_at},
                          {"lastRefillAt", last_refill},
                          {"adherence", "taken"}};
      auto outcomes = respond.send(payload);
      run.event("mindtick-app", "send",
                Json{{"topic", "responses"}, {"outcomes", outcomes_json(outcomes)}});
    }

    PollResult delivered = analyse.poll(100000);
    run.event("ai2-core", "deliver",
              Json{{"topic", "responses"}, {"result", offsets_json(delivered)}});
    run.count("response-records",
              static_cast<int64_t>(delivered.records.size()));
    run.count("skips", static_cast<int64_t>(delivered.skipped.size()));
    if (delivered.halted) run.count("halts");

    for (const auto& record : delivered.records) {
      std::string token = record.value.at("userToken").get<std::string>();
      int64_t submitted_at = record.value.at("submittedAt").get<int64_t>();
      int64_t last_refill = record.value.at("lastRefillAt").get<int64_t>();
      store.put("ai2/responses/" + token + "/" + std::to_string(submitted_at),
                record.value);

      int64_t gap_days = (submitted_at - last_refill) / kDay;
      if (gap_days <= threshold) continue;
      if (!alerted.insert({token, last_refill}).second) continue;

      auto stored = store.list("ai2/responses/" + token + "/");
      const Json& latest = stored.back().second;
      Json alert = Json{
          {"resourceType", "AnomalyAlert"},
          {"alertId",
           "al-" + crypto::sha256_hex(token + "|" +
                                      std::to_string(last_refill))
                       .substr(0, 12)},
          {"userToken", token},
          {"gapDays", gap_days},
          {"thresholdDays", threshold},
          {"latest",
           Json{{"questionnaireId",
                 latest.at("questionnaireId").get<std::string>()},
                {"submittedAt", latest.at("submittedAt").get<int64_t>()},
                {"adherence", latest.at("adherence").get<std::string>()}}},
          {"createdAt", *run.sim_now}};
      run.event("ai2-core", "anomaly-alert", alert);
      run.count("alerts");
      auto outcomes = raise.send(alert);
      run.event("ai2-core", "alert-send",
                Json{{"topic", "anomaly-alerts"},
                     {"outcomes", outcomes_json(outcomes)}});
    }

    PollResult alerts_in = nudge.poll(100000);
    run.event("mindtick-app", "alert-deliver",
              Json{{"topic", "anomaly-alerts"},
                   {"result", offsets_json(alerts_in)}});
    if (alerts_in.halted) run.count("halts");
    for (const auto& record : alerts_in.records) {
      std::string token = record.value.at("userToken").get<std::string>();
      std::string alert_id = record.value.at("alertId").get<std::string>();
      const Json& latest = record.value.at("latest");
      store.put("nudges/" + token + "/" + alert_id,
                Json{{"alertId", alert_id},
                     {"userToken", token},
                     {"message",
                      "time to refill your prescription; last check-in said "
                      "\"" + latest.at("adherence").get<std::string>() + "\""},
                     {"latest", latest},
                     {"createdAt", *run.sim_now}});
      run.count("nudges");
      run.event("mindtick-app", "nudge",
                Json{{"userToken", token}, {"alertId", alert_id}});
    }

    // The reminder-plan customization reacts to the nudge feed through the
    // store's change stream rather than through direct coupling.
    for (const auto& change : nudge_watch->drain()) {
      std::string token = change.value.at("userToken").get<std::string>();
      store.put("customization/" + token,
                Json{{"reminderPlan", "intensified"},
                     {"alertId", change.value.at("alertId")},
                     {"updatedAt", *run.sim_now}});
      run.event("mindtick-app", "customize",
                Json{{"userToken", token},
                     {"alertId", change.value.at("alertId")}});
      run.count("customizations");
    }
  }

  finish(run, cfg, started);
  return run.transcript;
}

// ---------------------------------------------------------------------------
// proximity: GPS traces land in the store, daily clustering plus a scripted
// condition confirmation drive retrospective and incremental proximity
// detection, alerts travel over the platform, and the seven-day window is
// purged daily.

Json proximity_params(const Json& given) {
  Json p = Json{{"epsMeters", 100.0},
                {"minPts", 3},
                {"distMeters", 50.0},
                {"slackSeconds", 1800},
                {"windowDays", 7},
                {"plant", Json{{"userA", 0},
                               {"userB", 1},
                               {"day", 1},
                               {"startHour", 10},
                               {"durationMinutes", 45}}},
                {"confirm", Json{{"day", 3}, {"userIndex", 1}, {"hour", 12}}}};
  for (const auto& [key, value] : given.items()) p[key] = value;
  return p;
}

const char* kConfirmationSchema = R"({
  "name": "condition-confirmation",
  "version": 1,
  "fields": [
    {"name": "resourceType", "kind": "string"},
    {"name": "userToken", "kind": "string"},
    {"name": "confirmedAt", "kind": "timestamp"}
  ]
})";

const char* kProximityAlertSchema = R"({
  "name": "proximity-alert",
  "version": 1,
  "fields": [
    {"name": "resourceType", "kind": "string"},
    {"name": "alertId", "kind": "string"},
    {"name": "subjectToken", "kind": "string"},
    {"name": "confirmedToken", "kind": "string"},
    {"name": "subjectClusterId", "kind": "string"},
    {"name": "confirmedClusterId", "kind": "string"},
    {"name": "distanceMeters", "kind": "float"},
    {"name": "overlapSeconds", "kind": "integer"},
    {"name": "createdAt", "kind": "timestamp"}
  ]
})";

Json alert_doc(const ProximityAlert& alert) {
  return Json{{"resourceType", "ProximityAlert"},
              {"alertId", alert.alert_id},
              {"subjectToken", alert.subject_token},
              {"confirmedToken", alert.confirmed_token},
              {"subjectClusterId", alert.subject_cluster_id},
              {"confirmedClusterId", alert.confirmed_cluster_id},
              {"distanceMeters", alert.distance_meters},
              {"overlapSeconds", alert.overlap_seconds},
              {"createdAt", alert.created_at}};
}

Transcript run_proximity(const ScenarioConfig& config) {
  auto started = std::chrono::steady_clock::now();
  ScenarioConfig cfg = config;
  cfg.params = proximity_params(config.params);
  require_fresh_workdir(cfg);
  if (cfg.user_count < 2 || cfg.duration_days < 1) {
    fail(ErrorCode::SetupIncomplete, "need at least two users and one day");
  }

  ProximityParams prox;
  prox.window_days = cfg.params["windowDays"].get<int64_t>();
  prox.dist_meters = cfg.params["distMeters"].get<double>();
  prox.slack_seconds = cfg.params["slackSeconds"].get<int64_t>();
  const double eps = cfg.params["epsMeters"].get<double>();
  const int min_pts = cfg.params["minPts"].get<int>();

  SimRun run;
  util::Clock clock = [now = run.sim_now] { return *now; };
  PlatformParts platform = make_platform(cfg, clock);

  UserDirectory directory(
      cfg.work_dir + "/users",
      crypto::sha256_hex("dhlink-scenario-" + std::to_string(cfg.seed)));
  std::vector<std::string> tokens = provision_users(cfg, directory);

  Store store(cfg.work_dir + "/services");

  // Traces, with the scripted co-location.
  TraceConfig traces_config;
  traces_config.seed = cfg.seed;
  traces_config.user_tokens = tokens;
  traces_config.start_ms = kSimEpochMs;
  traces_config.duration_days = cfg.duration_days;
  traces_config.step_ms = cfg.tick_ms;
  traces_config.eps_meters = eps;
  traces_config.min_pts = min_pts;
  traces_config.dist_meters = prox.dist_meters;
  const Json& plant = cfg.params["plant"];
  int plant_day = plant["day"].get<int>();
  {
    PlantSpec spec;
    spec.user_a = tokens.at(plant["userA"].get<int>());
    spec.user_b = tokens.at(plant["userB"].get<int>());
    spec.lat = traces_config.base_lat - 0.05;
    spec.lon = traces_config.base_lon;
    spec.start_ms =
        kSimEpochMs + plant_day * kDay + plant["startHour"].get<int>() * kHour;
    spec.duration_ms = plant["durationMinutes"].get<int64_t>() * 60 * 1000;
    traces_config.plants.push_back(spec);
  }
  auto traces = generate_traces(traces_config);
  {
    Json summary = Json::object();
    for (const auto& [token, points] : traces) {
      summary[token] = Json{{"count", points.size()},
                            {"first", points.front().ts},
                            {"last", points.back().ts}};
    }
    run.event("trace-generator", "traces", summary);
  }

  Json proposal = Json{
      {"appId", "proximity-watch"},
      {"name", "Proximity tracing"},
      {"description", "confirmed-condition proximity alerts"},
      {"microservices",
       Json::array({Json{{"serviceId", "health-authority"},
                         {"description", "confirmations and alert intake"},
                         {"url", "local://health-authority"}},
                    Json{{"serviceId", "prox-analyzer"},
                         {"description", "clustering and detection"},
                         {"url", "local://prox-analyzer"}}})},
      {"topics",
       Json::array(
           {Json{{"name", "condition-confirmations"},
                 {"description", "confirmed condition notices"},
                 {"policy", "retained"},
                 {"schema", Json::parse(kConfirmationSchema)},
                 {"senders", Json::array({"health-authority"})},
                 {"receivers", Json::array({"prox-analyzer"})}},
            Json{{"name", "proximity-alerts"},
                 {"description", "proximity alerts to the authority"},
                 {"policy", "retained"},
                 {"schema", Json::parse(kProximityAlertSchema)},
                 {"senders", Json::array({"prox-analyzer"})},
                 {"receivers", Json::array({"health-authority"})}}})}};

  ApplicationRecord app = platform.admin->propose(proposal);
  run.event("admin", "app-proposed", app_summary(app));
  app = platform.admin->approve_and_initialise("proximity-watch");
  run.event("admin", "app-initialised", app_summary(app));
  app = platform.admin->mark_ready("proximity-watch");
  run.event("admin", "app-ready", app_summary(app));

  std::map<std::string, std::string> keys;
  for (const auto& s : app.services) keys[s.service_id] = s.api_key;

  DataSchema confirmation_schema =
      parse_schema(Json::parse(kConfirmationSchema));
  DataSchema prox_alert_schema =
      parse_schema(Json::parse(kProximityAlertSchema));
  std::string state_dir = cfg.work_dir + "/connectors";

  SourceConnector confirm_out(
      connector_for("health-authority", keys["health-authority"],
                    "condition-confirmations", "source"),
      confirmation_schema, platform.broker, platform.security, state_dir,
      clock);
  SinkConnector confirm_in(
      connector_for("prox-analyzer", keys["prox-analyzer"],
                    "condition-confirmations", "sink"),
      confirmation_schema, platform.broker, platform.security, state_dir,
      clock);
  SourceConnector alert_out(
      connector_for("prox-analyzer", keys["prox-analyzer"], "proximity-alerts",
                    "source"),
      prox_alert_schema, platform.broker, platform.security, state_dir, clock);
  SinkConnector alert_in(
      connector_for("health-authority", keys["health-authority"],
                    "proximity-alerts", "sink"),
      prox_alert_schema, platform.broker, platform.security, state_dir, clock);

  const Json& confirm = cfg.params["confirm"];
  const int confirm_day = confirm["day"].get<int>();
  const std::string confirmed_token = tokens.at(confirm["userIndex"].get<int>());

  std::set<std::string> confirmed_tokens;
  std::set<std::string> sent_alert_ids;

  auto clusters_in_store = [&store]() {
    std::vector<GpsCluster> out;
    for (const auto& [key, value] : store.list("clusters/")) {
      out.push_back(value.get<GpsCluster>());
    }
    return out;
  };

  auto send_alerts = [&](const std::vector<ProximityAlert>& alerts,
                         const std::string& origin) {
    for (const auto& alert : alerts) {
      if (!sent_alert_ids.insert(alert.alert_id).second) continue;
      Json doc = alert_doc(alert);
      run.event("prox-analyzer", origin, doc);
      run.count(origin + "s");
      auto outcomes = alert_out.send(doc);
      run.event("prox-analyzer", "alert-send",
                Json{{"topic", "proximity-alerts"},
                     {"outcomes", outcomes_json(outcomes)}});
    }
  };

  for (int day = 0; day < cfg.duration_days; ++day) {
    const int64_t day_start = kSimEpochMs + day * kDay;
    const int64_t day_end = day_start + kDay;

    // Raw points of the day go straight into the store.
    *run.sim_now = day_end - kHour;
    Json ingest_summary = Json::object();
    for (const auto& [token, points] : traces) {
      int64_t stored = 0;
      for (const auto& p : points) {
        if (p.ts < day_start || p.ts >= day_end) continue;
        store.put("raw/" + token + "/" + std::to_string(p.ts), Json(p));
        ++stored;
      }
      ingest_summary[token] = stored;
      run.count("raw-points", stored);
    }
    run.event("prox-analyzer", "ingest",
              Json{{"day", day}, {"points", ingest_summary}});

    // Daily clustering per user.
    std::vector<GpsCluster> today;
    Json cluster_summary = Json::object();
    for (const auto& [token, points] : traces) {
      std::vector<GpsPoint> day_points;
      for (const auto& p : points) {
        if (p.ts >= day_start && p.ts < day_end) day_points.push_back(p);
      }
      auto clusters =
          gps_cluster(day_points, eps, min_pts,
                      token.substr(0, 8) + "-d" + std::to_string(day));
      Json ids = Json::array();
      for (const auto& c : clusters) {
        store.put("clusters/" + token + "/" + c.cluster_id, Json(c));
        ids.push_back(c.cluster_id);
        today.push_back(c);
      }
      cluster_summary[token] = ids;
      run.count("clusters", static_cast<int64_t>(clusters.size()));
    }
    run.event("prox-analyzer", "cluster",
              Json{{"day", day}, {"clusters", cluster_summary}});

    // Scripted confirmation: one message through the platform, then the
    // retrospective sweep.
    if (day == confirm_day) {
      *run.sim_now = day_end - 30 * 60 * 1000;
      Json doc = Json{{"resourceType", "ConditionConfirmation"},
                      {"userToken", confirmed_token},
                      {"confirmedAt",
                       day_start + confirm["hour"].get<int>() * kHour}};
      auto outcomes = confirm_out.send(doc);
      run.event("health-authority", "confirm-send",
                Json{{"topic", "condition-confirmations"},
                     {"outcomes", outcomes_json(outcomes)}});

      PollResult in = confirm_in.poll(100);
      run.event("prox-analyzer", "confirm-deliver",
                Json{{"result", offsets_json(in)}});
      if (in.halted) run.count("halts");
      for (const auto& record : in.records) {
        std::string token = record.value.at("userToken").get<std::string>();
        confirmed_tokens.insert(token);
        run.count("confirmations");
        auto alerts = detect_proximity_backtrace(token, clusters_in_store(),
                                                 *run.sim_now, prox);
        send_alerts(alerts, "backtrace-alert");
      }
    }

    // Incremental detection for clusters formed after the confirmation.
    if (!confirmed_tokens.empty() && day > confirm_day) {
      *run.sim_now = day_end - 15 * 60 * 1000;
      const int64_t cutoff = window_cutoff_ms(*run.sim_now, prox.window_days);
      std::vector<GpsCluster> confirmed_clusters;
      for (const auto& c : clusters_in_store()) {
        if (confirmed_tokens.count(c.user_token) && c.t_end >= cutoff) {
          confirmed_clusters.push_back(c);
        }
      }
      for (const auto& c : today) {
        if (confirmed_tokens.count(c.user_token)) continue;
        auto alerts = detect_proximity_incremental(
            c, confirmed_clusters, prox.dist_meters, prox.slack_seconds,
            *run.sim_now);
        send_alerts(alerts, "incremental-alert");
      }
    }

    // The authority consumes whatever alerts the day produced.
    *run.sim_now = day_end - 10 * 60 * 1000;
    PollResult alerts_in_poll = alert_in.poll(100000);
    run.event("health-authority", "alert-deliver",
              Json{{"result", offsets_json(alerts_in_poll)}});
    if (alerts_in_poll.halted) run.count("halts");
    for (const auto& record : alerts_in_poll.records) {
      store.put("authority/alerts/" +
                    record.value.at("alertId").get<std::string>(),
                record.value);
      run.count("alerts-delivered");
    }

    // End-of-day retention sweep over the seven-day window.
    *run.sim_now = day_end;
    int64_t purged = purge_expired(store, *run.sim_now, prox.window_days);
    run.event("prox-analyzer", "purge",
              Json{{"day", day}, {"purged", purged}});
    run.count("purged", purged);
  }

  finish(run, cfg, started);
  return run.transcript;
}

}  // namespace

ScenarioConfig scenario_config_from_json(const Json& doc) {
  ScenarioConfig config;
  config.scenario = doc.value("scenario", "");
  config.seed = doc.value("seed", 1ULL);
  config.user_count = doc.value("userCount", 20);
  config.duration_days = doc.value("durationDays", 7);
  config.tick_ms = doc.value("tickMs", 5 * 60 * 1000LL);
  config.work_dir = doc.value("workDir", "");
  if (doc.contains("endpoints")) {
    config.endpoints = endpoints_from_json(doc["endpoints"]);
  }
  config.params = doc.value("params", Json::object());
  return config;
}

Json scenario_config_to_json(const ScenarioConfig& config) {
  return Json{{"scenario", config.scenario},
              {"seed", config.seed},
              {"userCount", config.user_count},
              {"durationDays", config.duration_days},
              {"tickMs", config.tick_ms},
              {"workDir", config.work_dir},
              {"endpoints", endpoints_to_json(config.endpoints)},
              {"params", config.params}};
}

Json transcript_to_json(const Transcript& transcript) {
  Json events = Json::array();
  for (const auto& e : transcript.events) {
    events.push_back(Json{{"simTime", e.sim_time},
                          {"actor", e.actor},
                          {"action", e.action},
                          {"digest", e.digest}});
  }
  Json counters = Json::object();
  for (const auto& [key, value] : transcript.counters) counters[key] = value;
  return Json{{"scenario", transcript.scenario},
              {"seed", transcript.seed},
              {"config", transcript.config},
              {"events", events},
              {"counters", counters},
              {"digest", transcript.digest},
              {"metrics", transcript.metrics}};
}

Transcript transcript_from_json(const Json& doc) {
  Transcript t;
  doc.at("scenario").get_to(t.scenario);
  doc.at("seed").get_to(t.seed);
  t.config = doc.at("config");
  for (const auto& e : doc.at("events")) {
    t.events.push_back(TranscriptEvent{e.at("simTime").get<int64_t>(),
                                       e.at("actor").get<std::string>(),
                                       e.at("action").get<std::string>(),
                                       e.at("digest").get<std::string>()});
  }
  for (const auto& [key, value] : doc.at("counters").items()) {
    t.counters[key] = value.get<int64_t>();
  }
  t.digest = doc.value("digest", "");
  t.metrics = doc.value("metrics", Json::object());
  return t;
}

std::string transcript_digest(const Transcript& transcript) {
  Json events = Json::array();
  for (const auto& e : transcript.events) {
    events.push_back(Json{{"simTime", e.sim_time},
                          {"actor", e.actor},
                          {"action", e.action},
                          {"digest", e.digest}});
  }
  Json counters = Json::object();
  for (const auto& [key, value] : transcript.counters) counters[key] = value;
  return canonical_digest(Json{{"scenario", transcript.scenario},
                               {"seed", transcript.seed},
                               {"config", transcript.config},
                               {"events", events},
                               {"counters", counters}});
}

Transcript run_scenario(const ScenarioConfig& config) {
  if (config.scenario == "ai2-mindtick") return run_ai2_mindtick(config);
  if (config.scenario == "proximity") return run_proximity(config);
  fail(ErrorCode::BadRequest, "unknown scenario: " + config.scenario);
}

namespace {

bool check(bool condition, const std::string& message, std::string* why) {
  if (condition) return true;
  if (why) *why = message;
  return false;
}

int64_t counter_of(const Transcript& t, const std::string& key) {
  auto it = t.counters.find(key);
  return it == t.counters.end() ? 0 : it->second;
}

int64_t count_events(const Transcript& t, const std::string& action) {
  int64_t n = 0;
  for (const auto& e : t.events) {
    if (e.action == action) ++n;
  }
  return n;
}

}  // namespace

bool verify_transcript(const Json& doc, std::string* why) {
  Transcript t;
  try {
    t = transcript_from_json(doc);
  } catch (const std::exception& e) {
    return check(false, std::string("transcript does not parse: ") + e.what(),
                 why);
  }

  if (!check(t.digest == transcript_digest(t),
             "digest does not match the recorded events", why)) {
    return false;
  }
  if (!check(counter_of(t, "halts") == 0, "a connector halted", why)) {
    return false;
  }
  if (!check(counter_of(t, "skips") == 0, "records were skipped", why)) {
    return false;
  }

  int64_t user_count = t.config.value("userCount", 0);
  int64_t duration_days = t.config.value("durationDays", 0);
  const Json params = t.config.value("params", Json::object());

  if (t.scenario == "ai2-mindtick") {
    if (!check(counter_of(t, "responses") == user_count * duration_days,
               "response count is not users x days", why)) {
      return false;
    }
    if (!check(counter_of(t, "response-records") ==
                   counter_of(t, "responses"),
               "not every response was delivered", why)) {
      return false;
    }
    int64_t threshold = params.value("refillIntervalDays", 30) +
                        params.value("graceDays", 7);
    int64_t expected_alerts = 0;
    for (const auto& [index, gap] :
         params.value("plantGapDays", Json::object()).items()) {
      (void)index;
      if (gap.get<int64_t>() > threshold) ++expected_alerts;
    }
    if (!check(counter_of(t, "alerts") == expected_alerts,
               "alert count does not match the planted gaps", why)) {
      return false;
    }
    if (!check(counter_of(t, "nudges") == counter_of(t, "alerts"),
               "nudges do not match alerts", why)) {
      return false;
    }
    if (!check(count_events(t, "anomaly-alert") == counter_of(t, "alerts"),
               "alert events do not match the alert counter", why)) {
      return false;
    }
    return true;
  }

  if (t.scenario == "proximity") {
    if (!check(count_events(t, "cluster") == duration_days,
               "clustering did not run daily", why)) {
      return false;
    }
    if (!check(count_events(t, "purge") == duration_days,
               "the retention sweep did not run daily", why)) {
      return false;
    }
    bool planted = params.contains("plant") && params.contains("confirm");
    if (planted) {
      int64_t plant_day = params["plant"].value("day", 0);
      int64_t confirm_day = params["confirm"].value("day", 0);
      int64_t window = params.value("windowDays", 7);
      if (confirm_day >= plant_day && confirm_day - plant_day <= window) {
        if (!check(counter_of(t, "backtrace-alerts") >= 1,
                   "the planted co-location raised no alert", why)) {
          return false;
        }
      }
    }
    if (!check(counter_of(t, "alerts-delivered") ==
                   counter_of(t, "backtrace-alerts") +
                       counter_of(t, "incremental-alerts"),
               "not every alert reached the authority", why)) {
      return false;
    }
    return true;
  }

  return check(false, "unknown scenario: " + t.scenario, why);
}

}  // namespace dhlink
