#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dhlink/json.hpp"

namespace dhlink {

// Where a scenario's platform lives. Empty urls run everything embedded in
// process; with urls the harness drives remote services instead.
struct ScenarioEndpoints {
  std::string broker_url;
  std::string security_url;
  std::string discovery_url;
  std::string admin_token;

  bool remote() const {
    return !broker_url.empty() || !security_url.empty() ||
           !discovery_url.empty();
  }
};

struct ScenarioConfig {
  std::string scenario;  // ai2-mindtick | proximity
  uint64_t seed = 1;
  int user_count = 20;
  int duration_days = 7;
  int64_t tick_ms = 5 * 60 * 1000;
  std::string work_dir;
  ScenarioEndpoints endpoints;
  Json params = Json::object();
};

ScenarioConfig scenario_config_from_json(const Json& doc);
Json scenario_config_to_json(const ScenarioConfig& config);

struct TranscriptEvent {
  int64_t sim_time = 0;
  std::string actor;
  std::string action;
  std::string digest;  // canonical digest of the event's payload
};

// Ordered record of a run. The digest covers scenario, seed, the
// behavior-relevant config echo, every event, and the counters; metrics
// (wall time and the like) stay outside it, so two runs of one config are
// digest-identical exactly when they behaved identically.
struct Transcript {
  std::string scenario;
  uint64_t seed = 0;
  Json config = Json::object();
  std::vector<TranscriptEvent> events;
  std::map<std::string, int64_t> counters;
  std::string digest;
  Json metrics = Json::object();
};

Json transcript_to_json(const Transcript& transcript);
Transcript transcript_from_json(const Json& doc);
std::string transcript_digest(const Transcript& transcript);

// Runs the scenario named in the config and returns its transcript.
Transcript run_scenario(const ScenarioConfig& config);

// Re-derives the digest and checks the run's promised outcomes against its
// own config echo. On failure, why (when given) says what broke.
bool verify_transcript(const Json& doc, std::string* why);

}  // namespace dhlink
