#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dhlink/errors.hpp"
#include "dhlink/scenario.hpp"
#include "dhlink/util.hpp"

int main(int argc, char** argv) {
  using namespace dhlink;

  CLI::App cli{"DHLink scenario harness"};
  cli.require_subcommand(1);

  std::string scenario_name, config_file, out_file = "transcript.json";
  std::string work_dir;
  uint64_t seed = 0;
  bool seed_given = false;
  int users = 0, days = 0;
  std::string broker_url, security_url, discovery_url, admin_token;

  auto* run = cli.add_subcommand("run", "run a scenario and write a transcript");
  run->add_option("scenario", scenario_name, "ai2-mindtick | proximity")
      ->required();
  run->add_option("--config", config_file, "scenario configuration JSON");
  run->add_option("--seed", seed, "override the seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", out_file, "transcript output path");
  run->add_option("--work-dir", work_dir,
                  "fresh working directory (default: a new temp directory)");
  run->add_option("--users", users, "override userCount");
  run->add_option("--days", days, "override durationDays");
  run->add_option("--broker-url", broker_url, "use a running broker");
  run->add_option("--security-url", security_url, "use a running security service");
  run->add_option("--discovery-url", discovery_url,
                  "use a running discovery service");
  run->add_option("--admin-token", admin_token,
                  "admin token for remote endpoints");

  std::string transcript_file;
  auto* verify = cli.add_subcommand("verify", "check a transcript");
  verify->add_option("transcript", transcript_file, "transcript JSON path")
      ->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*run) {
      ScenarioConfig config;
      if (!config_file.empty()) {
        Json doc = Json::parse(util::read_file(config_file), nullptr, false);
        if (doc.is_discarded()) {
          fail(ErrorCode::BadRequest, config_file + " is not JSON");
        }
        config = scenario_config_from_json(doc);
      }
      config.scenario = scenario_name;
      if (seed_given) config.seed = seed;
      if (users > 0) config.user_count = users;
      if (days > 0) config.duration_days = days;
      if (!broker_url.empty()) config.endpoints.broker_url = broker_url;
      if (!security_url.empty()) config.endpoints.security_url = security_url;
      if (!discovery_url.empty()) {
        config.endpoints.discovery_url = discovery_url;
      }
      if (!admin_token.empty()) config.endpoints.admin_token = admin_token;
      if (!work_dir.empty()) {
        config.work_dir = work_dir;
      } else if (config.work_dir.empty()) {
        config.work_dir = "/tmp/dhlink-" + config.scenario + "-" +
                          util::random_hex(8);
      }

      Transcript transcript = run_scenario(config);
      util::write_file_atomic(out_file,
                              transcript_to_json(transcript).dump(2) + "\n");

      std::printf("scenario %s seed %llu: %zu events, digest %s\n",
                  transcript.scenario.c_str(),
                  static_cast<unsigned long long>(transcript.seed),
                  transcript.events.size(), transcript.digest.c_str());
      for (const auto& [key, value] : transcript.counters) {
        std::printf("  %s: %lld\n", key.c_str(),
                    static_cast<long long>(value));
      }
      std::printf("transcript written to %s\n", out_file.c_str());
      return 0;
    }

    if (*verify) {
      Json doc = Json::parse(util::read_file(transcript_file), nullptr, false);
      if (doc.is_discarded()) {
        std::fprintf(stderr, "FAIL: %s is not JSON\n", transcript_file.c_str());
        return 1;
      }
      std::string why;
      if (!verify_transcript(doc, &why)) {
        std::fprintf(stderr, "FAIL: %s\n", why.c_str());
        return 1;
      }
      std::puts("OK");
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
