#include <atomic>
#include <chrono>
#include <thread>

#include "dhlink/broker.hpp"
#include "dhlink/local_apis.hpp"
#include "service_main.hpp"

int main(int argc, char** argv) {
  using namespace dhlink;

  CLI::App app{"DHLink broker service: topics, sections, routed records"};
  tools::ServeOptions opts;
  tools::add_serve_options(app, opts);
  std::string security_url;
  std::string discovery_url;
  int sweep_seconds = 5;
  app.add_option("--security-url", security_url,
                 "security service endpoint for enforcement")
      ->required();
  app.add_option("--discovery-url", discovery_url,
                 "discovery service endpoint for schema checks")
      ->required();
  app.add_option("--retention-sweep-seconds", sweep_seconds,
                 "seconds between retention sweeps (0 disables)");
  CLI11_PARSE(app, argc, argv);

  try {
    sigset_t signals;
    tools::block_shutdown_signals(&signals);

    HttpSecurityApi security(security_url);
    HttpDiscoveryApi discovery(discovery_url);
    Broker broker(opts.data_dir);
    LocalBrokerApi api(&broker, &security, &discovery, opts.admin_token,
                       Caller::admin(opts.admin_token));

    std::atomic<bool> stop{false};
    std::thread sweeper;
    if (sweep_seconds > 0) {
      sweeper = std::thread([&] {
        while (!stop.load()) {
          broker.enforce_retention_all(util::now_ms());
          for (int i = 0; i < sweep_seconds * 10 && !stop.load(); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
          }
        }
      });
    }

    BrokerServer server(&api, opts.tls);
    int port = server.start(opts.host, opts.port);
    tools::announce_ready("broker", port);

    tools::wait_for_shutdown(&signals);
    server.stop();
    stop.store(true);
    if (sweeper.joinable()) sweeper.join();
  } catch (const Error& e) {
    return tools::report_error(e);
  }
  return 0;
}
