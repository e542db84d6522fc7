#include <memory>

#include "dhlink/discovery.hpp"
#include "dhlink/local_apis.hpp"
#include "service_main.hpp"

int main(int argc, char** argv) {
  using namespace dhlink;

  CLI::App app{"DHLink discovery service: topic, service, and schema registry"};
  tools::ServeOptions opts;
  tools::add_serve_options(app, opts);
  std::string security_url;
  std::string broker_url;
  app.add_option("--security-url", security_url,
                 "security service endpoint for caller checks")
      ->required();
  app.add_option("--broker-url", broker_url,
                 "broker endpoint powering sender-visibility walks (optional)");
  CLI11_PARSE(app, argc, argv);

  try {
    sigset_t signals;
    tools::block_shutdown_signals(&signals);

    DiscoveryCore core(opts.data_dir);
    HttpSecurityApi security(security_url);
    LocalDiscoveryApi api(&core, &security, opts.admin_token,
                          Caller::admin(opts.admin_token));
    std::unique_ptr<HttpBrokerApi> broker;
    if (!broker_url.empty()) {
      broker = std::make_unique<HttpBrokerApi>(broker_url);
      api.bind_broker(broker.get());
    }

    DiscoveryServer server(&api, opts.tls);
    int port = server.start(opts.host, opts.port);
    tools::announce_ready("discovery", port);

    tools::wait_for_shutdown(&signals);
    server.stop();
  } catch (const Error& e) {
    return tools::report_error(e);
  }
  return 0;
}
