#include "dhlink/local_apis.hpp"
#include "dhlink/security.hpp"
#include "service_main.hpp"

int main(int argc, char** argv) {
  using namespace dhlink;

  CLI::App app{"DHLink security service: identity, authorization, key management"};
  tools::ServeOptions opts;
  tools::add_serve_options(app, opts);
  std::string keys_admin_token;
  app.add_option("--keys-admin-token", keys_admin_token,
                 "separate token for key administration (defaults to the "
                 "admin token)");
  CLI11_PARSE(app, argc, argv);

  try {
    sigset_t signals;
    tools::block_shutdown_signals(&signals);

    SecurityCore security(opts.data_dir);
    KeyManagementCore keys(opts.data_dir);
    LocalSecurityApi api(&security, &keys, opts.admin_token, keys_admin_token);

    SecurityServer server(&api, opts.tls);
    int port = server.start(opts.host, opts.port);
    tools::announce_ready("security", port);

    tools::wait_for_shutdown(&signals);
    server.stop();
  } catch (const Error& e) {
    return tools::report_error(e);
  }
  return 0;
}
