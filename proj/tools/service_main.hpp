#pragma once

#include <csignal>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dhlink/errors.hpp"
#include "dhlink/http.hpp"

namespace dhlink::tools {

// Shared daemon flags: bind address, credentials, storage, TLS material.
struct ServeOptions {
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string admin_token;
  TlsConfig tls;
};

inline void add_serve_options(CLI::App& app, ServeOptions& opts) {
  app.add_option("--data-dir", opts.data_dir, "storage directory")->required();
  app.add_option("--host", opts.host, "bind address");
  app.add_option("--port", opts.port, "port to listen on (0 picks a free one)");
  app.add_option("--admin-token", opts.admin_token, "administrator token")
      ->required();
  app.add_option("--tls-cert", opts.tls.cert_path, "TLS certificate (PEM)");
  app.add_option("--tls-key", opts.tls.key_path, "TLS private key (PEM)");
}

// Blocks until SIGINT or SIGTERM. Signals must be blocked before any server
// thread starts so they are delivered here and nowhere else.
inline void block_shutdown_signals(sigset_t* set) {
  sigemptyset(set);
  sigaddset(set, SIGINT);
  sigaddset(set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, set, nullptr);
}

inline void wait_for_shutdown(sigset_t* set) {
  int sig = 0;
  sigwait(set, &sig);
}

inline void announce_ready(const char* what, int port) {
  std::printf("READY %s port=%d\n", what, port);
  std::fflush(stdout);
}

inline int report_error(const Error& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return 1;
}

}  // namespace dhlink::tools
