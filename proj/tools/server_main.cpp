#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "abc/conduct.hpp"
#include "abc/parallel.hpp"
#include "http_api.hpp"

namespace {

httplib::Server* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trial-conduct HTTP service", "abc-server"};
  std::string host = "0.0.0.0";
  int port = std::stoi(env_or("ABC_PORT", "8080"));
  std::string data_dir = env_or("ABC_DATA_DIR", "./abc-data");
  std::string static_dir = env_or("ABC_STATIC_DIR", "");
  int workers = 0;
  app.add_option("--host", host, "Listen address")->capture_default_str();
  app.add_option("--port", port, "Listen port (env ABC_PORT)")->capture_default_str();
  app.add_option("--data-dir", data_dir, "Trial logs and bank cache (env ABC_DATA_DIR)")->capture_default_str();
  app.add_option("--static-dir", static_dir, "Dashboard bundle served at / (env ABC_STATIC_DIR)");
  app.add_option("--workers", workers, "Threads for bank generation (0 = all cores)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    abc::TrialStore store(data_dir, workers > 0 ? workers : abc::default_workers());
    for (const auto& problem : store.recover()) std::cerr << "recovery: " << problem << '\n';

    httplib::Server server;
    std::optional<std::filesystem::path> mount;
    if (!static_dir.empty()) mount = static_dir;
    abc::http::install_routes(server, store, mount);

    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cerr << "listening on " << host << ':' << port << ", data in " << data_dir << '\n';
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
