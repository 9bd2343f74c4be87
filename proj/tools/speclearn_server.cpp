// Serves teaching sessions over HTTP.
#include "speclearn/http_service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace {
speclearn::HttpService* active_service = nullptr;
void on_signal(int)
{
  if (active_service)
    active_service->stop();
}
}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Teaching session service"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_dir;
  app.add_option("--host", host)->capture_default_str();
  app.add_option("--port", port, "0 picks a free port")->capture_default_str();
  app.add_option("--log-dir", log_dir, "directory of per-session event logs; replayed at startup");
  CLI11_PARSE(app, argc, argv);

  try {
    speclearn::SessionManager sessions(log_dir);
    speclearn::HttpService service(sessions);
    const int bound = service.bind(host, port);
    if (bound < 0) {
      std::cerr << "cannot bind " << host << ":" << port << '\n';
      return 1;
    }
    active_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on http://" << host << ":" << bound << " (" << sessions.ids().size()
              << " sessions restored)" << std::endl;
    service.serve();
    active_service = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
