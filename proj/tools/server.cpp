// HTTP front end over Api::handle. Configuration comes from the environment.

#include <cstdlib>
#include <iostream>

#include "httplib.h"
#include "scaffold/api.hpp"
#include "scaffold/grader.hpp"
#include "scaffold/provider.hpp"
#include "scaffold/session.hpp"

using namespace scaffold;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

int main() {
  const auto bind = env_or("BIND_ADDR", "127.0.0.1:8080");
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "BIND_ADDR must be host:port\n";
    return 2;
  }
  const auto host = bind.substr(0, colon);
  const int port = std::atoi(bind.c_str() + colon + 1);

  StoreConfig config;
  config.data_dir = env_or("DATA_DIR", "./data");
  auto provider = make_provider_from_env();
  const PythonEvaluator evaluator(env_or("PYTHON", "python3"));
  if (!evaluator.available()) std::cerr << "warning: interpreter not found; code attempts will return 503\n";

  SessionStore store(config, *provider, evaluator);
  Api api(store);

  httplib::Server server;
  auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
    const auto r = api.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(R"(/api/.*)", handler);
  server.Post(R"(/api/.*)", handler);
  if (const auto web = env_or("STATIC_DIR", ""); !web.empty()) server.set_mount_point("/", web);

  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    std::cerr << req.method << ' ' << req.path << ' ' << res.status << '\n';
  });

  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) {
    std::cerr << "cannot bind " << bind << '\n';
    return 1;
  }
  return 0;
}
