// Serves the provider wire protocol from offline mocks, for trying the HTTP
// provider path without real models.

#include <csignal>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "instructforge/core/config.hpp"
#include "instructforge/errors.hpp"
#include "instructforge/providers/mock_server.hpp"

namespace {

using nlohmann::json;
namespace ifp = instructforge::providers;

ifp::ProviderSpec role_spec(const json& j, ifp::ProviderRole role) {
  auto spec = j.get<ifp::ProviderSpec>();
  spec.role = role;
  spec.kind = ifp::ProviderKind::mock;
  spec.validate();
  return spec;
}

ifp::MockProviderServer::Roles default_roles() {
  const auto config = instructforge::mock_config();
  ifp::MockProviderServer::Roles roles;
  ifp::ProviderSpec rewriter;
  rewriter.role = ifp::ProviderRole::rewriter;
  rewriter.name = "mock-expander";
  rewriter.mock = {{"type", "number_expander"}};
  roles.rewriter = rewriter;
  roles.synthesizer = config.synthesizer;
  roles.transcriber = config.transcribers.front();
  roles.embedder = config.embedders.front();
  return roles;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline mock of the provider HTTP protocol.", "instructforge-mock-server"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string roles_path;
  app.add_option("--host", host, "Bind address (default 127.0.0.1)");
  app.add_option("--port", port, "Port; 0 picks a free one (default 8080)");
  app.add_option("--roles", roles_path,
                 "JSON {rewriter?, synthesizer?, transcriber?, embedder?} of mock specs; absent roles answer 501");
  CLI11_PARSE(app, argc, argv);

  try {
    ifp::MockProviderServer::Roles roles = default_roles();
    if (!roles_path.empty()) {
      std::ifstream in(roles_path);
      if (!in) throw instructforge::ConfigError("cannot open " + roles_path);
      const json j = json::parse(in);
      roles = {};
      for (const auto& [key, value] : j.items()) {
        const auto role = ifp::role_from_string(key);
        const auto spec = role_spec(value, role);
        switch (role) {
          case ifp::ProviderRole::rewriter: roles.rewriter = spec; break;
          case ifp::ProviderRole::synthesizer: roles.synthesizer = spec; break;
          case ifp::ProviderRole::transcriber: roles.transcriber = spec; break;
          case ifp::ProviderRole::embedder: roles.embedder = spec; break;
        }
      }
    }
    ifp::MockProviderServer server(roles);
    std::cerr << "listening on " << host << ":" << port << '\n';
    server.listen(host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
