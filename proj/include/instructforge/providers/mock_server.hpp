#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "instructforge/providers/mock.hpp"

namespace httplib {
class Server;
}

namespace instructforge::providers {

// Serves the provider wire protocol from mock providers, one per role. Roles
// left unset answer 501. Used for offline protocol tests and demos.
class MockProviderServer {
 public:
  struct Roles {
    std::optional<ProviderSpec> rewriter;
    std::optional<ProviderSpec> synthesizer;
    std::optional<ProviderSpec> transcriber;
    std::optional<ProviderSpec> embedder;
  };

  explicit MockProviderServer(Roles roles);
  ~MockProviderServer();
  MockProviderServer(const MockProviderServer&) = delete;
  MockProviderServer& operator=(const MockProviderServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  std::string base_url() const;

  // The next `n` requests to `path` answer 503.
  void fail_next(const std::string& path, int n);
  std::size_t requests(const std::string& path) const;

 private:
  void install_routes();
  bool take_failure(const std::string& path);

  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<MockRewriter> rewriter_;
  std::unique_ptr<MockSynthesizer> synthesizer_;
  std::unique_ptr<MockTranscriber> transcriber_;
  std::unique_ptr<MockEmbedder> embedder_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::map<std::string, int> failures_;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace instructforge::providers
