#include "instructforge/providers/mock_server.hpp"

#include <httplib.h>

#include "instructforge/errors.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::providers {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

// Parses the body and checks the listed fields are strings (or integers when
// the name is in `ints`). Writes a 400 and returns nullopt on failure.
std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res,
                               std::initializer_list<const char*> strings,
                               std::initializer_list<const char*> ints = {}) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::parse_error&) {
    error(res, 400, "malformed JSON body");
    return std::nullopt;
  }
  if (!body.is_object()) {
    error(res, 400, "body must be a JSON object");
    return std::nullopt;
  }
  for (const char* key : strings) {
    if (!body.contains(key) || !body[key].is_string()) {
      error(res, 400, std::string("missing string field '") + key + "'");
      return std::nullopt;
    }
  }
  for (const char* key : ints) {
    if (!body.contains(key) || !body[key].is_number_integer()) {
      error(res, 400, std::string("missing integer field '") + key + "'");
      return std::nullopt;
    }
  }
  return body;
}

template <typename T>
std::unique_ptr<T> make_if(const std::optional<ProviderSpec>& spec, ProviderRole role) {
  if (!spec) return nullptr;
  ProviderSpec s = *spec;
  s.role = role;
  s.kind = ProviderKind::mock;
  return std::make_unique<T>(std::move(s));
}

}  // namespace

MockProviderServer::MockProviderServer(Roles roles)
    : server_(std::make_unique<httplib::Server>()),
      rewriter_(make_if<MockRewriter>(roles.rewriter, ProviderRole::rewriter)),
      synthesizer_(make_if<MockSynthesizer>(roles.synthesizer, ProviderRole::synthesizer)),
      transcriber_(make_if<MockTranscriber>(roles.transcriber, ProviderRole::transcriber)),
      embedder_(make_if<MockEmbedder>(roles.embedder, ProviderRole::embedder)) {
  install_routes();
}

MockProviderServer::~MockProviderServer() { stop(); }

bool MockProviderServer::take_failure(const std::string& path) {
  std::lock_guard lock(mutex_);
  ++counts_[path];
  auto it = failures_.find(path);
  if (it == failures_.end() || it->second <= 0) return false;
  --it->second;
  return true;
}

void MockProviderServer::fail_next(const std::string& path, int n) {
  std::lock_guard lock(mutex_);
  failures_[path] = n;
}

std::size_t MockProviderServer::requests(const std::string& path) const {
  std::lock_guard lock(mutex_);
  const auto it = counts_.find(path);
  return it == counts_.end() ? 0 : it->second;
}

void MockProviderServer::install_routes() {
  auto guarded = [this](const std::string& path, bool enabled, auto handler) {
    server_->Post(path, [this, path, enabled, handler](const httplib::Request& req, httplib::Response& res) {
      if (take_failure(path)) return error(res, 503, "injected model failure");
      if (!enabled) return error(res, 501, "role not configured");
      try {
        handler(req, res);
      } catch (const ProviderUnavailable& e) {
        error(res, 503, e.what());
      } catch (const InvalidInput& e) {
        error(res, 400, e.what());
      }
    });
  };

  guarded("/v1/rewrite", rewriter_ != nullptr, [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res, {"prompt", "text"});
    if (!body) return;
    reply(res, 200, json{{"text", rewriter_->complete((*body)["prompt"].get<std::string>(),
                                                      (*body)["text"].get<std::string>())}});
  });

  guarded("/v1/synthesize", synthesizer_ != nullptr, [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res, {"text", "description"});
    if (!body) return;
    const auto text = (*body)["text"].get<std::string>();
    if (text.empty()) return error(res, 400, "empty text");
    const PcmAudio audio = synthesizer_->synthesize(text, (*body)["description"].get<std::string>());
    reply(res, 200, json{{"audio_b64", util::base64_encode(encode_wav(audio))}, {"sample_rate", audio.sample_rate}});
  });

  guarded("/v1/transcribe", transcriber_ != nullptr, [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res, {"audio_b64"}, {"sample_rate"});
    if (!body) return;
    AudioInput input;
    input.audio = decode_wav(util::base64_decode((*body)["audio_b64"].get<std::string>()));
    reply(res, 200, json{{"text", transcriber_->transcribe(input)}});
  });

  guarded("/v1/embed", embedder_ != nullptr, [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res, {"text"});
    if (!body) return;
    reply(res, 200, json{{"values", embedder_->embed((*body)["text"].get<std::string>())},
                         {"model", embedder_->name()}});
  });

  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    json roles = json::array();
    if (rewriter_) roles.push_back("rewriter");
    if (synthesizer_) roles.push_back("synthesizer");
    if (transcriber_) roles.push_back("transcriber");
    if (embedder_) roles.push_back("embedder");
    reply(res, 200, json{{"roles", roles}});
  });
}

int MockProviderServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw StorageError("mock server: cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockProviderServer::listen(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) throw StorageError("mock server: cannot listen on " + host + ":" + std::to_string(port));
}

void MockProviderServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockProviderServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

}  // namespace instructforge::providers
