#include "instructforge/providers/spec.hpp"

#include <cctype>
#include <cstdlib>

#include "instructforge/errors.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::providers {

using nlohmann::json;

std::string_view to_string(ProviderRole role) {
  switch (role) {
    case ProviderRole::rewriter: return "rewriter";
    case ProviderRole::synthesizer: return "synthesizer";
    case ProviderRole::transcriber: return "transcriber";
    case ProviderRole::embedder: return "embedder";
  }
  return "rewriter";
}

std::string_view to_string(ProviderKind kind) { return kind == ProviderKind::http ? "http" : "mock"; }

ProviderRole role_from_string(std::string_view text) {
  if (text == "rewriter") return ProviderRole::rewriter;
  if (text == "synthesizer") return ProviderRole::synthesizer;
  if (text == "transcriber") return ProviderRole::transcriber;
  if (text == "embedder") return ProviderRole::embedder;
  throw ConfigError("unknown provider role '" + std::string(text) + "'");
}

std::string ProviderSpec::identity() const {
  const json id = {{"role", to_string(role)},
                   {"name", name},
                   {"kind", to_string(kind)},
                   {"mock", kind == ProviderKind::mock ? mock : json(nullptr)},
                   {"version", request_version_tag}};
  return util::sha256_hex(id.dump());
}

void ProviderSpec::validate() const {
  const std::string where = std::string(to_string(role)) + " '" + name + "'";
  if (name.empty()) throw ConfigError(std::string(to_string(role)) + " provider without a name");
  if (kind == ProviderKind::http && endpoint.empty()) throw ConfigError(where + ": http provider needs an endpoint");
  if (kind == ProviderKind::mock && !mock.is_object()) throw ConfigError(where + ": mock parameters must be an object");
  if (!(timeout_seconds > 0.0)) throw ConfigError(where + ": timeout must be positive");
  if (max_retries < 0) throw ConfigError(where + ": max_retries must be >= 0");
}

void to_json(json& j, const ProviderSpec& s) {
  j = json{{"role", to_string(s.role)},
           {"name", s.name},
           {"kind", to_string(s.kind)},
           {"timeout", s.timeout_seconds},
           {"max_retries", s.max_retries},
           {"request_version_tag", s.request_version_tag}};
  if (s.kind == ProviderKind::http) j["endpoint"] = s.endpoint;
  if (s.kind == ProviderKind::mock) j["mock"] = s.mock;
}

void from_json(const json& j, ProviderSpec& s) {
  static const std::vector<std::string> kKeys = {"role",    "name",        "kind",
                                                 "endpoint", "mock",       "timeout",
                                                 "max_retries", "request_version_tag"};
  if (!j.is_object()) throw ConfigError("provider spec must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ConfigError("unknown provider key '" + key + "'");
    }
  }
  if (j.contains("role")) s.role = role_from_string(j.at("role").get<std::string>());
  s.name = j.at("name").get<std::string>();
  const std::string kind = j.value("kind", std::string("mock"));
  if (kind == "http") {
    s.kind = ProviderKind::http;
  } else if (kind == "mock") {
    s.kind = ProviderKind::mock;
  } else {
    throw ConfigError("unknown provider kind '" + kind + "'");
  }
  s.endpoint = j.value("endpoint", std::string{});
  s.mock = j.value("mock", json::object());
  s.timeout_seconds = j.value("timeout", 30.0);
  s.max_retries = j.value("max_retries", 2);
  s.request_version_tag = j.value("request_version_tag", std::string("v1"));
}

void apply_endpoint_env(ProviderSpec& spec) {
  std::string var = "INSTRUCTFORGE_" + std::string(to_string(spec.role)) + "_" + spec.name + "_URL";
  for (char& c : var) {
    c = std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_';
  }
  if (const char* value = std::getenv(var.c_str()); value && *value) {
    spec.endpoint = value;
    spec.kind = ProviderKind::http;
  }
}

}  // namespace instructforge::providers
