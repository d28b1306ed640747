#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace instructforge::providers {

enum class ProviderRole { rewriter, synthesizer, transcriber, embedder };
enum class ProviderKind { http, mock };

std::string_view to_string(ProviderRole role);
std::string_view to_string(ProviderKind kind);
ProviderRole role_from_string(std::string_view text);

// Declarative description of one model endpoint (or an offline mock of one).
struct ProviderSpec {
  ProviderRole role = ProviderRole::rewriter;
  std::string name;
  ProviderKind kind = ProviderKind::mock;
  // Base URL, http kind only. Never persisted into manifests.
  std::string endpoint;
  // Mock parameters, mock kind only: {"type": ..., ...}.
  nlohmann::json mock = nlohmann::json::object();
  double timeout_seconds = 30.0;
  int max_retries = 2;
  std::string request_version_tag = "v1";

  // Stable digest of everything that determines this provider's output
  // (role, name, kind, mock parameters, version tag). Used in cache keys and
  // the config hash; the endpoint is deliberately left out.
  std::string identity() const;

  // Throws ConfigError when the spec is unusable.
  void validate() const;

  bool operator==(const ProviderSpec&) const = default;
};

void to_json(nlohmann::json& j, const ProviderSpec& s);
// `role` must be set by the caller context; from_json reads it when present.
void from_json(const nlohmann::json& j, ProviderSpec& s);

// Applies INSTRUCTFORGE_<ROLE>_<NAME>_URL when set.
void apply_endpoint_env(ProviderSpec& spec);

}  // namespace instructforge::providers
