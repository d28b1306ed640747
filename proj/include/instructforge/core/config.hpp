#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instructforge/core/assets.hpp"
#include "instructforge/providers/spec.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge {

inline constexpr double kDefaultAlpha = 0.9;
inline constexpr double kDefaultExportThreshold = 0.9;

struct PipelineConfig {
  double alpha = kDefaultAlpha;
  double export_threshold = kDefaultExportThreshold;
  std::vector<providers::ProviderSpec> rewriters;
  providers::ProviderSpec synthesizer;
  std::vector<providers::ProviderSpec> transcribers;
  std::vector<providers::ProviderSpec> embedders;
  // Rewriter trained on successful rewrites; used by the fusion pass only.
  std::optional<providers::ProviderSpec> fused_rewriter;
  std::uint64_t rng_seed = 0;
  textmetrics::NormalizationPolicy normalization;
  std::size_t max_parallel_requests = 4;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path manifest_path = "manifest.jsonl";
  std::filesystem::path corpus_path;
  std::string dataset_tag = "corpus";
  std::filesystem::path speaker_catalog = default_speaker_catalog_path();
  std::filesystem::path prompt_path = default_prompt_path();
  std::filesystem::path chat_template_path = default_chat_template_path();
  // Report grouping label; empty means "original" without rewriters, else "ours".
  std::string method;

  PipelineConfig();

  std::string effective_method() const;

  // Throws ConfigError: alpha outside (0,1], threshold outside [0,1], no
  // transcriber or embedder, duplicate names within a role, bad specs.
  void validate() const;

  // Digest of everything that changes scoring results: alpha, normalization,
  // seed, providers, prompt and speaker catalog contents.
  std::string config_hash(std::string_view prompt_digest, std::string_view catalog_digest) const;
};

nlohmann::json to_json_value(const PipelineConfig& config);

// Strict: unknown keys throw ConfigError.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Applies "key=value" (dotted keys reach nested objects; the value is parsed
// as JSON when possible, otherwise taken as a string).
void apply_override(nlohmann::json& config, std::string_view assignment);

// A ready-to-run offline configuration: oracle + noisy transcribers and three
// hashing embedders.
PipelineConfig mock_config();

}  // namespace instructforge
