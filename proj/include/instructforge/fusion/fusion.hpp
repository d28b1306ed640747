#pragma once

// Knowledge fusion: split scored records into successful rewrites and
// failures, turn the successes into a fine-tuning set, and later retry the
// failures with the fine-tuned rewriter.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instructforge/core/assets.hpp"
#include "instructforge/core/config.hpp"
#include "instructforge/core/manifest.hpp"
#include "instructforge/core/model.hpp"

namespace instructforge::fusion {

struct Partition {
  // q_rewritten > alpha and q_original < alpha.
  std::vector<FusionPair> success;
  // q_rewritten < alpha.
  std::vector<FusionPair> failures;
};

// Uses each scored record's selected candidate as the rewrite. Records at
// exactly alpha, or whose original already reaches alpha, land in neither
// set. Throws InvalidInput when a scored record lacks its original candidate.
Partition partition(std::span<const ManifestEntry> entries, double alpha);

struct TrainingExample {
  std::string prompt;
  std::string input;
  std::string target;

  bool operator==(const TrainingExample&) const = default;
};

struct TrainingSet {
  std::vector<TrainingExample> examples;
  std::vector<std::string> warnings;
};

// Pairs whose target equals the input are dropped with a warning. Throws
// InvalidInput when nothing is left.
TrainingSet build_training_set(std::span<const FusionPair> success, const PromptAsset& prompt);

std::string serialize_training(std::span<const TrainingExample> examples);
std::vector<TrainingExample> parse_training(std::string_view content, std::string_view source_name = "<training>");

struct EmittedDataset {
  std::filesystem::path path;
  std::filesystem::path provenance_path;
  std::string sha256;
  std::size_t lines = 0;
  std::vector<std::string> warnings;
};

// Writes the JSONL dataset and "<path>.provenance.json" recording the source
// manifest digest, the dataset digest, alpha and the prompt digest.
EmittedDataset emit_fusion_training(std::span<const FusionPair> success, const PromptAsset& prompt,
                                    const std::filesystem::path& out_path,
                                    const std::filesystem::path& source_manifest, double alpha);

struct TrainingConfig {
  std::string base_model = "meta-llama/Meta-Llama-3-8B-Instruct";
  int lora_r = 8;
  int lora_alpha = 16;
  double learning_rate = 3e-4;
  std::string scheduler = "cosine";
};

nlohmann::json to_json_value(const TrainingConfig& config);
void write_training_config(const std::filesystem::path& path, const TrainingConfig& config = {});

struct FusionOutcome {
  std::vector<ManifestEntry> entries;
  std::size_t attempted = 0;
  std::size_t added = 0;
  std::size_t improved = 0;
  double sim_before = 0.0;
  double sim_after = 0.0;
  double pass_before = 0.0;
  double pass_after = 0.0;
  std::vector<std::string> warnings;
};

// Rewrites each failure's original with config.fused_rewriter, scores that
// candidate with the record's speaker and the configured providers, and
// reselects. A record's selected q never decreases. Entries not listed in
// `failures` pass through unchanged. Throws ConfigError without a fused
// rewriter.
FusionOutcome fusion_pass(std::span<const ManifestEntry> entries, std::span<const FusionPair> failures,
                          const PipelineConfig& config);

}  // namespace instructforge::fusion
