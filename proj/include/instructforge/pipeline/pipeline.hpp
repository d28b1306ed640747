#pragma once

// Scoring of one record and the resumable corpus batch around it.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instructforge/core/assets.hpp"
#include "instructforge/core/config.hpp"
#include "instructforge/core/manifest.hpp"
#include "instructforge/core/model.hpp"
#include "instructforge/providers/cache.hpp"
#include "instructforge/providers/providers.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge::pipeline {

// Instantiated providers for one configuration. Embedders are kept sorted by
// name so similarity columns line up with QualityReport::embedders.
struct ProviderSet {
  std::vector<std::unique_ptr<providers::Rewriter>> rewriters;
  std::unique_ptr<providers::Synthesizer> synthesizer;
  std::vector<std::unique_ptr<providers::Transcriber>> transcribers;
  std::vector<std::unique_ptr<providers::Embedder>> embedders;
  std::unique_ptr<providers::Rewriter> fused_rewriter;

  static ProviderSet from_config(const PipelineConfig& config);
  std::vector<std::string> embedder_names() const;
};

struct ScoringContext {
  ProviderSet& providers;
  providers::ContentCache& cache;
  PromptAsset prompt;
  textmetrics::NormalizationPolicy normalization;
  double alpha = kDefaultAlpha;
};

struct CandidateBuild {
  std::vector<CandidateText> candidates;
  std::vector<std::string> warnings;
};

// The original followed by one rewrite per rewriter, deduplicated with the
// original kept first. Rewriter failures become warnings; the result always
// contains the original.
CandidateBuild build_candidates(const InstructionRecord& record, ScoringContext& ctx);

// Embeddings of the original text, one per embedder in name order. Empty when
// any embedder failed (the reason is appended to `errors`).
std::vector<textmetrics::EmbeddingVector> embed_original(const InstructionRecord& record, ScoringContext& ctx,
                                                         std::vector<std::string>& errors);

// Synthesizes, transcribes and measures one candidate against the original.
// Provider failures are recorded in `errors` and push q toward 0; this never
// throws for provider trouble.
CandidateScoring score_candidate(const CandidateText& candidate, const SpeakerProfile& speaker,
                                 std::span<const textmetrics::EmbeddingVector> original_embeddings,
                                 ScoringContext& ctx);

// Recomputes the selected candidate, its best transcript and passes_alpha.
void reselect(QualityReport& report);

QualityReport score_record(const InstructionRecord& record, std::span<const CandidateText> candidates,
                           const SpeakerProfile& speaker, ScoringContext& ctx);

// True when no candidate produced anything measurable.
bool report_failed(const QualityReport& report);

struct BatchCounters {
  std::size_t loaded = 0;
  std::size_t synthesized = 0;
  std::size_t transcribed = 0;
  std::size_t scored = 0;
  std::size_t failed = 0;
};

struct TimingStats {
  std::size_t samples = 0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
};

struct DatasetMetrics {
  std::size_t n = 0;
  double sim = 0.0;
  double pass = 0.0;
};

struct BatchSummary {
  std::string config_hash;
  std::filesystem::path manifest_path;
  BatchCounters counters;
  std::size_t resumed = 0;
  std::size_t processed = 0;
  // False when the run stopped early (RunOptions::stop_after).
  bool complete = true;
  double sim = 0.0;
  double pass = 0.0;
  std::map<std::string, DatasetMetrics> per_dataset;
  std::map<std::string, providers::CacheCounters> cache;
  TimingStats timing;
  std::vector<std::string> warnings;
};

nlohmann::json to_json_value(const BatchSummary& summary);

struct RunOptions {
  // Stop taking new records after this many were processed in this run and
  // leave the manifest uncompacted, as an interrupted run would.
  std::optional<std::size_t> stop_after;
  // Called after each processed record with (done, total to process).
  std::function<void(std::size_t, std::size_t)> progress;
};

// Runs every corpus record through scoring with config.max_parallel_requests
// workers, appending each finished record to the manifest and compacting it
// at the end. Records already scored under the same config hash are reused.
// Throws ConfigError / StorageError / ParseError; per-record trouble is
// recorded in the manifest instead.
BatchSummary run_batch(const std::filesystem::path& corpus_path, const PipelineConfig& config,
                       const RunOptions& options = {});

// Same, over records already in memory (their dataset field is kept).
BatchSummary run_batch(std::span<const InstructionRecord> records, const PipelineConfig& config,
                       const RunOptions& options = {});

// Hash of the scoring-relevant configuration, including prompt and speaker
// catalog contents.
std::string compute_config_hash(const PipelineConfig& config);

// Per-record stage timings go here as JSON lines.
std::filesystem::path log_path_for(const std::filesystem::path& manifest_path);

// Metrics over a manifest, grouped by method and dataset.
struct MetricsRow {
  std::string method;
  std::string dataset;
  // Failed records count toward n, SIM and Pass with q = 0, and are left
  // out of the consistency and WER columns.
  std::size_t n = 0;
  std::size_t failed = 0;
  double sim = 0.0;
  double pass = 0.0;
  std::optional<double> consistency;
  std::optional<double> wer_mean;
  std::optional<double> wer_max;
};

struct MetricsReport {
  double alpha = kDefaultAlpha;
  // Per (method, dataset) rows followed, for each method, by an "Average" row
  // holding the unweighted mean of that method's dataset rows.
  std::vector<MetricsRow> rows;
};

// Throws InvalidInput when the manifest holds no scored records. When `alpha`
// is given, Pass is recomputed at that threshold.
MetricsReport build_report(std::span<const ManifestEntry> entries, std::optional<double> alpha = std::nullopt);
nlohmann::json to_json_value(const MetricsReport& report);
std::string render_table(const MetricsReport& report);

// Recomputes F, q, selection and passes_alpha from the persisted similarity
// matrices at a new alpha, without calling any provider.
std::vector<ManifestEntry> rescore(std::span<const ManifestEntry> entries, double alpha);

}  // namespace instructforge::pipeline
