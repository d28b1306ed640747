#pragma once

// Text-side scoring math: normalization, word error rate, embedding cosine,
// the per-transcript similarity F, the quality q, candidate selection and the
// dataset aggregates (SIM, Pass, SIM/WER consistency).
//
// Everything here is a pure function.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instructforge/core/source.hpp"

namespace instructforge::textmetrics {

struct NormalizationPolicy {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool collapse_whitespace = true;

  static NormalizationPolicy identity() { return {false, false, false}; }
  static NormalizationPolicy wer_default() { return {}; }

  bool operator==(const NormalizationPolicy&) const = default;
};

// Applies the policy and returns the resulting string. The identity policy
// returns `text` unchanged.
std::string normalize_text(std::string_view text, const NormalizationPolicy& policy);

// normalize_text followed by a split on Unicode whitespace. Never yields empty
// tokens.
std::vector<std::string> normalize(std::string_view text, const NormalizationPolicy& policy);

// Word-level Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const std::string> reference,
                          std::span<const std::string> hypothesis);

struct WerResult {
  double value = 0.0;
  std::size_t edits = 0;
  std::size_t reference_tokens = 0;
  // Reference normalized to nothing while the hypothesis did not; `value` is
  // then the hypothesis token count.
  bool empty_reference = false;
};

WerResult wer_detail(std::string_view reference, std::string_view hypothesis,
                     const NormalizationPolicy& policy = NormalizationPolicy::wer_default());

double wer(std::string_view reference, std::string_view hypothesis,
           const NormalizationPolicy& policy = NormalizationPolicy::wer_default());

struct EmbeddingVector {
  std::string model;
  std::vector<double> values;

  bool is_zero() const;
  bool operator==(const EmbeddingVector&) const = default;
};

// Cosine of two vectors from the same model, clamped into [-1, 1]. Throws
// InvalidInput on model or dimension mismatch, zero vectors and non-finite
// entries.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// Per-embedder cosines for one (original, transcript) pair, ordered by model
// name. Both sides must cover the same set of models.
std::vector<double> per_model_cosines(std::span<const EmbeddingVector> original,
                                      std::span<const EmbeddingVector> transcript);

// Mean of the per-model cosines over the Z embedders. With three embedders
// this is the three-way average used for ensemble verification. The result
// does not depend on the order in which embedders are listed.
double similarity_f(std::span<const EmbeddingVector> original,
                    std::span<const EmbeddingVector> transcript);

struct Quality {
  double q = 0.0;
  std::size_t argmax = 0;
};

// Maximum over per-transcript F values; ties go to the smallest index.
Quality quality_q(std::span<const double> f_values);

struct CandidateScore {
  SourceKind kind = SourceKind::original;
  // Position of the producing rewriter in the configuration; 0 otherwise.
  std::size_t config_order = 0;
  double q = 0.0;
};

// Index of the candidate with maximal q. Ties prefer the original, then
// rewriters in configuration order, then fusion output, so a rewrite only
// displaces the original on strict improvement.
std::size_t select_best(std::span<const CandidateScore> candidates);

// Fraction of values strictly above alpha.
double pass_rate(std::span<const double> q_values, double alpha);

// Mean quality scaled by 100.
double sim_aggregate(std::span<const double> q_values);

// Two-decimal rendering used in reports ("93.71").
std::string format_fixed(double value, int decimals = 2);

struct ConsistencyInput {
  std::vector<double> f;
  std::vector<double> wer;
};

struct ConsistencyResult {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t consistent = 0;
  std::size_t skipped = 0;
};

// Fraction of records whose SIM-selected transcript also has the lowest WER
// (WER ties count as consistent). Records with fewer than two transcripts or
// mismatched F/WER lengths are skipped. Throws InvalidInput if nothing is
// left to evaluate.
ConsistencyResult sim_wer_consistency(std::span<const ConsistencyInput> records);

}  // namespace instructforge::textmetrics
