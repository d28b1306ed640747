#pragma once

// Domain value types shared by every stage of the pipeline, with their JSON
// mappings. All types are plain values; share them freely across threads.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instructforge/core/source.hpp"

namespace instructforge {

struct InstructionRecord {
  std::string id;
  std::string dataset;
  std::string original_text;
  std::optional<std::string> context_document;
  std::optional<std::string> reference_response;
  std::string speaker_id;

  bool operator==(const InstructionRecord&) const = default;
};

struct SpeakerProfile {
  std::string id;
  std::string name;
  std::string description;

  bool operator==(const SpeakerProfile&) const = default;
};

struct CandidateSource {
  SourceKind kind = SourceKind::original;
  // Provider name for rewriter and fusion sources, "original" otherwise.
  std::string name = "original";
  // Rewriter position in the configuration; breaks ties between rewriters.
  std::size_t config_order = 0;

  static CandidateSource original() { return {}; }
  static CandidateSource rewriter(std::string name, std::size_t order) {
    return {SourceKind::rewriter, std::move(name), order};
  }
  static CandidateSource fusion(std::string name) { return {SourceKind::fusion, std::move(name), 0}; }

  bool operator==(const CandidateSource&) const = default;
};

struct CandidateText {
  std::string record_id;
  CandidateSource source;
  std::string text;

  bool operator==(const CandidateText&) const = default;
};

struct SpeechArtifact {
  std::string candidate_ref;
  std::string audio_path;
  int sample_rate = 0;
  double duration = 0.0;
  // Content hash of (text, speaker description, provider identity).
  std::string synthesis_key;

  bool operator==(const SpeechArtifact&) const = default;
};

struct Transcript {
  std::string transcriber;
  std::string text;
  // Provider gave up after retries; text is empty.
  bool failed = false;

  bool operator==(const Transcript&) const = default;
};

// Everything measured for one candidate of one record.
struct CandidateScoring {
  CandidateText candidate;
  std::optional<SpeechArtifact> speech;
  std::vector<Transcript> transcripts;
  // similarity[j][z]: cosine between the original text and transcript j under
  // embedder z (columns follow QualityReport::embedders).
  std::vector<std::vector<double>> similarity;
  std::vector<double> f;
  // WER of each transcript against the candidate text that was synthesized.
  std::vector<double> wer;
  double q = 0.0;
  std::optional<std::size_t> best_transcript;
  std::vector<std::string> errors;

  bool operator==(const CandidateScoring&) const = default;
};

struct QualityReport {
  std::string record_id;
  double alpha = 0.9;
  std::vector<std::string> embedders;
  std::vector<CandidateScoring> per_candidate;
  std::size_t selected_candidate = 0;
  std::optional<std::size_t> selected_transcript;
  bool passes_alpha = false;

  double q() const { return per_candidate.at(selected_candidate).q; }
  const CandidateScoring& selected() const { return per_candidate.at(selected_candidate); }
  // The candidate whose source is the original text; null if absent.
  const CandidateScoring* original() const;

  bool operator==(const QualityReport&) const = default;
};

enum class FusionKind { success, failure };

struct FusionPair {
  std::string record_id;
  std::string original_text;
  std::string rewritten_text;
  double q_original = 0.0;
  double q_rewritten = 0.0;
  FusionKind kind = FusionKind::failure;

  bool operator==(const FusionPair&) const = default;
};

void to_json(nlohmann::json& j, const InstructionRecord& r);
void from_json(const nlohmann::json& j, InstructionRecord& r);
void to_json(nlohmann::json& j, const SpeakerProfile& s);
void from_json(const nlohmann::json& j, SpeakerProfile& s);
void to_json(nlohmann::json& j, const CandidateSource& s);
void from_json(const nlohmann::json& j, CandidateSource& s);
void to_json(nlohmann::json& j, const CandidateText& c);
void from_json(const nlohmann::json& j, CandidateText& c);
void to_json(nlohmann::json& j, const SpeechArtifact& s);
void from_json(const nlohmann::json& j, SpeechArtifact& s);
void to_json(nlohmann::json& j, const Transcript& t);
void from_json(const nlohmann::json& j, Transcript& t);
void to_json(nlohmann::json& j, const CandidateScoring& c);
void from_json(const nlohmann::json& j, CandidateScoring& c);
void to_json(nlohmann::json& j, const QualityReport& r);
void from_json(const nlohmann::json& j, QualityReport& r);
void to_json(nlohmann::json& j, const FusionPair& p);
void from_json(const nlohmann::json& j, FusionPair& p);

}  // namespace instructforge
