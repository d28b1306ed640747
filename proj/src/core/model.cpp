#include "instructforge/core/model.hpp"

#include "instructforge/errors.hpp"

namespace instructforge {

using nlohmann::json;

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::original: return "original";
    case SourceKind::rewriter: return "rewriter";
    case SourceKind::fusion: return "fusion";
  }
  return "original";
}

SourceKind source_kind_from_string(std::string_view text) {
  if (text == "original") return SourceKind::original;
  if (text == "rewriter") return SourceKind::rewriter;
  if (text == "fusion") return SourceKind::fusion;
  throw InvalidInput("unknown candidate source '" + std::string(text) + "'");
}

const CandidateScoring* QualityReport::original() const {
  for (const auto& c : per_candidate) {
    if (c.candidate.source.kind == SourceKind::original) return &c;
  }
  return nullptr;
}

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    v.reset();
  } else {
    v = it->get<T>();
  }
}

}  // namespace

void to_json(json& j, const InstructionRecord& r) {
  j = json{{"id", r.id}, {"dataset", r.dataset}, {"original_text", r.original_text}};
  put_optional(j, "context_document", r.context_document);
  put_optional(j, "reference_response", r.reference_response);
  if (!r.speaker_id.empty()) j["speaker_id"] = r.speaker_id;
}

void from_json(const json& j, InstructionRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.dataset = j.value("dataset", std::string{});
  r.original_text = j.at("original_text").get<std::string>();
  get_optional(j, "context_document", r.context_document);
  get_optional(j, "reference_response", r.reference_response);
  r.speaker_id = j.value("speaker_id", std::string{});
}

void to_json(json& j, const SpeakerProfile& s) {
  j = json{{"id", s.id}, {"name", s.name}, {"description", s.description}};
}

void from_json(const json& j, SpeakerProfile& s) {
  s.id = j.at("id").get<std::string>();
  s.name = j.value("name", std::string{});
  s.description = j.at("description").get<std::string>();
}

void to_json(json& j, const CandidateSource& s) {
  j = json{{"kind", to_string(s.kind)}, {"name", s.name}, {"order", s.config_order}};
}

void from_json(const json& j, CandidateSource& s) {
  s.kind = source_kind_from_string(j.at("kind").get<std::string>());
  s.name = j.at("name").get<std::string>();
  s.config_order = j.value("order", std::size_t{0});
}

void to_json(json& j, const CandidateText& c) {
  j = json{{"record_id", c.record_id}, {"source", c.source}, {"text", c.text}};
}

void from_json(const json& j, CandidateText& c) {
  c.record_id = j.at("record_id").get<std::string>();
  c.source = j.at("source").get<CandidateSource>();
  c.text = j.at("text").get<std::string>();
}

void to_json(json& j, const SpeechArtifact& s) {
  j = json{{"candidate_ref", s.candidate_ref}, {"audio_path", s.audio_path},
           {"sample_rate", s.sample_rate},     {"duration", s.duration},
           {"synthesis_key", s.synthesis_key}};
}

void from_json(const json& j, SpeechArtifact& s) {
  s.candidate_ref = j.at("candidate_ref").get<std::string>();
  s.audio_path = j.at("audio_path").get<std::string>();
  s.sample_rate = j.at("sample_rate").get<int>();
  s.duration = j.at("duration").get<double>();
  s.synthesis_key = j.at("synthesis_key").get<std::string>();
}

void to_json(json& j, const Transcript& t) {
  j = json{{"transcriber", t.transcriber}, {"text", t.text}};
  if (t.failed) j["failed"] = true;
}

void from_json(const json& j, Transcript& t) {
  t.transcriber = j.at("transcriber").get<std::string>();
  t.text = j.at("text").get<std::string>();
  t.failed = j.value("failed", false);
}

void to_json(json& j, const CandidateScoring& c) {
  j = json{{"candidate", c.candidate},   {"transcripts", c.transcripts},
           {"similarity", c.similarity}, {"f", c.f},
           {"wer", c.wer},               {"q", c.q}};
  put_optional(j, "speech", c.speech);
  put_optional(j, "best_transcript", c.best_transcript);
  if (!c.errors.empty()) j["errors"] = c.errors;
}

void from_json(const json& j, CandidateScoring& c) {
  c.candidate = j.at("candidate").get<CandidateText>();
  get_optional(j, "speech", c.speech);
  c.transcripts = j.at("transcripts").get<std::vector<Transcript>>();
  c.similarity = j.at("similarity").get<std::vector<std::vector<double>>>();
  c.f = j.at("f").get<std::vector<double>>();
  c.wer = j.value("wer", std::vector<double>{});
  c.q = j.at("q").get<double>();
  get_optional(j, "best_transcript", c.best_transcript);
  c.errors = j.value("errors", std::vector<std::string>{});
}

void to_json(json& j, const QualityReport& r) {
  j = json{{"record_id", r.record_id},
           {"alpha", r.alpha},
           {"embedders", r.embedders},
           {"per_candidate", r.per_candidate},
           {"selected_candidate", r.selected_candidate},
           {"passes_alpha", r.passes_alpha}};
  put_optional(j, "selected_transcript", r.selected_transcript);
}

void from_json(const json& j, QualityReport& r) {
  r.record_id = j.at("record_id").get<std::string>();
  r.alpha = j.at("alpha").get<double>();
  r.embedders = j.at("embedders").get<std::vector<std::string>>();
  r.per_candidate = j.at("per_candidate").get<std::vector<CandidateScoring>>();
  r.selected_candidate = j.at("selected_candidate").get<std::size_t>();
  get_optional(j, "selected_transcript", r.selected_transcript);
  r.passes_alpha = j.at("passes_alpha").get<bool>();
  if (r.selected_candidate >= r.per_candidate.size()) {
    throw InvalidInput("quality report '" + r.record_id + "': selected candidate out of range");
  }
}

void to_json(json& j, const FusionPair& p) {
  j = json{{"record_id", p.record_id},
           {"original_text", p.original_text},
           {"rewritten_text", p.rewritten_text},
           {"q_original", p.q_original},
           {"q_rewritten", p.q_rewritten},
           {"kind", p.kind == FusionKind::success ? "success" : "failure"}};
}

void from_json(const json& j, FusionPair& p) {
  p.record_id = j.at("record_id").get<std::string>();
  p.original_text = j.at("original_text").get<std::string>();
  p.rewritten_text = j.at("rewritten_text").get<std::string>();
  p.q_original = j.at("q_original").get<double>();
  p.q_rewritten = j.at("q_rewritten").get<double>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "success") {
    p.kind = FusionKind::success;
  } else if (kind == "failure") {
    p.kind = FusionKind::failure;
  } else {
    throw InvalidInput("unknown fusion pair kind '" + kind + "'");
  }
}

}  // namespace instructforge
