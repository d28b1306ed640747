#include <algorithm>
#include <numeric>

#include "instructforge/core/corpus.hpp"
#include "instructforge/errors.hpp"
#include "instructforge/pipeline/pipeline.hpp"
#include "instructforge/util/files.hpp"

namespace instructforge::pipeline {

using textmetrics::EmbeddingVector;

ProviderSet ProviderSet::from_config(const PipelineConfig& config) {
  ProviderSet set;
  for (const auto& s : config.rewriters) set.rewriters.push_back(providers::make_rewriter(s));
  set.synthesizer = providers::make_synthesizer(config.synthesizer);
  for (const auto& s : config.transcribers) set.transcribers.push_back(providers::make_transcriber(s));
  auto embedders = config.embedders;
  std::sort(embedders.begin(), embedders.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (const auto& s : embedders) set.embedders.push_back(providers::make_embedder(s));
  if (config.fused_rewriter) set.fused_rewriter = providers::make_rewriter(*config.fused_rewriter);
  return set;
}

std::vector<std::string> ProviderSet::embedder_names() const {
  std::vector<std::string> names;
  for (const auto& e : embedders) names.push_back(e->name());
  return names;
}

CandidateBuild build_candidates(const InstructionRecord& record, ScoringContext& ctx) {
  CandidateBuild out;
  std::vector<CandidateText> all{{record.id, CandidateSource::original(), record.original_text}};
  for (std::size_t i = 0; i < ctx.providers.rewriters.size(); ++i) {
    auto& rewriter = *ctx.providers.rewriters[i];
    try {
      auto outcome = providers::rewrite(rewriter, ctx.prompt, record.original_text, &ctx.cache);
      for (auto& w : outcome.warnings) out.warnings.push_back(std::move(w));
      if (outcome.fell_back) continue;
      all.push_back({record.id, CandidateSource::rewriter(rewriter.name(), i), std::move(outcome.text)});
    } catch (const ProviderUnavailable& e) {
      out.warnings.push_back("rewriter '" + rewriter.name() + "' unavailable: " + e.what());
    }
  }
  out.candidates = dedupe_candidates(all, ctx.normalization);
  return out;
}

std::vector<EmbeddingVector> embed_original(const InstructionRecord& record, ScoringContext& ctx,
                                            std::vector<std::string>& errors) {
  std::vector<EmbeddingVector> out;
  for (const auto& embedder : ctx.providers.embedders) {
    try {
      out.push_back(providers::embed(*embedder, record.original_text, &ctx.cache));
    } catch (const ProviderUnavailable& e) {
      errors.push_back("embedding the original with '" + embedder->name() + "' failed: " + e.what());
      return {};
    } catch (const InvalidInput& e) {
      errors.push_back("embedding the original with '" + embedder->name() + "' failed: " + e.what());
      return {};
    }
  }
  return out;
}

namespace {

std::string candidate_ref(const CandidateText& c) {
  return c.record_id + "#" + std::string(to_string(c.source.kind)) + ":" + c.source.name;
}

double row_mean(const std::vector<double>& row) {
  if (row.empty()) return 0.0;
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

}  // namespace

CandidateScoring score_candidate(const CandidateText& candidate, const SpeakerProfile& speaker,
                                 std::span<const EmbeddingVector> original_embeddings, ScoringContext& ctx) {
  CandidateScoring s;
  s.candidate = candidate;
  const std::size_t z_count = ctx.providers.embedders.size();
  try {
    s.speech = providers::synthesize(*ctx.providers.synthesizer, ctx.cache, candidate.text, speaker.description,
                                     candidate_ref(candidate));
  } catch (const ProviderUnavailable& e) {
    s.errors.push_back(std::string("synthesis failed: ") + e.what());
    return s;
  } catch (const InvalidInput& e) {
    s.errors.push_back(std::string("synthesis failed: ") + e.what());
    return s;
  }

  for (const auto& transcriber : ctx.providers.transcribers) {
    Transcript t;
    try {
      t = providers::transcribe(*transcriber, *s.speech, &ctx.cache);
      if (t.failed) s.errors.push_back("transcriber '" + transcriber->name() + "' unavailable");
    } catch (const ProviderUnavailable& e) {
      t.transcriber = transcriber->name();
      t.failed = true;
      s.errors.push_back("transcriber '" + transcriber->name() + "': " + e.what());
    } catch (const InvalidInput& e) {
      t.transcriber = transcriber->name();
      t.failed = true;
      s.errors.push_back("transcriber '" + transcriber->name() + "': " + e.what());
    }
    s.transcripts.push_back(std::move(t));
  }

  for (const auto& t : s.transcripts) {
    s.wer.push_back(textmetrics::wer(candidate.text, t.text, ctx.normalization));
    std::vector<double> row(z_count, 0.0);
    if (!t.failed && !original_embeddings.empty() && !util::trim(t.text).empty()) {
      try {
        std::vector<EmbeddingVector> emb;
        for (const auto& embedder : ctx.providers.embedders) {
          emb.push_back(providers::embed(*embedder, t.text, &ctx.cache));
        }
        row = textmetrics::per_model_cosines(original_embeddings, emb);
      } catch (const ProviderUnavailable& e) {
        s.errors.push_back("embedding transcript of '" + t.transcriber + "' failed: " + e.what());
        row.assign(z_count, 0.0);
      } catch (const InvalidInput& e) {
        s.errors.push_back("embedding transcript of '" + t.transcriber + "' failed: " + e.what());
        row.assign(z_count, 0.0);
      }
    }
    s.f.push_back(row_mean(row));
    s.similarity.push_back(std::move(row));
  }

  if (!s.f.empty()) {
    const auto quality = textmetrics::quality_q(s.f);
    s.q = quality.q;
    s.best_transcript = quality.argmax;
  }
  return s;
}

void reselect(QualityReport& report) {
  std::vector<textmetrics::CandidateScore> scores;
  for (const auto& c : report.per_candidate) {
    scores.push_back({c.candidate.source.kind, c.candidate.source.config_order, c.q});
  }
  report.selected_candidate = textmetrics::select_best(scores);
  report.selected_transcript = report.per_candidate[report.selected_candidate].best_transcript;
  report.passes_alpha = report.q() > report.alpha;
}

QualityReport score_record(const InstructionRecord& record, std::span<const CandidateText> candidates,
                           const SpeakerProfile& speaker, ScoringContext& ctx) {
  if (candidates.empty()) throw InvalidInput("score_record: no candidates for " + record.id);
  QualityReport report;
  report.record_id = record.id;
  report.alpha = ctx.alpha;
  report.embedders = ctx.providers.embedder_names();
  std::vector<std::string> original_errors;
  const auto original = embed_original(record, ctx, original_errors);
  for (const auto& c : candidates) {
    auto scoring = score_candidate(c, speaker, original, ctx);
    scoring.errors.insert(scoring.errors.begin(), original_errors.begin(), original_errors.end());
    report.per_candidate.push_back(std::move(scoring));
  }
  reselect(report);
  return report;
}

bool report_failed(const QualityReport& report) {
  return std::all_of(report.per_candidate.begin(), report.per_candidate.end(),
                     [](const CandidateScoring& c) { return !c.errors.empty() && c.q <= 0.0; });
}

}  // namespace instructforge::pipeline
