#include "instructforge/fusion/fusion.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "instructforge/core/corpus.hpp"
#include "instructforge/errors.hpp"
#include "instructforge/pipeline/pipeline.hpp"
#include "instructforge/providers/providers.hpp"
#include "instructforge/util/files.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::fusion {

using nlohmann::json;

namespace {

bool scored(const ManifestEntry& e) { return e.report && e.stage >= Stage::scored; }

void metrics(std::span<const ManifestEntry> entries, double alpha, double& sim, double& pass) {
  std::vector<double> qs;
  for (const auto& e : entries) {
    if (scored(e)) qs.push_back(e.report->q());
  }
  sim = qs.empty() ? 0.0 : textmetrics::sim_aggregate(qs);
  pass = qs.empty() ? 0.0 : textmetrics::pass_rate(qs, alpha);
}

}  // namespace

Partition partition(std::span<const ManifestEntry> entries, double alpha) {
  Partition out;
  for (const auto& e : entries) {
    if (!scored(e)) continue;
    const auto& report = *e.report;
    const auto* original = report.original();
    if (!original) throw InvalidInput("record '" + e.record.id + "' has no scored original candidate");
    FusionPair pair;
    pair.record_id = e.record.id;
    pair.original_text = e.record.original_text;
    pair.rewritten_text = report.selected().candidate.text;
    pair.q_original = original->q;
    pair.q_rewritten = report.q();
    if (pair.q_rewritten > alpha && pair.q_original < alpha) {
      pair.kind = FusionKind::success;
      out.success.push_back(std::move(pair));
    } else if (pair.q_rewritten < alpha) {
      pair.kind = FusionKind::failure;
      out.failures.push_back(std::move(pair));
    }
  }
  return out;
}

TrainingSet build_training_set(std::span<const FusionPair> success, const PromptAsset& prompt) {
  TrainingSet out;
  for (const auto& p : success) {
    if (p.rewritten_text == p.original_text) {
      out.warnings.push_back("record '" + p.record_id + "': rewrite equals the original; excluded");
      continue;
    }
    out.examples.push_back({prompt.text, p.original_text, p.rewritten_text});
  }
  if (out.examples.empty()) throw InvalidInput("fusion training set is empty");
  return out;
}

std::string serialize_training(std::span<const TrainingExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += json{{"prompt", ex.prompt}, {"input", ex.input}, {"target", ex.target}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<TrainingExample> parse_training(std::string_view content, std::string_view source_name) {
  std::vector<TrainingExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto end = std::min(content.find('\n', pos), content.size());
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object() || j.size() != 3) throw ParseError(std::string(source_name), line_no, "expected {prompt, input, target}");
      out.push_back({j.at("prompt").get<std::string>(), j.at("input").get<std::string>(),
                     j.at("target").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(std::string(source_name), line_no, e.what());
    }
  }
  return out;
}

EmittedDataset emit_fusion_training(std::span<const FusionPair> success, const PromptAsset& prompt,
                                    const std::filesystem::path& out_path,
                                    const std::filesystem::path& source_manifest, double alpha) {
  auto set = build_training_set(success, prompt);
  const std::string content = serialize_training(set.examples);
  util::atomic_write(out_path, content);
  EmittedDataset out;
  out.path = out_path;
  out.provenance_path = out_path;
  out.provenance_path += ".provenance.json";
  out.sha256 = util::sha256_hex(content);
  out.lines = set.examples.size();
  out.warnings = std::move(set.warnings);
  const json provenance = {{"dataset_sha256", out.sha256},
                           {"source_manifest", source_manifest.string()},
                           {"source_manifest_sha256", util::sha256_file_hex(source_manifest)},
                           {"alpha", alpha},
                           {"prompt_sha256", prompt.digest},
                           {"examples", out.lines},
                           {"excluded", out.warnings.size()}};
  util::atomic_write(out.provenance_path, provenance.dump(2) + "\n");
  return out;
}

json to_json_value(const TrainingConfig& c) {
  return {{"base_model", c.base_model},
          {"lora_r", c.lora_r},
          {"lora_alpha", c.lora_alpha},
          {"learning_rate", c.learning_rate},
          {"scheduler", c.scheduler}};
}

void write_training_config(const std::filesystem::path& path, const TrainingConfig& config) {
  util::atomic_write(path, to_json_value(config).dump(2) + "\n");
}

FusionOutcome fusion_pass(std::span<const ManifestEntry> entries, std::span<const FusionPair> failures,
                          const PipelineConfig& config) {
  if (!config.fused_rewriter) throw ConfigError("fusion pass needs a fused_rewriter");
  config.validate();

  FusionOutcome out;
  out.entries.assign(entries.begin(), entries.end());
  metrics(out.entries, config.alpha, out.sim_before, out.pass_before);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.entries.size(); ++i) index[out.entries[i].record.id] = i;
  std::vector<std::size_t> targets;
  for (const auto& f : failures) {
    const auto it = index.find(f.record_id);
    if (it == index.end() || !scored(out.entries[it->second])) {
      out.warnings.push_back("failure '" + f.record_id + "' is not a scored record in the manifest; skipped");
      continue;
    }
    targets.push_back(it->second);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  out.attempted = targets.size();
  if (targets.empty()) {
    out.sim_after = out.sim_before;
    out.pass_after = out.pass_before;
    return out;
  }

  const auto catalog = load_speaker_catalog(config.speaker_catalog);
  pipeline::ProviderSet set = pipeline::ProviderSet::from_config(config);
  providers::ContentCache cache(config.cache_dir);
  pipeline::ScoringContext ctx{set, cache, PromptAsset::load(config.prompt_path), config.normalization,
                               config.alpha};
  const std::string fused_name = config.fused_rewriter->name;
  for (const auto t : targets) {
    if (out.entries[t].report->embedders != set.embedder_names()) {
      throw ConfigError("record '" + out.entries[t].record.id +
                        "' was scored with a different embedder set than the configuration");
    }
  }

  std::vector<std::vector<std::string>> notes(targets.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;
  std::atomic<bool> has_fatal{false};

  auto work = [&](std::size_t k) {
    ManifestEntry& e = out.entries[targets[k]];
    QualityReport& report = *e.report;
    FusionNote note;
    note.rewriter = fused_name;
    note.q_before = report.q();
    const SpeakerProfile speaker = e.speaker ? *e.speaker : find_speaker(catalog, e.record.speaker_id);

    std::optional<std::string> text;
    try {
      auto outcome = providers::rewrite(*set.fused_rewriter, ctx.prompt, e.record.original_text, &cache);
      for (auto& w : outcome.warnings) notes[k].push_back(std::move(w));
      if (!outcome.fell_back) text = std::move(outcome.text);
    } catch (const ProviderUnavailable& ex) {
      notes[k].push_back("fused rewriter unavailable: " + std::string(ex.what()));
    }
    if (text) {
      const auto key = textmetrics::normalize_text(*text, config.normalization);
      const bool duplicate = std::any_of(report.per_candidate.begin(), report.per_candidate.end(), [&](const auto& c) {
        return textmetrics::normalize_text(c.candidate.text, config.normalization) == key;
      });
      if (!duplicate) {
        std::vector<std::string> errors;
        const auto original = pipeline::embed_original(e.record, ctx, errors);
        CandidateText candidate{e.record.id, CandidateSource::fusion(fused_name), *text};
        auto scoring = pipeline::score_candidate(candidate, speaker, original, ctx);
        scoring.errors.insert(scoring.errors.begin(), errors.begin(), errors.end());
        report.per_candidate.push_back(std::move(scoring));
        note.candidate_added = true;
      }
    }
    pipeline::reselect(report);
    e.failed = pipeline::report_failed(report);
    e.fusion = note;
    for (const auto& w : notes[k]) e.warnings.push_back(w);
  };

  auto worker = [&] {
    while (!has_fatal) {
      const std::size_t k = next.fetch_add(1);
      if (k >= targets.size()) return;
      try {
        work(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        has_fatal = true;
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.max_parallel_requests, targets.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& e = out.entries[targets[k]];
    if (e.fusion->candidate_added) ++out.added;
    if (e.report->q() > e.fusion->q_before) ++out.improved;
    for (const auto& w : notes[k]) out.warnings.push_back(e.record.id + ": " + w);
  }
  metrics(out.entries, config.alpha, out.sim_after, out.pass_after);
  return out;
}

}  // namespace instructforge::fusion
