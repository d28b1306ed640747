#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "instructforge/core/corpus.hpp"
#include "instructforge/errors.hpp"
#include "instructforge/pipeline/pipeline.hpp"
#include "instructforge/util/files.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::pipeline {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool reusable(const ManifestEntry& e, const std::string& hash) {
  return e.stage >= Stage::scored && e.report && !e.failed && e.config_hash == hash;
}

struct Processed {
  std::optional<ManifestEntry> entry;
  double total_ms = 0.0;
};

Processed process_record(const InstructionRecord& record, const SpeakerProfile& speaker, ScoringContext& ctx,
                         const std::string& hash, const std::string& method, const std::filesystem::path& log) {
  const auto start = Clock::now();
  ManifestEntry entry;
  entry.record = record;
  entry.config_hash = hash;
  entry.method = method;
  entry.speaker = speaker;
  if (auto w = long_text_warning(record.original_text)) entry.warnings.push_back(*w);

  CandidateBuild build = build_candidates(record, ctx);
  const double candidates_ms = ms_since(start);
  for (auto& w : build.warnings) entry.warnings.push_back(std::move(w));

  const auto scoring_start = Clock::now();
  entry.report = score_record(record, build.candidates, speaker, ctx);
  const double scoring_ms = ms_since(scoring_start);
  entry.stage = Stage::scored;
  entry.failed = report_failed(*entry.report);

  Processed out;
  out.total_ms = ms_since(start);
  out.entry = std::move(entry);
  const json line = {{"id", record.id},
                     {"stage", to_string(Stage::scored)},
                     {"failed", out.entry->failed},
                     {"candidates_ms", candidates_ms},
                     {"scoring_ms", scoring_ms},
                     {"total_ms", out.total_ms}};
  util::append_line(log, line.dump());
  return out;
}

void tally(const ManifestEntry& e, BatchCounters& c) {
  if (!e.report) {
    if (e.failed) ++c.failed;
    return;
  }
  const auto& cands = e.report->per_candidate;
  if (std::any_of(cands.begin(), cands.end(), [](const auto& x) { return x.speech.has_value(); })) ++c.synthesized;
  const bool transcribed = std::any_of(cands.begin(), cands.end(), [](const auto& x) {
    return std::any_of(x.transcripts.begin(), x.transcripts.end(), [](const Transcript& t) { return !t.failed; });
  });
  if (transcribed) ++c.transcribed;
  if (e.failed) ++c.failed;
  else if (e.stage >= Stage::scored) ++c.scored;
}

void summarize_metrics(std::span<const ManifestEntry> entries, double alpha, BatchSummary& summary) {
  std::vector<double> all;
  std::map<std::string, std::vector<double>> by_dataset;
  for (const auto& e : entries) {
    if (!e.report || e.stage < Stage::scored) continue;
    all.push_back(e.report->q());
    by_dataset[e.record.dataset].push_back(e.report->q());
  }
  if (all.empty()) return;
  summary.sim = textmetrics::sim_aggregate(all);
  summary.pass = textmetrics::pass_rate(all, alpha);
  for (const auto& [dataset, qs] : by_dataset) {
    summary.per_dataset[dataset] = {qs.size(), textmetrics::sim_aggregate(qs), textmetrics::pass_rate(qs, alpha)};
  }
}

}  // namespace

std::filesystem::path log_path_for(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  p += ".log.jsonl";
  return p;
}

std::string compute_config_hash(const PipelineConfig& config) {
  const auto prompt = PromptAsset::load(config.prompt_path);
  std::string catalog_digest;
  try {
    catalog_digest = util::sha256_file_hex(config.speaker_catalog);
  } catch (const StorageError& e) {
    throw ConfigError(std::string("speaker catalog: ") + e.what());
  }
  return config.config_hash(prompt.digest, catalog_digest);
}

BatchSummary run_batch(const std::filesystem::path& corpus_path, const PipelineConfig& config,
                       const RunOptions& options) {
  auto load = load_corpus(corpus_path, config.dataset_tag);
  auto summary = run_batch(load.records, config, options);
  if (load.skipped > 0) {
    summary.warnings.insert(summary.warnings.begin(),
                            std::to_string(load.skipped) + " corpus line(s) skipped (empty instruction)");
  }
  for (auto& w : load.warnings) summary.warnings.push_back(std::move(w));
  return summary;
}

BatchSummary run_batch(std::span<const InstructionRecord> records, const PipelineConfig& config,
                       const RunOptions& options) {
  config.validate();
  const auto catalog = load_speaker_catalog(config.speaker_catalog);
  const std::string hash = compute_config_hash(config);
  const auto assigned = assign_speakers(records, catalog, config.rng_seed);
  const std::string method = config.effective_method();

  std::set<std::string> seen;
  for (const auto& r : assigned) {
    if (!seen.insert(r.id).second) throw InvalidInput("duplicate record id '" + r.id + "'");
  }

  std::vector<ManifestEntry> previous;
  if (std::filesystem::exists(config.manifest_path)) previous = read_manifest(config.manifest_path);
  std::unordered_map<std::string, std::size_t> previous_index;
  for (std::size_t i = 0; i < previous.size(); ++i) previous_index[previous[i].record.id] = i;

  BatchSummary summary;
  summary.config_hash = hash;
  summary.manifest_path = config.manifest_path;

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    const auto it = previous_index.find(assigned[i].id);
    if (it != previous_index.end() && reusable(previous[it->second], hash)) {
      ++summary.resumed;
    } else {
      todo.push_back(i);
    }
  }

  ProviderSet providers = ProviderSet::from_config(config);
  providers::ContentCache cache(config.cache_dir);
  ScoringContext ctx{providers, cache, PromptAsset::load(config.prompt_path), config.normalization, config.alpha};
  ManifestWriter writer(config.manifest_path);
  const auto log = log_path_for(config.manifest_path);

  std::vector<Processed> results(todo.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> stopped{false};
  std::mutex error_mutex;
  std::exception_ptr fatal;
  std::atomic<bool> has_fatal{false};

  auto worker = [&] {
    while (true) {
      if (has_fatal) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      if (options.stop_after && k >= *options.stop_after) {
        stopped = true;
        return;
      }
      const auto& record = assigned[todo[k]];
      try {
        const auto& speaker = find_speaker(catalog, record.speaker_id);
        results[k] = process_record(record, speaker, ctx, hash, method, log);
        writer.append(*results[k].entry);
      } catch (const InvalidInput& e) {
        util::append_line(log, json{{"id", record.id}, {"failed", true}, {"error", e.what()}}.dump());
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        has_fatal = true;
        return;
      }
      const std::size_t n = done.fetch_add(1) + 1;
      if (options.progress) options.progress(n, todo.size());
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.max_parallel_requests, todo.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  // Assemble the compacted manifest: entries from other corpora first, in
  // their previous order, then this corpus in corpus order.
  std::vector<ManifestEntry> final_entries;
  std::set<std::string> ours;
  for (const auto& r : assigned) ours.insert(r.id);
  for (const auto& e : previous) {
    if (!ours.count(e.record.id)) final_entries.push_back(e);
  }
  const std::size_t others = final_entries.size();
  std::unordered_map<std::size_t, std::size_t> result_of;
  for (std::size_t k = 0; k < todo.size(); ++k) result_of[todo[k]] = k;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    const auto r = result_of.find(i);
    if (r != result_of.end() && results[r->second].entry) {
      final_entries.push_back(*results[r->second].entry);
      ++summary.processed;
      continue;
    }
    const auto p = previous_index.find(assigned[i].id);
    if (p != previous_index.end()) {
      final_entries.push_back(previous[p->second]);
    } else {
      ManifestEntry pending;
      pending.record = assigned[i];
      pending.stage = Stage::loaded;
      pending.config_hash = hash;
      pending.method = method;
      final_entries.push_back(std::move(pending));
    }
  }

  summary.complete = !stopped;
  if (summary.complete) write_manifest(config.manifest_path, final_entries);

  const std::span<const ManifestEntry> corpus_entries(final_entries.begin() + static_cast<std::ptrdiff_t>(others),
                                                      final_entries.end());
  summary.counters.loaded = assigned.size();
  for (const auto& e : corpus_entries) tally(e, summary.counters);
  summarize_metrics(corpus_entries, config.alpha, summary);
  for (const char* ns : {"rewrite", "synth", "transcribe", "embed"}) summary.cache[ns] = cache.counters(ns);

  for (const auto& r : results) {
    if (!r.entry) continue;
    ++summary.timing.samples;
    summary.timing.mean_ms += r.total_ms;
    summary.timing.max_ms = std::max(summary.timing.max_ms, r.total_ms);
  }
  if (summary.timing.samples > 0) summary.timing.mean_ms /= static_cast<double>(summary.timing.samples);
  for (const auto& e : corpus_entries) {
    for (const auto& w : e.warnings) summary.warnings.push_back(e.record.id + ": " + w);
  }
  return summary;
}

json to_json_value(const BatchSummary& s) {
  json per_dataset = json::object();
  for (const auto& [name, m] : s.per_dataset) per_dataset[name] = {{"n", m.n}, {"sim", m.sim}, {"pass", m.pass}};
  json cache = json::object();
  for (const auto& [ns, c] : s.cache) cache[ns] = {{"hits", c.hits}, {"misses", c.misses}};
  return {{"config_hash", s.config_hash},
          {"manifest", s.manifest_path.string()},
          {"complete", s.complete},
          {"resumed", s.resumed},
          {"processed", s.processed},
          {"counters",
           {{"loaded", s.counters.loaded},
            {"synthesized", s.counters.synthesized},
            {"transcribed", s.counters.transcribed},
            {"scored", s.counters.scored},
            {"failed", s.counters.failed}}},
          {"sim", s.sim},
          {"pass", s.pass},
          {"per_dataset", per_dataset},
          {"cache", cache},
          {"timing", {{"samples", s.timing.samples}, {"mean_ms", s.timing.mean_ms}, {"max_ms", s.timing.max_ms}}},
          {"warnings", s.warnings}};
}

}  // namespace instructforge::pipeline
