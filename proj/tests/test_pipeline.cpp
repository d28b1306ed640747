#include <doctest.h>

#include <cmath>
#include <numeric>

#include "instructforge/core/corpus.hpp"
#include "instructforge/errors.hpp"
#include "instructforge/pipeline/pipeline.hpp"
#include "instructforge/providers/number_words.hpp"
#include "support.hpp"

using namespace instructforge;
using namespace instructforge::pipeline;
using testing::TempDir;

namespace {

// Owns everything a ScoringContext refers to.
struct Harness {
  explicit Harness(const PipelineConfig& c)
      : config(c), providers(ProviderSet::from_config(c)), cache(c.cache_dir),
        ctx{providers, cache, PromptAsset::from_text("rewrite"), c.normalization, c.alpha} {}
  PipelineConfig config;
  ProviderSet providers;
  providers::ContentCache cache;
  ScoringContext ctx;
};

const SpeakerProfile kSpeaker{"spk-x", "X", "a calm voice"};

providers::ProviderSpec digit_deleter(const std::string& name = "asr-digits") {
  return testing::transcriber(name, {{"type", "deleter"}, {"seed", 1}, {"probability", 1.0}, {"target", "digits"}});
}

std::size_t count_passing(const std::vector<ManifestEntry>& entries, double alpha) {
  std::size_t n = 0;
  for (const auto& e : entries) {
    double q = 0.0;
    for (const auto& c : e.report->per_candidate) {
      for (const auto& row : c.similarity) {
        q = std::max(q, std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
      }
    }
    if (q > alpha) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("candidate set sizes") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  SUBCASE("three distinct rewrites") {
    config.rewriters = {testing::rewriter("a", {{"type", "constant"}, {"text", "first"}}),
                        testing::rewriter("b", {{"type", "constant"}, {"text", "second"}}),
                        testing::rewriter("c", {{"type", "constant"}, {"text", "third"}})};
    Harness h(config);
    const auto build = build_candidates(testing::record("r", "original"), h.ctx);
    REQUIRE(build.candidates.size() == 4);
    CHECK(build.candidates[0].source.kind == SourceKind::original);
    CHECK(build.candidates[3].source == CandidateSource::rewriter("c", 2));
  }
  SUBCASE("rewrites equal to the original") {
    config.rewriters = {testing::rewriter("a", {{"type", "identity"}}),
                        testing::rewriter("b", {{"type", "constant"}, {"text", "Original!"}})};
    Harness h(config);
    const auto build = build_candidates(testing::record("r", "original"), h.ctx);
    REQUIRE(build.candidates.size() == 1);
    CHECK(build.candidates[0].source.kind == SourceKind::original);
  }
  SUBCASE("no rewriters") {
    Harness h(config);
    CHECK(build_candidates(testing::record("r", "original"), h.ctx).candidates.size() == 1);
  }
  SUBCASE("failing and empty rewriters leave warnings") {
    config.rewriters = {testing::rewriter("a", {{"type", "fail"}}),
                        testing::rewriter("b", {{"type", "constant"}, {"text", ""}})};
    Harness h(config);
    const auto build = build_candidates(testing::record("r", "original"), h.ctx);
    CHECK(build.candidates.size() == 1);
    CHECK(build.warnings.size() == 2);
  }
}

TEST_CASE("oracle scoring of the original") {
  TempDir dir;
  Harness h(testing::base_config(dir.path()));
  const auto rec = testing::record("r", "Which bridge opened first?");
  const auto build = build_candidates(rec, h.ctx);
  const auto report = score_record(rec, build.candidates, kSpeaker, h.ctx);
  CHECK(report.q() == doctest::Approx(1.0));
  CHECK(report.passes_alpha);
  CHECK(report.embedders == std::vector<std::string>{"emb-a", "emb-b"});
  CHECK(report.selected().similarity.size() == 1);
  CHECK(report.selected().similarity[0].size() == 2);
  CHECK_FALSE(report_failed(report));
}

TEST_CASE("rewrite wins when the noisy transcriber drops the year") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  config.transcribers = {digit_deleter()};
  config.rewriters = {testing::rewriter("expander", {{"type", "number_expander"}})};
  Harness h(config);
  const auto rec = testing::record("r", "What happened in 1999?");
  const auto build = build_candidates(rec, h.ctx);
  REQUIRE(build.candidates.size() == 2);
  const auto report = score_record(rec, build.candidates, kSpeaker, h.ctx);

  const auto& original = report.per_candidate[0];
  const auto& rewrite = report.per_candidate[1];
  CHECK(original.transcripts[0].text == "What happened in");
  CHECK(rewrite.transcripts[0].text == "What happened in nineteen ninety-nine?");

  // Recompute F from fresh embeddings.
  auto recompute = [&](const std::string& transcript) {
    double sum = 0.0;
    for (const auto& e : h.providers.embedders) {
      sum += textmetrics::cosine(providers::embed(*e, rec.original_text), providers::embed(*e, transcript));
    }
    return sum / static_cast<double>(h.providers.embedders.size());
  };
  CHECK(original.q == doctest::Approx(recompute("What happened in")).epsilon(1e-12));
  CHECK(rewrite.q == doctest::Approx(recompute("What happened in nineteen ninety-nine?")).epsilon(1e-12));
  CHECK(original.q < 0.9);
  CHECK(rewrite.q == doctest::Approx(1.0));
  CHECK(report.selected_candidate == 1);
  CHECK(report.passes_alpha);
}

TEST_CASE("empty transcripts score zero and fall back to the original") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  config.transcribers = {testing::transcriber("silent", {{"type", "empty"}})};
  config.rewriters = {testing::rewriter("x", {{"type", "constant"}, {"text", "other words"}})};
  Harness h(config);
  const auto rec = testing::record("r", "some question");
  const auto report = score_record(rec, build_candidates(rec, h.ctx).candidates, kSpeaker, h.ctx);
  for (const auto& c : report.per_candidate) CHECK(c.q == 0.0);
  CHECK(report.selected_candidate == 0);
  CHECK_FALSE(report.passes_alpha);
  CHECK_FALSE(report_failed(report));
}

TEST_CASE("provider outages degrade to a failed record") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  config.transcribers = {testing::transcriber("down", {{"type", "fail"}})};
  Harness h(config);
  const auto rec = testing::record("r", "some question");
  const auto report = score_record(rec, build_candidates(rec, h.ctx).candidates, kSpeaker, h.ctx);
  CHECK(report.q() == 0.0);
  CHECK_FALSE(report.per_candidate[0].errors.empty());
  CHECK(report_failed(report));
}

TEST_CASE("q equals the maximum persisted F") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  config.transcribers = {testing::transcriber("asr-oracle", {{"type", "oracle"}}),
                         testing::transcriber("asr-del", {{"type", "deleter"}, {"seed", 5}, {"probability", 0.3}}),
                         testing::transcriber("asr-sub", {{"type", "substituter"}, {"seed", 6}, {"probability", 0.3}})};
  config.rewriters = {testing::rewriter("expander", {{"type", "number_expander"}})};
  config.rng_seed = 3;
  const auto records = testing::synthetic_corpus(30, 3);
  const auto summary = run_batch(records, config);
  CHECK(summary.counters.scored == 30);
  for (const auto& e : read_manifest(config.manifest_path)) {
    const auto& r = *e.report;
    double best = -1.0;
    for (const auto& c : r.per_candidate) {
      for (const auto& row : c.similarity) {
        best = std::max(best, std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
      }
    }
    CHECK(r.q() == doctest::Approx(best).epsilon(1e-12));
    CHECK(r.passes_alpha == (r.q() > r.alpha));
  }
}

TEST_CASE("interrupted run resumes to the same manifest") {
  TempDir a, b;
  const auto records = testing::synthetic_corpus(20, 4);
  testing::write_text(a / "corpus.jsonl", testing::corpus_jsonl(records));
  auto config_a = testing::base_config(a.path());
  auto config_b = testing::base_config(b.path());
  config_a.transcribers = config_b.transcribers = {digit_deleter()};
  config_a.rewriters = config_b.rewriters = {testing::rewriter("expander", {{"type", "number_expander"}})};

  const auto full = run_batch(a / "corpus.jsonl", config_a);
  CHECK(full.complete);

  RunOptions half;
  half.stop_after = 10;
  const auto partial = run_batch(a / "corpus.jsonl", config_b, half);
  CHECK_FALSE(partial.complete);
  CHECK(partial.processed == 10);
  CHECK(read_manifest(config_b.manifest_path).size() == 10);

  const auto resumed = run_batch(a / "corpus.jsonl", config_b);
  CHECK(resumed.resumed == 10);
  CHECK(resumed.processed == 10);
  CHECK(testing::without_root(testing::read_text(config_a.manifest_path), a.path()) ==
        testing::without_root(testing::read_text(config_b.manifest_path), b.path()));
}

TEST_CASE("unchanged rerun is served from the cache") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  const auto records = testing::synthetic_corpus(10, 2);
  run_batch(records, config);
  const auto first = testing::read_text(config.manifest_path);
  std::filesystem::remove(config.manifest_path);
  const auto second = run_batch(records, config);
  CHECK(testing::read_text(config.manifest_path) == first);
  CHECK(second.cache.at("synth").misses == 0);
  CHECK(second.cache.at("synth").hits > 0);
  CHECK(second.cache.at("embed").misses == 0);
  CHECK(second.cache.at("embed").hits > 0);
}

TEST_CASE("config changes invalidate resume") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  const auto records = testing::synthetic_corpus(5);
  const auto first = run_batch(records, config);
  CHECK(run_batch(records, config).resumed == 5);
  config.alpha = 0.8;
  const auto changed = run_batch(records, config);
  CHECK(changed.config_hash != first.config_hash);
  CHECK(changed.resumed == 0);
  CHECK(changed.processed == 5);
}

TEST_CASE("worker count does not change the manifest") {
  const auto records = testing::synthetic_corpus(40, 3);
  std::vector<std::string> manifests;
  for (int workers : {1, 4, 16}) {
    TempDir dir;
    auto config = testing::base_config(dir.path());
    config.transcribers = {digit_deleter(),
                           testing::transcriber("asr-sub", {{"type", "substituter"}, {"seed", 2}, {"probability", 0.2}})};
    config.rewriters = {testing::rewriter("expander", {{"type", "number_expander"}})};
    config.max_parallel_requests = workers;
    run_batch(records, config);
    manifests.push_back(testing::without_root(testing::read_text(config.manifest_path), dir.path()));
  }
  CHECK(manifests[0] == manifests[1]);
  CHECK(manifests[0] == manifests[2]);
}

TEST_CASE("ten corrupted records give a pass rate of 0.90") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  config.transcribers = {digit_deleter()};
  // Every tenth record carries years that the transcriber drops.
  const auto records = testing::synthetic_corpus(100, 10);
  const auto summary = run_batch(records, config);
  CHECK(summary.pass == doctest::Approx(0.90));
  const auto entries = read_manifest(config.manifest_path);
  REQUIRE(entries.size() == 100);
  CHECK(count_passing(entries, config.alpha) == 90);
  for (const auto& e : entries) CHECK(e.report->passes_alpha == !providers::contains_digit(e.record.original_text));
}

TEST_CASE("failed records stay in the manifest and count as zero") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  config.transcribers = {testing::transcriber("down", {{"type", "fail"}})};
  const auto summary = run_batch(testing::synthetic_corpus(4), config);
  CHECK(summary.counters.failed == 4);
  CHECK(summary.pass == 0.0);
  const auto entries = read_manifest(config.manifest_path);
  CHECK(entries.size() == 4);
  for (const auto& e : entries) CHECK(e.failed);
}

TEST_CASE("per-record timings go to the log, not the manifest") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  run_batch(testing::synthetic_corpus(3), config);
  CHECK(testing::read_text(config.manifest_path).find("elapsed") == std::string::npos);
  const auto log = testing::read_text(log_path_for(config.manifest_path));
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("report over two records") {
  std::vector<ManifestEntry> entries = {testing::scored_entry("a", "x", 1.0), testing::scored_entry("b", "y", 0.8)};
  const auto report = build_report(entries);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].n == 2);
  CHECK(textmetrics::format_fixed(report.rows[0].sim) == "90.00");
  CHECK(report.rows[0].pass == doctest::Approx(0.5));
  const auto table = render_table(report);
  CHECK(table.find("90.00") != std::string::npos);
  CHECK(table.find("0.50") != std::string::npos);
}

TEST_CASE("report over a single record") {
  std::vector<ManifestEntry> entries = {testing::scored_entry("a", "x", 0.93)};
  const auto report = build_report(entries);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].n == 1);
  CHECK(report.rows[0].dataset == "corpus");
}

TEST_CASE("average row is the unweighted mean over datasets") {
  // Published per-dataset SIM and Pass of one baseline row; its Average
  // column reads 96.27 and 85.02.
  const std::vector<double> sims = {96.61, 95.13, 97.27, 98.22, 95.75, 93.48, 97.43};
  const std::vector<double> passes = {86.12, 79.21, 88.57, 93.21, 82.91, 74.87, 90.25};
  std::vector<ManifestEntry> entries;
  for (std::size_t d = 0; d < sims.size(); ++d) {
    const std::string dataset = "d" + std::to_string(d);
    // 10000 records per dataset: round(passes[d] * 100) of them pass; the
    // rest are chosen so the dataset mean hits sims[d].
    const auto n_pass = static_cast<std::size_t>(std::llround(passes[d] * 100));
    const double hi = 1.0;
    const double lo = (sims[d] / 100 * 10000 - hi * static_cast<double>(n_pass)) / static_cast<double>(10000 - n_pass);
    REQUIRE(lo < 0.9);
    for (std::size_t i = 0; i < 10000; ++i) {
      entries.push_back(testing::scored_entry(dataset + "-" + std::to_string(i), "t", i < n_pass ? hi : lo,
                                              std::nullopt, dataset));
    }
  }
  const auto report = build_report(entries);
  REQUIRE(report.rows.size() == 8);
  for (std::size_t d = 0; d < sims.size(); ++d) {
    CHECK(report.rows[d].sim == doctest::Approx(sims[d]).epsilon(1e-9));
    CHECK(report.rows[d].pass * 100 == doctest::Approx(passes[d]).epsilon(1e-9));
  }
  const auto& avg = report.rows.back();
  CHECK(avg.dataset == "Average");
  CHECK(avg.n == 70000);
  CHECK(textmetrics::format_fixed(avg.sim) == "96.27");
  CHECK(textmetrics::format_fixed(avg.pass * 100) == "85.02");
}

TEST_CASE("report groups methods and rejects empty manifests") {
  std::vector<ManifestEntry> entries = {testing::scored_entry("a", "x", 0.8),
                                        testing::scored_entry("a", "x", 0.8, std::pair{std::string("y"), 0.95})};
  const auto report = build_report(entries);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].method == "original");
  CHECK(report.rows[1].method == "ours");
  CHECK(report.rows[1].pass == 1.0);
  CHECK(to_json_value(report)["rows"].size() == 2);
  CHECK_THROWS_AS(build_report(std::vector<ManifestEntry>{}), InvalidInput);
  ManifestEntry loaded;
  loaded.record = testing::record("z", "text");
  CHECK_THROWS_AS(build_report(std::vector<ManifestEntry>{loaded}), InvalidInput);
}

TEST_CASE("report recomputes pass at a new alpha") {
  std::vector<ManifestEntry> entries = {testing::scored_entry("a", "x", 0.95), testing::scored_entry("b", "y", 0.85)};
  CHECK(build_report(entries).rows[0].pass == 0.5);
  CHECK(build_report(entries, 0.8).rows[0].pass == 1.0);
}

TEST_CASE("rescoring at a new alpha only touches selection flags") {
  std::vector<ManifestEntry> entries = {testing::scored_entry("a", "x", 0.85, std::pair{std::string("y"), 0.88})};
  CHECK_FALSE(entries[0].report->passes_alpha);
  const auto rescored = rescore(entries, 0.8);
  CHECK(rescored[0].report->passes_alpha);
  CHECK(rescored[0].report->alpha == 0.8);
  CHECK(rescored[0].report->selected_candidate == 1);
  CHECK(rescored[0].report->q() == entries[0].report->q());
  CHECK_THROWS_AS(rescore(entries, 0.0), InvalidInput);
}

TEST_CASE("summary json") {
  TempDir dir;
  auto config = testing::base_config(dir.path());
  const auto summary = run_batch(testing::synthetic_corpus(3), config);
  const auto j = to_json_value(summary);
  CHECK(j["counters"]["scored"] == 3);
  CHECK(j["sim"].get<double>() == doctest::Approx(100.0));
  CHECK(j["pass"].get<double>() == 1.0);
  CHECK(j.contains("per_dataset"));
}
