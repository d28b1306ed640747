// Command-line front end. Exit codes: 0 success, 1 configuration or input
// error, 2 batch finished with failed records.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "instructforge/core/config.hpp"
#include "instructforge/core/manifest.hpp"
#include "instructforge/errors.hpp"
#include "instructforge/exporter/exporter.hpp"
#include "instructforge/fusion/fusion.hpp"
#include "instructforge/pipeline/pipeline.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"
#include "instructforge/util/files.hpp"

namespace {

using nlohmann::json;
namespace ifg = instructforge;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::size_t> workers;
  std::string manifest;
  std::string cache_dir;
};

void add_config_flags(CLI::App& cmd, ConfigFlags& f) {
  cmd.add_option("--config", f.config_path, "Pipeline configuration file (JSON)");
  cmd.add_option("--set", f.overrides, "Override a configuration key: key=value (repeatable)");
  cmd.add_option("--seed", f.seed, "Seed for speaker assignment (default 0)");
  cmd.add_option("--alpha", f.alpha, "Quality threshold alpha for Pass (default 0.9)");
  cmd.add_option("--workers", f.workers, "Maximum concurrent records / provider calls");
  cmd.add_option("--manifest", f.manifest, "Manifest path (JSONL)");
  cmd.add_option("--cache-dir", f.cache_dir, "Content cache directory");
}

// Defaults < config file < --set < flags.
ifg::PipelineConfig resolve_config(const ConfigFlags& f) {
  json j = json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ifg::ConfigError("cannot open config " + f.config_path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ifg::ConfigError("config " + f.config_path + ": " + e.what());
    }
  }
  for (const auto& o : f.overrides) ifg::apply_override(j, o);
  auto config = ifg::parse_config(j);
  if (f.seed) config.rng_seed = *f.seed;
  if (f.alpha) config.alpha = *f.alpha;
  if (f.workers) config.max_parallel_requests = *f.workers;
  if (!f.manifest.empty()) config.manifest_path = f.manifest;
  if (!f.cache_dir.empty()) config.cache_dir = f.cache_dir;
  return config;
}

std::vector<ifg::ManifestEntry> read_manifest_or_fail(const std::string& path) {
  if (path.empty()) throw ifg::ConfigError("--manifest is required");
  if (!std::filesystem::exists(path)) throw ifg::ConfigError("manifest not found: " + path);
  return ifg::read_manifest(path);
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// ---- subcommands ----------------------------------------------------------

struct SynthesizeArgs {
  ConfigFlags config;
  std::string corpus;
  std::string dataset;
  std::string method;
  bool json = false;
  bool quiet = false;
};

int run_synthesize(const SynthesizeArgs& a) {
  auto config = resolve_config(a.config);
  if (!a.corpus.empty()) config.corpus_path = a.corpus;
  if (!a.dataset.empty()) config.dataset_tag = a.dataset;
  if (!a.method.empty()) config.method = a.method;
  if (config.corpus_path.empty()) throw ifg::ConfigError("no corpus given (--corpus or corpus_path)");

  ifg::pipeline::RunOptions options;
  if (!a.quiet) {
    options.progress = [](std::size_t done, std::size_t total) {
      const std::size_t step = std::max<std::size_t>(1, total / 10);
      if (done % step == 0 || done == total) std::cerr << "progress: " << done << "/" << total << " records\n";
    };
  }
  const auto summary = ifg::pipeline::run_batch(config.corpus_path, config, options);
  if (a.json) {
    print_json(ifg::pipeline::to_json_value(summary));
  } else {
    print_warnings(summary.warnings);
    std::cout << "manifest: " << summary.manifest_path.string() << '\n'
              << "records: " << summary.counters.loaded << " (processed " << summary.processed << ", resumed "
              << summary.resumed << ", failed " << summary.counters.failed << ")\n"
              << "SIM: " << ifg::textmetrics::format_fixed(summary.sim) << '\n'
              << "Pass: " << ifg::textmetrics::format_fixed(summary.pass) << '\n';
  }
  return summary.counters.failed > 0 ? kExitPartial : kExitOk;
}

struct ScoreArgs {
  std::string manifest;
  std::string out;
  double alpha = ifg::kDefaultAlpha;
  bool json = false;
};

int run_score(const ScoreArgs& a) {
  const auto entries = read_manifest_or_fail(a.manifest);
  const auto rescored = ifg::pipeline::rescore(entries, a.alpha);
  const std::string out = a.out.empty() ? a.manifest : a.out;
  ifg::write_manifest(out, rescored);
  const auto report = ifg::pipeline::build_report(rescored);
  if (a.json) print_json(ifg::pipeline::to_json_value(report));
  else std::cout << ifg::pipeline::render_table(report);
  return kExitOk;
}

struct ReportArgs {
  std::string manifest;
  std::optional<double> alpha;
  bool json = false;
};

int run_report(const ReportArgs& a) {
  const auto entries = read_manifest_or_fail(a.manifest);
  const auto report = ifg::pipeline::build_report(entries, a.alpha);
  if (a.json) print_json(ifg::pipeline::to_json_value(report));
  else std::cout << ifg::pipeline::render_table(report);
  return kExitOk;
}

struct ConsistencyArgs {
  std::string manifest;
  bool json = false;
};

int run_consistency(const ConsistencyArgs& a) {
  const auto entries = read_manifest_or_fail(a.manifest);
  std::vector<ifg::textmetrics::ConsistencyInput> inputs;
  for (const auto& e : entries) {
    if (!e.report || e.failed) continue;
    if (const auto* original = e.report->original()) inputs.push_back({original->f, original->wer});
  }
  const auto result = ifg::textmetrics::sim_wer_consistency(inputs);
  if (a.json) {
    print_json({{"consistency", result.value},
                {"evaluated", result.evaluated},
                {"consistent", result.consistent},
                {"skipped", result.skipped}});
  } else {
    std::cout << "consistency: " << ifg::textmetrics::format_fixed(result.value * 100.0) << "% (" << result.consistent
              << "/" << result.evaluated << ", skipped " << result.skipped << ")\n";
  }
  return kExitOk;
}

struct FuseExtractArgs {
  std::string manifest;
  std::string out;
  std::string training_config;
  std::string prompt;
  double alpha = ifg::kDefaultAlpha;
  bool json = false;
};

int run_fuse_extract(const FuseExtractArgs& a) {
  const auto entries = read_manifest_or_fail(a.manifest);
  const auto parts = ifg::fusion::partition(entries, a.alpha);
  const auto prompt = ifg::PromptAsset::load(a.prompt.empty() ? ifg::default_prompt_path() : std::filesystem::path(a.prompt));
  const auto emitted = ifg::fusion::emit_fusion_training(parts.success, prompt, a.out, a.manifest, a.alpha);
  const std::string training = a.training_config.empty() ? a.out + ".training.json" : a.training_config;
  ifg::fusion::write_training_config(training);
  if (a.json) {
    print_json({{"dataset", emitted.path.string()},
                {"provenance", emitted.provenance_path.string()},
                {"training_config", training},
                {"sha256", emitted.sha256},
                {"examples", emitted.lines},
                {"success_pairs", parts.success.size()},
                {"failures", parts.failures.size()},
                {"warnings", emitted.warnings}});
  } else {
    print_warnings(emitted.warnings);
    std::cout << "success pairs: " << parts.success.size() << ", failures: " << parts.failures.size() << '\n'
              << "wrote " << emitted.lines << " example(s) to " << emitted.path.string() << '\n'
              << "training config: " << training << '\n';
  }
  return kExitOk;
}

struct FuseApplyArgs {
  ConfigFlags config;
  std::string out;
  bool json = false;
};

int run_fuse_apply(const FuseApplyArgs& a) {
  const auto config = resolve_config(a.config);
  const std::string manifest = config.manifest_path.string();
  const auto entries = read_manifest_or_fail(manifest);
  const auto parts = ifg::fusion::partition(entries, config.alpha);
  const auto outcome = ifg::fusion::fusion_pass(entries, parts.failures, config);
  ifg::write_manifest(a.out.empty() ? manifest : a.out, outcome.entries);
  std::size_t failed = 0;
  for (const auto& e : outcome.entries) failed += e.failed ? 1 : 0;
  if (a.json) {
    print_json({{"attempted", outcome.attempted},
                {"added", outcome.added},
                {"improved", outcome.improved},
                {"sim_before", outcome.sim_before},
                {"sim_after", outcome.sim_after},
                {"pass_before", outcome.pass_before},
                {"pass_after", outcome.pass_after},
                {"failed", failed},
                {"warnings", outcome.warnings}});
  } else {
    print_warnings(outcome.warnings);
    using ifg::textmetrics::format_fixed;
    std::cout << "retried " << outcome.attempted << " record(s), " << outcome.added << " new candidate(s), "
              << outcome.improved << " improved\n"
              << "SIM: " << format_fixed(outcome.sim_before) << " -> " << format_fixed(outcome.sim_after) << '\n'
              << "Pass: " << format_fixed(outcome.pass_before) << " -> " << format_fixed(outcome.pass_after) << '\n';
  }
  return failed > 0 ? kExitPartial : kExitOk;
}

struct ThresholdArgs {
  std::optional<double> threshold;
  std::string unit = "fraction";
  std::string config_path;
};

void add_threshold_flags(CLI::App& cmd, ThresholdArgs& t) {
  cmd.add_option("--threshold", t.threshold, "Quality threshold t; records need q > t (default 0.9)");
  cmd.add_option("--threshold-unit", t.unit, "Unit of --threshold: fraction (0.85) or percent (85)")
      ->check(CLI::IsMember({"fraction", "percent"}));
  cmd.add_option("--config", t.config_path, "Configuration file supplying export_threshold");
}

double resolve_threshold(const ThresholdArgs& t) {
  if (t.threshold) return ifg::exporter::to_fraction(*t.threshold, ifg::exporter::threshold_unit_from_string(t.unit));
  if (!t.config_path.empty()) return ifg::load_config(t.config_path).export_threshold;
  return ifg::kDefaultExportThreshold;
}

struct FilterArgs {
  std::string manifest;
  std::string out;
  ThresholdArgs threshold;
  bool json = false;
};

int run_filter(const FilterArgs& a) {
  const auto entries = read_manifest_or_fail(a.manifest);
  const double t = resolve_threshold(a.threshold);
  const auto kept = ifg::exporter::filter_and_dedupe(entries, t);
  ifg::write_manifest(a.out, kept);
  if (a.json) {
    json ids = json::array();
    for (const auto& e : kept) ids.push_back(e.record.id);
    print_json({{"threshold", t}, {"input", entries.size()}, {"kept", kept.size()}, {"ids", ids}});
  } else {
    std::cout << "kept " << kept.size() << " of " << entries.size() << " record(s) with q > "
              << ifg::textmetrics::format_fixed(t) << '\n';
  }
  return kExitOk;
}

struct ExportArgs {
  std::string manifest;
  std::string out;
  std::string mode = "golden";
  std::string continuations;
  std::string chat_template;
  std::string bundle;
  std::string rendered;
  ThresholdArgs threshold;
  bool json = false;
};

int run_export(const ExportArgs& a) {
  auto entries = read_manifest_or_fail(a.manifest);
  if (a.threshold.threshold || !a.threshold.config_path.empty()) {
    entries = ifg::exporter::filter_and_dedupe(entries, resolve_threshold(a.threshold));
  }
  const auto chat =
      ifg::exporter::ChatTemplate::load(a.chat_template.empty() ? ifg::default_chat_template_path() : std::filesystem::path(a.chat_template));
  ifg::exporter::ExportOptions options;
  options.mode = ifg::exporter::alignment_mode_from_string(a.mode);
  if (options.mode == ifg::exporter::AlignmentMode::continuation) {
    if (a.continuations.empty()) throw ifg::ConfigError("--continuations is required in continue mode");
    options.continuations = ifg::exporter::load_continuations(a.continuations);
  }
  if (!a.bundle.empty()) options.bundle_dir = a.bundle;
  const auto result = ifg::exporter::export_chat(entries, chat, options, a.out);
  if (!a.rendered.empty()) {
    std::string lines;
    for (const auto& r : result.records) {
      lines += json{{"id", r.id}, {"text", chat.render(r)}}.dump() + "\n";
    }
    ifg::util::atomic_write(a.rendered, lines);
  }
  if (a.json) {
    print_json({{"exported", result.records.size()}, {"excluded", result.warnings.size()}, {"warnings", result.warnings}});
  } else {
    print_warnings(result.warnings);
    std::cout << "exported " << result.records.size() << " record(s)";
    if (!result.warnings.empty()) std::cout << ", excluded " << result.warnings.size();
    std::cout << '\n';
  }
  return kExitOk;
}

struct CostArgs {
  std::optional<double> human_hours;
  std::optional<double> gpu_hours;
  std::optional<double> human_rate;
  std::optional<double> gpu_rate;
  std::string plan;
  bool json = false;
};

int run_cost(const CostArgs& a) {
  ifg::exporter::CostPlan plan;
  if (!a.plan.empty()) {
    try {
      plan = ifg::exporter::parse_cost_plan(json::parse(ifg::util::read_file(a.plan)));
    } catch (const json::parse_error& e) {
      throw ifg::ConfigError("cost plan " + a.plan + ": " + e.what());
    }
  }
  if (a.human_hours) plan.human_hours = *a.human_hours;
  if (a.gpu_hours) plan.gpu_hours = *a.gpu_hours;
  if (a.human_rate) plan.human_rate = *a.human_rate;
  if (a.gpu_rate) plan.gpu_rate = *a.gpu_rate;
  const auto total = ifg::exporter::estimate_cost(plan);
  if (a.json) {
    print_json({{"human_hours", plan.human_hours},
                {"gpu_hours", plan.gpu_hours},
                {"human_rate", plan.human_rate},
                {"gpu_rate", plan.gpu_rate},
                {"total", total.to_string()},
                {"cents", total.cents}});
  } else {
    std::cout << total.to_string() << '\n';
  }
  return kExitOk;
}

bool wants_json(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--json") return true;
  }
  return false;
}

int fail(const std::string& kind, const std::string& message, bool json_out) {
  std::cerr << "error: " << message << '\n';
  if (json_out) print_json({{"error", message}, {"kind", kind}});
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Builds speech instruction datasets: rewrite, synthesize, verify, select, export.", "instructforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "instructforge 0.1.0");

  SynthesizeArgs synth;
  auto* cmd_synth = app.add_subcommand("synthesize", "Run the corpus through rewriting, TTS, ASR and scoring");
  add_config_flags(*cmd_synth, synth.config);
  cmd_synth->add_option("--corpus", synth.corpus, "Corpus JSONL of {id?, question, context?, answer?}");
  cmd_synth->add_option("--dataset", synth.dataset, "Dataset tag recorded on every record");
  cmd_synth->add_option("--method", synth.method, "Method label used to group report rows");
  cmd_synth->add_flag("--json", synth.json, "Print a JSON summary on stdout");
  cmd_synth->add_flag("--quiet", synth.quiet, "No progress lines on stderr");

  ScoreArgs score;
  auto* cmd_score = app.add_subcommand("score", "Recompute q, selection and Pass from stored similarities");
  cmd_score->add_option("--manifest", score.manifest, "Manifest to rescore")->required();
  cmd_score->add_option("--alpha", score.alpha, "Quality threshold alpha (default 0.9)");
  cmd_score->add_option("--out", score.out, "Write here instead of rewriting the manifest in place");
  cmd_score->add_flag("--json", score.json, "Print the report as JSON");

  ReportArgs report;
  auto* cmd_report = app.add_subcommand("report", "SIM, Pass, consistency and WER per method and dataset");
  cmd_report->add_option("--manifest", report.manifest, "Scored manifest")->required();
  cmd_report->add_option("--alpha", report.alpha, "Recompute Pass at this alpha");
  cmd_report->add_flag("--json", report.json, "Print the report as JSON");

  FuseExtractArgs extract;
  auto* cmd_extract = app.add_subcommand("fuse-extract", "Emit the fusion fine-tuning set from successful rewrites");
  cmd_extract->add_option("--manifest", extract.manifest, "Scored manifest")->required();
  cmd_extract->add_option("--out", extract.out, "Training JSONL of {prompt, input, target}")->required();
  cmd_extract->add_option("--training-config", extract.training_config,
                          "Training hyperparameter JSON (default <out>.training.json)");
  cmd_extract->add_option("--prompt", extract.prompt, "Rewrite prompt file (default: shipped prompt)");
  cmd_extract->add_option("--alpha", extract.alpha, "Quality threshold alpha (default 0.9)");
  cmd_extract->add_flag("--json", extract.json, "Print a JSON summary");

  FuseApplyArgs apply;
  auto* cmd_apply = app.add_subcommand("fuse-apply", "Retry failed records with the fused rewriter");
  add_config_flags(*cmd_apply, apply.config);
  cmd_apply->add_option("--out", apply.out, "Write here instead of updating the manifest in place");
  cmd_apply->add_flag("--json", apply.json, "Print a JSON summary");

  FilterArgs filter;
  auto* cmd_filter = app.add_subcommand("filter", "Keep records above the threshold, one per original text");
  cmd_filter->add_option("--manifest", filter.manifest, "Scored manifest")->required();
  cmd_filter->add_option("--out", filter.out, "Filtered manifest")->required();
  add_threshold_flags(*cmd_filter, filter.threshold);
  cmd_filter->add_flag("--json", filter.json, "Print a JSON summary");

  ExportArgs exp;
  auto* cmd_export = app.add_subcommand("export", "Write chat-template training records");
  cmd_export->add_option("--manifest", exp.manifest, "Filtered (or scored) manifest")->required();
  cmd_export->add_option("--out", exp.out, "Export JSONL")->required();
  cmd_export->add_option("--mode", exp.mode, "Response source: golden or continue")
      ->check(CLI::IsMember({"golden", "continue"}));
  cmd_export->add_option("--continuations", exp.continuations, "JSONL of {id, response} for continue mode");
  cmd_export->add_option("--template", exp.chat_template, "Chat template file (default: shipped template)");
  cmd_export->add_option("--bundle", exp.bundle, "Copy audio into this directory and reference it relatively");
  cmd_export->add_option("--rendered", exp.rendered, "Also write rendered chats as JSONL of {id, text}");
  add_threshold_flags(*cmd_export, exp.threshold);
  cmd_export->add_flag("--json", exp.json, "Print a JSON summary");

  CostArgs cost;
  auto* cmd_cost = app.add_subcommand("cost", "Annotation cost from human and GPU hours");
  cmd_cost->add_option("--human-hours", cost.human_hours, "Human annotation hours");
  cmd_cost->add_option("--gpu-hours", cost.gpu_hours, "GPU hours");
  cmd_cost->add_option("--human-rate", cost.human_rate, "Cost per human hour (default 7.50)");
  cmd_cost->add_option("--gpu-rate", cost.gpu_rate, "Cost per GPU hour (default 0.42)");
  cmd_cost->add_option("--plan", cost.plan, "Cost plan JSON {human_hours, gpu_hours, human_rate?, gpu_rate?}");
  cmd_cost->add_flag("--json", cost.json, "Print a JSON breakdown");

  ConsistencyArgs consistency;
  auto* cmd_consistency =
      app.add_subcommand("consistency", "How often the SIM-best transcript is also the WER-best one");
  cmd_consistency->add_option("--manifest", consistency.manifest, "Scored manifest")->required();
  cmd_consistency->add_flag("--json", consistency.json, "Print JSON");

  const bool json_out = wants_json(argc, argv);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (cmd_synth->parsed()) return run_synthesize(synth);
    if (cmd_score->parsed()) return run_score(score);
    if (cmd_report->parsed()) return run_report(report);
    if (cmd_extract->parsed()) return run_fuse_extract(extract);
    if (cmd_apply->parsed()) return run_fuse_apply(apply);
    if (cmd_filter->parsed()) return run_filter(filter);
    if (cmd_export->parsed()) return run_export(exp);
    if (cmd_cost->parsed()) return run_cost(cost);
    if (cmd_consistency->parsed()) return run_consistency(consistency);
  } catch (const ifg::ConfigError& e) {
    return fail("config", e.what(), json_out);
  } catch (const ifg::ParseError& e) {
    return fail("parse", e.what(), json_out);
  } catch (const ifg::InvalidInput& e) {
    return fail("input", e.what(), json_out);
  } catch (const ifg::StorageError& e) {
    return fail("storage", e.what(), json_out);
  } catch (const ifg::ProviderUnavailable& e) {
    return fail("provider", e.what(), json_out);
  }
  return kExitError;
}
