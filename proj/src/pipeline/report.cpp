#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "instructforge/errors.hpp"
#include "instructforge/pipeline/pipeline.hpp"

namespace instructforge::pipeline {

using nlohmann::json;

namespace {

struct Group {
  std::vector<double> q;
  std::vector<textmetrics::ConsistencyInput> consistency;
  std::vector<double> wer;
  std::size_t failed = 0;
};

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

MetricsRow finish(const std::string& method, const std::string& dataset, const Group& g, double alpha) {
  MetricsRow row;
  row.method = method;
  row.dataset = dataset;
  row.n = g.q.size();
  row.failed = g.failed;
  if (!g.q.empty()) {
    row.sim = textmetrics::sim_aggregate(g.q);
    row.pass = textmetrics::pass_rate(g.q, alpha);
  }
  try {
    row.consistency = textmetrics::sim_wer_consistency(g.consistency).value;
  } catch (const InvalidInput&) {
    row.consistency.reset();
  }
  row.wer_mean = mean_of(g.wer);
  if (!g.wer.empty()) row.wer_max = *std::max_element(g.wer.begin(), g.wer.end());
  return row;
}

MetricsRow average_row(const std::string& method, std::span<const MetricsRow> rows) {
  MetricsRow avg;
  avg.method = method;
  avg.dataset = "Average";
  std::vector<double> sims, passes, cons, wers;
  for (const auto& r : rows) {
    avg.n += r.n;
    avg.failed += r.failed;
    if (r.n == 0) continue;
    sims.push_back(r.sim);
    passes.push_back(r.pass);
    if (r.consistency) cons.push_back(*r.consistency);
    if (r.wer_mean) wers.push_back(*r.wer_mean);
    if (r.wer_max) avg.wer_max = std::max(avg.wer_max.value_or(0.0), *r.wer_max);
  }
  avg.sim = mean_of(sims).value_or(0.0);
  avg.pass = mean_of(passes).value_or(0.0);
  avg.consistency = mean_of(cons);
  avg.wer_mean = mean_of(wers);
  return avg;
}

std::string opt_fixed(const std::optional<double>& v, int decimals) {
  return v ? textmetrics::format_fixed(*v, decimals) : "-";
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

MetricsReport build_report(std::span<const ManifestEntry> entries, std::optional<double> alpha) {
  std::optional<double> manifest_alpha;
  std::vector<std::string> method_order;
  std::map<std::string, std::map<std::string, Group>> groups;
  for (const auto& e : entries) {
    if (!e.report || e.stage < Stage::scored) continue;
    if (!manifest_alpha) manifest_alpha = e.report->alpha;
    if (!groups.count(e.method)) method_order.push_back(e.method);
    Group& g = groups[e.method][e.record.dataset];
    const auto& report = *e.report;
    g.q.push_back(report.q());
    if (e.failed) {
      ++g.failed;
      continue;
    }
    if (const auto* original = report.original()) g.consistency.push_back({original->f, original->wer});
    const auto& selected = report.selected();
    if (report.selected_transcript && *report.selected_transcript < selected.transcripts.size()) {
      const auto& t = selected.transcripts[*report.selected_transcript];
      if (!t.failed) g.wer.push_back(textmetrics::wer(e.record.original_text, t.text));
    }
  }
  if (!manifest_alpha) throw InvalidInput("report: manifest has no scored records");

  MetricsReport out;
  out.alpha = alpha.value_or(*manifest_alpha);
  for (const auto& method : method_order) {
    std::vector<MetricsRow> rows;
    for (const auto& [dataset, g] : groups[method]) rows.push_back(finish(method, dataset, g, out.alpha));
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    if (rows.size() > 1) out.rows.push_back(average_row(method, rows));
  }
  return out;
}

json to_json_value(const MetricsReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"method", r.method},
                    {"dataset", r.dataset},
                    {"n", r.n},
                    {"failed", r.failed},
                    {"sim", r.sim},
                    {"pass", r.pass},
                    {"consistency", opt_json(r.consistency)},
                    {"wer_mean", opt_json(r.wer_mean)},
                    {"wer_max", opt_json(r.wer_max)}});
  }
  return {{"alpha", report.alpha}, {"rows", rows}};
}

std::string render_table(const MetricsReport& report) {
  const std::vector<std::string> header = {"Method", "Dataset", "N", "Failed", "SIM", "Pass", "Consistency",
                                           "WER mean", "WER max"};
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : report.rows) {
    cells.push_back({r.method, r.dataset, std::to_string(r.n), std::to_string(r.failed),
                     textmetrics::format_fixed(r.sim), textmetrics::format_fixed(r.pass),
                     opt_fixed(r.consistency, 2), opt_fixed(r.wer_mean, 4), opt_fixed(r.wer_max, 4)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  out << "alpha = " << textmetrics::format_fixed(report.alpha) << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      const auto& text = cells[i][c];
      const std::string pad(width[c] - text.size(), ' ');
      // Text columns align left, numbers right.
      if (c < 2) out << text << pad;
      else out << pad << text;
      out << (c + 1 < cells[i].size() ? "  " : "");
    }
    out << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

std::vector<ManifestEntry> rescore(std::span<const ManifestEntry> entries, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in (0, 1]");
  std::vector<ManifestEntry> out(entries.begin(), entries.end());
  for (auto& e : out) {
    if (!e.report) continue;
    auto& report = *e.report;
    for (auto& c : report.per_candidate) {
      c.f.clear();
      for (const auto& row : c.similarity) {
        c.f.push_back(row.empty() ? 0.0
                                  : std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
      }
      if (c.f.empty()) {
        c.q = 0.0;
        c.best_transcript.reset();
      } else {
        const auto quality = textmetrics::quality_q(c.f);
        c.q = quality.q;
        c.best_transcript = quality.argmax;
      }
    }
    report.alpha = alpha;
    reselect(report);
  }
  return out;
}

}  // namespace instructforge::pipeline
