#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "instructforge/errors.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge::textmetrics {

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.model != v.model) {
    throw InvalidInput("cosine: model mismatch '" + u.model + "' vs '" + v.model + "'");
  }
  if (u.values.empty() || u.values.size() != v.values.size()) {
    throw InvalidInput("cosine: dimension mismatch for model '" + u.model + "'");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double a = u.values[i];
    const double b = v.values[i];
    if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("cosine: non-finite entry");
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) throw InvalidInput("cosine: zero vector");
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

std::vector<double> per_model_cosines(std::span<const EmbeddingVector> original,
                                      std::span<const EmbeddingVector> transcript) {
  if (original.empty() || original.size() != transcript.size()) {
    throw InvalidInput("similarity: embedder sets differ in size");
  }
  auto by_model = [](std::span<const EmbeddingVector> side) {
    std::vector<const EmbeddingVector*> sorted;
    for (const auto& e : side) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->model < b->model; });
    return sorted;
  };
  const auto a = by_model(original);
  const auto b = by_model(transcript);
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t z = 0; z < a.size(); ++z) {
    if (a[z]->model != b[z]->model) {
      throw InvalidInput("similarity: embedder sets differ ('" + a[z]->model + "' vs '" +
                         b[z]->model + "')");
    }
    if (z > 0 && a[z]->model == a[z - 1]->model) {
      throw InvalidInput("similarity: duplicate embedder '" + a[z]->model + "'");
    }
    out.push_back(cosine(*a[z], *b[z]));
  }
  return out;
}

double similarity_f(std::span<const EmbeddingVector> original,
                    std::span<const EmbeddingVector> transcript) {
  const auto cosines = per_model_cosines(original, transcript);
  return std::accumulate(cosines.begin(), cosines.end(), 0.0) /
         static_cast<double>(cosines.size());
}

Quality quality_q(std::span<const double> f_values) {
  if (f_values.empty()) throw InvalidInput("quality_q: no transcripts");
  Quality best{f_values[0], 0};
  for (std::size_t j = 1; j < f_values.size(); ++j) {
    if (f_values[j] > best.q) best = {f_values[j], j};
  }
  return best;
}

std::size_t select_best(std::span<const CandidateScore> candidates) {
  if (candidates.empty()) throw InvalidInput("select_best: no candidates");
  auto preferred = [](const CandidateScore& a, const CandidateScore& b) {
    if (a.q != b.q) return a.q > b.q;
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.config_order < b.config_order;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (preferred(candidates[i], candidates[best])) best = i;
  }
  return best;
}

double pass_rate(std::span<const double> q_values, double alpha) {
  if (q_values.empty()) throw InvalidInput("pass_rate: empty input");
  const auto passed = std::count_if(q_values.begin(), q_values.end(),
                                    [alpha](double q) { return q > alpha; });
  return static_cast<double>(passed) / static_cast<double>(q_values.size());
}

double sim_aggregate(std::span<const double> q_values) {
  if (q_values.empty()) throw InvalidInput("sim_aggregate: empty input");
  const double mean = std::accumulate(q_values.begin(), q_values.end(), 0.0) /
                      static_cast<double>(q_values.size());
  return mean * 100.0;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

ConsistencyResult sim_wer_consistency(std::span<const ConsistencyInput> records) {
  ConsistencyResult r;
  for (const auto& rec : records) {
    if (rec.f.size() < 2 || rec.f.size() != rec.wer.size()) {
      ++r.skipped;
      continue;
    }
    const std::size_t chosen = quality_q(rec.f).argmax;
    const double min_wer = *std::min_element(rec.wer.begin(), rec.wer.end());
    ++r.evaluated;
    if (rec.wer[chosen] <= min_wer) ++r.consistent;
  }
  if (r.evaluated == 0) throw InvalidInput("sim_wer_consistency: no record has two or more transcripts");
  r.value = static_cast<double>(r.consistent) / static_cast<double>(r.evaluated);
  return r;
}

}  // namespace instructforge::textmetrics
