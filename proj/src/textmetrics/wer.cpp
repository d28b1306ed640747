#include <algorithm>
#include <numeric>

#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge::textmetrics {

std::size_t edit_distance(std::span<const std::string> reference,
                          std::span<const std::string> hypothesis) {
  // Single-row dynamic program over the hypothesis.
  std::vector<std::size_t> row(hypothesis.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= reference.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= hypothesis.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t substitute = diag + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, substitute});
      diag = up;
    }
  }
  return row.back();
}

WerResult wer_detail(std::string_view reference, std::string_view hypothesis,
                     const NormalizationPolicy& policy) {
  const auto ref = normalize(reference, policy);
  const auto hyp = normalize(hypothesis, policy);
  WerResult r;
  r.reference_tokens = ref.size();
  r.edits = edit_distance(ref, hyp);
  if (ref.empty()) {
    r.empty_reference = !hyp.empty();
    r.value = static_cast<double>(hyp.size());
    return r;
  }
  r.value = static_cast<double>(r.edits) / static_cast<double>(ref.size());
  return r;
}

double wer(std::string_view reference, std::string_view hypothesis,
           const NormalizationPolicy& policy) {
  return wer_detail(reference, hypothesis, policy).value;
}

}  // namespace instructforge::textmetrics
