#include <algorithm>
#include <cstdint>

#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge::textmetrics {

namespace {

struct CodepointRange {
  char32_t first;
  char32_t last;
};

// Codepoints first..last stepping by `stride` map to cp + delta.
struct LowercaseRun {
  char32_t first;
  char32_t last;
  int delta;
  int stride;
};

#include "unicode_tables.inc"

bool is_punctuation(char32_t cp) {
  const auto it = std::upper_bound(std::begin(kPunctuation), std::end(kPunctuation), cp,
                                   [](char32_t c, const CodepointRange& r) { return c < r.first; });
  if (it == std::begin(kPunctuation)) return false;
  return cp <= std::prev(it)->last;
}

bool is_whitespace(char32_t cp) {
  return std::find(std::begin(kWhitespace), std::end(kWhitespace), cp) != std::end(kWhitespace);
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  const auto it = std::upper_bound(std::begin(kLowercase), std::end(kLowercase), cp,
                                   [](char32_t c, const LowercaseRun& r) { return c < r.first; });
  if (it == std::begin(kLowercase)) return cp;
  const LowercaseRun& run = *std::prev(it);
  if (cp > run.last || (cp - run.first) % static_cast<char32_t>(run.stride) != 0) return cp;
  return static_cast<char32_t>(static_cast<std::int64_t>(cp) + run.delta);
}

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence at `pos`. Malformed input yields kInvalid and
// consumes a single byte so the caller can copy it through untouched.
char32_t decode(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kInvalid;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

std::string normalize_text(std::string_view text, const NormalizationPolicy& policy) {
  if (policy == NormalizationPolicy::identity()) return std::string(text);

  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    char32_t cp = decode(text, pos);
    if (cp == kInvalid) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(text[start]);
      continue;
    }
    if (is_whitespace(cp)) {
      if (policy.collapse_whitespace) {
        pending_space = true;
      } else {
        encode(cp, out);
      }
      continue;
    }
    if (policy.strip_punctuation && is_punctuation(cp)) continue;
    if (policy.lowercase) cp = to_lower(cp);
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    encode(cp, out);
  }
  return out;
}

std::vector<std::string> normalize(std::string_view text, const NormalizationPolicy& policy) {
  const std::string normalized = normalize_text(text, policy);
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode(normalized, pos);
    if (cp != kInvalid && is_whitespace(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.append(normalized, start, pos - start);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace instructforge::textmetrics
