#include "instructforge/core/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "instructforge/errors.hpp"
#include "instructforge/util/files.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    std::string_view line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (end == content.size()) break;
    pos = end + 1;
  }
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

}  // namespace

CorpusLoad parse_corpus(std::string_view content, std::string_view dataset_tag,
                        std::string_view source_name) {
  CorpusLoad out;
  std::unordered_set<std::string> ids;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (util::trim(line).empty()) return;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(source_name), line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(std::string(source_name), line_no, "expected a JSON object");

    const auto question = optional_string(obj, "question");
    if (!question || util::trim(*question).empty()) {
      ++out.skipped;
      out.warnings.push_back(std::string(source_name) + ":" + std::to_string(line_no) +
                             ": empty question, record skipped");
      return;
    }

    InstructionRecord r;
    const auto id = optional_string(obj, "id");
    r.id = id && !id->empty() ? *id : std::string(dataset_tag) + "-" + std::to_string(line_no);
    r.dataset = std::string(dataset_tag);
    r.original_text = *question;
    r.context_document = optional_string(obj, "context");
    r.reference_response = optional_string(obj, "answer");
    if (!ids.insert(r.id).second) {
      throw ParseError(std::string(source_name), line_no, "duplicate record id '" + r.id + "'");
    }
    if (auto w = long_text_warning(r.original_text)) {
      out.warnings.push_back("record " + r.id + ": " + *w);
    }
    out.records.push_back(std::move(r));
  });
  return out;
}

CorpusLoad load_corpus(const std::filesystem::path& path, std::string_view dataset_tag) {
  return parse_corpus(util::read_file(path), dataset_tag, path.string());
}

std::vector<SpeakerProfile> parse_speaker_catalog(std::string_view content,
                                                  std::string_view source_name) {
  std::vector<SpeakerProfile> catalog;
  std::unordered_set<std::string> ids;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (util::trim(line).empty()) return;
    SpeakerProfile s;
    try {
      s = json::parse(line).get<SpeakerProfile>();
    } catch (const json::exception& e) {
      throw ParseError(std::string(source_name), line_no, e.what());
    }
    if (util::trim(s.description).empty()) {
      throw ParseError(std::string(source_name), line_no, "speaker '" + s.id + "' has no description");
    }
    if (!ids.insert(s.id).second) {
      throw ParseError(std::string(source_name), line_no, "duplicate speaker id '" + s.id + "'");
    }
    catalog.push_back(std::move(s));
  });
  return catalog;
}

std::vector<SpeakerProfile> load_speaker_catalog(const std::filesystem::path& path) {
  return parse_speaker_catalog(util::read_file(path), path.string());
}

std::size_t speaker_index(std::uint64_t seed, std::string_view record_id, std::size_t catalog_size) {
  if (catalog_size == 0) throw ConfigError("speaker catalog is empty");
  const std::uint64_t n = catalog_size;
  // Reject the top sliver of the 64-bit range so `x % n` stays unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  const std::string seed_text = std::to_string(seed);
  for (std::uint64_t round = 0;; ++round) {
    const std::string digest = util::sha256_fields({seed_text, record_id, std::to_string(round)});
    const std::uint64_t x = util::hash64(digest);
    if (x >= threshold) return static_cast<std::size_t>(x % n);
  }
}

std::vector<InstructionRecord> assign_speakers(std::span<const InstructionRecord> records,
                                               std::span<const SpeakerProfile> catalog,
                                               std::uint64_t seed) {
  if (catalog.empty()) throw ConfigError("speaker catalog is empty");
  std::vector<InstructionRecord> out(records.begin(), records.end());
  for (auto& r : out) r.speaker_id = catalog[speaker_index(seed, r.id, catalog.size())].id;
  return out;
}

const SpeakerProfile& find_speaker(std::span<const SpeakerProfile> catalog, std::string_view id) {
  const auto it = std::find_if(catalog.begin(), catalog.end(),
                               [id](const SpeakerProfile& s) { return s.id == id; });
  if (it == catalog.end()) throw InvalidInput("unknown speaker id '" + std::string(id) + "'");
  return *it;
}

std::vector<CandidateText> dedupe_candidates(std::span<const CandidateText> candidates,
                                             const textmetrics::NormalizationPolicy& policy) {
  std::vector<CandidateText> out;
  std::unordered_set<std::string> seen;
  bool have_original = false;
  for (const auto& c : candidates) {
    if (c.source.kind == SourceKind::original) {
      if (have_original) throw InvalidInput("record " + c.record_id + " has two original candidates");
      have_original = true;
    }
    if (util::trim(c.text).empty()) continue;
    if (seen.insert(textmetrics::normalize_text(c.text, policy)).second) out.push_back(c);
  }
  return out;
}

std::optional<std::string> long_text_warning(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t words = 0;
  for (std::string w; in >> w;) ++words;
  if (words <= kLongTextWords) return std::nullopt;
  return "text has " + std::to_string(words) + " words (more than " +
         std::to_string(kLongTextWords) + ")";
}

}  // namespace instructforge
