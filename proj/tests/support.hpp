#pragma once

// Shared fixtures: scratch directories, provider specs and small corpora.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instructforge/core/config.hpp"
#include "instructforge/core/manifest.hpp"
#include "instructforge/core/model.hpp"
#include "instructforge/pipeline/pipeline.hpp"
#include "instructforge/providers/spec.hpp"

namespace testing {

namespace fs = std::filesystem;
using nlohmann::json;

class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "instructforge-test-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << content;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline instructforge::providers::ProviderSpec mock(instructforge::providers::ProviderRole role, std::string name,
                                                   json params) {
  instructforge::providers::ProviderSpec s;
  s.role = role;
  s.name = std::move(name);
  s.kind = instructforge::providers::ProviderKind::mock;
  s.mock = std::move(params);
  return s;
}

inline instructforge::providers::ProviderSpec rewriter(std::string name, json params) {
  return mock(instructforge::providers::ProviderRole::rewriter, std::move(name), std::move(params));
}
inline instructforge::providers::ProviderSpec transcriber(std::string name, json params) {
  return mock(instructforge::providers::ProviderRole::transcriber, std::move(name), std::move(params));
}
inline instructforge::providers::ProviderSpec embedder(std::string name, json params) {
  return mock(instructforge::providers::ProviderRole::embedder, std::move(name), std::move(params));
}

// Offline configuration rooted in `dir`: oracle transcriber, two hashing
// embedders, no rewriters.
inline instructforge::PipelineConfig base_config(const fs::path& dir) {
  instructforge::PipelineConfig c;
  c.transcribers = {transcriber("asr-oracle", {{"type", "oracle"}})};
  c.embedders = {embedder("emb-a", {{"type", "hashing"}, {"seed", 1}}),
                 embedder("emb-b", {{"type", "hashing"}, {"seed", 2}, {"ngram", 2}})};
  c.cache_dir = dir / "cache";
  c.manifest_path = dir / "manifest.jsonl";
  c.max_parallel_requests = 1;
  return c;
}

inline instructforge::InstructionRecord record(std::string id, std::string text, std::string dataset = "corpus") {
  instructforge::InstructionRecord r;
  r.id = std::move(id);
  r.dataset = std::move(dataset);
  r.original_text = std::move(text);
  return r;
}

// Deterministic question text; every `digit_every`-th record mentions three
// years.
inline std::vector<instructforge::InstructionRecord> synthetic_corpus(std::size_t n, std::size_t digit_every = 0) {
  static const std::vector<std::string> subjects = {"river", "museum", "treaty", "election", "bridge",
                                                    "novel", "festival", "harbor", "library", "mountain"};
  static const std::vector<std::string> verbs = {"opened", "closed", "began", "ended", "changed"};
  std::vector<instructforge::InstructionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string subject = subjects[i % subjects.size()];
    std::string text;
    if (digit_every != 0 && i % digit_every == 0) {
      text = "What did the " + subject + " record in " + std::to_string(1900 + i % 100) + ", " +
             std::to_string(1950 + (i * 3) % 50) + " and " + std::to_string(2000 + (i * 7) % 25) + "?";
    } else {
      const std::string tag{static_cast<char>('a' + i % 26), static_cast<char>('a' + (i / 26) % 26)};
      text = "Which " + subject + " " + verbs[(i / 3) % verbs.size()] + " after the storm near the " +
             subjects[(i * 7 + 3) % subjects.size()] + " marked " + tag + "?";
    }
    char id[32];
    std::snprintf(id, sizeof id, "r%04zu", i);
    out.push_back(record(id, text));
  }
  return out;
}

// Replaces every occurrence of `root` so manifests from different scratch
// directories compare equal.
inline std::string without_root(std::string text, const fs::path& root) {
  const std::string needle = root.string();
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos)) {
    text.replace(pos, needle.size(), "<root>");
  }
  return text;
}

inline std::string corpus_jsonl(const std::vector<instructforge::InstructionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j = {{"id", r.id}, {"question", r.original_text}};
    if (r.context_document) j["context"] = *r.context_document;
    if (r.reference_response) j["answer"] = *r.reference_response;
    out += j.dump() + "\n";
  }
  return out;
}

// A scored candidate whose single transcript has the given quality under one
// embedder.
inline instructforge::CandidateScoring scored_candidate(const std::string& record_id,
                                                        instructforge::CandidateSource source, std::string text,
                                                        double q) {
  instructforge::CandidateScoring c;
  c.candidate = {record_id, std::move(source), text};
  c.transcripts = {{"asr", text, false}};
  c.similarity = {{q}};
  c.f = {q};
  c.wer = {0.0};
  c.q = q;
  c.best_transcript = 0;
  return c;
}

// Scored manifest entry with an original candidate and, optionally, one
// rewrite from rewriter "rw".
inline instructforge::ManifestEntry scored_entry(const std::string& id, const std::string& text, double q_original,
                                                 std::optional<std::pair<std::string, double>> rewrite = std::nullopt,
                                                 const std::string& dataset = "corpus", double alpha = 0.9) {
  instructforge::ManifestEntry e;
  e.record = record(id, text, dataset);
  e.stage = instructforge::Stage::scored;
  e.config_hash = "test";
  e.method = rewrite ? "ours" : "original";
  instructforge::QualityReport r;
  r.record_id = id;
  r.alpha = alpha;
  r.embedders = {"emb"};
  r.per_candidate.push_back(scored_candidate(id, instructforge::CandidateSource::original(), text, q_original));
  if (rewrite) {
    r.per_candidate.push_back(
        scored_candidate(id, instructforge::CandidateSource::rewriter("rw", 0), rewrite->first, rewrite->second));
  }
  instructforge::pipeline::reselect(r);
  e.report = std::move(r);
  return e;
}

}  // namespace testing
