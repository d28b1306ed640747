#pragma once

// The manifest is JSONL, one envelope per record. Later lines for an id
// supersede earlier ones, which lets the batch runner append progress as it
// goes and compact the file when it finishes.

#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instructforge/core/model.hpp"

namespace instructforge {

enum class Stage { loaded, candidates, synthesized, transcribed, scored, exported };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

struct FusionNote {
  std::string rewriter;
  double q_before = 0.0;
  bool candidate_added = false;

  bool operator==(const FusionNote&) const = default;
};

struct ManifestEntry {
  InstructionRecord record;
  Stage stage = Stage::loaded;
  std::string config_hash;
  // Label used to group report rows, e.g. "original" or "ours".
  std::string method;
  std::optional<SpeakerProfile> speaker;
  std::optional<QualityReport> report;
  std::optional<FusionNote> fusion;
  // Record-level failure: the record was kept but nothing usable came out.
  bool failed = false;
  std::vector<std::string> warnings;

  bool operator==(const ManifestEntry&) const = default;
};

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

// Canonical single-line serialization (sorted keys, shortest round-trip
// doubles).
std::string serialize_entry(const ManifestEntry& entry);

// Parses manifest text, folding repeated ids (last line wins) while keeping
// first-appearance order. Throws ParseError on malformed lines and
// StorageError when a later line moves a record to an earlier stage under the
// same config hash.
std::vector<ManifestEntry> parse_manifest(std::string_view content,
                                          std::string_view source_name = "<manifest>");
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// Replaces the manifest with exactly `entries`, atomically.
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

// Funnels appends from many workers into one file.
class ManifestWriter {
 public:
  explicit ManifestWriter(std::filesystem::path path);

  void append(const ManifestEntry& entry);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

}  // namespace instructforge
