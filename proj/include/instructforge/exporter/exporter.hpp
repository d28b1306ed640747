#pragma once

// Final dataset assembly: threshold filtering with per-original dedupe,
// chat-template export and the annotation cost estimate.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instructforge/core/manifest.hpp"

namespace instructforge::exporter {

enum class ThresholdUnit { fraction, percent };

ThresholdUnit threshold_unit_from_string(std::string_view text);

// Converts a threshold to [0, 1] ("85" percent becomes 0.85). Throws
// InvalidInput outside the valid range.
double to_fraction(double value, ThresholdUnit unit);

// Keeps scored, non-failed records whose selected q is strictly above
// `threshold`; among records sharing an original text (after trimming) keeps
// the highest q, the smallest id on ties. Sorted by id.
std::vector<ManifestEntry> filter_and_dedupe(std::span<const ManifestEntry> entries, double threshold);

enum class AlignmentMode { golden, continuation };

AlignmentMode alignment_mode_from_string(std::string_view text);

struct ExportRecord {
  std::string id;
  std::string system;
  std::string document;
  std::string user_instruction;
  std::string speech_path;
  std::string response;

  bool operator==(const ExportRecord&) const = default;
};

void to_json(nlohmann::json& j, const ExportRecord& r);
void from_json(const nlohmann::json& j, ExportRecord& r);

// A chat template with {document}, {speech} and {response} placeholders. The
// system text and the user instruction are read from the template itself.
class ChatTemplate {
 public:
  static ChatTemplate load(const std::filesystem::path& path);
  static ChatTemplate from_text(std::string text);

  const std::string& text() const { return text_; }
  const std::string& system() const { return system_; }
  const std::string& instruction() const { return instruction_; }

  // Throws InvalidInput when a field contains a chat delimiter.
  std::string render(const ExportRecord& record) const;
  // Inverse of render; the id is not part of the rendering and stays empty.
  ExportRecord parse(std::string_view rendered) const;

 private:
  struct Piece {
    bool placeholder = false;
    std::string text;
  };
  std::string text_;
  std::string system_;
  std::string instruction_;
  std::vector<Piece> pieces_;
};

// "<speech>path</speech>"
std::string speech_tag(std::string_view path);

// JSONL of {"id", "response"}.
std::map<std::string, std::string> parse_continuations(std::string_view content,
                                                       std::string_view source_name = "<continuations>");
std::map<std::string, std::string> load_continuations(const std::filesystem::path& path);

struct ExportOptions {
  AlignmentMode mode = AlignmentMode::golden;
  // Required in continuation mode.
  std::optional<std::map<std::string, std::string>> continuations;
  // Copy audio into <bundle>/audio/ and reference it relative to the bundle.
  std::optional<std::filesystem::path> bundle_dir;
};

struct ExportResult {
  std::vector<ExportRecord> records;
  std::vector<std::string> warnings;
};

// Records lacking a response, a context document or readable audio are
// excluded with a warning.
ExportResult build_export(std::span<const ManifestEntry> selected, const ChatTemplate& chat,
                          const ExportOptions& options);

std::string serialize_export(std::span<const ExportRecord> records);
std::vector<ExportRecord> parse_export(std::string_view content, std::string_view source_name = "<export>");

// Builds and writes the export JSONL (inside the bundle when one is set).
ExportResult export_chat(std::span<const ManifestEntry> selected, const ChatTemplate& chat,
                         const ExportOptions& options, const std::filesystem::path& out_path);

struct Money {
  std::int64_t cents = 0;

  std::string to_string() const;
  bool operator==(const Money&) const = default;
};

struct CostPlan {
  double human_hours = 0.0;
  double gpu_hours = 0.0;
  double human_rate = 7.50;
  double gpu_rate = 0.42;
};

// Strict: unknown keys throw ConfigError.
CostPlan parse_cost_plan(const nlohmann::json& j);

// human_hours * human_rate + gpu_hours * gpu_rate, rounded to the cent.
// Throws InvalidInput on negative or non-finite inputs.
Money estimate_cost(const CostPlan& plan);

}  // namespace instructforge::exporter
