#include "instructforge/core/manifest.hpp"

#include <unordered_map>

#include "instructforge/errors.hpp"
#include "instructforge/util/files.hpp"

namespace instructforge {

using nlohmann::json;

namespace {

constexpr std::string_view kStageNames[] = {"loaded",      "candidates", "synthesized",
                                            "transcribed", "scored",     "exported"};

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<int>(stage)]; }

Stage stage_from_string(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kStageNames); ++i) {
    if (kStageNames[i] == text) return static_cast<Stage>(i);
  }
  throw InvalidInput("unknown stage '" + std::string(text) + "'");
}

void to_json(json& j, const ManifestEntry& e) {
  j = json{{"id", e.record.id},
           {"stage", to_string(e.stage)},
           {"config_hash", e.config_hash},
           {"method", e.method},
           {"record", e.record}};
  if (e.speaker) j["speaker"] = *e.speaker;
  if (e.report) j["report"] = *e.report;
  if (e.fusion) {
    j["fusion"] = json{{"rewriter", e.fusion->rewriter},
                       {"q_before", e.fusion->q_before},
                       {"candidate_added", e.fusion->candidate_added}};
  }
  if (e.failed) j["failed"] = true;
  if (!e.warnings.empty()) j["warnings"] = e.warnings;
}

void from_json(const json& j, ManifestEntry& e) {
  e.record = j.at("record").get<InstructionRecord>();
  if (j.at("id").get<std::string>() != e.record.id) throw InvalidInput("envelope id does not match record id");
  e.stage = stage_from_string(j.at("stage").get<std::string>());
  e.config_hash = j.value("config_hash", std::string{});
  e.method = j.value("method", std::string{});
  e.speaker.reset();
  if (j.contains("speaker")) e.speaker = j.at("speaker").get<SpeakerProfile>();
  e.report.reset();
  if (j.contains("report")) e.report = j.at("report").get<QualityReport>();
  e.fusion.reset();
  if (j.contains("fusion")) {
    const auto& f = j.at("fusion");
    e.fusion = FusionNote{f.at("rewriter").get<std::string>(), f.at("q_before").get<double>(),
                          f.value("candidate_added", false)};
  }
  e.failed = j.value("failed", false);
  e.warnings = j.value("warnings", std::vector<std::string>{});
  if (e.stage >= Stage::scored && !e.report) {
    throw InvalidInput("record " + e.record.id + " is marked scored but has no quality report");
  }
}

std::string serialize_entry(const ManifestEntry& entry) { return json(entry).dump(); }

std::vector<ManifestEntry> parse_manifest(std::string_view content, std::string_view source_name) {
  std::vector<ManifestEntry> entries;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    const std::string_view line = util::trim(content.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    ManifestEntry e;
    try {
      e = json::parse(line).get<ManifestEntry>();
    } catch (const std::exception& ex) {
      throw ParseError(std::string(source_name), line_no, ex.what());
    }
    const auto [it, inserted] = index.emplace(e.record.id, entries.size());
    if (inserted) {
      entries.push_back(std::move(e));
      continue;
    }
    ManifestEntry& prev = entries[it->second];
    if (prev.config_hash == e.config_hash && e.stage < prev.stage) {
      throw StorageError(std::string(source_name) + ":" + std::to_string(line_no) + ": record " +
                         e.record.id + " moves back from " + std::string(to_string(prev.stage)) +
                         " to " + std::string(to_string(e.stage)));
    }
    prev = std::move(e);
  }
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(util::read_file(path), path.string());
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += serialize_entry(e);
    out += '\n';
  }
  util::atomic_write(path, out);
}

ManifestWriter::ManifestWriter(std::filesystem::path path) : path_(std::move(path)) {}

void ManifestWriter::append(const ManifestEntry& entry) {
  const std::string line = serialize_entry(entry);
  std::lock_guard lock(mutex_);
  util::append_line(path_, line);
}

}  // namespace instructforge
