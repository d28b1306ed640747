#include "instructforge/exporter/exporter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "instructforge/errors.hpp"
#include "instructforge/util/files.hpp"

namespace instructforge::exporter {

using nlohmann::json;

namespace {

constexpr std::string_view kStart = "<|im_start|>";
constexpr std::string_view kEnd = "<|im_end|>";
constexpr std::string_view kDelimiterStem = "<|im_";
const std::vector<std::string> kPlaceholders = {"{document}", "{speech}", "{response}"};

void check_field(std::string_view name, std::string_view value) {
  if (value.find(kDelimiterStem) != std::string_view::npos) {
    throw InvalidInput("export field '" + std::string(name) + "' contains a chat delimiter");
  }
}

// Literal text of a role block up to its first placeholder, without the
// surrounding line breaks.
std::string role_text(const std::string& tmpl, std::string_view role) {
  const std::string head = std::string(kStart) + std::string(role) + "\n";
  const auto start = tmpl.find(head);
  if (start == std::string::npos) throw InvalidInput("chat template lacks a " + std::string(role) + " block");
  const auto from = start + head.size();
  const auto stop = std::min(tmpl.find('{', from), tmpl.find(kEnd, from));
  if (stop == std::string::npos) throw InvalidInput("chat template " + std::string(role) + " block is unterminated");
  return std::string(util::trim(std::string_view(tmpl).substr(from, stop - from)));
}

std::vector<std::string> lines_of(std::string_view content) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto end = std::min(content.find('\n', pos), content.size());
    out.emplace_back(content.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

}  // namespace

ThresholdUnit threshold_unit_from_string(std::string_view text) {
  if (text == "fraction") return ThresholdUnit::fraction;
  if (text == "percent") return ThresholdUnit::percent;
  throw InvalidInput("unknown threshold unit '" + std::string(text) + "' (fraction or percent)");
}

double to_fraction(double value, ThresholdUnit unit) {
  const double t = unit == ThresholdUnit::percent ? value / 100.0 : value;
  if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
    throw InvalidInput("threshold out of range: " + std::to_string(value));
  }
  return t;
}

std::vector<ManifestEntry> filter_and_dedupe(std::span<const ManifestEntry> entries, double threshold) {
  std::map<std::string, const ManifestEntry*> best;
  for (const auto& e : entries) {
    if (!e.report || e.stage < Stage::scored || e.failed) continue;
    const double q = e.report->q();
    if (!(q > threshold)) continue;
    const std::string key(util::trim(e.record.original_text));
    auto [it, inserted] = best.try_emplace(key, &e);
    if (inserted) continue;
    const double held = it->second->report->q();
    if (q > held || (q == held && e.record.id < it->second->record.id)) it->second = &e;
  }
  std::vector<ManifestEntry> out;
  for (const auto& [_, e] : best) out.push_back(*e);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.record.id < b.record.id; });
  return out;
}

AlignmentMode alignment_mode_from_string(std::string_view text) {
  if (text == "golden") return AlignmentMode::golden;
  if (text == "continue" || text == "continuation") return AlignmentMode::continuation;
  throw InvalidInput("unknown alignment mode '" + std::string(text) + "' (golden or continue)");
}

void to_json(json& j, const ExportRecord& r) {
  j = json{{"id", r.id},
           {"system", r.system},
           {"document", r.document},
           {"user_instruction", r.user_instruction},
           {"speech_path", r.speech_path},
           {"response", r.response}};
}

void from_json(const json& j, ExportRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.system = j.at("system").get<std::string>();
  r.document = j.at("document").get<std::string>();
  r.user_instruction = j.at("user_instruction").get<std::string>();
  r.speech_path = j.at("speech_path").get<std::string>();
  r.response = j.at("response").get<std::string>();
}

ChatTemplate ChatTemplate::load(const std::filesystem::path& path) {
  try {
    return from_text(util::read_file(path));
  } catch (const StorageError& e) {
    throw ConfigError(std::string("chat template: ") + e.what());
  }
}

ChatTemplate ChatTemplate::from_text(std::string text) {
  ChatTemplate t;
  t.text_ = std::move(text);
  std::size_t pos = 0;
  std::vector<std::string> seen;
  while (pos <= t.text_.size()) {
    std::size_t next = std::string::npos;
    std::string which;
    for (const auto& p : kPlaceholders) {
      const auto at = t.text_.find(p, pos);
      if (at < next) {
        next = at;
        which = p;
      }
    }
    t.pieces_.push_back({false, t.text_.substr(pos, next == std::string::npos ? std::string::npos : next - pos)});
    if (next == std::string::npos) break;
    if (std::find(seen.begin(), seen.end(), which) != seen.end()) {
      throw InvalidInput("chat template repeats " + which);
    }
    seen.push_back(which);
    t.pieces_.push_back({true, which});
    pos = next + which.size();
  }
  if (seen.size() != kPlaceholders.size()) {
    throw InvalidInput("chat template must contain {document}, {speech} and {response} once each");
  }
  // Parsing relies on every literal between placeholders carrying a delimiter.
  for (std::size_t i = 1; i + 1 < t.pieces_.size(); ++i) {
    if (!t.pieces_[i].placeholder && t.pieces_[i].text.find(kDelimiterStem) == std::string::npos) {
      throw InvalidInput("chat template placeholders must be separated by chat delimiters");
    }
  }
  t.system_ = role_text(t.text_, "system");
  t.instruction_ = role_text(t.text_, "user");
  if (t.system_.empty() || t.instruction_.empty()) {
    throw InvalidInput("chat template needs system text and a user instruction");
  }
  return t;
}

std::string speech_tag(std::string_view path) { return "<speech>" + std::string(path) + "</speech>"; }

std::string ChatTemplate::render(const ExportRecord& r) const {
  check_field("document", r.document);
  check_field("speech_path", r.speech_path);
  check_field("response", r.response);
  if (r.system != system_ || r.user_instruction != instruction_) {
    throw InvalidInput("record '" + r.id + "' does not match the template's system text or instruction");
  }
  if (r.speech_path.find('\n') != std::string::npos || r.speech_path.find("</speech>") != std::string::npos) {
    throw InvalidInput("speech path of '" + r.id + "' is not renderable");
  }
  std::string out;
  for (const auto& piece : pieces_) {
    if (!piece.placeholder) out += piece.text;
    else if (piece.text == "{document}") out += r.document;
    else if (piece.text == "{speech}") out += speech_tag(r.speech_path);
    else out += r.response;
  }
  return out;
}

ExportRecord ChatTemplate::parse(std::string_view rendered) const {
  ExportRecord r;
  r.system = system_;
  r.user_instruction = instruction_;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& piece = pieces_[i];
    if (!piece.placeholder) {
      if (rendered.substr(cursor, piece.text.size()) != piece.text) {
        throw InvalidInput("rendered chat does not follow the template");
      }
      cursor += piece.text.size();
      continue;
    }
    const bool last = i + 2 >= pieces_.size();
    const std::string& after = i + 1 < pieces_.size() ? pieces_[i + 1].text : std::string();
    std::size_t stop = 0;
    if (last) {
      if (rendered.size() < cursor + after.size() || rendered.substr(rendered.size() - after.size()) != after) {
        throw InvalidInput("rendered chat does not follow the template");
      }
      stop = rendered.size() - after.size();
    } else {
      stop = rendered.find(after, cursor);
      if (stop == std::string_view::npos) throw InvalidInput("rendered chat does not follow the template");
    }
    const std::string value(rendered.substr(cursor, stop - cursor));
    if (piece.text == "{document}") {
      r.document = value;
    } else if (piece.text == "{response}") {
      r.response = value;
    } else {
      const std::string open = "<speech>", close = "</speech>";
      if (value.size() < open.size() + close.size() || value.rfind(open, 0) != 0 ||
          value.compare(value.size() - close.size(), close.size(), close) != 0) {
        throw InvalidInput("rendered chat lacks a speech tag");
      }
      r.speech_path = value.substr(open.size(), value.size() - open.size() - close.size());
    }
    cursor = stop;
  }
  if (cursor != rendered.size()) throw InvalidInput("rendered chat has trailing text");
  return r;
}

std::map<std::string, std::string> parse_continuations(std::string_view content, std::string_view source_name) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (const auto& line : lines_of(content)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      const auto id = j.at("id").get<std::string>();
      if (!out.emplace(id, j.at("response").get<std::string>()).second) {
        throw ParseError(std::string(source_name), line_no, "duplicate id '" + id + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string(source_name), line_no, e.what());
    }
  }
  return out;
}

std::map<std::string, std::string> load_continuations(const std::filesystem::path& path) {
  return parse_continuations(util::read_file(path), path.string());
}

ExportResult build_export(std::span<const ManifestEntry> selected, const ChatTemplate& chat,
                          const ExportOptions& options) {
  if (options.mode == AlignmentMode::continuation && !options.continuations) {
    throw InvalidInput("continue mode needs a continuation file");
  }
  ExportResult out;
  for (const auto& e : selected) {
    const auto& id = e.record.id;
    auto skip = [&](const std::string& why) { out.warnings.push_back("record '" + id + "' excluded: " + why); };
    if (!e.report) {
      skip("not scored");
      continue;
    }
    std::optional<std::string> response;
    if (options.mode == AlignmentMode::golden) {
      response = e.record.reference_response;
      if (!response || util::trim(*response).empty()) {
        skip("no reference response");
        continue;
      }
    } else {
      const auto it = options.continuations->find(id);
      if (it == options.continuations->end() || util::trim(it->second).empty()) {
        skip("no continuation");
        continue;
      }
      response = it->second;
    }
    if (!e.record.context_document || util::trim(*e.record.context_document).empty()) {
      skip("no context document");
      continue;
    }
    const auto& speech = e.report->selected().speech;
    if (!speech || !std::filesystem::is_regular_file(speech->audio_path)) {
      skip("audio file missing");
      continue;
    }
    ExportRecord r{id, chat.system(), *e.record.context_document, chat.instruction(), speech->audio_path, *response};
    try {
      (void)chat.render(r);
    } catch (const InvalidInput& ex) {
      skip(ex.what());
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

std::string serialize_export(std::span<const ExportRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<ExportRecord> parse_export(std::string_view content, std::string_view source_name) {
  std::vector<ExportRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : lines_of(content)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<ExportRecord>());
    } catch (const json::exception& e) {
      throw ParseError(std::string(source_name), line_no, e.what());
    }
  }
  return out;
}

ExportResult export_chat(std::span<const ManifestEntry> selected, const ChatTemplate& chat,
                         const ExportOptions& options, const std::filesystem::path& out_path) {
  auto result = build_export(selected, chat, options);
  std::filesystem::path target = out_path;
  if (options.bundle_dir) {
    const auto audio_dir = *options.bundle_dir / "audio";
    std::error_code ec;
    std::filesystem::create_directories(audio_dir, ec);
    if (ec) throw StorageError("cannot create " + audio_dir.string() + ": " + ec.message());
    for (auto& r : result.records) {
      const std::filesystem::path relative = std::filesystem::path("audio") / (r.id + ".wav");
      std::filesystem::copy_file(r.speech_path, *options.bundle_dir / relative,
                                 std::filesystem::copy_options::overwrite_existing, ec);
      if (ec) throw StorageError("cannot copy " + r.speech_path + ": " + ec.message());
      r.speech_path = relative.generic_string();
    }
    if (out_path.is_relative()) target = *options.bundle_dir / out_path;
  }
  util::atomic_write(target, serialize_export(result.records));
  return result;
}

std::string Money::to_string() const {
  const std::int64_t whole = cents / 100;
  const std::int64_t frac = cents % 100;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(whole), static_cast<long long>(frac));
  return buf;
}

CostPlan parse_cost_plan(const json& j) {
  if (!j.is_object()) throw ConfigError("cost plan must be a JSON object");
  CostPlan plan;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw ConfigError("cost plan key '" + key + "' must be a number");
    const double v = value.get<double>();
    if (key == "human_hours") plan.human_hours = v;
    else if (key == "gpu_hours") plan.gpu_hours = v;
    else if (key == "human_rate") plan.human_rate = v;
    else if (key == "gpu_rate") plan.gpu_rate = v;
    else throw ConfigError("unknown cost plan key '" + key + "'");
  }
  return plan;
}

Money estimate_cost(const CostPlan& plan) {
  for (const double v : {plan.human_hours, plan.gpu_hours, plan.human_rate, plan.gpu_rate}) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("cost plan values must be finite and non-negative");
  }
  const double total = plan.human_hours * plan.human_rate + plan.gpu_hours * plan.gpu_rate;
  return Money{std::llround(total * 100.0)};
}

}  // namespace instructforge::exporter
