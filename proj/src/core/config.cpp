#include "instructforge/core/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "instructforge/errors.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge {

using nlohmann::json;
using providers::ProviderKind;
using providers::ProviderRole;
using providers::ProviderSpec;

namespace {

const std::vector<std::string> kKeys = {
    "alpha",         "export_threshold",      "rewriters",       "synthesizer",
    "transcribers",  "embedders",             "fused_rewriter",  "seed",
    "normalization", "max_parallel_requests", "cache_dir",       "manifest_path",
    "corpus_path",   "dataset_tag",           "speaker_catalog", "prompt_path",
    "chat_template_path", "method"};

ProviderSpec spec_from(const json& j, ProviderRole role) {
  ProviderSpec s;
  s.role = role;
  try {
    s = j.get<ProviderSpec>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(providers::to_string(role)) + " spec: " + e.what());
  }
  if (j.contains("role") && s.role != role) {
    throw ConfigError("provider '" + s.name + "' listed under " + std::string(providers::to_string(role)) +
                      " but declares role " + std::string(providers::to_string(s.role)));
  }
  s.role = role;
  providers::apply_endpoint_env(s);
  return s;
}

std::vector<ProviderSpec> specs_from(const json& j, ProviderRole role) {
  if (!j.is_array()) throw ConfigError(std::string(providers::to_string(role)) + " list must be an array");
  std::vector<ProviderSpec> out;
  for (const auto& item : j) out.push_back(spec_from(item, role));
  return out;
}

void check_unique(const std::vector<ProviderSpec>& specs, std::string_view role) {
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(s.name).second) {
      throw ConfigError("duplicate " + std::string(role) + " name '" + s.name + "'");
    }
  }
}

template <typename T>
T typed(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

ProviderSpec mock_spec(ProviderRole role, std::string name, json mock) {
  ProviderSpec s;
  s.role = role;
  s.name = std::move(name);
  s.kind = ProviderKind::mock;
  s.mock = std::move(mock);
  return s;
}

}  // namespace

PipelineConfig::PipelineConfig() {
  synthesizer = mock_spec(ProviderRole::synthesizer, "mock-tts", {{"type", "payload"}});
}

std::string PipelineConfig::effective_method() const {
  if (!method.empty()) return method;
  return rewriters.empty() ? "original" : "ours";
}

void PipelineConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(export_threshold >= 0.0 && export_threshold <= 1.0)) {
    throw ConfigError("export_threshold must lie in [0, 1]");
  }
  if (transcribers.empty()) throw ConfigError("at least one transcriber is required");
  if (embedders.empty()) throw ConfigError("at least one embedder is required");
  if (max_parallel_requests == 0) throw ConfigError("max_parallel_requests must be positive");
  check_unique(rewriters, "rewriter");
  check_unique(transcribers, "transcriber");
  check_unique(embedders, "embedder");
  for (const auto* group : {&rewriters, &transcribers, &embedders}) {
    for (const auto& s : *group) s.validate();
  }
  synthesizer.validate();
  if (fused_rewriter) {
    fused_rewriter->validate();
    const bool clash = std::any_of(rewriters.begin(), rewriters.end(),
                                   [&](const ProviderSpec& s) { return s.name == fused_rewriter->name; });
    if (clash) throw ConfigError("fused rewriter name '" + fused_rewriter->name + "' clashes with a rewriter");
  }
}

std::string PipelineConfig::config_hash(std::string_view prompt_digest, std::string_view catalog_digest) const {
  auto ids = [](const std::vector<ProviderSpec>& specs) {
    json a = json::array();
    for (const auto& s : specs) a.push_back(s.identity());
    return a;
  };
  const json basis = {{"alpha", alpha},
                      {"normalization",
                       {normalization.lowercase, normalization.strip_punctuation, normalization.collapse_whitespace}},
                      {"seed", rng_seed},
                      {"rewriters", ids(rewriters)},
                      {"synthesizer", synthesizer.identity()},
                      {"transcribers", ids(transcribers)},
                      {"embedders", ids(embedders)},
                      {"prompt", prompt_digest},
                      {"catalog", catalog_digest}};
  return util::sha256_hex(basis.dump());
}

json to_json_value(const PipelineConfig& c) {
  json j = {{"alpha", c.alpha},
            {"export_threshold", c.export_threshold},
            {"rewriters", c.rewriters},
            {"synthesizer", c.synthesizer},
            {"transcribers", c.transcribers},
            {"embedders", c.embedders},
            {"seed", c.rng_seed},
            {"normalization",
             {{"lowercase", c.normalization.lowercase},
              {"strip_punctuation", c.normalization.strip_punctuation},
              {"collapse_whitespace", c.normalization.collapse_whitespace}}},
            {"max_parallel_requests", c.max_parallel_requests},
            {"cache_dir", c.cache_dir.string()},
            {"manifest_path", c.manifest_path.string()},
            {"corpus_path", c.corpus_path.string()},
            {"dataset_tag", c.dataset_tag},
            {"speaker_catalog", c.speaker_catalog.string()},
            {"prompt_path", c.prompt_path.string()},
            {"chat_template_path", c.chat_template_path.string()},
            {"method", c.method}};
  if (c.fused_rewriter) j["fused_rewriter"] = *c.fused_rewriter;
  for (auto* list : {&j["rewriters"], &j["transcribers"], &j["embedders"]}) {
    for (auto& s : *list) s.erase("role");
  }
  j["synthesizer"].erase("role");
  if (j.contains("fused_rewriter")) j["fused_rewriter"].erase("role");
  return j;
}

PipelineConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  PipelineConfig c;
  if (j.contains("alpha")) c.alpha = typed<double>(j["alpha"], "alpha");
  if (j.contains("export_threshold")) c.export_threshold = typed<double>(j["export_threshold"], "export_threshold");
  if (j.contains("rewriters")) c.rewriters = specs_from(j["rewriters"], ProviderRole::rewriter);
  if (j.contains("synthesizer")) c.synthesizer = spec_from(j["synthesizer"], ProviderRole::synthesizer);
  if (j.contains("transcribers")) c.transcribers = specs_from(j["transcribers"], ProviderRole::transcriber);
  if (j.contains("embedders")) c.embedders = specs_from(j["embedders"], ProviderRole::embedder);
  if (j.contains("fused_rewriter") && !j["fused_rewriter"].is_null()) {
    c.fused_rewriter = spec_from(j["fused_rewriter"], ProviderRole::rewriter);
  }
  if (j.contains("seed")) c.rng_seed = typed<std::uint64_t>(j["seed"], "seed");
  if (j.contains("normalization")) {
    const json& n = j["normalization"];
    if (!n.is_object()) throw ConfigError("normalization must be an object");
    for (const auto& [key, _] : n.items()) {
      if (key != "lowercase" && key != "strip_punctuation" && key != "collapse_whitespace") {
        throw ConfigError("unknown config key 'normalization." + key + "'");
      }
    }
    c.normalization.lowercase = n.value("lowercase", true);
    c.normalization.strip_punctuation = n.value("strip_punctuation", true);
    c.normalization.collapse_whitespace = n.value("collapse_whitespace", true);
  }
  if (j.contains("max_parallel_requests")) {
    c.max_parallel_requests = typed<std::size_t>(j["max_parallel_requests"], "max_parallel_requests");
  }
  auto path = [&](const char* key, std::filesystem::path& out) {
    if (j.contains(key)) out = typed<std::string>(j[key], key);
  };
  path("cache_dir", c.cache_dir);
  path("manifest_path", c.manifest_path);
  path("corpus_path", c.corpus_path);
  path("speaker_catalog", c.speaker_catalog);
  path("prompt_path", c.prompt_path);
  path("chat_template_path", c.chat_template_path);
  if (j.contains("dataset_tag")) c.dataset_tag = typed<std::string>(j["dataset_tag"], "dataset_tag");
  if (j.contains("method")) c.method = typed<std::string>(j["method"], "method");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    node = &child;
    start = dot + 1;
  }
}

PipelineConfig mock_config() {
  PipelineConfig c;
  c.transcribers = {
      mock_spec(ProviderRole::transcriber, "asr-oracle", {{"type", "oracle"}}),
      mock_spec(ProviderRole::transcriber, "asr-deleter",
                {{"type", "deleter"}, {"seed", 1}, {"probability", 0.1}, {"target", "all"}}),
      mock_spec(ProviderRole::transcriber, "asr-substituter",
                {{"type", "substituter"}, {"seed", 2}, {"probability", 0.1}, {"target", "all"}}),
  };
  c.embedders = {
      mock_spec(ProviderRole::embedder, "emb-a", {{"type", "hashing"}, {"seed", 11}, {"ngram", 3}}),
      mock_spec(ProviderRole::embedder, "emb-b", {{"type", "hashing"}, {"seed", 12}, {"ngram", 2}}),
      mock_spec(ProviderRole::embedder, "emb-c", {{"type", "hashing"}, {"seed", 13}, {"ngram", 4}}),
  };
  return c;
}

}  // namespace instructforge
