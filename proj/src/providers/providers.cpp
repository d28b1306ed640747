#include "instructforge/providers/providers.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "instructforge/errors.hpp"
#include "instructforge/providers/http.hpp"
#include "instructforge/providers/mock.hpp"
#include "instructforge/util/files.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::providers {

using nlohmann::json;

namespace {

void expect_role(const ProviderSpec& spec, ProviderRole role) {
  if (spec.role != role) {
    throw ConfigError("provider '" + spec.name + "' has role " + std::string(to_string(spec.role)) +
                      ", expected " + std::string(to_string(role)));
  }
  spec.validate();
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

// Quote pairs as UTF-8 (straight, curly double, curly single).
constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kQuotes = {{
    {"\"", "\""},
    {"'", "'"},
    {"\xE2\x80\x9C", "\xE2\x80\x9D"},
    {"\xE2\x80\x98", "\xE2\x80\x99"},
}};

constexpr std::array<std::string_view, 7> kLabels = {
    "rewritten text:", "rewritten:", "rewrite:", "output:", "result:", "answer:", "text:"};

}  // namespace

std::unique_ptr<Rewriter> make_rewriter(const ProviderSpec& spec) {
  expect_role(spec, ProviderRole::rewriter);
  if (spec.kind == ProviderKind::http) return std::make_unique<HttpRewriter>(spec);
  return std::make_unique<MockRewriter>(spec);
}

std::unique_ptr<Synthesizer> make_synthesizer(const ProviderSpec& spec) {
  expect_role(spec, ProviderRole::synthesizer);
  if (spec.kind == ProviderKind::http) return std::make_unique<HttpSynthesizer>(spec);
  return std::make_unique<MockSynthesizer>(spec);
}

std::unique_ptr<Transcriber> make_transcriber(const ProviderSpec& spec) {
  expect_role(spec, ProviderRole::transcriber);
  if (spec.kind == ProviderKind::http) return std::make_unique<HttpTranscriber>(spec);
  return std::make_unique<MockTranscriber>(spec);
}

std::unique_ptr<Embedder> make_embedder(const ProviderSpec& spec) {
  expect_role(spec, ProviderRole::embedder);
  if (spec.kind == ProviderKind::http) return std::make_unique<HttpEmbedder>(spec);
  return std::make_unique<MockEmbedder>(spec);
}

std::string clean_rewrite_output(std::string_view raw) {
  std::string_view text = util::trim(raw);
  bool changed = true;
  while (changed && !text.empty()) {
    changed = false;
    for (std::string_view label : kLabels) {
      if (starts_with_ci(text, label)) {
        text = util::trim(text.substr(label.size()));
        changed = true;
      }
    }
    for (const auto& [open, close] : kQuotes) {
      if (text.size() >= open.size() + close.size() && text.substr(0, open.size()) == open &&
          text.substr(text.size() - close.size()) == close) {
        text = util::trim(text.substr(open.size(), text.size() - open.size() - close.size()));
        changed = true;
      }
    }
  }
  return std::string(text);
}

RewriteOutcome rewrite(Rewriter& rewriter, const PromptAsset& prompt, std::string_view original_text,
                       ContentCache* cache) {
  auto call = [&] { return rewriter.complete(prompt.text, original_text); };
  std::string raw;
  if (cache) {
    const std::string key =
        util::sha256_fields({rewriter.spec().identity(), prompt.digest, original_text});
    raw = json::parse(cache->get_or_create("rewrite", key, [&] { return json{{"text", call()}}.dump(); }))
              .at("text")
              .get<std::string>();
  } else {
    raw = call();
  }
  RewriteOutcome out;
  out.text = clean_rewrite_output(raw);
  if (out.text.empty()) {
    out.text = std::string(original_text);
    out.fell_back = true;
    out.warnings.push_back("rewriter '" + rewriter.name() + "' returned empty text; kept the original");
  }
  return out;
}

std::string synthesis_key(const ProviderSpec& synthesizer, std::string_view text,
                          std::string_view speaker_description) {
  return util::sha256_fields({text, speaker_description, synthesizer.identity()});
}

SpeechArtifact synthesize(Synthesizer& synthesizer, ContentCache& cache, std::string_view text,
                          std::string_view speaker_description, std::string candidate_ref) {
  if (util::trim(text).empty()) throw InvalidInput("synthesize: empty text");
  const std::string key = synthesis_key(synthesizer.spec(), text, speaker_description);
  const auto wav_path = cache.path_for("synth", key, ".wav");
  const std::string meta = cache.get_or_create("synth", key, [&] {
    const PcmAudio audio = synthesizer.synthesize(text, speaker_description);
    const auto bytes = encode_wav(audio);
    util::atomic_write(wav_path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    if (auto sidecar = synthesizer.sidecar_text(text)) {
      util::atomic_write(cache.path_for("synth", key, ".txt"), *sidecar);
    }
    return json{{"sample_rate", audio.sample_rate}, {"duration", audio.duration()}}.dump();
  });
  const json m = json::parse(meta);
  SpeechArtifact a;
  a.candidate_ref = std::move(candidate_ref);
  a.audio_path = wav_path.string();
  a.sample_rate = m.at("sample_rate").get<int>();
  a.duration = m.at("duration").get<double>();
  a.synthesis_key = key;
  return a;
}

AudioInput read_audio(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = util::read_file(path);
  } catch (const StorageError& e) {
    throw InvalidInput(std::string("unreadable audio: ") + e.what());
  }
  AudioInput in;
  in.path = path;
  in.audio = decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  return in;
}

Transcript transcribe(Transcriber& transcriber, const SpeechArtifact& speech, ContentCache* cache) {
  const AudioInput input = read_audio(speech.audio_path);
  Transcript t;
  t.transcriber = transcriber.name();
  try {
    if (cache) {
      const std::string audio_id =
          speech.synthesis_key.empty() ? util::sha256_file_hex(speech.audio_path) : speech.synthesis_key;
      const std::string key = util::sha256_fields({transcriber.spec().identity(), audio_id});
      t.text = json::parse(cache->get_or_create("transcribe", key,
                                                [&] { return json{{"text", transcriber.transcribe(input)}}.dump(); }))
                   .at("text")
                   .get<std::string>();
    } else {
      t.text = transcriber.transcribe(input);
    }
  } catch (const ProviderUnavailable&) {
    t.text.clear();
    t.failed = true;
  }
  return t;
}

textmetrics::EmbeddingVector embed(Embedder& embedder, std::string_view text, ContentCache* cache) {
  textmetrics::EmbeddingVector v;
  v.model = embedder.name();
  if (util::trim(text).empty()) {
    v.values.assign(embedder.dimension().value_or(0), 0.0);
    return v;
  }
  if (cache) {
    const std::string key = util::sha256_fields({embedder.spec().identity(), text});
    v.values = json::parse(cache->get_or_create("embed", key, [&] { return json{{"values", embedder.embed(text)}}.dump(); }))
                   .at("values")
                   .get<std::vector<double>>();
  } else {
    v.values = embedder.embed(text);
  }
  return v;
}

}  // namespace instructforge::providers
