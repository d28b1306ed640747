#include "instructforge/providers/mock.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "instructforge/errors.hpp"
#include "instructforge/providers/number_words.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::providers {

using nlohmann::json;

namespace {

constexpr std::int16_t kMarker[] = {0x4946, 0x4D4B};  // "IF" "MK"

std::string mock_type(const ProviderSpec& spec, const char* fallback) {
  return spec.mock.value("type", std::string(fallback));
}

[[noreturn]] void fail(const ProviderSpec& spec) {
  throw ProviderUnavailable(std::string(to_string(spec.role)) + " '" + spec.name +
                            "': mock configured to fail");
}

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 keyed_rng(std::uint64_t seed, std::string_view text) {
  return std::mt19937_64(util::hash64(util::sha256_fields({std::to_string(seed), text})));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

bool eligible(const std::string& word, CorruptionTarget target) {
  return target == CorruptionTarget::all || contains_digit(word);
}

CorruptionSpec corruption_from(const json& mock) {
  CorruptionSpec c;
  c.seed = mock.value("seed", std::uint64_t{0});
  c.probability = mock.value("probability", 0.1);
  const std::string target = mock.value("target", std::string("all"));
  if (target == "all") {
    c.target = CorruptionTarget::all;
  } else if (target == "digits") {
    c.target = CorruptionTarget::digits;
  } else {
    throw ConfigError("unknown corruption target '" + target + "'");
  }
  return c;
}

std::uint64_t fnv1a(std::uint64_t seed, std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr const char* kSubstitutes[] = {"uh", "the", "and", "of", "a", "um", "to", "in"};

}  // namespace

PcmAudio encode_mock_speech(std::string_view text, std::string_view description, int sample_rate) {
  PcmAudio audio;
  audio.sample_rate = sample_rate;
  audio.samples.assign(std::begin(kMarker), std::end(kMarker));
  const auto len = static_cast<std::uint32_t>(text.size());
  audio.samples.push_back(static_cast<std::int16_t>(len & 0xFFFF));
  audio.samples.push_back(static_cast<std::int16_t>(len >> 16));
  for (unsigned char c : text) audio.samples.push_back(static_cast<std::int16_t>(c));
  const std::string digest = util::sha256_fields({text, description});
  const std::size_t filler = 40 * text.size();
  for (std::size_t k = 0; k < filler; ++k) {
    const auto byte = static_cast<unsigned char>(digest[k % digest.size()]);
    audio.samples.push_back(static_cast<std::int16_t>((static_cast<int>(byte ^ (k * 131 & 0xFF)) - 128) * 64));
  }
  return audio;
}

std::optional<std::string> decode_mock_speech(const PcmAudio& audio) {
  const auto& s = audio.samples;
  if (s.size() < 4 || s[0] != kMarker[0] || s[1] != kMarker[1]) return std::nullopt;
  const std::uint32_t len = static_cast<std::uint16_t>(s[2]) | static_cast<std::uint32_t>(static_cast<std::uint16_t>(s[3])) << 16;
  if (s.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  std::string text;
  text.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    if (s[4 + i] < 0 || s[4 + i] > 255) return std::nullopt;
    text.push_back(static_cast<char>(s[4 + i]));
  }
  return text;
}

std::string delete_words(std::string_view text, const CorruptionSpec& spec) {
  auto rng = keyed_rng(spec.seed, text);
  std::vector<std::string> kept;
  for (auto& w : split_words(text)) {
    const double draw = unit(rng);
    if (eligible(w, spec.target) && draw < spec.probability) continue;
    kept.push_back(std::move(w));
  }
  return join(kept);
}

std::string substitute_words(std::string_view text, const CorruptionSpec& spec) {
  auto rng = keyed_rng(spec.seed, text);
  auto words = split_words(text);
  for (auto& w : words) {
    const double draw = unit(rng);
    const std::uint64_t pick = rng();
    if (eligible(w, spec.target) && draw < spec.probability) {
      w = kSubstitutes[pick % std::size(kSubstitutes)];
    }
  }
  return join(words);
}

MockRewriter::MockRewriter(ProviderSpec spec) : Rewriter(std::move(spec)) {
  const std::string type = mock_type(this->spec(), "identity");
  if (type != "identity" && type != "number_expander" && type != "constant" && type != "map" &&
      type != "fail") {
    throw ConfigError("rewriter '" + name() + "': unknown mock type '" + type + "'");
  }
}

std::string MockRewriter::complete(std::string_view /*prompt*/, std::string_view text) {
  note_call();
  const json& m = spec().mock;
  const std::string type = mock_type(spec(), "identity");
  if (type == "fail") fail(spec());
  if (type == "constant") return m.value("text", std::string{});
  if (type == "map") {
    const json entries = m.value("entries", json::object());
    const auto it = entries.find(std::string(text));
    if (it != entries.end()) return it->get<std::string>();
    return std::string(text);
  }
  if (type == "number_expander") {
    NumberExpansion opts;
    opts.max_value = m.value("max_value", opts.max_value);
    opts.years = m.value("years", true);
    return expand_numbers(text, opts);
  }
  return std::string(text);
}

MockSynthesizer::MockSynthesizer(ProviderSpec spec)
    : Synthesizer(std::move(spec)), sample_rate_(this->spec().mock.value("sample_rate", 16000)) {
  const std::string type = mock_type(this->spec(), "payload");
  if (type != "payload" && type != "fail") {
    throw ConfigError("synthesizer '" + name() + "': unknown mock type '" + type + "'");
  }
  if (sample_rate_ <= 0) throw ConfigError("synthesizer '" + name() + "': sample_rate must be positive");
}

PcmAudio MockSynthesizer::synthesize(std::string_view text, std::string_view description) {
  note_call();
  if (mock_type(spec(), "payload") == "fail") fail(spec());
  return encode_mock_speech(text, description, sample_rate_);
}

std::optional<std::string> MockSynthesizer::sidecar_text(std::string_view text) const {
  return std::string(text);
}

MockTranscriber::MockTranscriber(ProviderSpec spec) : Transcriber(std::move(spec)) {
  const std::string type = mock_type(this->spec(), "oracle");
  if (type != "oracle" && type != "deleter" && type != "substituter" && type != "empty" &&
      type != "fail") {
    throw ConfigError("transcriber '" + name() + "': unknown mock type '" + type + "'");
  }
  if (type == "deleter" || type == "substituter") corruption_from(this->spec().mock);
}

std::string MockTranscriber::transcribe(const AudioInput& input) {
  note_call();
  const std::string type = mock_type(spec(), "oracle");
  if (type == "fail") fail(spec());
  if (type == "empty") return {};

  std::optional<std::string> truth;
  if (!input.path.empty()) {
    auto sidecar = input.path;
    sidecar.replace_extension(".txt");
    std::error_code ec;
    if (std::filesystem::exists(sidecar, ec)) {
      std::ifstream in(sidecar, std::ios::binary);
      truth = std::string(std::istreambuf_iterator<char>(in), {});
    }
  }
  if (!truth) truth = decode_mock_speech(input.audio);
  if (!truth) return {};

  if (type == "deleter") return delete_words(*truth, corruption_from(spec().mock));
  if (type == "substituter") return substitute_words(*truth, corruption_from(spec().mock));
  return *truth;
}

std::vector<double> hashing_embedding(std::string_view text, const HashingEmbedderParams& params) {
  std::string canonical(text);
  if (params.canonicalize_numbers) canonical = expand_numbers(canonical);
  if (params.lowercase) {
    textmetrics::NormalizationPolicy lower{true, false, false};
    canonical = textmetrics::normalize_text(canonical, lower);
  }
  std::vector<double> v(params.dim, 0.0);
  if (canonical.empty()) return v;
  const std::string padded = " " + canonical + " ";
  const std::size_t n = std::min(params.ngram, padded.size());
  for (std::size_t i = 0; i + n <= padded.size(); ++i) {
    v[fnv1a(params.seed, std::string_view(padded).substr(i, n)) % params.dim] += 1.0;
  }
  return v;
}

MockEmbedder::MockEmbedder(ProviderSpec spec) : Embedder(std::move(spec)) {
  const json& m = this->spec().mock;
  const std::string type = mock_type(this->spec(), "hashing");
  if (type != "hashing" && type != "fail") {
    throw ConfigError("embedder '" + name() + "': unknown mock type '" + type + "'");
  }
  params_.seed = m.value("seed", std::uint64_t{0});
  params_.dim = m.value("dim", std::size_t{64});
  params_.ngram = m.value("ngram", std::size_t{3});
  params_.lowercase = m.value("lowercase", true);
  params_.canonicalize_numbers = m.value("canonicalize_numbers", true);
  if (params_.dim == 0 || params_.ngram == 0) {
    throw ConfigError("embedder '" + name() + "': dim and ngram must be positive");
  }
}

std::vector<double> MockEmbedder::embed(std::string_view text) {
  note_call();
  if (mock_type(spec(), "hashing") == "fail") fail(spec());
  return hashing_embedding(text, params_);
}

}  // namespace instructforge::providers
