#pragma once

// Deterministic offline providers. Every mock is a pure function of its
// parameters and inputs, so a mock pipeline run is bit-reproducible.
//
//   rewriter     identity | number_expander {max_value?, years?} |
//                constant {text} | map {entries: {in: out}} | fail
//   synthesizer  payload {sample_rate?} | fail
//   transcriber  oracle | deleter {seed, probability, target} |
//                substituter {seed, probability, target} | empty | fail
//                (target: "all" or "digits")
//   embedder     hashing {seed?, dim?, ngram?, lowercase?, canonicalize_numbers?} | fail

#include <optional>
#include <string>
#include <string_view>

#include "instructforge/providers/providers.hpp"

namespace instructforge::providers {

// Mock audio carries its text in-band: a marker, the byte length, the UTF-8
// bytes, then filler derived from the digest of (text, description).
PcmAudio encode_mock_speech(std::string_view text, std::string_view description, int sample_rate);
std::optional<std::string> decode_mock_speech(const PcmAudio& audio);

enum class CorruptionTarget { all, digits };

struct CorruptionSpec {
  std::uint64_t seed = 0;
  double probability = 0.1;
  CorruptionTarget target = CorruptionTarget::all;
};

// Word-level corruption used by the noisy transcribers. Each eligible word is
// hit with `probability`, drawn from a generator keyed on (seed, text).
std::string delete_words(std::string_view text, const CorruptionSpec& spec);
std::string substitute_words(std::string_view text, const CorruptionSpec& spec);

class MockRewriter final : public Rewriter {
 public:
  explicit MockRewriter(ProviderSpec spec);
  std::string complete(std::string_view prompt, std::string_view text) override;
};

class MockSynthesizer final : public Synthesizer {
 public:
  explicit MockSynthesizer(ProviderSpec spec);
  PcmAudio synthesize(std::string_view text, std::string_view description) override;
  std::optional<std::string> sidecar_text(std::string_view text) const override;

 private:
  int sample_rate_;
};

class MockTranscriber final : public Transcriber {
 public:
  explicit MockTranscriber(ProviderSpec spec);
  // Reads the synthesizer's sidecar text when present, else the in-band
  // payload; audio without a payload transcribes to "".
  std::string transcribe(const AudioInput& input) override;
};

struct HashingEmbedderParams {
  std::uint64_t seed = 0;
  std::size_t dim = 64;
  std::size_t ngram = 3;
  bool lowercase = true;
  // Spell out digits first, so "1999" and "nineteen ninety-nine" embed alike
  // the way a semantic model would treat them.
  bool canonicalize_numbers = true;
};

// Character n-gram counts hashed into `dim` buckets.
std::vector<double> hashing_embedding(std::string_view text, const HashingEmbedderParams& params);

class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(ProviderSpec spec);
  std::vector<double> embed(std::string_view text) override;
  std::optional<std::size_t> dimension() const override { return params_.dim; }

 private:
  HashingEmbedderParams params_;
};

}  // namespace instructforge::providers
