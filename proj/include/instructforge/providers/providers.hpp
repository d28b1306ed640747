#pragma once

// The four model roles behind one interface each, plus the caching call
// wrappers the pipeline uses. Concrete backends: mock.hpp (offline,
// deterministic) and http.hpp (sidecar wire protocol).

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "instructforge/core/assets.hpp"
#include "instructforge/core/model.hpp"
#include "instructforge/providers/cache.hpp"
#include "instructforge/providers/spec.hpp"
#include "instructforge/providers/wav.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge::providers {

class Provider {
 public:
  explicit Provider(ProviderSpec spec) : spec_(std::move(spec)) {}
  virtual ~Provider() = default;
  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  const ProviderSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  // Upstream invocations so far (cache hits excluded).
  std::size_t calls() const { return calls_.load(); }

 protected:
  void note_call() { calls_.fetch_add(1); }

 private:
  ProviderSpec spec_;
  std::atomic<std::size_t> calls_{0};
};

class Rewriter : public Provider {
 public:
  using Provider::Provider;
  virtual std::string complete(std::string_view prompt, std::string_view text) = 0;
};

class Synthesizer : public Provider {
 public:
  using Provider::Provider;
  virtual PcmAudio synthesize(std::string_view text, std::string_view description) = 0;
  // Ground-truth text stored next to the audio, for mocks.
  virtual std::optional<std::string> sidecar_text(std::string_view) const { return std::nullopt; }
};

struct AudioInput {
  std::filesystem::path path;
  PcmAudio audio;
};

class Transcriber : public Provider {
 public:
  using Provider::Provider;
  virtual std::string transcribe(const AudioInput& input) = 0;
};

class Embedder : public Provider {
 public:
  using Provider::Provider;
  virtual std::vector<double> embed(std::string_view text) = 0;
  // Vector length when known without a call.
  virtual std::optional<std::size_t> dimension() const { return std::nullopt; }
};

std::unique_ptr<Rewriter> make_rewriter(const ProviderSpec& spec);
std::unique_ptr<Synthesizer> make_synthesizer(const ProviderSpec& spec);
std::unique_ptr<Transcriber> make_transcriber(const ProviderSpec& spec);
std::unique_ptr<Embedder> make_embedder(const ProviderSpec& spec);

// Strips chrome LLMs like to add: surrounding quotes, "Rewritten:"-style
// labels, leading/trailing whitespace.
std::string clean_rewrite_output(std::string_view raw);

struct RewriteOutcome {
  std::string text;
  bool fell_back = false;
  std::vector<std::string> warnings;
};

// Sends `prompt` and the text to the rewriter. An empty answer falls back to
// the original text with a warning. Throws ProviderUnavailable when the
// provider cannot be reached.
RewriteOutcome rewrite(Rewriter& rewriter, const PromptAsset& prompt, std::string_view original_text,
                       ContentCache* cache = nullptr);

std::string synthesis_key(const ProviderSpec& synthesizer, std::string_view text,
                          std::string_view speaker_description);

// Synthesizes into the cache (<cache>/synth/..../<key>.wav); a second request
// with the same key reuses the file without calling the provider. Throws
// InvalidInput on empty text.
SpeechArtifact synthesize(Synthesizer& synthesizer, ContentCache& cache, std::string_view text,
                          std::string_view speaker_description, std::string candidate_ref = {});

AudioInput read_audio(const std::filesystem::path& path);

// Unreadable audio throws InvalidInput; provider failure yields an empty
// transcript with `failed` set.
Transcript transcribe(Transcriber& transcriber, const SpeechArtifact& speech,
                      ContentCache* cache = nullptr);

// Empty (or blank) text returns an all-zero sentinel without calling the
// provider. Throws ProviderUnavailable on provider failure.
textmetrics::EmbeddingVector embed(Embedder& embedder, std::string_view text,
                                   ContentCache* cache = nullptr);

}  // namespace instructforge::providers
