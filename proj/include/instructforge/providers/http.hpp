#pragma once

// Clients for the sidecar wire protocol (JSON over HTTP):
//
//   POST /v1/rewrite     {"prompt", "text"}           -> {"text"}
//   POST /v1/synthesize  {"text", "description"}      -> {"audio_b64", "sample_rate"}
//   POST /v1/transcribe  {"audio_b64", "sample_rate"} -> {"text"}
//   POST /v1/embed       {"text"}                     -> {"values", "model"}
//
// 400 and 501 are permanent failures; 5xx and transport errors are retried
// with exponential backoff inside the spec's timeout budget.

#include <string>

#include <nlohmann/json.hpp>

#include "instructforge/providers/providers.hpp"
#include "instructforge/providers/retry.hpp"

namespace instructforge::providers {

RetryPolicy retry_policy_for(const ProviderSpec& spec);

// POSTs `body` to `path` under spec.endpoint and returns the parsed reply.
// Sends INSTRUCTFORGE_API_KEY as a bearer token when set.
nlohmann::json post_json(const ProviderSpec& spec, const std::string& path, const nlohmann::json& body,
                         const RetryClock& clock = {});

class HttpRewriter final : public Rewriter {
 public:
  using Rewriter::Rewriter;
  std::string complete(std::string_view prompt, std::string_view text) override;
};

class HttpSynthesizer final : public Synthesizer {
 public:
  using Synthesizer::Synthesizer;
  PcmAudio synthesize(std::string_view text, std::string_view description) override;
};

class HttpTranscriber final : public Transcriber {
 public:
  using Transcriber::Transcriber;
  std::string transcribe(const AudioInput& input) override;
};

class HttpEmbedder final : public Embedder {
 public:
  using Embedder::Embedder;
  std::vector<double> embed(std::string_view text) override;
};

}  // namespace instructforge::providers
