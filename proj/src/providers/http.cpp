#include "instructforge/providers/http.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>

#include "instructforge/errors.hpp"
#include "instructforge/util/hash.hpp"

namespace instructforge::providers {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string base;    // scheme://host[:port]
  std::string prefix;  // optional path prefix without trailing slash
};

SplitUrl split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint '" + endpoint + "' lacks a scheme");
  const auto path = endpoint.find('/', scheme + 3);
  SplitUrl out;
  out.base = endpoint.substr(0, path);
  if (path != std::string::npos) {
    out.prefix = endpoint.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

std::string what_of(const ProviderSpec& spec, const std::string& path) {
  return std::string(to_string(spec.role)) + " '" + spec.name + "' " + path;
}

std::string required_string(const json& reply, const char* key, const std::string& what) {
  const auto it = reply.find(key);
  if (it == reply.end() || !it->is_string()) throw ProviderUnavailable(what + ": reply lacks string '" + key + "'");
  return it->get<std::string>();
}

}  // namespace

RetryPolicy retry_policy_for(const ProviderSpec& spec) {
  RetryPolicy p;
  p.max_retries = spec.max_retries;
  p.timeout = std::chrono::milliseconds(static_cast<long long>(std::ceil(spec.timeout_seconds * 1000.0)));
  return p;
}

json post_json(const ProviderSpec& spec, const std::string& path, const json& body, const RetryClock& clock) {
  const SplitUrl url = split_endpoint(spec.endpoint);
  const std::string what = what_of(spec, path);
  const std::string payload = body.dump();
  json reply;
  call_with_retries(
      [&](std::chrono::milliseconds budget) {
        httplib::Client client(url.base);
        const auto secs = budget.count() / 1000;
        const auto usecs = (budget.count() % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (const char* key = std::getenv("INSTRUCTFORGE_API_KEY"); key && *key) {
          headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        auto res = client.Post(url.prefix + path, headers, payload, "application/json");
        if (!res) throw TransientFailure(what + ": " + httplib::to_string(res.error()));
        if (res->status >= 500 && res->status != 501) {
          throw TransientFailure(what + ": HTTP " + std::to_string(res->status));
        }
        if (res->status != 200) {
          throw ProviderUnavailable(what + ": HTTP " + std::to_string(res->status) + " " + res->body);
        }
        try {
          reply = json::parse(res->body);
        } catch (const json::parse_error&) {
          throw ProviderUnavailable(what + ": reply is not JSON");
        }
        if (!reply.is_object()) throw ProviderUnavailable(what + ": reply is not a JSON object");
      },
      retry_policy_for(spec), what, clock);
  return reply;
}

std::string HttpRewriter::complete(std::string_view prompt, std::string_view text) {
  note_call();
  const json reply = post_json(spec(), "/v1/rewrite", {{"prompt", prompt}, {"text", text}});
  return required_string(reply, "text", what_of(spec(), "/v1/rewrite"));
}

PcmAudio HttpSynthesizer::synthesize(std::string_view text, std::string_view description) {
  note_call();
  const std::string what = what_of(spec(), "/v1/synthesize");
  const json reply = post_json(spec(), "/v1/synthesize", {{"text", text}, {"description", description}});
  const std::string b64 = required_string(reply, "audio_b64", what);
  PcmAudio audio;
  try {
    audio = decode_wav(util::base64_decode(b64));
  } catch (const InvalidInput& e) {
    throw ProviderUnavailable(what + ": bad audio: " + e.what());
  }
  if (reply.contains("sample_rate") && reply["sample_rate"].is_number_integer() &&
      reply["sample_rate"].get<int>() != audio.sample_rate) {
    throw ProviderUnavailable(what + ": sample_rate disagrees with the WAV header");
  }
  return audio;
}

std::string HttpTranscriber::transcribe(const AudioInput& input) {
  note_call();
  const auto wav = encode_wav(input.audio);
  const json reply = post_json(spec(), "/v1/transcribe",
                               {{"audio_b64", util::base64_encode(wav)}, {"sample_rate", input.audio.sample_rate}});
  return required_string(reply, "text", what_of(spec(), "/v1/transcribe"));
}

std::vector<double> HttpEmbedder::embed(std::string_view text) {
  note_call();
  const std::string what = what_of(spec(), "/v1/embed");
  const json reply = post_json(spec(), "/v1/embed", {{"text", text}});
  const auto it = reply.find("values");
  if (it == reply.end() || !it->is_array()) throw ProviderUnavailable(what + ": reply lacks 'values'");
  std::vector<double> values;
  values.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw ProviderUnavailable(what + ": non-numeric embedding entry");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ProviderUnavailable(what + ": non-finite embedding entry");
    values.push_back(d);
  }
  if (values.empty()) throw ProviderUnavailable(what + ": empty embedding");
  return values;
}

}  // namespace instructforge::providers
