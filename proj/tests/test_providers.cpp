#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "instructforge/errors.hpp"
#include "instructforge/providers/cache.hpp"
#include "instructforge/providers/mock.hpp"
#include "instructforge/providers/number_words.hpp"
#include "instructforge/providers/providers.hpp"
#include "instructforge/providers/retry.hpp"
#include "instructforge/providers/wav.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"
#include "support.hpp"

using namespace instructforge;
using namespace instructforge::providers;
using testing::TempDir;

namespace {

const std::string kSentence = "the quick brown fox jumps over the lazy dog by the old river bank";

ProviderSpec synth_spec(nlohmann::json params = {{"type", "payload"}}) {
  return testing::mock(ProviderRole::synthesizer, "tts", std::move(params));
}

// Counts calls; answers with a fixed transformation.
class CountingRewriter final : public Rewriter {
 public:
  explicit CountingRewriter(std::string answer) : Rewriter(testing::rewriter("counting", {{"type", "identity"}})), answer_(std::move(answer)) {}
  std::string complete(std::string_view, std::string_view) override {
    note_call();
    return answer_;
  }

 private:
  std::string answer_;
};

}  // namespace

TEST_CASE("number words") {
  CHECK(cardinal_words(0) == "zero");
  CHECK(cardinal_words(342) == "three hundred forty-two");
  CHECK(cardinal_words(1000000) == "one million");
  CHECK(ordinal_words(42) == "forty-second");
  CHECK(ordinal_words(3) == "third");
  CHECK(ordinal_words(12) == "twelfth");
  CHECK(year_words(1999) == "nineteen ninety-nine");
  CHECK(year_words(1905) == "nineteen oh five");
  CHECK(year_words(1900) == "nineteen hundred");
  CHECK(year_words(2007) == "two thousand seven");
  CHECK(year_words(2024) == "twenty twenty-four");
}

TEST_CASE("number expansion") {
  CHECK(expand_numbers("What happened in 1999?") == "What happened in nineteen ninety-nine?");
  CHECK(expand_numbers("25% of 2,125 on the 3rd") == "twenty-five percent of two thousand one hundred twenty-five on the third");
  CHECK(expand_numbers("pi is 3.14") == "pi is three point one four");
  CHECK(expand_numbers("no digits here") == "no digits here");
  CHECK(expand_numbers("in 1999", {1000, true}) == "in 1999");
  CHECK(expand_numbers("in 1999", {NumberExpansion{}.max_value, false}) ==
        "in one thousand nine hundred ninety-nine");
  CHECK(expand_numbers("B2B") == "B two B");
  CHECK(contains_digit("a1"));
  CHECK_FALSE(contains_digit("abc"));
}

TEST_CASE("wav round trip") {
  PcmAudio audio{22050, {0, 1, -1, 32767, -32768, 1234}};
  const auto bytes = encode_wav(audio);
  CHECK(bytes.size() == 44 + 12);
  const auto back = decode_wav(bytes);
  CHECK(back.sample_rate == 22050);
  CHECK(back.samples == audio.samples);
  CHECK(back.duration() == doctest::Approx(6.0 / 22050));
}

TEST_CASE("malformed wav is rejected") {
  auto bytes = encode_wav(PcmAudio{16000, {1, 2, 3}});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_wav(bad_magic), InvalidInput);
  auto stereo = bytes;
  stereo[22] = 2;
  CHECK_THROWS_AS(decode_wav(stereo), InvalidInput);
  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 30);
  CHECK_THROWS_AS(decode_wav(truncated), InvalidInput);
  CHECK_THROWS_AS(decode_wav({}), InvalidInput);
}

TEST_CASE("mock speech carries its text") {
  const auto audio = encode_mock_speech("héllo wörld", "calm", 16000);
  CHECK(decode_mock_speech(audio) == "héllo wörld");
  CHECK(encode_mock_speech("héllo wörld", "calm", 16000).samples == audio.samples);
  CHECK(encode_mock_speech("héllo wörld", "loud", 16000).samples != audio.samples);
  CHECK_FALSE(decode_mock_speech(PcmAudio{16000, {1, 2, 3, 4}}));
}

TEST_CASE("seeded corruption is frozen") {
  CHECK(delete_words(kSentence, {7, 0.1, CorruptionTarget::all}) == "the quick fox jumps over the the old river bank");
  CHECK(delete_words(kSentence, {7, 0.3, CorruptionTarget::all}) == "the fox over the the river");
  CHECK(substitute_words(kSentence, {7, 0.3, CorruptionTarget::all}) ==
        "the and and fox um over the um dog by the um river bank");
  CHECK(delete_words("In 1999 the 3rd team scored 42 points", {1, 1.0, CorruptionTarget::digits}) ==
        "In the team scored points");
  CHECK(delete_words(kSentence, {7, 0.0, CorruptionTarget::all}) == kSentence);
}

TEST_CASE("mock rewriters") {
  auto identity = make_rewriter(testing::rewriter("id", {{"type", "identity"}}));
  CHECK(identity->complete("p", "Keep me.") == "Keep me.");
  auto expander = make_rewriter(testing::rewriter("x", {{"type", "number_expander"}}));
  CHECK(expander->complete("p", "What happened in 1999?") == "What happened in nineteen ninety-nine?");
  auto constant = make_rewriter(testing::rewriter("c", {{"type", "constant"}, {"text", ""}}));
  CHECK(constant->complete("p", "x").empty());
  auto map = make_rewriter(testing::rewriter("m", {{"type", "map"}, {"entries", {{"H2O", "water"}}}}));
  CHECK(map->complete("p", "H2O") == "water");
  CHECK(map->complete("p", "other") == "other");
  auto fail = make_rewriter(testing::rewriter("f", {{"type", "fail"}}));
  CHECK_THROWS_AS(fail->complete("p", "x"), ProviderUnavailable);
  CHECK_THROWS_AS(make_rewriter(testing::rewriter("u", {{"type", "unknown"}})), ConfigError);
  CHECK_THROWS_AS(make_rewriter(synth_spec()), ConfigError);
}

TEST_CASE("rewrite output cleanup") {
  CHECK(clean_rewrite_output("  \"What year?\" ") == "What year?");
  CHECK(clean_rewrite_output("Rewritten: What year?") == "What year?");
  CHECK(clean_rewrite_output("rewritten text: “What year?”") == "What year?");
  CHECK(clean_rewrite_output("Output: 'x'") == "x");
  CHECK(clean_rewrite_output("Textbook question") == "Textbook question");
}

TEST_CASE("empty rewrite falls back to the original") {
  auto rewriter = make_rewriter(testing::rewriter("c", {{"type", "constant"}, {"text", "  "}}));
  const auto out = rewrite(*rewriter, PromptAsset::from_text("p"), "Original?");
  CHECK(out.text == "Original?");
  CHECK(out.fell_back);
  CHECK(out.warnings.size() == 1);
}

TEST_CASE("rewrites are cached per prompt") {
  TempDir dir;
  ContentCache cache(dir.path());
  CountingRewriter rewriter("Answer");
  const auto p1 = PromptAsset::from_text("one");
  CHECK(rewrite(rewriter, p1, "t", &cache).text == "Answer");
  CHECK(rewrite(rewriter, p1, "t", &cache).text == "Answer");
  CHECK(rewriter.calls() == 1);
  rewrite(rewriter, PromptAsset::from_text("two"), "t", &cache);
  CHECK(rewriter.calls() == 2);
}

TEST_CASE("synthesis is cached by key") {
  TempDir dir;
  ContentCache cache(dir.path());
  auto synth = make_synthesizer(synth_spec());
  const auto a = synthesize(*synth, cache, "hello world", "calm voice", "r#0");
  const auto b = synthesize(*synth, cache, "hello world", "calm voice", "r#0");
  CHECK(synth->calls() == 1);
  CHECK(a == b);
  CHECK(a.synthesis_key == synthesis_key(synth->spec(), "hello world", "calm voice"));
  CHECK(std::filesystem::exists(a.audio_path));
  CHECK(a.sample_rate == 16000);
  CHECK(a.duration > 0.0);
  CHECK(testing::read_text(cache.path_for("synth", a.synthesis_key, ".txt")) == "hello world");
  CHECK(synthesize(*synth, cache, "hello world", "other voice").synthesis_key != a.synthesis_key);
  CHECK_THROWS_AS(synthesize(*synth, cache, "  ", "calm"), InvalidInput);
  CHECK(cache.counters("synth").hits == 1);
}

TEST_CASE("synthesis key follows provider identity, not endpoint") {
  auto spec = synth_spec();
  const auto k = synthesis_key(spec, "t", "d");
  spec.endpoint = "http://elsewhere";
  CHECK(synthesis_key(spec, "t", "d") == k);
  spec.request_version_tag = "v2";
  CHECK(synthesis_key(spec, "t", "d") != k);
}

TEST_CASE("mock transcribers") {
  TempDir dir;
  ContentCache cache(dir.path());
  auto synth = make_synthesizer(synth_spec());
  const auto speech = synthesize(*synth, cache, kSentence, "calm");

  auto oracle = make_transcriber(testing::transcriber("o", {{"type", "oracle"}}));
  CHECK(transcribe(*oracle, speech).text == kSentence);

  auto deleter = make_transcriber(testing::transcriber("d", {{"type", "deleter"}, {"seed", 7}, {"probability", 0.1}}));
  CHECK(transcribe(*deleter, speech).text == delete_words(kSentence, {7, 0.1, CorruptionTarget::all}));

  auto empty = make_transcriber(testing::transcriber("e", {{"type", "empty"}}));
  CHECK(transcribe(*empty, speech).text.empty());

  auto fail = make_transcriber(testing::transcriber("f", {{"type", "fail"}}));
  const auto failed = transcribe(*fail, speech);
  CHECK(failed.failed);
  CHECK(failed.text.empty());
}

TEST_CASE("transcription without the sidecar decodes the payload") {
  TempDir dir;
  ContentCache cache(dir.path());
  auto synth = make_synthesizer(synth_spec());
  const auto speech = synthesize(*synth, cache, "in band text", "calm");
  std::filesystem::remove(cache.path_for("synth", speech.synthesis_key, ".txt"));
  auto oracle = make_transcriber(testing::transcriber("o", {{"type", "oracle"}}));
  CHECK(transcribe(*oracle, speech).text == "in band text");
}

TEST_CASE("corrupted audio is invalid input") {
  TempDir dir;
  testing::write_text(dir / "bad.wav", "RIFFxxxxWAVEjunk");
  SpeechArtifact speech;
  speech.audio_path = (dir / "bad.wav").string();
  auto oracle = make_transcriber(testing::transcriber("o", {{"type", "oracle"}}));
  CHECK_THROWS_AS(transcribe(*oracle, speech), InvalidInput);
  speech.audio_path = (dir / "missing.wav").string();
  CHECK_THROWS_AS(transcribe(*oracle, speech), InvalidInput);
}

TEST_CASE("hashing embedder") {
  auto e = make_embedder(testing::embedder("h", {{"type", "hashing"}, {"seed", 3}}));
  const auto a = embed(*e, "What happened in 1999?");
  CHECK(a.values.size() == 64);
  CHECK(a == embed(*e, "What happened in 1999?"));
  CHECK(a.model == "h");
  const auto spelled = embed(*e, "What happened in nineteen ninety-nine?");
  CHECK(textmetrics::cosine(a, spelled) == doctest::Approx(1.0));
  const auto blank = embed(*e, "   ");
  CHECK(blank.values.size() == 64);
  CHECK(blank.is_zero());
  CHECK(e->calls() == 3);
  auto other = make_embedder(testing::embedder("h2", {{"type", "hashing"}, {"seed", 4}}));
  CHECK(embed(*other, "x").values != embed(*e, "x").values);
}

TEST_CASE("embedding cache returns identical values") {
  TempDir dir;
  ContentCache cache(dir.path());
  auto e = make_embedder(testing::embedder("h", {{"type", "hashing"}, {"seed", 3}}));
  const auto first = embed(*e, "some text", &cache);
  const auto second = embed(*e, "some text", &cache);
  CHECK(first == second);
  CHECK(first.values == embed(*e, "some text").values);
  CHECK(cache.counters("embed").hits == 1);
  CHECK(cache.counters("embed").misses == 1);
}

TEST_CASE("cache collapses concurrent requests") {
  TempDir dir;
  ContentCache cache(dir.path());
  std::atomic<int> produced{0};
  std::vector<std::thread> threads;
  std::vector<std::string> results(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      results[i] = cache.get_or_create("ns", "abcdef", [&] {
        ++produced;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        return std::string("value");
      });
    });
  }
  for (auto& t : threads) t.join();
  CHECK(produced == 1);
  for (const auto& r : results) CHECK(r == "value");
  CHECK(std::filesystem::exists(cache.path_for("ns", "abcdef", ".json")));
  ContentCache reopened(dir.path());
  CHECK(reopened.get_or_create("ns", "abcdef", [] { return std::string("other"); }) == "value");
}

TEST_CASE("cache does not keep failures") {
  TempDir dir;
  ContentCache cache(dir.path());
  CHECK_THROWS_AS(cache.get_or_create("ns", "k1", []() -> std::string { throw ProviderUnavailable("down"); }),
                  ProviderUnavailable);
  CHECK(cache.get_or_create("ns", "k1", [] { return std::string("ok"); }) == "ok");
}

TEST_CASE("retries back off exponentially within the budget") {
  using namespace std::chrono;
  steady_clock::time_point now{};
  std::vector<milliseconds> sleeps;
  RetryClock clock{[&] { return now; }, [&](milliseconds d) {
                     sleeps.push_back(d);
                     now += d;
                   }};
  RetryPolicy policy;
  policy.max_retries = 3;
  policy.timeout = milliseconds(1000);
  int attempts = 0;
  const int used = call_with_retries(
      [&](milliseconds) {
        if (++attempts < 3) throw TransientFailure("flaky");
      },
      policy, "test", clock);
  CHECK(used == 3);
  CHECK(sleeps == std::vector<milliseconds>{milliseconds(50), milliseconds(100)});

  attempts = 0;
  CHECK_THROWS_AS(call_with_retries([&](milliseconds) {
                    ++attempts;
                    throw TransientFailure("down");
                  },
                                    policy, "test", clock),
                  ProviderUnavailable);
  CHECK(attempts == 4);
}

TEST_CASE("retry attempts never outlive the total budget") {
  using namespace std::chrono;
  steady_clock::time_point now{};
  const auto start = now;
  RetryClock clock{[&] { return now; }, [&](milliseconds d) { now += d; }};
  RetryPolicy policy;
  policy.max_retries = 5;
  policy.timeout = milliseconds(100);
  std::vector<milliseconds> granted;
  CHECK_THROWS_AS(call_with_retries([&](milliseconds t) {
                    granted.push_back(t);
                    now += t;  // each attempt times out
                    throw TransientFailure("timeout");
                  },
                                    policy, "test", clock),
                  ProviderUnavailable);
  CHECK(now - start <= policy.budget());
  for (const auto& t : granted) CHECK(t <= policy.timeout);
}

TEST_CASE("non-transient errors are not retried") {
  int attempts = 0;
  CHECK_THROWS_AS(call_with_retries([&](std::chrono::milliseconds) {
                    ++attempts;
                    throw ProviderUnavailable("bad request");
                  },
                                    RetryPolicy{}, "test"),
                  ProviderUnavailable);
  CHECK(attempts == 1);
}

TEST_CASE("provider spec json and validation") {
  auto s = testing::transcriber("asr", {{"type", "oracle"}});
  const nlohmann::json j = s;
  CHECK(j.get<ProviderSpec>() == s);
  CHECK_THROWS_AS(nlohmann::json({{"name", "x"}, {"colour", "red"}}).get<ProviderSpec>(), ConfigError);
  ProviderSpec http;
  http.role = ProviderRole::embedder;
  http.name = "e";
  http.kind = ProviderKind::http;
  CHECK_THROWS_AS(http.validate(), ConfigError);
  http.endpoint = "http://127.0.0.1:1";
  CHECK_NOTHROW(http.validate());
  ProviderSpec unnamed;
  CHECK_THROWS_AS(unnamed.validate(), ConfigError);
}

TEST_CASE("endpoint override from the environment") {
  auto s = testing::embedder("gte-large", {{"type", "hashing"}});
  setenv("INSTRUCTFORGE_EMBEDDER_GTE_LARGE_URL", "http://10.0.0.1:9000", 1);
  apply_endpoint_env(s);
  unsetenv("INSTRUCTFORGE_EMBEDDER_GTE_LARGE_URL");
  CHECK(s.endpoint == "http://10.0.0.1:9000");
  CHECK(s.kind == ProviderKind::http);
}
