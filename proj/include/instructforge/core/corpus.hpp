#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instructforge/core/model.hpp"
#include "instructforge/textmetrics/textmetrics.hpp"

namespace instructforge {

struct CorpusLoad {
  std::vector<InstructionRecord> records;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Reads a JSONL corpus of {"id"?, "question", "context"?, "answer"?} objects.
// Records without an id get "{dataset_tag}-{line}". Blank questions are
// skipped and counted; malformed JSON or duplicate ids throw ParseError.
CorpusLoad load_corpus(const std::filesystem::path& path, std::string_view dataset_tag);
CorpusLoad parse_corpus(std::string_view content, std::string_view dataset_tag,
                        std::string_view source_name = "<corpus>");

// JSONL of {"id", "name", "description"}.
std::vector<SpeakerProfile> load_speaker_catalog(const std::filesystem::path& path);
std::vector<SpeakerProfile> parse_speaker_catalog(std::string_view content,
                                                  std::string_view source_name = "<catalog>");

// Index into a catalog of `catalog_size` drawn uniformly by a generator keyed
// on (seed, record id).
std::size_t speaker_index(std::uint64_t seed, std::string_view record_id, std::size_t catalog_size);

// Returns copies of `records` with speaker_id set. Throws ConfigError on an
// empty catalog.
std::vector<InstructionRecord> assign_speakers(std::span<const InstructionRecord> records,
                                               std::span<const SpeakerProfile> catalog,
                                               std::uint64_t seed);

const SpeakerProfile& find_speaker(std::span<const SpeakerProfile> catalog, std::string_view id);

// Collapses candidates whose texts normalize identically, keeping the earliest.
// Candidates with blank text are dropped. Throws InvalidInput if more than one
// candidate claims to be the original.
std::vector<CandidateText> dedupe_candidates(std::span<const CandidateText> candidates,
                                             const textmetrics::NormalizationPolicy& policy);

inline constexpr std::size_t kLongTextWords = 100;

// Warning text when `text` runs past kLongTextWords words.
std::optional<std::string> long_text_warning(std::string_view text);

}  // namespace instructforge
