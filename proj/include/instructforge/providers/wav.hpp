#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace instructforge::providers {

// Mono 16-bit PCM.
struct PcmAudio {
  int sample_rate = 16000;
  std::vector<std::int16_t> samples;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

std::vector<std::uint8_t> encode_wav(const PcmAudio& audio);

// Parses a RIFF/WAVE container holding mono little-endian 16-bit PCM. Unknown
// chunks are skipped. Throws InvalidInput on anything else.
PcmAudio decode_wav(std::span<const std::uint8_t> bytes);

}  // namespace instructforge::providers
