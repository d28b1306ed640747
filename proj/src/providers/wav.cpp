#include "instructforge/providers/wav.hpp"

#include <cstring>
#include <string>

#include "instructforge/errors.hpp"

namespace instructforge::providers {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_wav(const PcmAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

PcmAudio decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw InvalidInput("wav: missing RIFF/WAVE header");
  }
  PcmAudio audio;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = get_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) throw InvalidInput("wav: chunk runs past end of file");
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw InvalidInput("wav: short fmt chunk");
      const auto format = get_u16(bytes, body);
      const auto channels = get_u16(bytes, body + 2);
      const auto rate = get_u32(bytes, body + 4);
      const auto bits = get_u16(bytes, body + 14);
      if (format != 1) throw InvalidInput("wav: not PCM (format " + std::to_string(format) + ")");
      if (channels != 1) throw InvalidInput("wav: expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw InvalidInput("wav: expected 16-bit samples");
      if (rate == 0) throw InvalidInput("wav: zero sample rate");
      audio.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt) throw InvalidInput("wav: data chunk before fmt chunk");
      if (size % 2 != 0) throw InvalidInput("wav: odd data size");
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] = static_cast<std::int16_t>(get_u16(bytes, body + 2 * i));
      }
      return audio;
    }
    pos = body + size + (size & 1);
  }
  throw InvalidInput("wav: no data chunk");
}

}  // namespace instructforge::providers
