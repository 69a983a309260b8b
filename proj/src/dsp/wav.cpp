#include "audiomorph/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "audiomorph/detail/bytes.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform decode_wav(std::span<const std::uint8_t> bytes, int expected_rate) {
  detail::ByteReader r(bytes);
  if (!r.expect("RIFF")) throw FormatError("wav: missing RIFF header");
  r.get<std::uint32_t>();
  if (!r.expect("WAVE")) throw FormatError("wav: missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (r.remaining() >= 8) {
    auto id = r.bytes(4);
    auto size = r.get<std::uint32_t>();
    std::string tag(id.begin(), id.end());
    if (tag == "fmt ") {
      if (size < 16) throw FormatError("wav: fmt chunk too small");
      auto format = r.get<std::uint16_t>();
      channels = r.get<std::uint16_t>();
      rate = r.get<std::uint32_t>();
      r.get<std::uint32_t>();  // byte rate
      r.get<std::uint16_t>();  // block align
      bits = r.get<std::uint16_t>();
      r.skip(size - 16);
      if (format != kFormatPcm && format != kFormatExtensible)
        throw FormatError("wav: only PCM is supported (format tag " + std::to_string(format) + ")");
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
      if (channels != 1)
        throw InvalidInput("wav: expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16)
        throw InvalidInput("wav: expected 16-bit samples, got " + std::to_string(bits));
      if (static_cast<int>(rate) != expected_rate)
        throw InvalidInput("wav: expected " + std::to_string(expected_rate) + " Hz, got " +
                           std::to_string(rate) + " Hz (resampling is not supported)");
      std::size_t n = std::min<std::size_t>(size, r.remaining()) / 2;
      Waveform w;
      w.sample_rate_hz = static_cast<int>(rate);
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) w.samples[i] = r.get<std::int16_t>() / 32768.0;
      return w;
    } else {
      r.skip(std::min<std::size_t>(size + (size & 1u), r.remaining()));
      continue;
    }
    if (size & 1u) r.skip(std::min<std::size_t>(1, r.remaining()));
  }
  throw FormatError("wav: no data chunk");
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  if (w.sample_rate_hz <= 0) throw InvalidInput("wav: sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  detail::ByteWriter out;
  out.bytes("RIFF");
  out.put<std::uint32_t>(36 + 2 * n);
  out.bytes("WAVE");
  out.bytes("fmt ");
  out.put<std::uint32_t>(16);
  out.put<std::uint16_t>(kFormatPcm);
  out.put<std::uint16_t>(1);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(w.sample_rate_hz));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  out.put<std::uint16_t>(2);
  out.put<std::uint16_t>(16);
  out.bytes("data");
  out.put<std::uint32_t>(2 * n);
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw InvalidInput("wav: non-finite sample");
    double q = std::round(std::clamp(s, -1.0, 1.0) * 32767.0);
    out.put<std::int16_t>(static_cast<std::int16_t>(q));
  }
  return out.take();
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Waveform read_wav(const std::filesystem::path& path, int expected_rate) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_wav(bytes, expected_rate);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  write_file_bytes(path, encode_wav(w));
}

}  // namespace audiomorph::dsp
