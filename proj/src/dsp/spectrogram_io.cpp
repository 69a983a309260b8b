#include "audiomorph/dsp/spectrogram_io.hpp"

#include <string>

#include "audiomorph/detail/bytes.hpp"
#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

namespace {
constexpr std::string_view kMagic = "AMSPEC1";
}

std::vector<std::uint8_t> encode_amspec(const Spectrogram& s) {
  if (s.values.size() != s.frames * s.bins) throw ShapeError("amspec: value count does not match shape");
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.frames));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.bins));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(s.scale));
  w.f32s(s.values);
  return w.take();
}

Spectrogram decode_amspec(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.expect(kMagic)) throw FormatError("amspec: bad magic");
  const auto frames = r.get<std::uint32_t>();
  const auto bins = r.get<std::uint32_t>();
  const auto tag = r.get<std::uint8_t>();
  if (tag > static_cast<std::uint8_t>(Scale::attention))
    throw FormatError("amspec: unknown scale tag " + std::to_string(tag));
  Spectrogram s(frames, bins, static_cast<Scale>(tag));
  if (r.remaining() != s.values.size() * sizeof(float))
    throw FormatError("amspec: payload size does not match " + std::to_string(frames) + "x" + std::to_string(bins));
  r.f32s(s.values);
  return s;
}

void write_amspec(const std::filesystem::path& path, const Spectrogram& s) {
  write_file_bytes(path, encode_amspec(s));
}

Spectrogram read_amspec(const std::filesystem::path& path) {
  try {
    return decode_amspec(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace audiomorph::dsp
