#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::dsp {

/// AMSPEC1 container:
///   "AMSPEC1" | u32 frames | u32 bins | u8 scale | frames*bins f32,
/// little-endian, row-major by time. The StftConfig is not stored; readers
/// get a default-constructed one.
std::vector<std::uint8_t> encode_amspec(const Spectrogram& s);
Spectrogram decode_amspec(std::span<const std::uint8_t> bytes);

void write_amspec(const std::filesystem::path& path, const Spectrogram& s);
Spectrogram read_amspec(const std::filesystem::path& path);

}  // namespace audiomorph::dsp
