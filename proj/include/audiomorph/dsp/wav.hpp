#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::dsp {

/// Decodes a 16-bit PCM mono RIFF/WAVE byte stream. Any other format,
/// channel count, or a sample rate other than `expected_rate` is rejected.
Waveform decode_wav(std::span<const std::uint8_t> bytes, int expected_rate = kDefaultSampleRate);

/// Samples are clipped to [-1, 1] and quantized to 16 bits.
std::vector<std::uint8_t> encode_wav(const Waveform& w);

Waveform read_wav(const std::filesystem::path& path, int expected_rate = kDefaultSampleRate);
void write_wav(const std::filesystem::path& path, const Waveform& w);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace audiomorph::dsp
