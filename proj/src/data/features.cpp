#include "audiomorph/data/features.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>

#include "audiomorph/detail/bytes.hpp"
#include "audiomorph/dsp/spectrogram_io.hpp"
#include "audiomorph/dsp/wav.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::data {

namespace {

template <typename V>
void hash_value(detail::Fnv1a& h, V v) {
  std::uint8_t raw[sizeof(V)];
  std::memcpy(raw, &v, sizeof(V));
  h.update(std::span<const std::uint8_t>(raw, sizeof(V)));
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

FeatureCache FeatureCache::locate(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("AUDIOMORPH_CACHE"); env && *env) return {env};
  return {fallback};
}

std::filesystem::path FeatureCache::entry_path(std::uint64_t key) const { return dir / (hex(key) + ".amspec"); }

std::uint64_t feature_key(std::span<const std::uint8_t> wav_bytes, const dsp::FeatureConfig& cfg) {
  detail::Fnv1a h;
  h.update("audiomorph-features-1");
  h.update(wav_bytes);
  hash_value(h, cfg.stft.window_ms);
  hash_value(h, cfg.stft.hop_ms);
  hash_value(h, static_cast<std::uint64_t>(cfg.stft.fft_size));
  hash_value(h, cfg.stft.preemphasis);
  hash_value(h, static_cast<std::int64_t>(cfg.stft.sample_rate_hz));
  hash_value(h, static_cast<std::uint64_t>(cfg.n_mels));
  hash_value(h, cfg.f_min_hz);
  hash_value(h, cfg.f_max_hz);
  hash_value(h, cfg.log_floor);
  return h.digest();
}

dsp::Spectrogram load_features(const Manifest& m, const ManifestEntry& e, const dsp::FeatureConfig& cfg,
                               const FeatureCache* cache) {
  const auto path = m.resolve(e);
  if (!e.spec_path.empty()) {
    auto s = dsp::read_amspec(path);
    if (s.scale != dsp::Scale::log_mel) throw FormatError(path.string() + ": expected log-mel features");
    if (s.bins != cfg.n_mels) throw FormatError(path.string() + ": has " + std::to_string(s.bins) + " mel bins");
    s.config = cfg.stft;
    return s;
  }
  const auto bytes = dsp::read_file_bytes(path);
  std::filesystem::path cached;
  if (cache) {
    cached = cache->entry_path(feature_key(bytes, cfg));
    if (std::filesystem::exists(cached)) {
      try {
        auto s = dsp::read_amspec(cached);
        s.config = cfg.stft;
        return s;
      } catch (const FormatError&) {
        // Damaged entry; recompute and overwrite below.
      }
    }
  }
  auto s = dsp::log_mel_features(dsp::decode_wav(bytes, cfg.stft.sample_rate_hz), cfg);
  if (cache) {
    auto tmp = cached;
    tmp += "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
    dsp::write_amspec(tmp, s);
    std::error_code ec;
    std::filesystem::rename(tmp, cached, ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }
  return s;
}

std::vector<dsp::Spectrogram> load_features(const Manifest& m, std::span<const ManifestEntry> entries,
                                            const dsp::FeatureConfig& cfg, const FeatureCache* cache,
                                            std::size_t jobs) {
  std::vector<dsp::Spectrogram> out(entries.size());
  jobs = std::max<std::size_t>(1, std::min(jobs, entries.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < entries.size(); ++i) out[i] = load_features(m, entries[i], cfg, cache);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < entries.size(); i = next++) {
        try {
          out[i] = load_features(m, entries[i], cfg, cache);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace audiomorph::data
