#include "wee/audio.hpp"

#include <cmath>

namespace wee {

AudioSegment preprocess(const AudioSegment& raw, double target_duration_s, int target_rate_hz) {
  if (raw.samples.empty()) throw InvalidInputError("preprocess: empty audio segment");
  if (raw.sample_rate_hz <= 0) throw ConfigError("preprocess: source sample rate must be positive");
  if (!(target_duration_s > 0.0) || target_rate_hz <= 0) {
    throw ConfigError("preprocess: target duration and rate must be positive");
  }

  const std::vector<double>* src = &raw.samples;
  std::vector<double> resampled;
  if (raw.sample_rate_hz != target_rate_hz) {
    const double ratio = static_cast<double>(raw.sample_rate_hz) / target_rate_hz;
    const auto n_out = static_cast<std::size_t>(
        std::ceil(static_cast<double>(raw.samples.size()) / ratio));
    resampled.resize(n_out);
    const std::size_t last = raw.samples.size() - 1;
    for (std::size_t i = 0; i < n_out; ++i) {
      const double pos = static_cast<double>(i) * ratio;
      const auto lo = static_cast<std::size_t>(pos);
      if (lo >= last) {
        resampled[i] = raw.samples[last];
      } else {
        const double frac = pos - static_cast<double>(lo);
        resampled[i] = raw.samples[lo] * (1.0 - frac) + raw.samples[lo + 1] * frac;
      }
    }
    src = &resampled;
  }

  const auto target_len =
      static_cast<std::size_t>(std::llround(target_duration_s * target_rate_hz));
  AudioSegment out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.assign(target_len, 0.0);
  const std::size_t copy = std::min(target_len, src->size());
  for (std::size_t i = 0; i < copy; ++i) out.samples[i] = (*src)[i];
  return out;
}

}  // namespace wee
