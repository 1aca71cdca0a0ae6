#include "wee/encoders.hpp"

#include <cmath>

#include "wee/kernels.hpp"
#include "wee/rng.hpp"

namespace wee {

namespace {

constexpr int kSpectralBands = 12;

// Fixed per-kind descriptor scaling so the tanh preactivation stays in its
// responsive range for signals with amplitudes around 1. Part of the frozen
// encoder definition.
constexpr double kBaseScale = 0.3;
constexpr double kEnvScale = 1.5;
constexpr double kDenvScale = 6.0;
constexpr double kBandScale = 3.0;
constexpr double kRatioScale = 2.0;
constexpr double kMaxScale = 1.0;

void check_spec(const EncoderSpec& spec) {
  if (spec.frame_len <= 0 || spec.hop <= 0 || spec.hop >= spec.frame_len) {
    throw ConfigError("encoder: require frame_len > hop > 0");
  }
  if (spec.output_dim < 1) throw ConfigError("encoder: output_dim must be >= 1");
}

}  // namespace

const char* encoder_kind_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::base: return "base";
    case EncoderKind::envelope_expert: return "envelope_expert";
    case EncoderKind::spectral_expert: return "spectral_expert";
    case EncoderKind::burst_expert: return "burst_expert";
  }
  return "?";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
  if (name == "base") return EncoderKind::base;
  if (name == "envelope_expert") return EncoderKind::envelope_expert;
  if (name == "spectral_expert") return EncoderKind::spectral_expert;
  if (name == "burst_expert") return EncoderKind::burst_expert;
  throw ConfigError("unknown encoder kind: " + name);
}

int num_frames(int num_samples, int frame_len, int hop) {
  return 1 + (num_samples - frame_len) / hop;
}

int descriptor_dim(EncoderKind kind, int frame_len) {
  switch (kind) {
    case EncoderKind::base: return frame_len / 2 + 1;
    case EncoderKind::envelope_expert: return 2;
    case EncoderKind::spectral_expert: return kSpectralBands;
    case EncoderKind::burst_expert: return 2;
  }
  return 0;
}

FeatureMap compute_descriptors(const EncoderSpec& spec, const AudioSegment& a) {
  check_spec(spec);
  const int n = static_cast<int>(a.samples.size());
  if (n < spec.frame_len) {
    throw InvalidInputError("encode: segment shorter than one frame");
  }
  const int t_frames = num_frames(n, spec.frame_len, spec.hop);
  const int d = descriptor_dim(spec.kind, spec.frame_len);
  FeatureMap out;
  out.frames = t_frames;
  out.dim = d;
  out.values.assign(static_cast<std::size_t>(t_frames) * d, 0.0);

  const int flen = spec.frame_len;
  const int hop = spec.hop;
  const double* x = a.samples.data();

  switch (spec.kind) {
    case EncoderKind::base: {
      const int bins = flen / 2 + 1;
#pragma omp parallel for schedule(static)
      for (int t = 0; t < t_frames; ++t) {
        std::vector<double> mags(static_cast<std::size_t>(bins));
        kern::dft_magnitudes(mags.data(), x + static_cast<std::size_t>(t) * hop, flen);
        double* row = out.values.data() + static_cast<std::size_t>(t) * d;
        for (int b = 0; b < bins; ++b) row[b] = kBaseScale * std::log1p(mags[b]);
      }
      break;
    }
    case EncoderKind::envelope_expert: {
      std::vector<double> env(static_cast<std::size_t>(t_frames));
#pragma omp parallel for schedule(static)
      for (int t = 0; t < t_frames; ++t) {
        const double* f = x + static_cast<std::size_t>(t) * hop;
        double s = 0.0;
        for (int i = 0; i < flen; ++i) s += std::abs(f[i]);
        env[static_cast<std::size_t>(t)] = s / flen;
      }
      for (int t = 0; t < t_frames; ++t) {
        double* row = out.values.data() + static_cast<std::size_t>(t) * d;
        row[0] = kEnvScale * env[static_cast<std::size_t>(t)];
        row[1] = t == 0 ? 0.0
                        : kDenvScale * (env[static_cast<std::size_t>(t)] -
                                        env[static_cast<std::size_t>(t) - 1]);
      }
      break;
    }
    case EncoderKind::spectral_expert: {
      const int bins = flen / 2 + 1;
#pragma omp parallel for schedule(static)
      for (int t = 0; t < t_frames; ++t) {
        std::vector<double> mags(static_cast<std::size_t>(bins));
        kern::dft_magnitudes(mags.data(), x + static_cast<std::size_t>(t) * hop, flen);
        double* row = out.values.data() + static_cast<std::size_t>(t) * d;
        for (int band = 0; band < kSpectralBands; ++band) {
          const int lo = band * bins / kSpectralBands;
          const int hi = (band + 1) * bins / kSpectralBands;
          double s = 0.0;
          for (int b = lo; b < hi; ++b) s += mags[b];
          const int width = hi > lo ? hi - lo : 1;
          row[band] = kBandScale * (2.0 / flen) * (s / width);
        }
      }
      break;
    }
    case EncoderKind::burst_expert: {
      const int bins = flen / 2 + 1;
      // Bins strictly above a quarter of the Nyquist frequency.
      const int first_high = flen / 8 + 1;
#pragma omp parallel for schedule(static)
      for (int t = 0; t < t_frames; ++t) {
        const double* f = x + static_cast<std::size_t>(t) * hop;
        std::vector<double> mags(static_cast<std::size_t>(bins));
        kern::dft_magnitudes(mags.data(), f, flen);
        double total = 1e-12;
        double high = 0.0;
        for (int b = 0; b < bins; ++b) {
          const double e = mags[b] * mags[b];
          total += e;
          if (b >= first_high) high += e;
        }
        double peak = 0.0;
        for (int i = 0; i < flen; ++i) peak = std::max(peak, std::abs(f[i]));
        double* row = out.values.data() + static_cast<std::size_t>(t) * d;
        row[0] = kRatioScale * (high / total);
        row[1] = kMaxScale * peak;
      }
      break;
    }
  }
  return out;
}

std::vector<double> projection_matrix(const EncoderSpec& spec) {
  check_spec(spec);
  const int d = descriptor_dim(spec.kind, spec.frame_len);
  Rng rng(hash_seed(spec.seed, static_cast<std::uint64_t>(spec.kind), 0x70726f6aULL));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> w(static_cast<std::size_t>(spec.output_dim) * d);
  for (double& v : w) v = scale * rng.normal();
  return w;
}

FeatureMap encode(const EncoderSpec& spec, const AudioSegment& a) {
  const FeatureMap desc = compute_descriptors(spec, a);
  const std::vector<double> w = projection_matrix(spec);
  FeatureMap out;
  out.frames = desc.frames;
  out.dim = spec.output_dim;
  out.values.assign(static_cast<std::size_t>(desc.frames) * spec.output_dim, 0.0);
  kern::matmul_nt(out.values.data(), desc.values.data(), w.data(), desc.frames, desc.dim,
                  spec.output_dim);
  for (double& v : out.values) v = std::tanh(v);
  return out;
}

FeatureMap align_time(const FeatureMap& z, int target_frames) {
  if (z.frames < 1 || target_frames < 1) {
    throw InvalidInputError("align_time: need at least one frame on both sides");
  }
  if (target_frames == z.frames) return z;

  FeatureMap out;
  out.frames = target_frames;
  out.dim = z.dim;
  out.values.assign(static_cast<std::size_t>(target_frames) * z.dim, 0.0);
  for (int i = 0; i < target_frames; ++i) {
    double pos = 0.0;
    if (target_frames > 1) {
      pos = static_cast<double>(i) * (z.frames - 1) / (target_frames - 1);
    }
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, z.frames - 1);
    const double frac = pos - lo;
    for (int c = 0; c < z.dim; ++c) {
      out.values[static_cast<std::size_t>(i) * z.dim + c] =
          z.at(lo, c) * (1.0 - frac) + z.at(hi, c) * frac;
    }
  }
  return out;
}

}  // namespace wee
