#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wee/audio.hpp"

namespace wee {

// The pool: one broadband base encoder plus three specialized weak encoders.
// All are deterministic feature extractors behind a frozen seeded projection;
// none has learned parameters.
enum class EncoderKind { base, envelope_expert, spectral_expert, burst_expert };

const char* encoder_kind_name(EncoderKind kind);
EncoderKind encoder_kind_from_name(const std::string& name);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::base;
  int output_dim = 0;
  int frame_len = 0;
  int hop = 0;
  std::uint64_t seed = 0;
};

// Time-major per-frame features, T x d row-major.
struct FeatureMap {
  int frames = 0;
  int dim = 0;
  std::vector<double> values;

  double at(int t, int c) const { return values[static_cast<std::size_t>(t) * dim + c]; }
};

int num_frames(int num_samples, int frame_len, int hop);
int descriptor_dim(EncoderKind kind, int frame_len);

// Per-frame raw descriptor before the projection (exposed for tests and the
// specialization probes):
//   base            log-compressed magnitudes of all DFT bins up to Nyquist
//   envelope_expert mean |sample| per frame and its first difference
//   spectral_expert mean DFT magnitude in 12 coarse bands
//   burst_expert    high-band (> 0.25 Nyquist) energy ratio and frame max
FeatureMap compute_descriptors(const EncoderSpec& spec, const AudioSegment& a);

// The frozen projection, a pure function of spec.seed: output_dim x desc_dim
// with N(0, 1/sqrt(desc_dim)) entries.
std::vector<double> projection_matrix(const EncoderSpec& spec);

// descriptors -> frozen projection -> tanh. Throws InvalidInputError if the
// segment is shorter than one frame.
FeatureMap encode(const EncoderSpec& spec, const AudioSegment& a);

// Linear interpolation along the time axis; identity when lengths match.
FeatureMap align_time(const FeatureMap& z, int target_frames);

}  // namespace wee
