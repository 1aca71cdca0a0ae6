#pragma once

#include <vector>

#include "wee/errors.hpp"

namespace wee {

// Raw mono waveform.
struct AudioSegment {
  std::vector<double> samples;
  int sample_rate_hz = 0;
};

// Resamples by linear interpolation to target_rate_hz, then crops (keeping
// the start) or zero-pads (at the end) to exactly
// target_duration_s * target_rate_hz samples.
AudioSegment preprocess(const AudioSegment& raw, double target_duration_s, int target_rate_hz);

}  // namespace wee
