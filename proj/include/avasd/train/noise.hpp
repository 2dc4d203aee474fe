#pragma once

#include <span>
#include <vector>

#include "avasd/core/prng.hpp"

namespace avasd {

struct NoisyWaveform {
  std::vector<double> samples;
  double sigma = 0.0;        // RMS of the input, used as the noise std
  bool zero_signal = false;  // input was silent and is returned unchanged
};

/// x_i + g_i with g ~ N(0, rms(x)^2): a 0 dB signal-to-noise ratio.
NoisyWaveform add_gaussian_noise(std::span<const double> waveform, Prng& prng);

}  // namespace avasd
