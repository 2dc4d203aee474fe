#include "avasd/train/noise.hpp"

#include <cmath>

#include "avasd/core/error.hpp"

namespace avasd {

NoisyWaveform add_gaussian_noise(std::span<const double> waveform, Prng& prng) {
  if (waveform.empty()) throw ArgumentError("cannot add noise to an empty waveform");
  double energy = 0.0;
  for (double x : waveform) energy += x * x;
  NoisyWaveform out;
  out.samples.assign(waveform.begin(), waveform.end());
  out.sigma = std::sqrt(energy / static_cast<double>(waveform.size()));
  if (!std::isfinite(out.sigma)) throw NumericError("waveform contains non-finite samples");
  if (out.sigma == 0.0) {
    out.zero_signal = true;
    return out;
  }
  for (double& x : out.samples) x += out.sigma * prng.normal();
  return out;
}

}  // namespace avasd
