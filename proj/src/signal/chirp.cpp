#include <cmath>
#include <numbers>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/signal.hpp"

namespace vcas::signal {

void Waveform::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw ParameterError("waveform sample rate must be positive");
  }
  if (samples.empty()) throw ParameterError("waveform is empty");
  for (double s : samples) {
    if (!std::isfinite(s)) throw ParameterError("waveform contains non-finite samples");
  }
}

void ChirpSpec::validate() const {
  std::ostringstream why;
  if (!(sample_rate > 0.0)) {
    why << "sample rate must be positive";
  } else if (!(f0 > 0.0 && f0 < f1 && f1 < sample_rate / 2.0)) {
    why << "need 0 < f0 < f1 < fs/2, got f0=" << f0 << " f1=" << f1 << " fs=" << sample_rate;
  } else if (!(duration > 0.0)) {
    why << "duration must be positive";
  } else if (truncate_to && (*truncate_to == 0 || *truncate_to > full_length())) {
    why << "truncate_to=" << *truncate_to << " outside (0, " << full_length() << "]";
  }
  if (!why.str().empty()) throw ParameterError("chirp: " + why.str());
}

std::size_t ChirpSpec::full_length() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

double ChirpSpec::instantaneous_frequency(double t) const noexcept {
  return f0 + (f1 - f0) * t / duration;
}

Waveform generate_chirp(const ChirpSpec& spec) {
  spec.validate();
  const std::size_t n = spec.truncate_to.value_or(spec.full_length());
  const double sweep_rate = (spec.f1 - spec.f0) / (2.0 * spec.duration);

  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    out.samples[i] = std::sin(2.0 * std::numbers::pi * (spec.f0 * t + sweep_rate * t * t));
  }
  return out;
}

}  // namespace vcas::signal
