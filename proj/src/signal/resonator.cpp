#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/rng.hpp"
#include "vcas/signal.hpp"

namespace vcas::signal {

void ModalPlant::validate(double sample_rate) const {
  if (modes.empty()) throw ParameterError("plant has no modes");
  for (const auto& m : modes) {
    std::ostringstream why;
    if (!(m.center_hz > 0.0) || !(m.center_hz < sample_rate / 2.0)) {
      why << "mode frequency " << m.center_hz << " Hz must lie in (0, " << sample_rate / 2.0
          << ") Hz";
    } else if (!(m.damping_ratio > 0.0 && m.damping_ratio < 1.0)) {
      why << "damping ratio " << m.damping_ratio << " outside (0, 1)";
    } else if (!(m.gain >= 0.0) || !std::isfinite(m.gain)) {
      why << "mode gain " << m.gain << " must be finite and non-negative";
    }
    if (!why.str().empty()) throw ParameterError("plant: " + why.str());
  }
  if (std::isnan(noise_snr_db)) throw ParameterError("plant: SNR is NaN");
}

Resonator::Resonator(const Mode& mode, double sample_rate) : sample_rate_(sample_rate) {
  // Constant-peak band-pass (bilinear transform with the center prewarped):
  // H(z) = alpha (1 - z^-2) / ((1 + alpha) - 2 cos(w0) z^-1 + (1 - alpha) z^-2),
  // Q = 1 / (2 zeta). |H| peaks at exactly w0 with unit gain and vanishes at DC.
  const double w0 = 2.0 * std::numbers::pi * mode.center_hz / sample_rate;
  const double alpha = std::sin(w0) * mode.damping_ratio;
  const double a0 = 1.0 + alpha;
  b0_ = mode.gain * alpha / a0;
  b2_ = -b0_;
  a1_ = -2.0 * std::cos(w0) / a0;
  a2_ = (1.0 - alpha) / a0;
}

double Resonator::magnitude_at(double frequency_hz) const {
  const double omega = 2.0 * std::numbers::pi * frequency_hz / sample_rate_;
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> num = b0_ + b2_ * z1 * z1;
  const std::complex<double> den = 1.0 + a1_ * z1 + a2_ * z1 * z1;
  return std::abs(num / den);
}

void Resonator::accumulate(std::span<const double> in, std::span<double> out) const {
  double x1 = 0.0;
  double x2 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x0 = in[i];
    const double y0 = b0_ * x0 + b2_ * x2 - a1_ * y1 - a2_ * y2;
    out[i] += y0;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
  }
}

Waveform synth_response(const ModalPlant& plant, const Waveform& excitation, std::uint64_t seed) {
  excitation.validate();
  plant.validate(excitation.sample_rate);

  Waveform out;
  out.sample_rate = excitation.sample_rate;
  out.samples.assign(excitation.size(), 0.0);
  for (const auto& mode : plant.modes) {
    Resonator(mode, excitation.sample_rate).accumulate(excitation.samples, out.samples);
  }

  const bool noiseless = std::isinf(plant.noise_snr_db) && plant.noise_snr_db > 0.0;
  if (noiseless) return out;

  double power = 0.0;
  for (double s : out.samples) power += s * s;
  power /= static_cast<double>(out.size());
  const double sigma = std::sqrt(power / std::pow(10.0, plant.noise_snr_db / 10.0));
  if (sigma > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& s : out.samples) s += noise(rng);
  }
  return out;
}

}  // namespace vcas::signal
