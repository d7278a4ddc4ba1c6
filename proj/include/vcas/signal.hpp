#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vcas::signal {

// Uniformly sampled real signal. Amplitudes are dimensionless, nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }

  // Throws ParameterError unless sample_rate > 0, length > 0 and every sample is finite.
  void validate() const;
};

// Linear sweep from f0 to f1 over `duration` seconds. The defaults are the
// sensing sweep: 20 Hz to 20 kHz in one second at 44.1 kHz, keeping the first
// 42000 samples.
struct ChirpSpec {
  double f0 = 20.0;
  double f1 = 20000.0;
  double duration = 1.0;
  double sample_rate = 44100.0;
  std::optional<std::size_t> truncate_to = 42000;

  void validate() const;

  std::size_t full_length() const;

  // f0 + (f1 - f0) t / T
  double instantaneous_frequency(double t) const noexcept;
};

Waveform generate_chirp(const ChirpSpec& spec);

struct Mode {
  double center_hz = 0.0;
  double damping_ratio = 0.01;
  double gain = 1.0;
};

// Task tags carried along with a plant so synthesized samples can be labeled.
struct PlantTags {
  std::string label;
  std::optional<double> angle_deg;
  std::optional<double> theta_x_deg;
  std::optional<double> theta_z_deg;
};

// Bank of second-order resonators standing in for the gripper/object system.
struct ModalPlant {
  std::vector<Mode> modes;
  double noise_snr_db = 30.0;  // +inf disables noise
  PlantTags tags;

  void validate(double sample_rate) const;
};

// Second-order band-pass for one mode: peak magnitude `gain` at the center
// frequency, bandwidth set by the damping ratio (Q = 1 / (2 zeta)).
class Resonator {
 public:
  Resonator(const Mode& mode, double sample_rate);

  // Accumulates the filtered input into `out` (out += H * in).
  void accumulate(std::span<const double> in, std::span<double> out) const;

  double magnitude_at(double frequency_hz) const;

 private:
  double b0_ = 0.0;
  double b2_ = 0.0;
  double a1_ = 0.0;
  double a2_ = 0.0;
  double sample_rate_ = 0.0;
};

// Sum of the per-mode resonator outputs plus white Gaussian noise at the
// plant's SNR (relative to the noiseless response power). Deterministic in seed.
Waveform synth_response(const ModalPlant& plant, const Waveform& excitation, std::uint64_t seed);

struct ContactEvent {
  bool detected = false;
  std::optional<std::size_t> sample_index;
  bool false_positive = false;
};

inline constexpr std::size_t kDefaultDebounce = 50;

// First sample with |x| >= threshold. A crossing before `debounce` samples is
// reported as a false positive; callers re-run the detection.
ContactEvent detect_contact(const Waveform& stream, double threshold,
                            std::size_t debounce = kDefaultDebounce);

}  // namespace vcas::signal
