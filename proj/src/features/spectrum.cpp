#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/features.hpp"

namespace vcas::features {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

Spectrum fft_magnitude(const signal::Waveform& w) {
  if (w.samples.empty()) throw ParameterError("fft_magnitude: empty waveform");
  if (!(w.sample_rate > 0.0)) throw ParameterError("fft_magnitude: sample rate must be positive");

  const std::size_t n = w.samples.size();
  const std::size_t half = n / 2 + 1;
  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * half)));

  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("fft_magnitude: FFTW planning failed");
  std::copy(w.samples.begin(), w.samples.end(), in.get());
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.n_fft = n;
  s.bin_hz = w.sample_rate / static_cast<double>(n);
  s.first_bin = 0;
  s.f_low = 0.0;
  s.f_high = w.sample_rate / 2.0;
  s.magnitudes.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    s.magnitudes[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
  }
  return s;
}

double spectral_energy(const Spectrum& full) {
  if (full.first_bin != 0 || full.size() != full.n_fft / 2 + 1) {
    throw ParameterError("spectral_energy needs an unbanded one-sided spectrum");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    const bool unpaired = k == 0 || (full.n_fft % 2 == 0 && k == full.n_fft / 2);
    sum += (unpaired ? 1.0 : 2.0) * full.magnitudes[k] * full.magnitudes[k];
  }
  return sum / static_cast<double>(full.n_fft);
}

Spectrum band_select(const Spectrum& s, double f_low, double f_high) {
  const double nyquist = s.nyquist();
  if (!(f_low >= 0.0 && f_low < f_high && f_high <= nyquist * (1.0 + 1e-12))) {
    std::ostringstream why;
    why << "band_select: need 0 <= f_low < f_high <= " << nyquist << " Hz, got [" << f_low << ", "
        << f_high << ")";
    throw ParameterError(why.str());
  }
  const bool keep_nyquist = f_high >= nyquist;

  std::size_t begin = s.size();
  std::size_t end = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = s.frequency_of(i);
    if (f >= f_low && (f < f_high || keep_nyquist)) {
      begin = std::min(begin, i);
      end = i + 1;
    }
  }

  Spectrum out;
  out.bin_hz = s.bin_hz;
  out.n_fft = s.n_fft;
  out.f_low = f_low;
  out.f_high = f_high;
  if (begin < end) {
    out.first_bin = s.first_bin + begin;
    out.magnitudes.assign(s.magnitudes.begin() + static_cast<std::ptrdiff_t>(begin),
                          s.magnitudes.begin() + static_cast<std::ptrdiff_t>(end));
  } else {
    out.first_bin = s.first_bin;
  }
  return out;
}

const Band& band_by_name(std::string_view name) {
  for (const Band* b : {&kFullBand, &kLowBand, &kHighBand}) {
    if (b->name == name) return *b;
  }
  throw ParameterError("unknown band '" + std::string(name) + "' (expected full, low or high)");
}

double cosine_kernel(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("cosine_kernel: length mismatch");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_kernel: zero-norm row");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace vcas::features
