#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcas/signal.hpp"

namespace vcas::features {

// One-sided FFT magnitude restricted to the bins [first_bin, first_bin + size).
struct Spectrum {
  std::vector<double> magnitudes;
  double bin_hz = 0.0;       // sample_rate / n_fft
  std::size_t n_fft = 0;     // length of the transformed sequence
  std::size_t first_bin = 0;
  double f_low = 0.0;
  double f_high = 0.0;

  std::size_t size() const noexcept { return magnitudes.size(); }
  double nyquist() const noexcept { return bin_hz * static_cast<double>(n_fft) / 2.0; }
  double frequency_of(std::size_t i) const noexcept {
    return static_cast<double>(first_bin + i) * bin_hz;
  }
};

// Raw |X_k| for k = 0..N/2 of the full sample sequence (no padding, no window).
Spectrum fft_magnitude(const signal::Waveform& w);

// Parseval on a full one-sided spectrum: sum |x_n|^2 == (1/N) sum_k c_k |X_k|^2,
// c_k = 1 for DC and the Nyquist bin, 2 otherwise.
double spectral_energy(const Spectrum& full);

// Keeps bins with f_low <= f < f_high. When f_high reaches the Nyquist
// frequency the Nyquist bin itself is kept, so [0, fs/2] is the identity.
Spectrum band_select(const Spectrum& s, double f_low, double f_high);

struct Band {
  std::string_view name;
  double f_low;
  double f_high;
};

inline constexpr Band kFullBand{"full", 20.0, 22050.0};
inline constexpr Band kLowBand{"low", 20.0, 9190.0};
inline constexpr Band kHighBand{"high", 9190.0, 22050.0};

// Looks up "full", "low" or "high"; throws ParameterError otherwise.
const Band& band_by_name(std::string_view name);

// a.b / (|a| |b|)
double cosine_kernel(std::span<const double> a, std::span<const double> b);

enum class Kernel {
  Cosine,
  Linear,  // test oracle only; not reachable through kpca_fit
};

struct FeatureVector {
  Eigen::VectorXd values;
  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

struct KernelPcaModel {
  Kernel kernel = Kernel::Cosine;
  // Preprocessed training rows (unit L2 norm for the cosine kernel).
  Eigen::MatrixXd training_rows;
  // Retained eigenpairs of the double-centered Gram matrix, largest first.
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // n_train x n_components, orthonormal columns
  Eigen::VectorXd kernel_row_means;
  double kernel_grand_mean = 0.0;
  // Every eigenvalue above tolerance, for explained-variance accounting.
  Eigen::VectorXd positive_eigenvalues;

  std::size_t n_components() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(training_rows.cols()); }

  // eigenvalue_i / sum of all positive eigenvalues, for the retained components.
  Eigen::VectorXd explained_variance_ratio() const;
  // Same ratio over every positive eigenvalue (long table for reports).
  Eigen::VectorXd full_explained_variance_ratio() const;
};

// Relative eigenvalue cut-off: values <= tol * largest are treated as zero.
inline constexpr double kEigenTolerance = 1e-10;

KernelPcaModel kpca_fit(const Eigen::MatrixXd& rows, std::size_t n_components);

FeatureVector kpca_transform(const KernelPcaModel& model, std::span<const double> row);

// Batched transform: one output row per input row.
Eigen::MatrixXd kpca_transform_rows(const KernelPcaModel& model, const Eigen::MatrixXd& rows);

// Embedding of the training rows themselves: sqrt(lambda_i) * v_i.
Eigen::MatrixXd fitted_embedding(const KernelPcaModel& model);

namespace detail {
KernelPcaModel kpca_fit_with_kernel(const Eigen::MatrixXd& rows, std::size_t n_components,
                                    Kernel kernel);
}  // namespace detail

}  // namespace vcas::features
