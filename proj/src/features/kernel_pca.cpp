#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vcas/error.hpp"
#include "vcas/features.hpp"

namespace vcas::features {

namespace {

Eigen::MatrixXd preprocess(const Eigen::MatrixXd& rows, Kernel kernel) {
  if (kernel == Kernel::Linear) return rows;
  Eigen::MatrixXd out = rows;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      std::ostringstream why;
      why << "kernel PCA: row " << i << " has zero or non-finite norm";
      throw DegenerateInputError(why.str());
    }
    out.row(i) /= norm;
  }
  return out;
}

Eigen::VectorXd preprocess_row(std::span<const double> row, Kernel kernel) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
  if (kernel == Kernel::Cosine) {
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DegenerateInputError("kernel PCA: zero-norm input row");
    }
    v /= norm;
  }
  return v;
}

}  // namespace

Eigen::VectorXd KernelPcaModel::explained_variance_ratio() const {
  const double total = positive_eigenvalues.sum();
  return eigenvalues / total;
}

Eigen::VectorXd KernelPcaModel::full_explained_variance_ratio() const {
  const double total = positive_eigenvalues.sum();
  return positive_eigenvalues / total;
}

namespace detail {

KernelPcaModel kpca_fit_with_kernel(const Eigen::MatrixXd& rows, std::size_t n_components,
                                    Kernel kernel) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw ParameterError("kernel PCA needs at least two rows");
  if (rows.cols() < 1) throw ParameterError("kernel PCA rows are empty");
  if (n_components < 1) throw ParameterError("kernel PCA needs n_components >= 1");

  KernelPcaModel model;
  model.kernel = kernel;
  model.training_rows = preprocess(rows, kernel);

  // Gram matrix; both kernels reduce to inner products after preprocessing.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(model.training_rows);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  model.kernel_row_means = gram.rowwise().mean();
  model.kernel_grand_mean = model.kernel_row_means.mean();

  // K' = K - 1K - K1 + 1K1
  Eigen::MatrixXd centered = gram;
  centered.colwise() -= model.kernel_row_means;
  centered.rowwise() -= model.kernel_row_means.transpose();
  centered.array() += model.kernel_grand_mean;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("kernel PCA: eigendecomposition did not converge");
  }
  // Eigen returns ascending order.
  const Eigen::VectorXd& values = solver.eigenvalues();
  // Rounding noise in a variance-free Gram matrix is measured against the
  // kernel scale (its largest diagonal entry), not against itself.
  const double largest = values(n - 1);
  const double cutoff = kEigenTolerance * std::max(largest, gram.diagonal().cwiseAbs().maxCoeff());
  std::size_t positive = 0;
  for (Eigen::Index i = n - 1; i >= 0 && values(i) > cutoff; --i) ++positive;
  if (n_components > positive) {
    std::ostringstream why;
    why << "kernel PCA: requested " << n_components << " components but the centered Gram matrix"
        << " has only " << positive << " positive eigenvalues (attainable max " << positive << ")";
    throw RankError(why.str(), positive);
  }

  const auto k = static_cast<Eigen::Index>(n_components);
  model.positive_eigenvalues.resize(static_cast<Eigen::Index>(positive));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(positive); ++i) {
    model.positive_eigenvalues(i) = values(n - 1 - i);
  }
  model.eigenvalues = model.positive_eigenvalues.head(k);
  model.eigenvectors.resize(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - c);
    // Canonical sign: the largest-magnitude coefficient is non-negative.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    model.eigenvectors.col(c) = v;
  }
  return model;
}

}  // namespace detail

KernelPcaModel kpca_fit(const Eigen::MatrixXd& rows, std::size_t n_components) {
  return detail::kpca_fit_with_kernel(rows, n_components, Kernel::Cosine);
}

Eigen::MatrixXd kpca_transform_rows(const KernelPcaModel& model, const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != model.input_dim()) {
    std::ostringstream why;
    why << "kpca_transform: row length " << rows.cols() << " does not match model input "
        << model.input_dim();
    throw ParameterError(why.str());
  }
  const Eigen::MatrixXd prepared = preprocess(rows, model.kernel);
  // Kernel of each new row against every training row: m x n.
  Eigen::MatrixXd k = prepared * model.training_rows.transpose();
  const Eigen::VectorXd new_means = k.rowwise().mean();
  k.rowwise() -= model.kernel_row_means.transpose();
  k.colwise() -= new_means;
  k.array() += model.kernel_grand_mean;

  // Project onto v_i / sqrt(lambda_i).
  const Eigen::VectorXd inv_sqrt = model.eigenvalues.cwiseSqrt().cwiseInverse();
  return (k * model.eigenvectors) * inv_sqrt.asDiagonal();
}

FeatureVector kpca_transform(const KernelPcaModel& model, std::span<const double> row) {
  if (row.size() != model.input_dim()) {
    std::ostringstream why;
    why << "kpca_transform: row length " << row.size() << " does not match model input "
        << model.input_dim();
    throw ParameterError(why.str());
  }
  const Eigen::VectorXd x = preprocess_row(row, model.kernel);
  Eigen::VectorXd k = model.training_rows * x;
  const double new_mean = k.mean();
  k -= model.kernel_row_means;
  k.array() += model.kernel_grand_mean - new_mean;
  FeatureVector out;
  out.values = (model.eigenvectors.transpose() * k).cwiseQuotient(model.eigenvalues.cwiseSqrt());
  return out;
}

Eigen::MatrixXd fitted_embedding(const KernelPcaModel& model) {
  return model.eigenvectors * model.eigenvalues.cwiseSqrt().asDiagonal();
}

}  // namespace vcas::features
