#pragma once

// Independent reference computations shared by the unit and acceptance
// suites. Nothing here calls into the code paths it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "vcas/learn.hpp"
#include "vcas/signal.hpp"

namespace vcas::oracle {

// Zero-crossing times with linear interpolation between samples.
inline std::vector<double> zero_crossings(const signal::Waveform& w) {
  std::vector<double> t;
  for (std::size_t i = 1; i < w.samples.size(); ++i) {
    const double a = w.samples[i - 1];
    const double b = w.samples[i];
    if ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)) {
      const double frac = a / (a - b);
      t.push_back((static_cast<double>(i - 1) + frac) / w.sample_rate);
    }
  }
  return t;
}

// Mean frequency over the crossings inside [center - half, center + half]:
// consecutive crossings are half a period apart. Returns {time, frequency}.
inline std::pair<double, double> crossing_frequency(const std::vector<double>& crossings,
                                                    double center, double half) {
  auto lo = std::lower_bound(crossings.begin(), crossings.end(), center - half);
  auto hi = std::upper_bound(crossings.begin(), crossings.end(), center + half);
  if (hi - lo < 3) return {center, 0.0};
  const double first = *lo;
  const double last = *(hi - 1);
  const double count = static_cast<double>(hi - lo - 1);
  return {(first + last) / 2.0, count / (2.0 * (last - first))};
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix. Returns
// eigenvalues in descending order with matching eigenvector columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return {values, vectors};
}

// Brute-force kernel PCA: explicit kernel loops, explicit centering matrix
// H = I - 11^T/n, Jacobi eigensolve. `kernel(a, b)` works on row vectors.
struct BruteKpca {
  Eigen::MatrixXd rows;
  Eigen::MatrixXd gram;
  Eigen::VectorXd values;   // descending, all
  Eigen::MatrixXd vectors;  // columns
  std::size_t k = 0;

  template <typename Kernel>
  BruteKpca(const Eigen::MatrixXd& x, std::size_t components, Kernel kernel)
      : rows(x), k(components) {
    const Eigen::Index n = x.rows();
    gram.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = kernel(x.row(i), x.row(j));
    const Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    auto [vals, vecs] = jacobi_eigen(h * gram * h);
    values = vals;
    vectors = vecs;
  }

  // Centered projection of a new row onto the top-k components.
  template <typename Kernel>
  Eigen::VectorXd project(const Eigen::RowVectorXd& x, Kernel kernel) const {
    const Eigen::Index n = rows.rows();
    Eigen::VectorXd kx(n);
    for (Eigen::Index j = 0; j < n; ++j) kx(j) = kernel(x, rows.row(j));
    const Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::VectorXd centered = h * (kx - gram * Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
    Eigen::VectorXd out(static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
      out(c) = vectors.col(c).dot(centered) / std::sqrt(values(c));
    }
    return out;
  }
};

inline double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

inline double linear(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) { return a.dot(b); }

// Largest per-component deviation between two embeddings up to a sign flip
// of each component (columns).
inline double max_signed_deviation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double plus = (a.col(c) - b.col(c)).cwiseAbs().maxCoeff();
    const double minus = (a.col(c) + b.col(c)).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

// Central differences of mlp_loss for sampled parameters of each layer.
// Returns per-layer relative error ||analytic - numeric|| / max(norms).
inline std::vector<double> gradient_check(const learn::MlpModel& model, const learn::Batch& batch,
                                          const learn::Gradient& analytic, double step,
                                          std::size_t samples_per_layer, std::uint64_t seed) {
  std::vector<double> errors;
  std::mt19937_64 rng(seed);
  learn::MlpModel probe = model;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    std::vector<double> a;
    std::vector<double> num;
    const auto nw = model.layers[l].weights.size();
    const auto nb = model.layers[l].bias.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, nw + nb - 1);
    const std::size_t count = std::min<std::size_t>(samples_per_layer, static_cast<std::size_t>(nw + nb));
    for (std::size_t s = 0; s < count; ++s) {
      const Eigen::Index idx = count == static_cast<std::size_t>(nw + nb) ? static_cast<Eigen::Index>(s) : pick(rng);
      double* param = idx < nw ? probe.layers[l].weights.data() + idx : probe.layers[l].bias.data() + (idx - nw);
      const double g = idx < nw ? analytic.layers[l].weights.data()[idx] : analytic.layers[l].bias.data()[idx - nw];
      const double saved = *param;
      *param = saved + step;
      const double up = learn::mlp_loss(probe, batch);
      *param = saved - step;
      const double down = learn::mlp_loss(probe, batch);
      *param = saved;
      a.push_back(g);
      num.push_back((up - down) / (2.0 * step));
    }
    double diff = 0.0;
    double na = 0.0;
    double nn = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff += (a[i] - num[i]) * (a[i] - num[i]);
      na += a[i] * a[i];
      nn += num[i] * num[i];
    }
    const double scale = std::max(std::sqrt(na), std::sqrt(nn));
    errors.push_back(scale > 0.0 ? std::sqrt(diff) / scale : std::sqrt(diff));
  }
  return errors;
}

}  // namespace vcas::oracle
