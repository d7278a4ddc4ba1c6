#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vcas/error.hpp"
#include "vcas/features.hpp"

using namespace vcas;
using namespace vcas::features;
using Catch::Approx;

namespace {

signal::Waveform sine_at_bin(std::size_t n, std::size_t k, double fs) {
  signal::Waveform w{std::vector<double>(n), fs};
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n));
  }
  return w;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, bool positive) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(positive ? 0.0 : -1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("fft_magnitude of a bin-centred sine peaks at that bin", "[features][fft]") {
  for (std::size_t k : {1u, 17u, 500u, 2047u}) {
    const auto s = fft_magnitude(sine_at_bin(4096, k, 44100.0));
    std::size_t best = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.magnitudes[i] > s.magnitudes[best]) best = i;
    }
    CHECK(best == k);
  }
}

TEST_CASE("fft_magnitude of a constant puts everything in DC", "[features][fft]") {
  const auto s = fft_magnitude(signal::Waveform{std::vector<double>(1000, 0.25), 1000.0});
  REQUIRE(s.size() == 501);
  CHECK(s.bin_hz == Approx(1.0));
  CHECK(s.magnitudes[0] == Approx(250.0));
  for (std::size_t k = 1; k < s.size(); ++k) REQUIRE(s.magnitudes[k] < 1e-9);
}

TEST_CASE("fft_magnitude satisfies Parseval", "[features][fft]") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t len : {1000u, 1001u, 42000u}) {
    signal::Waveform w{std::vector<double>(len), 44100.0};
    double direct = 0.0;
    for (auto& s : w.samples) {
      s = n(rng);
      direct += s * s;
    }
    const auto spec = fft_magnitude(w);
    CHECK(spec.n_fft == len);
    CHECK(spectral_energy(spec) == Approx(direct).epsilon(1e-6));
  }
  CHECK_THROWS_AS(fft_magnitude(signal::Waveform{{}, 44100.0}), ParameterError);
}

TEST_CASE("band_select bin bookkeeping", "[features][band]") {
  signal::Waveform w{std::vector<double>(42000, 0.0), 44100.0};
  w.samples[3] = 1.0;
  const auto full = fft_magnitude(w);
  REQUIRE(full.bin_hz == Approx(1.05));

  SECTION("full range is the identity") {
    const auto same = band_select(full, 0.0, full.nyquist());
    CHECK(same.magnitudes == full.magnitudes);
    CHECK(same.first_bin == 0);
  }

  SECTION("low band retains bins 20 through 8752") {
    // Oracle: smallest k with k*1.05 >= 20 and largest k with k*1.05 < 9190.
    const auto first = static_cast<std::size_t>(std::ceil(20.0 / 1.05));
    const auto last = static_cast<std::size_t>(std::ceil(9190.0 / 1.05)) - 1;
    REQUIRE(first == 20);
    REQUIRE(last == 8752);
    const auto low = band_select(full, 20.0, 9190.0);
    CHECK(low.first_bin == first);
    CHECK(low.size() == last - first + 1);
    CHECK(low.f_low == 20.0);
    CHECK(low.f_high == 9190.0);
  }

  SECTION("adjacent bands concatenate to the wide band") {
    const auto wide = band_select(full, kFullBand.f_low, kFullBand.f_high);
    const auto lo = band_select(full, kLowBand.f_low, kLowBand.f_high);
    const auto hi = band_select(full, kHighBand.f_low, kHighBand.f_high);
    std::vector<double> joined = lo.magnitudes;
    joined.insert(joined.end(), hi.magnitudes.begin(), hi.magnitudes.end());
    CHECK(joined == wide.magnitudes);
    CHECK(hi.first_bin == lo.first_bin + lo.size());
    CHECK(wide.first_bin + wide.size() == full.size());  // Nyquist bin kept
  }

  SECTION("invalid bounds") {
    CHECK_THROWS_AS(band_select(full, 1000.0, 1000.0), ParameterError);
    CHECK_THROWS_AS(band_select(full, 2000.0, 1000.0), ParameterError);
    CHECK_THROWS_AS(band_select(full, -1.0, 1000.0), ParameterError);
    CHECK_THROWS_AS(band_select(full, 0.0, 30000.0), ParameterError);
  }

  CHECK(band_by_name("low").f_high == 9190.0);
  CHECK_THROWS_AS(band_by_name("mid"), ParameterError);
}

TEST_CASE("cosine kernel", "[features][kernel]") {
  const std::vector<double> x{1.0, -2.0, 3.5};
  const std::vector<double> x2{2.0, -4.0, 7.0};
  CHECK(cosine_kernel(x, x) == Approx(1.0).epsilon(1e-15));
  CHECK(cosine_kernel(x, x2) == Approx(1.0).epsilon(1e-15));
  CHECK(cosine_kernel(std::vector<double>{1, 0, 0}, std::vector<double>{0, 1, 0}) == 0.0);
  CHECK_THROWS_AS(cosine_kernel(x, std::vector<double>{0, 0, 0}), DegenerateInputError);
  CHECK_THROWS_AS(cosine_kernel(x, std::vector<double>{1, 2}), ParameterError);
}

TEST_CASE("kpca_fit on duplicated rows has no variance", "[features][kpca]") {
  Eigen::MatrixXd rows(6, 3);
  rows.rowwise() = Eigen::RowVector3d(0.3, 1.0, 2.0);
  try {
    kpca_fit(rows, 1);
    FAIL("expected a rank error");
  } catch (const RankError& e) {
    CHECK(e.attainable_max() == 0);
  }
}

TEST_CASE("kpca on three 2-D rows matches the brute-force oracle", "[features][kpca]") {
  Eigen::MatrixXd rows(3, 2);
  rows << 1.0, 0.2, 0.3, 1.0, -0.8, 0.5;
  const auto model = kpca_fit(rows, 2);
  const oracle::BruteKpca ref(rows, 2, oracle::cosine);
  CHECK((model.eigenvalues - ref.values.head(2)).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::MatrixXd ours = kpca_transform_rows(model, rows);
  Eigen::MatrixXd theirs(3, 2);
  for (Eigen::Index i = 0; i < 3; ++i) theirs.row(i) = ref.project(rows.row(i), oracle::cosine).transpose();
  CHECK(oracle::max_signed_deviation(ours, theirs) < 1e-8);

  const Eigen::RowVector2d fresh(0.4, -0.9);
  const auto v = kpca_transform(model, std::vector<double>{fresh(0), fresh(1)});
  Eigen::MatrixXd a = v.values.transpose();
  Eigen::MatrixXd b = ref.project(fresh, oracle::cosine).transpose();
  CHECK(oracle::max_signed_deviation(a, b) < 1e-8);
}

TEST_CASE("kpca model invariants", "[features][kpca]") {
  const Eigen::MatrixXd rows = random_matrix(12, 30, 9, true);
  const auto model = kpca_fit(rows, 5);

  SECTION("eigenvalues are sorted and positive") {
    for (Eigen::Index i = 1; i < model.eigenvalues.size(); ++i) {
      CHECK(model.eigenvalues(i) <= model.eigenvalues(i - 1));
    }
    CHECK(model.eigenvalues.minCoeff() > 0.0);
  }

  SECTION("explained variance of a full-rank fit sums to one") {
    const auto rank = static_cast<std::size_t>(model.positive_eigenvalues.size());
    CHECK(rank == 11);  // 12 centred rows
    const auto full = kpca_fit(rows, rank);
    CHECK(full.explained_variance_ratio().sum() == Approx(1.0).margin(1e-9));
    CHECK(model.explained_variance_ratio().sum() < 1.0);
    try {
      kpca_fit(rows, rank + 1);
      FAIL("expected a rank error");
    } catch (const RankError& e) {
      CHECK(e.attainable_max() == rank);
    }
  }

  SECTION("coefficients are orthonormal under the centred Gram metric") {
    const Eigen::MatrixXd alpha = model.eigenvectors * model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
    const oracle::BruteKpca ref(rows, 5, oracle::cosine);
    const Eigen::Index n = rows.rows();
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const Eigen::MatrixXd metric = alpha.transpose() * (h * ref.gram * h) * alpha;
    CHECK((metric - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((model.eigenvectors.transpose() * model.eigenvectors - Eigen::MatrixXd::Identity(5, 5))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  SECTION("training rows transform to their fitted embedding") {
    const Eigen::MatrixXd fitted = fitted_embedding(model);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const Eigen::VectorXd r = rows.row(i).transpose();
      const auto v = kpca_transform(model, std::span<const double>(r.data(), r.size()));
      CHECK((v.values - fitted.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SECTION("scaling an input row leaves its embedding unchanged") {
    for (double c : {2.0, 0.37, 1e4}) {
      const Eigen::MatrixXd scaled = rows * c;
      const Eigen::MatrixXd a = kpca_transform_rows(model, rows);
      const Eigen::MatrixXd b = kpca_transform_rows(model, scaled);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SECTION("sign rule and reproducibility") {
    for (Eigen::Index c = 0; c < model.eigenvectors.cols(); ++c) {
      Eigen::Index arg = 0;
      model.eigenvectors.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(model.eigenvectors(arg, c) >= 0.0);
    }
    const auto again = kpca_fit(rows, 5);
    CHECK(again.eigenvectors == model.eigenvectors);
    CHECK(again.eigenvalues == model.eigenvalues);
  }

  SECTION("length mismatch is a parameter error") {
    CHECK_THROWS_AS(kpca_transform(model, std::vector<double>(29, 1.0)), ParameterError);
  }
}

TEST_CASE("linear-kernel kpca reproduces classical PCA", "[features][kpca][property]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Eigen::MatrixXd x = random_matrix(10, 4, 100 + seed, false);
    x.rowwise() -= x.colwise().mean();
    // Oracle: eigenvectors of the covariance matrix.
    const Eigen::MatrixXd cov = x.transpose() * x;
    const auto [values, vectors] = oracle::jacobi_eigen(cov);
    const Eigen::MatrixXd pca = x * vectors;

    const auto model = detail::kpca_fit_with_kernel(x, 4, Kernel::Linear);
    const Eigen::MatrixXd ours = kpca_transform_rows(model, x);
    CHECK(oracle::max_signed_deviation(ours, pca) < 1e-8);
    CHECK((model.eigenvalues - values).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("kpca rejects degenerate input", "[features][kpca]") {
  Eigen::MatrixXd rows = random_matrix(4, 3, 1, true);
  rows.row(2).setZero();
  CHECK_THROWS_AS(kpca_fit(rows, 1), DegenerateInputError);
  CHECK_THROWS_AS(kpca_fit(random_matrix(1, 3, 1, true), 1), ParameterError);
  CHECK_THROWS_AS(kpca_fit(random_matrix(4, 3, 1, true), 0), ParameterError);
}
