#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "core/rng.hpp"
#include "core/spectral.hpp"

using namespace lrao;
using spectral::AverageMethod;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("dft of a unit impulse is flat") {
  std::vector<double> x(8, 0.0);
  x[0] = 1.0;
  const auto s = spectral::dft(x);
  for (const auto& v : s) {
    CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("dft of all ones is DC only") {
  std::vector<double> x(8, 1.0);
  const auto s = spectral::dft(x);
  CHECK(s[0].real() == doctest::Approx(8.0).epsilon(1e-12));
  for (size_t i = 1; i < 8; ++i) CHECK(std::abs(s[i]) < 1e-10);
}

TEST_CASE("dft of a bin-2 cosine lands on bins 2 and 6") {
  std::vector<double> x(8);
  for (int n = 0; n < 8; ++n) x[n] = std::cos(2.0 * pi * 2.0 * n / 8.0);
  const auto s = spectral::dft(x);
  for (size_t i = 0; i < 8; ++i) {
    const double expect = (i == 2 || i == 6) ? 4.0 : 0.0;
    CHECK(std::abs(s[i] - std::complex<double>(expect, 0.0)) < 1e-10);
  }
}

TEST_CASE("dft round-trips through idft_real") {
  Rng rng(3);
  std::vector<double> x(33);
  for (auto& v : x) v = rng.normal();
  const auto back = spectral::idft_real(spectral::dft(x), 1e-9);
  for (size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-10));
}

TEST_CASE("dft rejects empty input") { CHECK_THROWS(spectral::dft(std::vector<double>{})); }

TEST_CASE("Parseval holds to 1e-10") {
  Rng rng(4);
  std::vector<double> x(50);
  for (auto& v : x) v = rng.normal();
  double time_e = 0.0;
  for (double v : x) time_e += v * v;
  double freq_e = 0.0;
  for (const auto& v : spectral::dft(x)) freq_e += std::norm(v);
  CHECK(freq_e == doctest::Approx(50.0 * time_e).epsilon(1e-10));
}

TEST_CASE("periodogram of ones concentrates the power in bin 0") {
  const auto p = spectral::periodogram(std::vector<double>(8, 1.0));
  CHECK(p[0] == doctest::Approx(8.0).epsilon(1e-12));
  for (size_t i = 1; i < 8; ++i) CHECK(p[i] < 1e-10);
}

TEST_CASE("periodogram of zeros is zero") {
  for (double v : spectral::periodogram(std::vector<double>(8, 0.0))) CHECK(v == 0.0);
}

TEST_CASE("averaged periodogram of white noise is flat near one") {
  Rng rng(11);
  const size_t n = 16;
  std::vector<double> acc(n, 0.0);
  for (int s = 0; s < 10000; ++s) {
    const auto p = spectral::periodogram(rng.normal_vec(n));
    for (size_t i = 0; i < n; ++i) acc[i] += p[i];
  }
  for (double v : acc) CHECK(v / 10000.0 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("mean averaged_psd of identical sequences equals one periodogram") {
  Rng rng(12);
  const auto seq = rng.normal_vec(32);
  const TimeSeriesBatch batch(5, seq);
  const auto model = spectral::averaged_psd(batch, AverageMethod::mean);
  const auto single = spectral::periodogram(seq);
  // the estimator symmetrizes; apply the same fold to the oracle
  for (size_t i = 0; i < 32; ++i) {
    const double sym = 0.5 * (single[i] + single[(32 - i) % 32]);
    CHECK(model.psd[i] == doctest::Approx(std::max(sym, model.floor)).epsilon(1e-12));
  }
}

TEST_CASE("median averaged_psd shrugs off one outlier sequence") {
  Rng rng(13);
  const auto clean = rng.normal_vec(32);
  TimeSeriesBatch batch(20, clean);
  auto outlier = clean;
  outlier[7] += 1e6;
  batch.push_back(outlier);
  const auto robust = spectral::averaged_psd(batch, AverageMethod::median);
  const auto reference = spectral::averaged_psd(TimeSeriesBatch(20, clean), AverageMethod::mean);
  for (size_t i = 0; i < 32; ++i)
    CHECK(robust.psd[i] == doctest::Approx(reference.psd[i]).epsilon(0.10));
}

TEST_CASE("median PSD is far more stable than the mean on white Cauchy") {
  const size_t n = 16, per_run = 50, runs = 20;
  std::vector<double> mean_tr(runs), med_tr(runs);
  for (size_t r = 0; r < runs; ++r) {
    Rng rng(mix_seed(100, r));
    TimeSeriesBatch batch(per_run);
    for (auto& s : batch) s = rng.cauchy_vec(n);
    const auto m1 = spectral::averaged_psd(batch, AverageMethod::mean);
    const auto m2 = spectral::averaged_psd(batch, AverageMethod::median);
    mean_tr[r] = med_tr[r] = 0.0;
    for (size_t i = 0; i < n; ++i) {
      mean_tr[r] += m1.psd[i];
      med_tr[r] += m2.psd[i];
    }
  }
  auto variance = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
  };
  CHECK(variance(mean_tr) >= 10.0 * variance(med_tr));
}

TEST_CASE("apply_inverse_cov on a flat PSD divides by the variance") {
  spectral::SpectralModel model = spectral::spectral_model_from_psd(std::vector<double>(16, 4.0));
  Rng rng(14);
  const auto x = rng.normal_vec(16);
  const auto y = spectral::apply_inverse_cov(model, x);
  for (size_t i = 0; i < 16; ++i) CHECK(y[i] == doctest::Approx(x[i] / 4.0).epsilon(1e-10));
  const auto zero = spectral::apply_inverse_cov(model, std::vector<double>(16, 0.0));
  for (double v : zero) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("spectral inverse matches the dense Toeplitz inverse for AR(1)") {
  const size_t n = 256;
  const double a = 0.8;
  // true PSD and true covariance R[k] = a^k / (1 - a^2) of unit-innovation AR(1)
  std::vector<double> psd(n);
  for (size_t i = 0; i < n; ++i) {
    const std::complex<double> den =
        1.0 - a * std::exp(std::complex<double>(0.0, -2.0 * pi * double(i) / double(n)));
    psd[i] = 1.0 / std::norm(den);
  }
  const auto model = spectral::spectral_model_from_psd(psd);
  Eigen::MatrixXd r(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      r(i, j) = std::pow(a, std::abs(double(i) - double(j))) / (1.0 - a * a);
  Rng rng(15);
  const auto x = rng.normal_vec(n);
  const Eigen::VectorXd xd = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  const Eigen::VectorXd dense = r.ldlt().solve(xd);
  const auto approx = spectral::apply_inverse_cov(model, x);
  double num = 0.0, den = 0.0;
  for (size_t i = n / 4; i < 3 * n / 4; ++i) {
    num += (approx[i] - dense(static_cast<Eigen::Index>(i))) *
           (approx[i] - dense(static_cast<Eigen::Index>(i)));
    den += dense(static_cast<Eigen::Index>(i)) * dense(static_cast<Eigen::Index>(i));
  }
  CHECK(std::sqrt(num / den) <= 0.05);
}

TEST_CASE("apply_whitening squares to apply_inverse_cov") {
  Rng rng(16);
  std::vector<double> psd(24);
  for (auto& v : psd) v = 0.5 + rng.uniform();
  const auto model = spectral::spectral_model_from_psd(psd);
  const auto x = rng.normal_vec(24);
  const auto once = spectral::apply_whitening(model, x);
  const auto twice = spectral::apply_whitening(model, once);
  const auto direct = spectral::apply_inverse_cov(model, x);
  for (size_t i = 0; i < 24; ++i) CHECK(twice[i] == doctest::Approx(direct[i]).epsilon(1e-9));

  const auto flat = spectral::spectral_model_from_psd(std::vector<double>(24, 4.0));
  const auto half = spectral::apply_whitening(flat, x);
  for (size_t i = 0; i < 24; ++i) CHECK(half[i] == doctest::Approx(x[i] / 2.0).epsilon(1e-10));
}

TEST_CASE("whitening the true AR(1) PSD decorrelates the samples") {
  const size_t n = 64;
  const double a = 0.8;
  std::vector<double> psd(n);
  for (size_t i = 0; i < n; ++i) {
    const std::complex<double> den =
        1.0 - a * std::exp(std::complex<double>(0.0, -2.0 * pi * double(i) / double(n)));
    psd[i] = 1.0 / std::norm(den);
  }
  const auto model = spectral::spectral_model_from_psd(psd);
  Rng rng(17);
  std::vector<double> acf(6, 0.0);
  double var = 0.0;
  size_t count = 0;
  for (int s = 0; s < 10000; ++s) {
    // AR(1) with burn-in so the sequence is stationary
    double w = rng.normal() / std::sqrt(1.0 - a * a);
    std::vector<double> x(n);
    for (size_t t = 0; t < n + 20; ++t) {
      w = a * w + rng.normal();
      if (t >= 20) x[t - 20] = w;
    }
    const auto y = spectral::apply_whitening(model, x);
    for (size_t t = 0; t + 5 < n; ++t) {
      var += y[t] * y[t];
      for (size_t k = 1; k <= 5; ++k) acf[k] += y[t] * y[t + k];
      ++count;
    }
  }
  for (size_t k = 1; k <= 5; ++k) CHECK(std::abs(acf[k] / var) <= 0.05);
  (void)count;
}

TEST_CASE("apply_inverse_cov is positive definite as a quadratic form") {
  Rng rng(18);
  std::vector<double> psd(16);
  for (auto& v : psd) v = 0.1 + rng.uniform();
  const auto model = spectral::spectral_model_from_psd(psd);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = rng.normal_vec(16);
    const auto y = spectral::apply_inverse_cov(model, x);
    double quad = 0.0;
    for (size_t i = 0; i < 16; ++i) quad += x[i] * y[i];
    CHECK(quad > 0.0);
  }
}

TEST_CASE("averaged_psd output is symmetric and floored") {
  Rng rng(19);
  TimeSeriesBatch batch(6);
  for (auto& s : batch) s = rng.normal_vec(20);
  const auto model = spectral::averaged_psd(batch, AverageMethod::median);
  CHECK(model.floor > 0.0);
  for (size_t i = 1; i < 20; ++i) {
    CHECK(model.psd[i] == doctest::Approx(model.psd[20 - i]).epsilon(1e-12));
    CHECK(model.psd[i] >= model.floor);
  }
}
