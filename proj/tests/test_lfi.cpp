#include <doctest.h>

#include <cmath>

#include "core/experiments.hpp"
#include "core/lfi.hpp"
#include "core/rng.hpp"

using namespace lrao;

namespace {

TimeSeriesBatch gaussian_batch(size_t count, size_t n, uint64_t seed) {
  Rng rng(seed);
  TimeSeriesBatch b(count);
  for (auto& s : b) s = rng.normal_vec(n);
  return b;
}

lfi::Transform identity_tf() {
  return [](std::span<const double> x) { return std::vector<double>(x.begin(), x.end()); };
}

// exact white-noise context: psd = sigma^2, jacobian = H, mu0 = 0
lfi::DetectorContext white_context(const sigmodel::ObservationMatrix& hm, double sigma2) {
  lfi::JacobianEstimate jac;
  jac.dmu = hm.h;
  jac.step = 1e-2;
  jac.source_count = 1;
  auto spec = spectral::spectral_model_from_psd(std::vector<double>(hm.n, sigma2));
  return lfi::make_context(std::move(jac), std::move(spec));
}

}  // namespace

TEST_CASE("central-difference jacobian of the identity transform is H") {
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  const auto noise = gaussian_batch(4, 32, 41);
  const auto jac = lfi::jacobian_central_diff(identity_tf(), noise, hm, 1e-2, 0);
  CHECK((jac.dmu - hm.h).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(jac.source_count == 4);
}

TEST_CASE("jacobian quotient converges under step halving for tanh") {
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  const auto noise = gaussian_batch(8, 32, 42);
  lfi::Transform tanh_tf = [](std::span<const double> x) {
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
  };
  const auto coarse = lfi::jacobian_central_diff(tanh_tf, noise, hm, 1e-2, 0);
  const auto fine = lfi::jacobian_central_diff(tanh_tf, noise, hm, 1e-3, 0);
  CHECK((coarse.dmu - fine.dmu).norm() / fine.dmu.norm() <= 1e-3);
}

TEST_CASE("cubic transform at zero input exposes the quotient's exact bias") {
  const auto hm = sigmodel::periodic_observation_matrix(16, 0.1, 1);
  const TimeSeriesBatch zero(1, std::vector<double>(16, 0.0));
  lfi::Transform cubic = [](std::span<const double> x) {
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i] * x[i];
    return y;
  };
  const double step = 1e-2;
  const auto jac = lfi::jacobian_central_diff(cubic, zero, hm, step, 0);
  // [(h d)^3 - (-h d)^3] / (2 d) = d^2 h^3 per sample
  for (size_t j = 0; j < hm.l; ++j)
    for (size_t t = 0; t < hm.n; ++t) {
      const double h = hm.h(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
      CHECK(jac.dmu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) ==
            doctest::Approx(step * step * h * h * h).epsilon(1e-10));
    }
}

TEST_CASE("interior-shift margin zeroes the edge rows") {
  const auto hm = sigmodel::periodic_observation_matrix(16, 0.1, 1);
  const auto noise = gaussian_batch(2, 16, 43);
  const auto jac = lfi::jacobian_central_diff(identity_tf(), noise, hm, 1e-2, 3);
  for (size_t t = 0; t < 16; ++t) {
    const bool edge = t < 3 || t >= 13;
    for (size_t j = 0; j < hm.l; ++j) {
      const double v = jac.dmu(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
      if (edge)
        CHECK(v == 0.0);
      else
        CHECK(v == doctest::Approx(hm.h(static_cast<Eigen::Index>(t),
                                        static_cast<Eigen::Index>(j))).epsilon(1e-12));
    }
  }
}

TEST_CASE("spectral LFI of white noise is the scaled gram matrix") {
  const auto hm = sigmodel::periodic_observation_matrix(128, 0.1, 4);
  const double sigma2 = 2.3;
  lfi::JacobianEstimate jac;
  jac.dmu = hm.h;
  jac.step = 1e-2;
  jac.source_count = 1;
  const auto spec = spectral::spectral_model_from_psd(std::vector<double>(128, sigma2));
  const auto j = lfi::lfi_spectral(jac, spec);
  const Eigen::MatrixXd expect = hm.h.transpose() * hm.h / sigma2;
  CHECK((j.j - expect).norm() / expect.norm() <= 1e-8);
  CHECK(j.j.trace() == doctest::Approx(expect.trace()).epsilon(1e-8));
  // symmetry
  CHECK((j.j - j.j.transpose()).norm() <= 1e-9 * j.j.norm());
}

TEST_CASE("LFI is invariant under output scaling") {
  const auto hm = sigmodel::periodic_observation_matrix(64, 0.05, 3);
  lfi::JacobianEstimate jac;
  jac.dmu = hm.h;
  jac.step = 1e-2;
  jac.source_count = 1;
  std::vector<double> psd(64);
  Rng rng(44);
  for (auto& v : psd) v = 0.5 + rng.uniform();
  const auto j1 = lfi::lfi_spectral(jac, spectral::spectral_model_from_psd(psd));
  const double c = 3.7;
  lfi::JacobianEstimate jac2 = jac;
  jac2.dmu *= c;
  for (auto& v : psd) v *= c * c;
  const auto j2 = lfi::lfi_spectral(jac2, spectral::spectral_model_from_psd(psd));
  CHECK((j1.j - j2.j).norm() / j1.j.norm() <= 1e-8);
}

TEST_CASE("LFI is invariant under a fixed circular convolution of the transform") {
  // affine map y -> circconv(a, y) + b preserves the information
  const size_t n = 64;
  const auto hm = sigmodel::periodic_observation_matrix(n, 0.05, 2);
  const auto noise = gaussian_batch(400, n, 45);
  std::vector<double> kernel(n, 0.0);
  kernel[0] = 1.0;
  kernel[1] = 0.5;
  kernel[3] = -0.2;
  const auto kf = spectral::dft(kernel);
  lfi::Transform plain = [](std::span<const double> x) {
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
  };
  lfi::Transform convolved = [&](std::span<const double> x) {
    auto y = plain(x);
    auto yf = spectral::dft(y);
    for (size_t i = 0; i < yf.size(); ++i) yf[i] *= kf[i];
    auto out = spectral::idft_real(yf, 1e-6);
    for (auto& v : out) v += 0.25;
    return out;
  };
  const auto c1 = experiments::build_transform_context(plain, noise, hm, 1e-2, 0);
  const auto c2 = experiments::build_transform_context(convolved, noise, hm, 1e-2, 0);
  CHECK(c2.j0.j.trace() == doctest::Approx(c1.j0.j.trace()).epsilon(0.02));
}

TEST_CASE("lblue recovers theta0 at the null mean and is unbiased with the right spread") {
  const auto hm = sigmodel::periodic_observation_matrix(64, 0.1, 2);
  const auto ctx = white_context(hm, 1.0);
  const std::vector<double> theta0{0.1, -0.2, 0.3, 0.0};
  const std::vector<double> at_mean =
      lfi::lblue(ctx, std::vector<double>(64, 0.0), theta0);
  for (size_t j = 0; j < 4; ++j) CHECK(at_mean[j] == doctest::Approx(theta0[j]).epsilon(1e-10));

  // Monte Carlo with a true parameter offset
  const std::vector<double> truth{0.5, -0.3, 0.2, 0.4};
  sigmodel::SignalParams sp{truth};
  const auto s = sigmodel::synth_signal(hm, sp);
  Rng rng(46);
  const size_t trials = 4000;
  Eigen::MatrixXd est(4, static_cast<Eigen::Index>(trials));
  for (size_t t = 0; t < trials; ++t) {
    auto x = rng.normal_vec(64);
    for (size_t i = 0; i < 64; ++i) x[i] += s[i];
    const auto th = lfi::lblue(ctx, x, std::vector<double>(4, 0.0));
    for (size_t j = 0; j < 4; ++j) est(static_cast<Eigen::Index>(j),
                                       static_cast<Eigen::Index>(t)) = th[j];
  }
  const Eigen::VectorXd mean = est.rowwise().mean();
  const Eigen::MatrixXd centered = est.colwise() - mean;
  const Eigen::MatrixXd cov =
      centered * centered.transpose() / static_cast<double>(trials - 1);
  for (int j = 0; j < 4; ++j) {
    const double se = std::sqrt(ctx.j0_inv(j, j) / static_cast<double>(trials));
    CHECK(std::abs(mean(j) - truth[static_cast<size_t>(j)]) <= 4.0 * se);
  }
  CHECK((cov - ctx.j0_inv).norm() / ctx.j0_inv.norm() <= 0.10);
}

TEST_CASE("lrao is the LBLUE quadratic form and has chi-squared moments") {
  const auto hm = sigmodel::periodic_observation_matrix(64, 0.1, 2);
  const auto ctx = white_context(hm, 1.0);
  CHECK(lfi::lrao(ctx, std::vector<double>(64, 0.0)) == doctest::Approx(0.0));

  Rng rng(47);
  const size_t trials = 10000;
  double mean0 = 0.0;
  for (size_t t = 0; t < trials; ++t) {
    const auto x = rng.normal_vec(64);
    const double stat = lfi::lrao(ctx, x);
    CHECK(stat >= 0.0);
    mean0 += stat;
    if (t < 50) {
      // quadratic-form identity against the estimator route
      const auto th = lfi::lblue(ctx, x, std::vector<double>(4, 0.0));
      const Eigen::VectorXd tv = Eigen::Map<const Eigen::VectorXd>(th.data(), 4);
      const double via_est = tv.dot(ctx.j0.j * tv);
      CHECK(stat == doctest::Approx(via_est).epsilon(1e-8));
    }
  }
  mean0 /= static_cast<double>(trials);
  CHECK(std::abs(mean0 - 4.0) <= 0.4);

  const std::vector<double> theta1{0.2, -0.1, 0.15, 0.05};
  const auto s = sigmodel::synth_signal(hm, {theta1});
  const Eigen::VectorXd t1 = Eigen::Map<const Eigen::VectorXd>(theta1.data(), 4);
  const double lambda = t1.dot(ctx.j0.j * t1);
  double mean1 = 0.0;
  for (size_t t = 0; t < trials; ++t) {
    auto x = rng.normal_vec(64);
    for (size_t i = 0; i < 64; ++i) x[i] += s[i];
    mean1 += lfi::lrao(ctx, x);
  }
  mean1 /= static_cast<double>(trials);
  CHECK(mean1 == doctest::Approx(4.0 + lambda).epsilon(0.05));
}

TEST_CASE("llmp is standard normal under the null and squares to lrao") {
  sigmodel::ObservationMatrix hm;
  hm.n = 64;
  hm.l = 1;
  hm.h = Eigen::MatrixXd::Ones(64, 1);
  const auto ctx = white_context(hm, 1.0);
  CHECK(lfi::llmp(ctx, std::vector<double>(64, 0.0)) == doctest::Approx(0.0));

  Rng rng(48);
  double mean = 0.0, var = 0.0;
  const size_t trials = 10000;
  for (size_t t = 0; t < trials; ++t) {
    const auto x = rng.normal_vec(64);
    const double z = lfi::llmp(ctx, x);
    mean += z;
    var += z * z;
    if (t < 50) CHECK(z * z == doctest::Approx(lfi::lrao(ctx, x)).epsilon(1e-10));
  }
  mean /= static_cast<double>(trials);
  var = var / static_cast<double>(trials) - mean * mean;
  CHECK(std::abs(mean) <= 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));

  const auto multi = sigmodel::periodic_observation_matrix(64, 0.1, 2);
  CHECK_THROWS(lfi::llmp(white_context(multi, 1.0), std::vector<double>(64, 0.0)));
}

TEST_CASE("null calibration of the lrao threshold map") {
  const size_t n = 1024;
  sigmodel::ObservationMatrix hm = sigmodel::periodic_observation_matrix(n, 0.01, 4);
  const auto ctx = white_context(hm, 1.0);
  Rng rng(49);
  const size_t trials = 10000;
  std::vector<double> statv(trials);
  for (auto& v : statv) v = lfi::lrao(ctx, rng.normal_vec(n));
  for (double target : {0.1, 0.05, 0.01}) {
    const double gamma = lfi::lrao_threshold(8, target);
    size_t hits = 0;
    for (double v : statv) hits += v > gamma ? 1 : 0;
    const double fpr = static_cast<double>(hits) / static_cast<double>(trials);
    CHECK(std::abs(fpr - target) <= 0.30 * target);
  }
}

TEST_CASE("threshold and asymptotic tpr delegate to the chi-squared maps") {
  const double g = lfi::lrao_threshold(8, 0.05);
  CHECK(stats::chi2_right_tail({8, 0.0}, g) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(lfi::lrao_asymptotic_tpr(8, 0.0, g) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(lfi::lrao_asymptotic_tpr(8, 50.0, g) > 0.9);
}

TEST_CASE("chain rule factorization is consistent with the spectral path") {
  const auto hm = sigmodel::periodic_observation_matrix(64, 0.1, 2);
  const double sigma2 = 1.7;
  lfi::LfiMatrix jstar;
  jstar.j = Eigen::MatrixXd::Identity(64, 64) / sigma2;
  const auto chained = lfi::chain_rule_lfi(jstar, hm);
  const auto direct =
      lfi::lfi_spectral({hm.h, 1e-2, 1},
                        spectral::spectral_model_from_psd(std::vector<double>(64, sigma2)));
  CHECK((chained.j - direct.j).norm() / direct.j.norm() <= 1e-8);

  sigmodel::ObservationMatrix id;
  id.n = 64;
  id.l = 64;
  id.h = Eigen::MatrixXd::Identity(64, 64);
  CHECK((lfi::chain_rule_lfi(jstar, id).j - jstar.j).norm() <= 1e-12);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(chained.j);
  CHECK(svd.rank() <= 4);
}

TEST_CASE("singular LFI inversion fails loudly") {
  lfi::LfiMatrix j;
  j.j = Eigen::MatrixXd::Zero(3, 3);
  j.j(0, 0) = 1.0;
  CHECK_THROWS(lfi::invert_lfi(j));
}
