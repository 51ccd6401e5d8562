#include "core/simnoise.hpp"

#include <cmath>

namespace lrao::simnoise {

bool is_stable(const ArFilter& filter) {
  const size_t p = filter.coeffs.size();
  if (p == 0) return true;
  // roots of z^p - a_1 z^{p-1} - ... - a_p via the companion matrix
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                               static_cast<Eigen::Index>(p));
  for (size_t i = 0; i < p; ++i) comp(0, static_cast<Eigen::Index>(i)) = filter.coeffs[i];
  for (size_t i = 1; i < p; ++i)
    comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  const auto roots = comp.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i)
    if (std::abs(roots(i)) >= 1.0) return false;
  return true;
}

ArFilter random_stable_ar(int order, Rng& rng) {
  if (order < 1) throw std::invalid_argument("random_stable_ar: order must be >= 1");
  // Szegoe step-up recursion on A(z) = 1 - sum a_k z^-k; |k_m| < 1 keeps
  // all roots strictly inside the unit circle.
  std::vector<double> c{1.0};  // polynomial coefficients of A(z)
  for (int m = 1; m <= order; ++m) {
    const double km = rng.uniform(-0.95, 0.95);
    std::vector<double> next(static_cast<size_t>(m) + 1, 0.0);
    for (int i = 0; i <= m; ++i) {
      double v = i < m ? c[static_cast<size_t>(i)] : 0.0;
      double rev = (m - i) < m ? c[static_cast<size_t>(m - i)] : 0.0;
      next[static_cast<size_t>(i)] = v - km * rev;
    }
    c = std::move(next);
  }
  ArFilter f;
  f.coeffs.resize(static_cast<size_t>(order));
  for (int i = 1; i <= order; ++i) f.coeffs[static_cast<size_t>(i - 1)] = -c[static_cast<size_t>(i)];
  return f;
}

CauchyNoiseModel make_cauchy_model(ArFilter filter, size_t n, bool with_burn_in) {
  if (!is_stable(filter)) throw std::invalid_argument("cauchy model: unstable filter");
  CauchyNoiseModel model;
  model.n = n;
  bool all_zero = true;
  for (double a : filter.coeffs)
    if (a != 0.0) all_zero = false;
  model.burn_in = (with_burn_in && !all_zero) ? 10 * filter.coeffs.size() : 0;
  model.filter = std::move(filter);
  return model;
}

TimeSeriesBatch generate(const CauchyNoiseModel& model, size_t count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("generate: count must be >= 1");
  const size_t p = model.filter.coeffs.size();
  const size_t total = model.n + model.burn_in;
  TimeSeriesBatch out(count);
  std::vector<double> w(total);
  for (size_t b = 0; b < count; ++b) {
    for (size_t t = 0; t < total; ++t) {
      double v = rng.cauchy();
      for (size_t k = 1; k <= p && k <= t; ++k) v += model.filter.coeffs[k - 1] * w[t - k];
      w[t] = v;
    }
    out[b].assign(w.begin() + static_cast<long>(model.burn_in), w.end());
  }
  return out;
}

Eigen::MatrixXd apply_whitening_fir(const ArFilter& filter, const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  const size_t p = filter.coeffs.size();
  Eigen::MatrixXd out = m;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    for (size_t k = 1; k <= p && static_cast<Eigen::Index>(k) <= t; ++k)
      out.row(t) -= filter.coeffs[k - 1] * m.row(t - static_cast<Eigen::Index>(k));
  }
  return out;
}

Eigen::MatrixXd analytic_fi(const CauchyNoiseModel& model, const sigmodel::ObservationMatrix& hm) {
  if (hm.n != model.n) throw std::invalid_argument("analytic_fi: dimension mismatch");
  const Eigen::MatrixXd ah = apply_whitening_fir(model.filter, hm.h);
  return 0.5 * (ah.transpose() * ah);
}

TimeSeriesBatch spiky_gaussian_surrogate(size_t n, size_t count, double spike_rate,
                                         double spike_scale, const ArFilter& ar, Rng& rng) {
  if (!(spike_rate >= 0.0 && spike_rate < 1.0))
    throw std::invalid_argument("surrogate: spike_rate outside [0,1)");
  if (spike_rate > 0.0 && !(spike_scale > 1.0))
    throw std::invalid_argument("surrogate: spike_scale must exceed 1");
  if (!is_stable(ar)) throw std::invalid_argument("surrogate: unstable filter");
  const size_t p = ar.coeffs.size();
  const size_t burn = 10 * p;
  const size_t total = n + burn;
  TimeSeriesBatch out(count);
  std::vector<double> w(total);
  for (size_t b = 0; b < count; ++b) {
    for (size_t t = 0; t < total; ++t) {
      double v = rng.normal();
      for (size_t k = 1; k <= p && k <= t; ++k) v += ar.coeffs[k - 1] * w[t - k];
      w[t] = v;
    }
    out[b].assign(w.begin() + static_cast<long>(burn), w.end());
    // sparse symmetric impulses, independent of the Gaussian part
    for (auto& x : out[b]) {
      if (rng.uniform() < spike_rate) {
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        x += sign * spike_scale * (0.5 + rng.uniform());
      }
    }
  }
  return out;
}

}  // namespace lrao::simnoise
