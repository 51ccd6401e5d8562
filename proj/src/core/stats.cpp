#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lrao::stats {

namespace {

// Regularized incomplete gamma functions, series + continued fraction.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  double ap = a;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  // modified Lentz
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Upper regularized incomplete gamma Q(a, x).
double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

double central_chi2_right_tail(int dof, double gamma) {
  return gamma_q(0.5 * dof, 0.5 * gamma);
}

}  // namespace

double chi2_right_tail(const Chi2Spec& spec, double gamma) {
  if (spec.dof < 1) throw std::invalid_argument("chi2: dof must be >= 1");
  if (spec.noncentrality < 0.0) throw std::invalid_argument("chi2: negative noncentrality");
  if (gamma < 0.0) throw std::invalid_argument("chi2: negative gamma");
  if (gamma == 0.0) return 1.0;
  const double half_lambda = 0.5 * spec.noncentrality;
  if (half_lambda == 0.0) return central_chi2_right_tail(spec.dof, gamma);

  // Poisson-weighted series over central chi-squared terms, expanded
  // outward from the Poisson mode so large lambda does not underflow.
  const long k0 = static_cast<long>(half_lambda);
  auto log_pois = [&](long k) {
    return -half_lambda + static_cast<double>(k) * std::log(half_lambda) -
           std::lgamma(static_cast<double>(k) + 1.0);
  };
  double sum = 0.0;
  const long kmax = k0 + 50 + static_cast<long>(20.0 * std::sqrt(half_lambda + 1.0)) + 10000;
  // upward from the mode
  for (long k = k0; k <= kmax; ++k) {
    const double term =
        std::exp(log_pois(k)) * central_chi2_right_tail(spec.dof + 2 * static_cast<int>(k), gamma);
    sum += term;
    if (k > k0 + 2 && term < 1e-14 * sum) break;
  }
  // downward
  for (long k = k0 - 1; k >= 0; --k) {
    const double term =
        std::exp(log_pois(k)) * central_chi2_right_tail(spec.dof + 2 * static_cast<int>(k), gamma);
    sum += term;
    if (term < 1e-14 * sum) break;
  }
  return std::min(sum, 1.0);
}

double chi2_quantile_right(const Chi2Spec& spec, double alpha) {
  if (spec.dof < 1) throw std::invalid_argument("chi2: dof must be >= 1");
  if (spec.noncentrality != 0.0)
    throw std::invalid_argument("chi2_quantile_right: central distribution only");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("chi2_quantile_right: alpha outside (0,1)");
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(spec.dof));
  while (chi2_right_tail(spec, hi) > alpha) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_right_tail(spec, mid) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void validate(const GaussianMixture1D& mix) {
  if (mix.weights.empty() || mix.weights.size() != mix.means.size() ||
      mix.weights.size() != mix.sigmas.size())
    throw std::invalid_argument("gaussian mixture: inconsistent component counts");
  double wsum = 0.0;
  for (double w : mix.weights) {
    if (w < 0.0) throw std::invalid_argument("gaussian mixture: negative weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("gaussian mixture: weights must sum to 1");
  for (double s : mix.sigmas)
    if (!(s > 0.0)) throw std::invalid_argument("gaussian mixture: nonpositive sigma");
}

std::vector<double> sample_cauchy(size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_cauchy: n must be >= 1");
  return rng.cauchy_vec(n);
}

std::vector<double> sample_gm(const GaussianMixture1D& mix, size_t n, Rng& rng) {
  validate(mix);
  if (n < 1) throw std::invalid_argument("sample_gm: n must be >= 1");
  std::vector<double> cum(mix.weights.size());
  std::partial_sum(mix.weights.begin(), mix.weights.end(), cum.begin());
  std::vector<double> out(n);
  for (auto& x : out) {
    const double u = rng.uniform();
    size_t c = 0;
    while (c + 1 < cum.size() && u >= cum[c]) ++c;
    x = mix.means[c] + mix.sigmas[c] * rng.normal();
  }
  return out;
}

namespace {

// Scaled component terms: returns (p_rel, dp_rel, emax) with
// p = p_rel * exp(emax) / sqrt(2 pi), p' = -dp_rel * exp(emax) / sqrt(2 pi).
struct MixTerms {
  double p_rel;
  double dp_rel;
  double emax;
};

MixTerms mix_terms(const GaussianMixture1D& mix, double x) {
  double emax = -std::numeric_limits<double>::infinity();
  std::vector<double> e(mix.weights.size());
  for (size_t i = 0; i < e.size(); ++i) {
    const double z = (x - mix.means[i]) / mix.sigmas[i];
    e[i] = -0.5 * z * z;
    emax = std::max(emax, e[i]);
  }
  double p = 0.0, dp = 0.0;
  for (size_t i = 0; i < e.size(); ++i) {
    const double t = mix.weights[i] / mix.sigmas[i] * std::exp(e[i] - emax);
    p += t;
    dp += t * (x - mix.means[i]) / (mix.sigmas[i] * mix.sigmas[i]);
  }
  return {p, dp, emax};
}

}  // namespace

double gm_pdf(const GaussianMixture1D& mix, double x) {
  const MixTerms t = mix_terms(mix, x);
  return t.p_rel * std::exp(t.emax) / std::sqrt(2.0 * M_PI);
}

double gm_shift_score(const GaussianMixture1D& mix, double x) {
  validate(mix);
  const MixTerms t = mix_terms(mix, x);
  return t.dp_rel / t.p_rel;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_line(const std::function<double(double)>& f, double tol) {
  // x = tan(t) maps the real line to (-pi/2, pi/2)
  auto g = [&](double t) {
    const double c = std::cos(t);
    if (c < 1e-12) return 0.0;
    return f(std::tan(t)) / (c * c);
  };
  const double a = -0.5 * M_PI + 1e-10;
  const double b = 0.5 * M_PI - 1e-10;
  const double m = 0.0;
  const double fa = g(a), fm = g(m), fb = g(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double shift_fisher_information(const std::function<double(double)>& pdf,
                                const std::function<double(double)>& dpdf) {
  auto integrand = [&](double x) {
    const double p = pdf(x);
    if (p < 1e-300) return 0.0;
    const double d = dpdf(x);
    return d * d / p;
  };
  return integrate_line(integrand, 1e-10);
}

double gm_shift_fi(const GaussianMixture1D& mix) {
  validate(mix);
  auto integrand = [&](double x) {
    const MixTerms t = mix_terms(mix, x);
    const double p = t.p_rel * std::exp(t.emax) / std::sqrt(2.0 * M_PI);
    if (p < 1e-300) return 0.0;
    const double score = t.dp_rel / t.p_rel;
    return score * score * p;
  };
  return integrate_line(integrand, 1e-10);
}

double gm_variance(const GaussianMixture1D& mix) {
  validate(mix);
  double mean = 0.0;
  for (size_t i = 0; i < mix.weights.size(); ++i) mean += mix.weights[i] * mix.means[i];
  double var = 0.0;
  for (size_t i = 0; i < mix.weights.size(); ++i) {
    const double d = mix.means[i] - mean;
    var += mix.weights[i] * (mix.sigmas[i] * mix.sigmas[i] + d * d);
  }
  return var;
}

RocCurve roc(const std::vector<double>& stats_h0, const std::vector<double>& stats_h1) {
  if (stats_h0.empty() || stats_h1.empty()) throw std::invalid_argument("roc: empty input");
  // pooled values, labeled; sweep the threshold downward
  std::vector<std::pair<double, int>> pool;
  pool.reserve(stats_h0.size() + stats_h1.size());
  for (double v : stats_h0) pool.emplace_back(v, 0);
  for (double v : stats_h1) pool.emplace_back(v, 1);
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  const double n0 = static_cast<double>(stats_h0.size());
  const double n1 = static_cast<double>(stats_h1.size());
  size_t fp = 0, tp = 0, i = 0;
  while (i < pool.size()) {
    const double v = pool[i].first;
    while (i < pool.size() && pool[i].first == v) {
      if (pool[i].second == 0)
        ++fp;
      else
        ++tp;
      ++i;
    }
    curve.points.emplace_back(fp / n0, tp / n1);
  }
  if (curve.points.back() != std::make_pair(1.0, 1.0)) curve.points.emplace_back(1.0, 1.0);
  double auc = 0.0;
  for (size_t k = 1; k < curve.points.size(); ++k) {
    const auto& [x0, y0] = curve.points[k - 1];
    const auto& [x1, y1] = curve.points[k];
    auc += (x1 - x0) * 0.5 * (y0 + y1);
  }
  curve.auc = auc;
  return curve;
}

RocCurve asymptotic_roc(int l, double lambda, const std::vector<double>& fpr_grid) {
  if (lambda < 0.0) throw std::invalid_argument("asymptotic_roc: negative lambda");
  std::vector<double> grid = fpr_grid;
  std::sort(grid.begin(), grid.end());
  for (double f : grid)
    if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("asymptotic_roc: fpr outside (0,1)");
  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  for (double f : grid) {
    const double gamma = chi2_quantile_right({l, 0.0}, f);
    curve.points.emplace_back(f, chi2_right_tail({l, lambda}, gamma));
  }
  curve.points.emplace_back(1.0, 1.0);
  double auc = 0.0;
  for (size_t k = 1; k < curve.points.size(); ++k) {
    const auto& [x0, y0] = curve.points[k - 1];
    const auto& [x1, y1] = curve.points[k];
    auc += (x1 - x0) * 0.5 * (y0 + y1);
  }
  curve.auc = auc;
  return curve;
}

}  // namespace lrao::stats
