#pragma once

#include <functional>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace lrao::stats {

// (Non)central chi-squared spec: dof l >= 1, noncentrality lambda >= 0.
struct Chi2Spec {
  int dof = 1;
  double noncentrality = 0.0;
};

// Right tail probability Q(gamma) of a (non)central chi-squared variable.
double chi2_right_tail(const Chi2Spec& spec, double gamma);

// gamma such that chi2_right_tail(spec, gamma) == alpha; central only.
double chi2_quantile_right(const Chi2Spec& spec, double alpha);

// One-dimensional Gaussian mixture.
struct GaussianMixture1D {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;
};

void validate(const GaussianMixture1D& mix);

std::vector<double> sample_cauchy(size_t n, Rng& rng);
std::vector<double> sample_gm(const GaussianMixture1D& mix, size_t n, Rng& rng);

double gm_pdf(const GaussianMixture1D& mix, double x);

// Score of an additive shift: -p'(x)/p(x).
double gm_shift_score(const GaussianMixture1D& mix, double x);

// Per-sample Fisher information E[(p'/p)^2] for an additive shift,
// evaluated by adaptive quadrature from a generic density.
double shift_fisher_information(const std::function<double(double)>& pdf,
                                const std::function<double(double)>& dpdf);
double gm_shift_fi(const GaussianMixture1D& mix);

// Variance of the mixture (quadrature-free, exact moments).
double gm_variance(const GaussianMixture1D& mix);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), fpr nondecreasing
  double auc = 0.0;
};

// Empirical ROC from detection statistics under H0 and H1; ties averaged
// (trapezoid through tied thresholds).
RocCurve roc(const std::vector<double>& stats_h0, const std::vector<double>& stats_h1);

// Asymptotic chi-squared ROC: tpr(fpr) for the (l, lambda) pair.
RocCurve asymptotic_roc(int l, double lambda, const std::vector<double>& fpr_grid);

}  // namespace lrao::stats
