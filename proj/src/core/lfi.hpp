#pragma once

#include <Eigen/Dense>
#include <functional>

#include "core/sigmodel.hpp"
#include "core/spectral.hpp"
#include "core/stats.hpp"
#include "core/types.hpp"

namespace lrao::lfi {

using Transform = std::function<std::vector<double>(std::span<const double>)>;

// Central-difference estimate of the Jacobian of the transformed mean,
// d mu_Psi / d theta_j, averaged over noise-only sequences.
struct JacobianEstimate {
  Eigen::MatrixXd dmu;  // n x l
  double step = 0.0;
  size_t source_count = 0;
};

struct LfiMatrix {
  Eigen::MatrixXd j;  // l x l, symmetric PSD
};

// Frozen quantities needed at detection time.
struct DetectorContext {
  Eigen::VectorXd mu0;  // mean of the transformed data under H0
  JacobianEstimate jac;
  spectral::SpectralModel spec;
  LfiMatrix j0;
  Eigen::MatrixXd j0_inv;
};

// The parameter shift h_j * step is zeroed on the first and last `margin`
// samples (interior-shift rule) to suppress convolution edge effects.
JacobianEstimate jacobian_central_diff(const Transform& transform, const TimeSeriesBatch& noise,
                                       const sigmodel::ObservationMatrix& hm, double step,
                                       size_t margin);

// J[a,b] = sum_i conj(Va[i]) Vb[i] / psd[i] with Vc the 1/sqrt(N)-scaled
// DFT of the c-th Jacobian column; symmetrized, real part.
LfiMatrix lfi_spectral(const JacobianEstimate& jac, const spectral::SpectralModel& spec);

// Inversion with condition-number guard; throws on a singular LFI.
Eigen::MatrixXd invert_lfi(const LfiMatrix& j0, double cond_limit = 1e12);

DetectorContext make_context(JacobianEstimate jac, spectral::SpectralModel spec,
                             Eigen::VectorXd mu0 = {});

std::vector<double> lblue(const DetectorContext& ctx, std::span<const double> x,
                          std::span<const double> theta0);

double lrao(const DetectorContext& ctx, std::span<const double> x);

double llmp(const DetectorContext& ctx, std::span<const double> x);

double lrao_threshold(int l, double fpr);
double lrao_asymptotic_tpr(int l, double lambda, double gamma);

// Chain rule for the shift model x = theta* + w: J = H^T J* H.
LfiMatrix chain_rule_lfi(const LfiMatrix& jstar, const sigmodel::ObservationMatrix& hm);

}  // namespace lrao::lfi
