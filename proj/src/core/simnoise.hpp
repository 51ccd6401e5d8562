#pragma once

#include <Eigen/Dense>

#include "core/rng.hpp"
#include "core/sigmodel.hpp"
#include "core/types.hpp"

namespace lrao::simnoise {

// Autoregressive filter w_t = sum_k coeffs[k-1] w_{t-k} + z_t.
struct ArFilter {
  std::vector<double> coeffs;
};

bool is_stable(const ArFilter& filter);

// Draws reflection coefficients uniform in (-0.95, 0.95) and converts
// them to AR coefficients; stable by construction.
ArFilter random_stable_ar(int order, Rng& rng);

struct CauchyNoiseModel {
  ArFilter filter;
  size_t n = 0;
  // Discarded startup samples (10 * order by default) so sequences are
  // approximately stationary; 0 replicates the zero-initial-state model
  // exactly.
  size_t burn_in = 0;
};

CauchyNoiseModel make_cauchy_model(ArFilter filter, size_t n, bool with_burn_in = true);

TimeSeriesBatch generate(const CauchyNoiseModel& model, size_t count, Rng& rng);

// Applies the FIR map w -> z (rows of the triangular filter matrix A,
// zero initial state) to each column of a matrix.
Eigen::MatrixXd apply_whitening_fir(const ArFilter& filter, const Eigen::MatrixXd& m);

// F = 1/2 (A H)^T (A H): the exact Fisher information of the filtered
// Cauchy model for the additive signal model.
Eigen::MatrixXd analytic_fi(const CauchyNoiseModel& model, const sigmodel::ObservationMatrix& hm);

// AR-filtered Gaussian noise plus sparse symmetric impulses; a stand-in
// for spiky sensor noise.
TimeSeriesBatch spiky_gaussian_surrogate(size_t n, size_t count, double spike_rate,
                                         double spike_scale, const ArFilter& ar, Rng& rng);

}  // namespace lrao::simnoise
