#pragma once

#include <Eigen/Dense>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace lrao::sigmodel {

// Signal-space basis of the additive model x = H theta + w. For the
// periodic constructor, columns 0..k-1 are cos(2 pi (j+1) f0 t) and
// columns k..2k-1 are sin(2 pi (j+1) f0 t).
struct ObservationMatrix {
  Eigen::MatrixXd h;  // n x l
  size_t n = 0;
  size_t l = 0;
  double f0 = 0.0;  // normalized fundamental (periodic constructor only)
  int harmonics = 0;
};

struct SignalParams {
  std::vector<double> theta;  // alpha_1..alpha_K, beta_1..beta_K
};

ObservationMatrix periodic_observation_matrix(size_t n, double f0, int k);

std::vector<double> synth_signal(const ObservationMatrix& hm, const SignalParams& p);

// theta for amplitudes A_k = a and phases phi_k ~ U(-pi, pi):
// alpha_k = a cos(phi_k), beta_k = -a sin(phi_k).
SignalParams random_equal_amplitude_params(double amplitude, int k, Rng& rng);

// Equal amplitude attaining the requested SNR for the given parameter
// direction: the unit-amplitude signal is synthesized and rescaled so
// that 10 log10(mean(s^2) / scale^2) == snr_db exactly.
double equal_amplitude_for_snr(const ObservationMatrix& hm, const SignalParams& unit_params,
                               double snr_db, double noise_scale);

TimeSeriesBatch inject(const TimeSeriesBatch& noise, const std::vector<double>& s);

// 10 log10(mean(s^2) / noise_scale^2); -inf for a zero signal.
double snr_db(const std::vector<double>& s, double noise_scale);

}  // namespace lrao::sigmodel
