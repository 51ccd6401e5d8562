#include "core/sigmodel.hpp"

#include <cmath>
#include <limits>

namespace lrao::sigmodel {

ObservationMatrix periodic_observation_matrix(size_t n, double f0, int k) {
  if (n < 2) throw std::invalid_argument("observation matrix: n must be >= 2");
  if (k < 1) throw std::invalid_argument("observation matrix: need at least one harmonic");
  if (!(f0 > 0.0) || !(k * f0 < 0.5))
    throw std::invalid_argument("observation matrix: harmonic at or above Nyquist");
  ObservationMatrix hm;
  hm.n = n;
  hm.l = static_cast<size_t>(2 * k);
  hm.f0 = f0;
  hm.harmonics = k;
  hm.h.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(hm.l));
  for (size_t t = 0; t < n; ++t) {
    for (int j = 0; j < k; ++j) {
      const double arg = 2.0 * M_PI * (j + 1) * f0 * static_cast<double>(t);
      hm.h(t, j) = std::cos(arg);
      hm.h(t, k + j) = std::sin(arg);
    }
  }
  return hm;
}

std::vector<double> synth_signal(const ObservationMatrix& hm, const SignalParams& p) {
  if (p.theta.size() != hm.l) throw std::invalid_argument("synth_signal: dimension mismatch");
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(p.theta.data(),
                                                            static_cast<Eigen::Index>(hm.l));
  Eigen::VectorXd s = hm.h * theta;
  return std::vector<double>(s.data(), s.data() + s.size());
}

SignalParams random_equal_amplitude_params(double amplitude, int k, Rng& rng) {
  if (amplitude < 0.0) throw std::invalid_argument("amplitude must be >= 0");
  SignalParams p;
  p.theta.resize(static_cast<size_t>(2 * k));
  for (int j = 0; j < k; ++j) {
    const double phi = rng.uniform(-M_PI, M_PI);
    p.theta[static_cast<size_t>(j)] = amplitude * std::cos(phi);
    p.theta[static_cast<size_t>(k + j)] = -amplitude * std::sin(phi);
  }
  return p;
}

double equal_amplitude_for_snr(const ObservationMatrix& hm, const SignalParams& unit_params,
                               double snr_db_target, double noise_scale) {
  if (!(noise_scale > 0.0)) throw std::invalid_argument("noise_scale must be positive");
  const std::vector<double> s1 = synth_signal(hm, unit_params);
  double power = 0.0;
  for (double v : s1) power += v * v;
  power /= static_cast<double>(s1.size());
  if (!(power > 0.0)) throw std::invalid_argument("unit signal has zero power");
  const double target_power = noise_scale * noise_scale * std::pow(10.0, snr_db_target / 10.0);
  return std::sqrt(target_power / power);
}

TimeSeriesBatch inject(const TimeSeriesBatch& noise, const std::vector<double>& s) {
  check_batch(noise);
  if (noise.front().size() != s.size()) throw std::invalid_argument("inject: length mismatch");
  TimeSeriesBatch out = noise;
  for (auto& seq : out)
    for (size_t i = 0; i < s.size(); ++i) seq[i] += s[i];
  return out;
}

double snr_db(const std::vector<double>& s, double noise_scale) {
  if (!(noise_scale > 0.0)) throw std::invalid_argument("snr_db: noise_scale must be positive");
  if (s.empty()) throw std::invalid_argument("snr_db: empty signal");
  double power = 0.0;
  for (double v : s) power += v * v;
  power /= static_cast<double>(s.size());
  if (power == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(power / (noise_scale * noise_scale));
}

}  // namespace lrao::sigmodel
