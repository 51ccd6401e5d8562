#include "core/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace lrao::spectral {

namespace {

// FFTW plan cache; planning is not thread safe, execution on separate
// buffers via fftw_execute_dft is.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;
std::map<size_t, PlanPair>& plan_cache() {
  static std::map<size_t, PlanPair> cache;
  return cache;
}

PlanPair get_plans(size_t n) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> in(n), out(n);
  PlanPair p;
  p.fwd = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                           reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.bwd = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                           reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache[n] = p;
  return p;
}

cvec run_plan(fftw_plan plan, const cvec& in) {
  cvec tmp = in;
  cvec out(in.size());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

cvec dft(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("dft: empty input");
  cvec in(x.size());
  for (size_t i = 0; i < x.size(); ++i) in[i] = x[i];
  return run_plan(get_plans(x.size()).fwd, in);
}

cvec dft_complex(const cvec& x) {
  if (x.empty()) throw std::invalid_argument("dft: empty input");
  return run_plan(get_plans(x.size()).fwd, x);
}

cvec idft_complex(const cvec& X) {
  if (X.empty()) throw std::invalid_argument("idft: empty input");
  cvec out = run_plan(get_plans(X.size()).bwd, X);
  const double inv = 1.0 / static_cast<double>(X.size());
  for (auto& v : out) v *= inv;
  return out;
}

std::vector<double> idft_real(const cvec& X, double tol) {
  cvec y = idft_complex(X);
  double scale = 0.0;
  for (const auto& v : y) scale = std::max(scale, std::abs(v));
  std::vector<double> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    if (tol >= 0.0 && scale > 0.0 && std::abs(y[i].imag()) > tol * scale)
      throw std::runtime_error("idft_real: imaginary residue exceeds tolerance");
    out[i] = y[i].real();
  }
  return out;
}

std::vector<double> periodogram(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("periodogram: empty input");
  const cvec X = dft(x);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  std::vector<double> p(x.size());
  for (size_t i = 0; i < x.size(); ++i) p[i] = std::norm(X[i]) * inv_n;
  return p;
}

SpectralModel spectral_model_from_psd(std::vector<double> psd, double floor_rel) {
  if (psd.empty()) throw std::invalid_argument("spectral model: empty psd");
  const size_t n = psd.size();
  // symmetrize (real-data property), then clamp
  for (size_t i = 1; 2 * i < n; ++i) {
    const double avg = 0.5 * (psd[i] + psd[n - i]);
    psd[i] = psd[n - i] = avg;
  }
  double mx = 0.0;
  for (double v : psd) mx = std::max(mx, v);
  if (!(mx > 0.0)) throw std::runtime_error("spectral model: all-zero psd");
  const double floor = floor_rel * mx;
  for (auto& v : psd) v = std::max(v, floor);
  return SpectralModel{std::move(psd), n, floor};
}

SpectralModel averaged_psd(const TimeSeriesBatch& batch, AverageMethod method, double floor_rel) {
  check_batch(batch);
  const size_t n = batch.front().size();
  const size_t count = batch.size();
  std::vector<std::vector<double>> pgs;
  pgs.reserve(count);
  for (const auto& seq : batch) pgs.push_back(periodogram(seq));

  std::vector<double> psd(n, 0.0);
  if (method == AverageMethod::mean) {
    for (const auto& p : pgs)
      for (size_t i = 0; i < n; ++i) psd[i] += p[i];
    for (auto& v : psd) v /= static_cast<double>(count);
  } else {
    std::vector<double> col(count);
    for (size_t i = 0; i < n; ++i) {
      for (size_t b = 0; b < count; ++b) col[b] = pgs[b][i];
      std::nth_element(col.begin(), col.begin() + count / 2, col.end());
      double med = col[count / 2];
      if (count % 2 == 0) {
        std::nth_element(col.begin(), col.begin() + count / 2 - 1, col.end());
        med = 0.5 * (med + col[count / 2 - 1]);
      }
      psd[i] = med;
    }
  }
  return spectral_model_from_psd(std::move(psd), floor_rel);
}

namespace {

std::vector<double> apply_bin_weights(const SpectralModel& model, std::span<const double> x,
                                      bool sqrt_weights) {
  if (x.size() != model.n) throw std::invalid_argument("spectral operator: length mismatch");
  // sum_i v_i v_i^H x / w_i  ==  idft( dft(x) / w ) with the 1/N folded
  // into the inverse transform.
  cvec X = dft(x);
  for (size_t i = 0; i < model.n; ++i)
    X[i] /= sqrt_weights ? std::sqrt(model.psd[i]) : model.psd[i];
  return idft_real(X, 1e-9);
}

}  // namespace

std::vector<double> apply_inverse_cov(const SpectralModel& model, std::span<const double> x) {
  return apply_bin_weights(model, x, false);
}

std::vector<double> apply_whitening(const SpectralModel& model, std::span<const double> x) {
  return apply_bin_weights(model, x, true);
}

}  // namespace lrao::spectral
