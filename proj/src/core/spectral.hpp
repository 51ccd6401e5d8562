#pragma once

#include "core/types.hpp"

namespace lrao::spectral {

// Unnormalized forward DFT: X[i] = sum_n x[n] exp(-j 2 pi i n / N).
cvec dft(std::span<const double> x);

// Complex-input variants of the same transforms.
cvec dft_complex(const cvec& x);
cvec idft_complex(const cvec& X);

// Inverse of dft (includes the 1/N factor). Returns the real part; the
// imaginary residue is checked against tol when tol >= 0.
std::vector<double> idft_real(const cvec& X, double tol = -1.0);

// Schuster periodogram with 1/N normalization: (1/N) |X[i]|^2, so that a
// unit-variance white sequence has a flat PSD of one per bin.
std::vector<double> periodogram(std::span<const double> x);

// PSD sample vector standing in for the Toeplitz covariance. All entries
// are >= floor > 0 and symmetric (psd[i] == psd[n-i]).
struct SpectralModel {
  std::vector<double> psd;
  size_t n = 0;
  double floor = 0.0;
};

enum class AverageMethod { mean, median };

// Per-bin mean or median of the individual periodograms, symmetrized and
// clamped at floor_rel * max(psd).
SpectralModel averaged_psd(const TimeSeriesBatch& batch, AverageMethod method,
                           double floor_rel = 1e-8);

// Builds a SpectralModel from a known PSD vector (clamped + symmetrized).
SpectralModel spectral_model_from_psd(std::vector<double> psd, double floor_rel = 1e-8);

// y = sum_i v_i v_i^H x / psd[i]  with v_i the 1/sqrt(N)-normalized DFT
// basis vectors; the asymptotic inverse of the Toeplitz covariance.
std::vector<double> apply_inverse_cov(const SpectralModel& model, std::span<const double> x);

// Same with 1/sqrt(psd[i]); applying twice equals apply_inverse_cov.
std::vector<double> apply_whitening(const SpectralModel& model, std::span<const double> x);

}  // namespace lrao::spectral
