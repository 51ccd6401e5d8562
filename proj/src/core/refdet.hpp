#pragma once

#include <Eigen/Dense>

#include "core/sigmodel.hpp"
#include "core/spectral.hpp"
#include "core/types.hpp"

namespace lrao::refdet {

enum class NonlinearityKind { sign, limiter3, identity };

double nonlinearity(NonlinearityKind kind, double z);

// Robust whitening + scalar nonlinearity + Gaussian GLRT statistic.
struct ReferenceDetector {
  spectral::SpectralModel spec_robust;  // median-averaged PSD
  sigmodel::ObservationMatrix hm;
  NonlinearityKind kind = NonlinearityKind::identity;
  Eigen::MatrixXd d;         // whitened observation matrix
  Eigen::MatrixXd gram_inv;  // (D^T D)^-1
};

ReferenceDetector build_reference(const TimeSeriesBatch& train_noise,
                                  const sigmodel::ObservationMatrix& hm, NonlinearityKind kind);

// Same detector but sharing an externally supplied PSD model.
ReferenceDetector build_reference_with_psd(spectral::SpectralModel spec,
                                           const sigmodel::ObservationMatrix& hm,
                                           NonlinearityKind kind);

// y = g(whitened x), then y^T D (D^T D)^-1 D^T y.
double detect(const ReferenceDetector& det, std::span<const double> x);

}  // namespace lrao::refdet
