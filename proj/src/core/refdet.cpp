#include "core/refdet.hpp"

#include <cmath>

namespace lrao::refdet {

double nonlinearity(NonlinearityKind kind, double z) {
  switch (kind) {
    case NonlinearityKind::sign:
      return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
    case NonlinearityKind::limiter3:
      return std::clamp(z, -3.0, 3.0);
    case NonlinearityKind::identity:
      return z;
  }
  throw std::invalid_argument("unknown nonlinearity kind");
}

ReferenceDetector build_reference_with_psd(spectral::SpectralModel spec,
                                           const sigmodel::ObservationMatrix& hm,
                                           NonlinearityKind kind) {
  ReferenceDetector det;
  det.spec_robust = std::move(spec);
  det.hm = hm;
  det.kind = kind;
  if (det.spec_robust.n != hm.n)
    throw std::invalid_argument("reference detector: PSD / observation length mismatch");

  det.d.resize(static_cast<Eigen::Index>(hm.n), static_cast<Eigen::Index>(hm.l));
  std::vector<double> col(hm.n);
  for (size_t j = 0; j < hm.l; ++j) {
    for (size_t t = 0; t < hm.n; ++t)
      col[t] = hm.h(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
    const std::vector<double> wc = spectral::apply_whitening(det.spec_robust, col);
    for (size_t t = 0; t < hm.n; ++t)
      det.d(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = wc[t];
  }
  const Eigen::MatrixXd gram = det.d.transpose() * det.d;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("reference detector: eigensolver failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > 1e12)
    throw std::runtime_error("reference detector: singular whitened Gram matrix");
  det.gram_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return det;
}

ReferenceDetector build_reference(const TimeSeriesBatch& train_noise,
                                  const sigmodel::ObservationMatrix& hm, NonlinearityKind kind) {
  check_batch(train_noise);
  return build_reference_with_psd(
      spectral::averaged_psd(train_noise, spectral::AverageMethod::median), hm, kind);
}

double detect(const ReferenceDetector& det, std::span<const double> x) {
  if (x.size() != det.hm.n) throw std::invalid_argument("detect: length mismatch");
  std::vector<double> y = spectral::apply_whitening(det.spec_robust, x);
  for (auto& v : y) v = nonlinearity(det.kind, v);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd proj = det.d.transpose() * yv;
  return proj.dot(det.gram_inv * proj);
}

}  // namespace lrao::refdet
