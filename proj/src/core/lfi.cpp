#include "core/lfi.hpp"

#include <cmath>

namespace lrao::lfi {

JacobianEstimate jacobian_central_diff(const Transform& transform, const TimeSeriesBatch& noise,
                                       const sigmodel::ObservationMatrix& hm, double step,
                                       size_t margin) {
  check_batch(noise);
  if (!(step > 0.0)) throw std::invalid_argument("jacobian: step must be positive");
  const size_t n = noise.front().size();
  if (n != hm.n) throw std::invalid_argument("jacobian: sequence / observation length mismatch");
  if (2 * margin >= n) throw std::invalid_argument("jacobian: margin leaves no interior samples");

  JacobianEstimate est;
  est.step = step;
  est.source_count = noise.size();
  est.dmu = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(hm.l));

  std::vector<double> shifted(n);
  for (size_t j = 0; j < hm.l; ++j) {
    // interior-shift rule: no perturbation on the edge samples
    std::vector<double> delta(n, 0.0);
    for (size_t t = margin; t < n - margin; ++t)
      delta[t] = hm.h(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) * step;
    Eigen::VectorXd col = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& w : noise) {
      for (size_t t = 0; t < n; ++t) shifted[t] = w[t] + delta[t];
      const std::vector<double> plus = transform(shifted);
      for (size_t t = 0; t < n; ++t) shifted[t] = w[t] - delta[t];
      const std::vector<double> minus = transform(shifted);
      if (plus.size() != n || minus.size() != n)
        throw std::runtime_error("jacobian: transform is not length-preserving");
      for (size_t t = 0; t < n; ++t) {
        const double q = (plus[t] - minus[t]) / (2.0 * step);
        if (!std::isfinite(q)) throw std::runtime_error("jacobian: non-finite transform output");
        col(static_cast<Eigen::Index>(t)) += q;
      }
    }
    est.dmu.col(static_cast<Eigen::Index>(j)) = col / static_cast<double>(noise.size());
  }
  return est;
}

LfiMatrix lfi_spectral(const JacobianEstimate& jac, const spectral::SpectralModel& spec) {
  const size_t n = static_cast<size_t>(jac.dmu.rows());
  const size_t l = static_cast<size_t>(jac.dmu.cols());
  if (n != spec.n) throw std::invalid_argument("lfi_spectral: dimension mismatch");

  std::vector<cvec> cols(l);
  std::vector<double> buf(n);
  for (size_t c = 0; c < l; ++c) {
    for (size_t t = 0; t < n; ++t) buf[t] = jac.dmu(static_cast<Eigen::Index>(t),
                                                    static_cast<Eigen::Index>(c));
    cols[c] = spectral::dft(buf);
  }
  LfiMatrix out;
  out.j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l));
  const double inv_n = 1.0 / static_cast<double>(n);  // v_i carries 1/sqrt(N)
  for (size_t a = 0; a < l; ++a) {
    for (size_t b = a; b < l; ++b) {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i)
        acc += (std::conj(cols[a][i]) * cols[b][i]).real() / spec.psd[i];
      acc *= inv_n;
      out.j(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
      out.j(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd invert_lfi(const LfiMatrix& j0, double cond_limit) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j0.j);
  if (es.info() != Eigen::Success) throw std::runtime_error("lfi inversion: eigensolver failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  const double emin = ev.minCoeff();
  if (!(emax > 0.0) || emin <= 0.0 || emax / emin > cond_limit)
    throw std::runtime_error("lfi inversion: singular or ill-conditioned LFI matrix");
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

DetectorContext make_context(JacobianEstimate jac, spectral::SpectralModel spec,
                             Eigen::VectorXd mu0) {
  DetectorContext ctx;
  const Eigen::Index n = jac.dmu.rows();
  ctx.mu0 = mu0.size() == 0 ? Eigen::VectorXd::Zero(n) : std::move(mu0);
  if (ctx.mu0.size() != n) throw std::invalid_argument("detector context: mu0 length mismatch");
  ctx.jac = std::move(jac);
  ctx.spec = std::move(spec);
  ctx.j0 = lfi_spectral(ctx.jac, ctx.spec);
  ctx.j0_inv = invert_lfi(ctx.j0);
  return ctx;
}

namespace {

// (d mu)^T Sigma^-1 (x - mu0), the pessimistic score direction.
Eigen::VectorXd score_projection(const DetectorContext& ctx, std::span<const double> x) {
  const size_t n = static_cast<size_t>(ctx.mu0.size());
  if (x.size() != n) throw std::invalid_argument("detector: input length mismatch");
  std::vector<double> resid(n);
  for (size_t i = 0; i < n; ++i) resid[i] = x[i] - ctx.mu0(static_cast<Eigen::Index>(i));
  const std::vector<double> t = spectral::apply_inverse_cov(ctx.spec, resid);
  const Eigen::Map<const Eigen::VectorXd> tv(t.data(), static_cast<Eigen::Index>(n));
  return ctx.jac.dmu.transpose() * tv;
}

}  // namespace

std::vector<double> lblue(const DetectorContext& ctx, std::span<const double> x,
                          std::span<const double> theta0) {
  const size_t l = static_cast<size_t>(ctx.jac.dmu.cols());
  if (theta0.size() != l) throw std::invalid_argument("lblue: theta0 length mismatch");
  const Eigen::VectorXd est = ctx.j0_inv * score_projection(ctx, x);
  std::vector<double> out(l);
  for (size_t i = 0; i < l; ++i) out[i] = theta0[i] + est(static_cast<Eigen::Index>(i));
  return out;
}

double lrao(const DetectorContext& ctx, std::span<const double> x) {
  const Eigen::VectorXd s = score_projection(ctx, x);
  return s.dot(ctx.j0_inv * s);
}

double llmp(const DetectorContext& ctx, std::span<const double> x) {
  if (ctx.jac.dmu.cols() != 1) throw std::invalid_argument("llmp: scalar parameter only");
  const Eigen::VectorXd s = score_projection(ctx, x);
  return s(0) / std::sqrt(ctx.j0.j(0, 0));
}

double lrao_threshold(int l, double fpr) { return stats::chi2_quantile_right({l, 0.0}, fpr); }

double lrao_asymptotic_tpr(int l, double lambda, double gamma) {
  return stats::chi2_right_tail({l, lambda}, gamma);
}

LfiMatrix chain_rule_lfi(const LfiMatrix& jstar, const sigmodel::ObservationMatrix& hm) {
  if (jstar.j.rows() != static_cast<Eigen::Index>(hm.n) || jstar.j.rows() != jstar.j.cols())
    throw std::invalid_argument("chain_rule_lfi: dimension mismatch");
  LfiMatrix out;
  out.j = hm.h.transpose() * jstar.j * hm.h;
  out.j = 0.5 * (out.j + out.j.transpose()).eval();
  return out;
}

}  // namespace lrao::lfi
