#include "core/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "core/spectral.hpp"

namespace lrao::nnet {

size_t ConvNetParams::weight_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.w.size();
  return n;
}

std::vector<double> ConvNetParams::flat() const {
  std::vector<double> out;
  out.reserve(weight_count());
  for (const auto& l : layers) out.insert(out.end(), l.w.begin(), l.w.end());
  return out;
}

void ConvNetParams::set_flat(const std::vector<double>& v) {
  if (v.size() != weight_count()) throw std::invalid_argument("set_flat: size mismatch");
  size_t pos = 0;
  for (auto& l : layers) {
    std::copy(v.begin() + static_cast<long>(pos), v.begin() + static_cast<long>(pos + l.w.size()),
              l.w.begin());
    pos += l.w.size();
  }
}

ConvNetParams init_params(const Arch& arch, Rng& rng) {
  if (arch.num_layers < 1 || arch.channels < 1 || arch.filter < 1)
    throw std::invalid_argument("init_params: bad architecture");
  ConvNetParams p;
  p.arch = arch;
  for (int li = 0; li < arch.num_layers; ++li) {
    ConvNetParams::Layer layer;
    layer.in_c = li == 0 ? 1 : arch.channels;
    layer.out_c = li == arch.num_layers - 1 ? 1 : arch.channels;
    if (arch.num_layers == 1) layer.in_c = layer.out_c = 1;
    layer.k = arch.filter;
    layer.w.resize(static_cast<size_t>(layer.out_c * layer.in_c * layer.k));
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_c * layer.k));
    for (auto& w : layer.w) w = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

// channel-major activation planes: act[c * n + t]
using Plane = std::vector<double>;

void conv_layer(const ConvNetParams::Layer& l, const Plane& in, Plane& out, size_t n) {
  const int pad = (l.k - 1) / 2;
  out.assign(static_cast<size_t>(l.out_c) * n, 0.0);
  for (int o = 0; o < l.out_c; ++o) {
    double* zo = out.data() + static_cast<size_t>(o) * n;
    for (int i = 0; i < l.in_c; ++i) {
      const double* ai = in.data() + static_cast<size_t>(i) * n;
      for (int k = 0; k < l.k; ++k) {
        const double w = l.at(o, i, k);
        const long off = k - pad;
        const long t0 = std::max<long>(0, -off);
        const long t1 = std::min<long>(static_cast<long>(n), static_cast<long>(n) - off);
        for (long t = t0; t < t1; ++t) zo[t] += w * ai[t + off];
      }
    }
    for (size_t t = 0; t < n; ++t) zo[static_cast<long>(t)] = std::tanh(zo[static_cast<long>(t)]);
  }
}

// forward pass keeping every activation plane (index 0 is the input).
void forward_acts(const ConvNetParams& p, std::span<const double> x, std::vector<Plane>& acts) {
  const size_t n = x.size();
  acts.resize(p.layers.size() + 1);
  acts[0].assign(x.begin(), x.end());
  for (size_t li = 0; li < p.layers.size(); ++li)
    conv_layer(p.layers[li], acts[li], acts[li + 1], n);
}

// accumulates weight gradients for one pass; gy is dC/d(output plane).
void backward_acts(const ConvNetParams& p, const std::vector<Plane>& acts,
                   const std::vector<double>& gy, std::vector<double>& grad_flat) {
  const size_t n = acts[0].size();
  const size_t nl = p.layers.size();
  // delta at the output of the last layer, through its tanh
  Plane delta(gy.size());
  {
    const Plane& y = acts[nl];
    for (size_t t = 0; t < n; ++t) delta[t] = gy[t] * (1.0 - y[t] * y[t]);
  }
  // flat offsets per layer
  std::vector<size_t> offset(nl, 0);
  for (size_t li = 1; li < nl; ++li) offset[li] = offset[li - 1] + p.layers[li - 1].w.size();

  for (size_t li = nl; li-- > 0;) {
    const auto& l = p.layers[li];
    const int pad = (l.k - 1) / 2;
    const Plane& ain = acts[li];
    double* gw = grad_flat.data() + offset[li];
    for (int o = 0; o < l.out_c; ++o) {
      const double* dz = delta.data() + static_cast<size_t>(o) * n;
      for (int i = 0; i < l.in_c; ++i) {
        const double* ai = ain.data() + static_cast<size_t>(i) * n;
        for (int k = 0; k < l.k; ++k) {
          const long off = k - pad;
          const long t0 = std::max<long>(0, -off);
          const long t1 = std::min<long>(static_cast<long>(n), static_cast<long>(n) - off);
          double acc = 0.0;
          for (long t = t0; t < t1; ++t) acc += dz[t] * ai[t + off];
          gw[static_cast<size_t>((o * l.in_c + i) * l.k + k)] += acc;
        }
      }
    }
    if (li == 0) break;
    // propagate to the previous activation, through its tanh
    Plane prev(static_cast<size_t>(l.in_c) * n, 0.0);
    for (int o = 0; o < l.out_c; ++o) {
      const double* dz = delta.data() + static_cast<size_t>(o) * n;
      for (int i = 0; i < l.in_c; ++i) {
        double* dp = prev.data() + static_cast<size_t>(i) * n;
        for (int k = 0; k < l.k; ++k) {
          const double w = l.at(o, i, k);
          const long off = static_cast<long>(pad) - k;  // s + pad - k indexes delta
          const long s0 = std::max<long>(0, -off);
          const long s1 = std::min<long>(static_cast<long>(n), static_cast<long>(n) - off);
          for (long s = s0; s < s1; ++s) dp[s] += w * dz[s + off];
        }
      }
    }
    const Plane& aprev = acts[li];
    for (size_t idx = 0; idx < prev.size(); ++idx)
      prev[idx] *= 1.0 - aprev[idx] * aprev[idx];
    delta = std::move(prev);
  }
}

}  // namespace

std::vector<double> forward(const ConvNetParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) < p.arch.receptive_field())
    throw std::invalid_argument("forward: input shorter than the receptive field");
  std::vector<Plane> acts;
  forward_acts(p, x, acts);
  return acts.back();
}

namespace {

struct CostEval {
  double value = 0.0;
  std::vector<double> grad;
};

CostEval evaluate_cost(const ConvNetParams& p, const TimeSeriesBatch& noise,
                       const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg,
                       bool with_grad) {
  check_batch(noise);
  const size_t n = noise.front().size();
  const size_t batch = noise.size();
  const size_t l = hm.l;
  if (n != hm.n) throw std::invalid_argument("cost: sequence / observation length mismatch");
  if (static_cast<int>(n) < p.arch.receptive_field())
    throw std::invalid_argument("cost: sequences shorter than the receptive field");
  if (2 * cfg.margin >= n) throw std::invalid_argument("cost: margin leaves no interior samples");
  const double dtheta = cfg.step_dtheta;
  if (!(dtheta > 0.0)) throw std::invalid_argument("cost: step_dtheta must be positive");

  // interior-shift perturbations, one per parameter
  std::vector<std::vector<double>> delta(l, std::vector<double>(n, 0.0));
  for (size_t j = 0; j < l; ++j)
    for (size_t t = cfg.margin; t < n - cfg.margin; ++t)
      delta[j][t] = hm.h(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) * dtheta;

  const size_t passes = 2 * l + 1;  // pass 0 unshifted, then +/- per parameter
  auto pass_input = [&](size_t b, size_t pass, std::vector<double>& buf) {
    const auto& w = noise[b];
    if (pass == 0) {
      buf.assign(w.begin(), w.end());
    } else {
      const size_t j = (pass - 1) / 2;
      const double sgn = (pass - 1) % 2 == 0 ? 1.0 : -1.0;
      buf.resize(n);
      for (size_t t = 0; t < n; ++t) buf[t] = w[t] + sgn * delta[j][t];
    }
    if (cfg.input_norm) buf = robust_normalize(buf);
  };

  // phase 1: forward every pass; keep all activations when the gradient is
  // needed so phase 2 does not recompute the forward passes
  std::vector<std::vector<double>> outs(batch * passes);
  std::vector<std::vector<Plane>> acts_all(with_grad ? batch * passes : 0);
#pragma omp parallel for schedule(static)
  for (long bi = 0; bi < static_cast<long>(batch); ++bi) {
    std::vector<double> buf;
    std::vector<Plane> acts;
    for (size_t pass = 0; pass < passes; ++pass) {
      const size_t slot = static_cast<size_t>(bi) * passes + pass;
      pass_input(static_cast<size_t>(bi), pass, buf);
      if (with_grad) {
        forward_acts(p, buf, acts_all[slot]);
        outs[slot] = acts_all[slot].back();
      } else {
        forward_acts(p, buf, acts);
        outs[slot] = acts.back();
      }
    }
  }

  // batch-mean periodogram of the transformed noise
  std::vector<double> psd_raw(n, 0.0);
  std::vector<cvec> u(batch);
  for (size_t b = 0; b < batch; ++b) {
    u[b] = spectral::dft(outs[b * passes]);
    for (size_t i = 0; i < n; ++i) psd_raw[i] += std::norm(u[b][i]);
  }
  const double inv_bn = 1.0 / (static_cast<double>(batch) * static_cast<double>(n));
  for (auto& v : psd_raw) v *= inv_bn;
  double psd_max = 0.0;
  for (double v : psd_raw) psd_max = std::max(psd_max, v);
  if (!(psd_max > 0.0)) throw std::runtime_error("cost: degenerate (all-zero) network output");
  const double floor = cfg.psd_floor_rel * psd_max;
  std::vector<double> psd(n);
  for (size_t i = 0; i < n; ++i) psd[i] = std::max(psd_raw[i], floor);

  // Jacobian columns and their spectra
  std::vector<std::vector<double>> dcol(l, std::vector<double>(n, 0.0));
  for (size_t b = 0; b < batch; ++b) {
    for (size_t j = 0; j < l; ++j) {
      const auto& yp = outs[b * passes + 1 + 2 * j];
      const auto& ym = outs[b * passes + 2 + 2 * j];
      for (size_t t = 0; t < n; ++t) dcol[j][t] += yp[t] - ym[t];
    }
  }
  const double scale_d = 1.0 / (2.0 * dtheta * static_cast<double>(batch));
  for (auto& col : dcol)
    for (auto& v : col) v *= scale_d;

  std::vector<cvec> vj(l);
  double value = 0.0;
  for (size_t j = 0; j < l; ++j) {
    vj[j] = spectral::dft(dcol[j]);
    for (size_t i = 0; i < n; ++i)
      value -= std::norm(vj[j][i]) / (static_cast<double>(n) * psd[i]);
  }

  CostEval out;
  out.value = value;
  if (!with_grad) return out;

  // gradient wrt the Jacobian columns: -2 Re(idft(Vj / psd))
  std::vector<std::vector<double>> gd(l);
  for (size_t j = 0; j < l; ++j) {
    cvec scaled(n);
    for (size_t i = 0; i < n; ++i) scaled[i] = vj[j][i] / psd[i];
    const cvec inv = spectral::idft_complex(scaled);
    gd[j].resize(n);
    for (size_t t = 0; t < n; ++t) gd[j][t] = -2.0 * inv[t].real();
  }

  // gradient wrt the PSD bins (zero where the floor clamps)
  std::vector<double> q(n, 0.0);
  if (!cfg.freeze_denominator) {
    for (size_t i = 0; i < n; ++i) {
      if (psd_raw[i] < floor) continue;
      double num = 0.0;
      for (size_t j = 0; j < l; ++j) num += std::norm(vj[j][i]);
      q[i] = num / (static_cast<double>(n) * psd[i] * psd[i]);
    }
  }

  // phase 2: backprop each pass with its upstream output gradient
  const size_t nw = p.weight_count();
  std::vector<std::vector<double>> grad_per_b(batch);
  const double inv_b = 1.0 / static_cast<double>(batch);
#pragma omp parallel for schedule(static)
  for (long bi = 0; bi < static_cast<long>(batch); ++bi) {
    const size_t b = static_cast<size_t>(bi);
    auto& gflat = grad_per_b[b];
    gflat.assign(nw, 0.0);
    std::vector<double> gy(n);
    // unshifted pass feeds the PSD denominator
    if (!cfg.freeze_denominator) {
      cvec qu(n);
      for (size_t i = 0; i < n; ++i) qu[i] = q[i] * u[b][i];
      const cvec inv = spectral::idft_complex(qu);
      for (size_t t = 0; t < n; ++t) gy[t] = 2.0 * inv_b * inv[t].real();
      backward_acts(p, acts_all[b * passes], gy, gflat);
    }
    // shifted passes feed the Jacobian numerator
    for (size_t j = 0; j < l; ++j) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        const double s = sgn == 0 ? scale_d : -scale_d;
        for (size_t t = 0; t < n; ++t) gy[t] = s * gd[j][t];
        backward_acts(p, acts_all[b * passes + 1 + 2 * j + static_cast<size_t>(sgn)], gy, gflat);
      }
    }
  }
  // fixed-order reduction keeps runs bit-reproducible
  out.grad.assign(nw, 0.0);
  for (size_t b = 0; b < batch; ++b)
    for (size_t w = 0; w < nw; ++w) out.grad[w] += grad_per_b[b][w];
  return out;
}

}  // namespace

double cost(const ConvNetParams& p, const TimeSeriesBatch& noise,
            const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg) {
  return evaluate_cost(p, noise, hm, cfg, false).value;
}

CostGrad cost_grad(const ConvNetParams& p, const TimeSeriesBatch& noise,
                   const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg) {
  CostEval e = evaluate_cost(p, noise, hm, cfg, true);
  return CostGrad{e.value, std::move(e.grad)};
}

AdamWState init_adamw(size_t n) {
  AdamWState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

void adamw_step(std::vector<double>& weights, const std::vector<double>& grads, AdamWState& state,
                double lr, double weight_decay) {
  if (weights.size() != grads.size() || weights.size() != state.m.size())
    throw std::invalid_argument("adamw_step: size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < weights.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    weights[i] -= lr * weight_decay * weights[i];  // decoupled decay
    weights[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

TrainResult train(const TimeSeriesBatch& noise_train, const TimeSeriesBatch& noise_val,
                  const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg,
                  std::optional<int> fixed_epochs) {
  check_batch(noise_train);
  check_batch(noise_val);
  if (cfg.patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  if (cfg.val_interval < 1) throw std::invalid_argument("train: val_interval must be >= 1");
  Rng rng(cfg.seed);
  ConvNetParams params = init_params(Arch{}, rng);
  std::vector<double> weights = params.flat();
  AdamWState state = init_adamw(weights.size());

  TrainResult result;
  result.params = params;
  double best_val = std::numeric_limits<double>::infinity();
  double last_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const int epochs_cap = fixed_epochs ? *fixed_epochs : cfg.max_epochs;
  for (int epoch = 0; epoch < epochs_cap; ++epoch) {
    CostGrad cg;
    try {
      cg = cost_grad(params, noise_train, hm, cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("train: epoch " + std::to_string(epoch) + ": " + e.what());
    }
    adamw_step(weights, cg.grad, state, cfg.learning_rate, cfg.weight_decay);
    params.set_flat(weights);
    const bool eval_now = epoch % cfg.val_interval == 0 || epoch == epochs_cap - 1;
    if (eval_now) last_val = cost(params, noise_val, hm, cfg);
    result.trace.train_cost.push_back(cg.value);
    result.trace.validation_cost.push_back(last_val);
    if (fixed_epochs || !eval_now) continue;
    if (last_val < best_val) {
      best_val = last_val;
      result.trace.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.trace.stopped_reason = "patience";
      break;
    }
  }
  if (fixed_epochs) {
    result.params = params;
    result.trace.best_epoch = epochs_cap - 1;
    result.trace.stopped_reason = "fixed";
  } else if (result.trace.stopped_reason.empty()) {
    result.trace.stopped_reason = "max_epochs";
  }
  return result;
}

std::vector<double> robust_normalize(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("robust_normalize: empty input");
  std::vector<double> tmp(x.begin(), x.end());
  auto median_of = [](std::vector<double>& v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
    double med = v[n / 2];
    if (n % 2 == 0) {
      std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2 - 1), v.end());
      med = 0.5 * (med + v[n / 2 - 1]);
    }
    return med;
  };
  const double med = median_of(tmp);
  std::vector<double> dev(x.size());
  for (size_t i = 0; i < x.size(); ++i) dev[i] = std::abs(x[i] - med);
  const double mad = median_of(dev);
  if (!(mad > 0.0)) throw std::runtime_error("robust_normalize: zero median absolute deviation");
  const double scale = 1.483 * mad;
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - med) / scale;
  return out;
}

double robust_scale(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("robust_scale: empty input");
  std::vector<double> tmp(x.begin(), x.end());
  auto median_of = [](std::vector<double>& v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
    double med = v[n / 2];
    if (n % 2 == 0) {
      std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2 - 1), v.end());
      med = 0.5 * (med + v[n / 2 - 1]);
    }
    return med;
  };
  const double med = median_of(tmp);
  for (auto& v : tmp) v = std::abs(v - med);
  return 1.483 * median_of(tmp);
}

}  // namespace lrao::nnet
