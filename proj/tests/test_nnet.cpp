#include <doctest.h>

#include <cmath>

#include "core/nnet.hpp"
#include "core/rng.hpp"
#include "core/sigmodel.hpp"

using namespace lrao;

namespace {

TimeSeriesBatch gaussian_batch(size_t count, size_t n, uint64_t seed) {
  Rng rng(seed);
  TimeSeriesBatch b(count);
  for (auto& s : b) s = rng.normal_vec(n);
  return b;
}

}  // namespace

TEST_CASE("forward is odd and zero-preserving for any weights") {
  Rng rng(51);
  const auto p = nnet::init_params(nnet::Arch{}, rng);
  for (double v : nnet::forward(p, std::vector<double>(32, 0.0))) CHECK(v == 0.0);

  const auto x = rng.normal_vec(32);
  auto neg = x;
  for (auto& v : neg) v = -v;
  const auto y = nnet::forward(p, x);
  const auto yn = nnet::forward(p, neg);
  for (size_t i = 0; i < 32; ++i) CHECK(yn[i] == -y[i]);

  CHECK_THROWS(nnet::forward(p, std::vector<double>(6, 0.0)));  // below the receptive field
}

TEST_CASE("single identity kernel reduces forward to elementwise tanh") {
  nnet::ConvNetParams p;
  p.arch = {1, 1, 3};
  nnet::ConvNetParams::Layer l;
  l.out_c = l.in_c = 1;
  l.k = 3;
  l.w = {0.0, 1.0, 0.0};
  p.layers.push_back(l);
  Rng rng(52);
  const auto x = rng.normal_vec(16);
  const auto y = nnet::forward(p, x);
  for (size_t i = 0; i < 16; ++i) CHECK(y[i] == doctest::Approx(std::tanh(x[i])).epsilon(1e-15));
}

TEST_CASE("initialization respects the fan-in bound and the seed") {
  Rng r1(53), r2(53);
  const auto a = nnet::init_params(nnet::Arch{}, r1);
  const auto b = nnet::init_params(nnet::Arch{}, r2);
  CHECK(a.flat() == b.flat());
  CHECK(a.layers.size() == 3);
  CHECK(a.layers[0].in_c == 1);
  CHECK(a.layers[2].out_c == 1);
  for (size_t li = 0; li < 3; ++li) {
    const double bound = 1.0 / std::sqrt(double(a.layers[li].in_c * a.layers[li].k));
    for (double w : a.layers[li].w) CHECK(std::abs(w) <= bound);
  }
}

TEST_CASE("near-identity net on white noise approaches the analytic cost") {
  // single small kernel: tanh(c x) ~ c x, and the cost is scale-free
  nnet::ConvNetParams p;
  p.arch = {1, 1, 3};
  nnet::ConvNetParams::Layer l;
  l.out_c = l.in_c = 1;
  l.k = 3;
  l.w = {0.0, 0.01, 0.0};
  p.layers.push_back(l);
  const auto hm = sigmodel::periodic_observation_matrix(128, 0.1, 4);
  const auto noise = gaussian_batch(64, 128, 54);
  nnet::TrainConfig cfg;
  cfg.margin = 1;
  const double c = nnet::cost(p, noise, hm, cfg);
  const double expect = -(hm.h.transpose() * hm.h).trace();  // sigma^2 = 1
  CHECK(c == doctest::Approx(expect).epsilon(0.10));
}

TEST_CASE("degenerate all-zero output raises instead of producing NaN gradients") {
  Rng rng(55);
  auto p = nnet::init_params(nnet::Arch{}, rng);
  for (auto& w : p.layers.back().w) w = 0.0;
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  const auto noise = gaussian_batch(4, 32, 56);
  nnet::TrainConfig cfg;
  CHECK_THROWS(nnet::cost(p, noise, hm, cfg));
  CHECK_THROWS(nnet::cost_grad(p, noise, hm, cfg));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(57);
  const auto p = nnet::init_params(nnet::Arch{}, rng);
  const auto hm = sigmodel::periodic_observation_matrix(128, 0.02, 4);
  const auto noise = gaussian_batch(16, 128, 58);
  nnet::TrainConfig cfg;
  const auto cg = nnet::cost_grad(p, noise, hm, cfg);
  const auto flat = p.flat();
  Rng pick(59);
  double max_rel = 0.0;
  for (int i = 0; i < 20; ++i) {
    const size_t w = static_cast<size_t>(pick.uniform() * double(flat.size()));
    const double h = 1e-6;
    auto fp = flat, fm = flat;
    fp[w] += h;
    fm[w] -= h;
    auto pp = p, pm = p;
    pp.set_flat(fp);
    pm.set_flat(fm);
    const double fd = (nnet::cost(pp, noise, hm, cfg) - nnet::cost(pm, noise, hm, cfg)) / (2.0 * h);
    max_rel = std::max(max_rel, std::abs(fd - cg.grad[w]) / std::max(1e-12, std::abs(fd)));
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("the cost is invariant under scaling all the input sequences") {
  // both the jacobian and the psd pick up the same scale through the
  // near-linear regime is not needed: tanh is nonlinear, but scaling the
  // *final layer* output would cancel exactly. Emulate by scaling the last
  // kernel of a purely linear single-layer net, where tanh is bypassed by
  // keeping the operating point tiny.
  nnet::ConvNetParams p;
  p.arch = {1, 1, 3};
  nnet::ConvNetParams::Layer l;
  l.out_c = l.in_c = 1;
  l.k = 3;
  l.w = {0.0, 1e-4, 0.0};
  p.layers.push_back(l);
  auto p2 = p;
  p2.layers[0].w[1] = 3e-4;
  const auto hm = sigmodel::periodic_observation_matrix(64, 0.05, 2);
  const auto noise = gaussian_batch(8, 64, 61);
  nnet::TrainConfig cfg;
  cfg.margin = 1;
  const double a = nnet::cost(p, noise, hm, cfg);
  const double b = nnet::cost(p2, noise, hm, cfg);
  CHECK(a == doctest::Approx(b).epsilon(1e-4));
}

TEST_CASE("adamw handles decay and zero gradients per the decoupled rule") {
  std::vector<double> w{1.0, -2.0};
  auto st = nnet::init_adamw(2);
  nnet::adamw_step(w, {0.0, 0.0}, st, 0.1, 0.0);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(-2.0));

  w = {1.0, -2.0};
  st = nnet::init_adamw(2);
  nnet::adamw_step(w, {0.0, 0.0}, st, 0.1, 0.5);
  CHECK(w[0] == doctest::Approx(1.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(-2.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-12));
}

TEST_CASE("adamw minimizes a scalar quadratic") {
  double w = 5.0;
  std::vector<double> wv{w};
  auto st = nnet::init_adamw(1);
  for (int i = 0; i < 5000; ++i) {
    const std::vector<double> g{2.0 * (wv[0] - 3.0)};
    nnet::adamw_step(wv, g, st, 1e-2, 0.0);
    if (std::abs(wv[0] - 3.0) < 1e-4) break;
  }
  CHECK(std::abs(wv[0] - 3.0) <= 1e-4);
}

TEST_CASE("training is deterministic given the seed") {
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  const auto train = gaussian_batch(6, 32, 62);
  const auto val = gaussian_batch(3, 32, 63);
  nnet::TrainConfig cfg;
  cfg.seed = 99;
  cfg.max_epochs = 5;
  cfg.patience = 100;
  const auto a = nnet::train(train, val, hm, cfg);
  const auto b = nnet::train(train, val, hm, cfg);
  CHECK(a.params.flat() == b.params.flat());
  CHECK(a.trace.train_cost == b.trace.train_cost);
  CHECK(a.trace.validation_cost == b.trace.validation_cost);
  CHECK(a.trace.best_epoch == b.trace.best_epoch);
}

TEST_CASE("overfitting a tiny batch triggers the patience stop") {
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  // 8 heavy-tailed sequences invite overfitting; a hot learning rate
  // makes the validation wiggle appear within the epoch budget
  Rng rng(64);
  TimeSeriesBatch train(8), val(8);
  for (auto& s : train) s = rng.cauchy_vec(32);
  for (auto& s : val) s = rng.cauchy_vec(32);
  nnet::TrainConfig cfg;
  cfg.seed = 7;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 400;
  cfg.input_norm = true;
  const auto res = nnet::train(train, val, hm, cfg);
  CHECK(res.trace.stopped_reason == "patience");
  CHECK(res.trace.best_epoch >= 0);
  CHECK(res.trace.best_epoch + 1 <= static_cast<int>(res.trace.train_cost.size()));
  // stored parameters are the best-validation ones
  const double best_val = res.trace.validation_cost[static_cast<size_t>(res.trace.best_epoch)];
  for (double v : res.trace.validation_cost) CHECK(best_val <= v + 1e-12);
}

TEST_CASE("sparse validation carries the last check forward and gates patience") {
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  const auto train = gaussian_batch(6, 32, 62);
  const auto val = gaussian_batch(3, 32, 63);
  nnet::TrainConfig cfg;
  cfg.seed = 99;
  cfg.max_epochs = 9;
  cfg.patience = 100;
  cfg.val_interval = 4;
  const auto res = nnet::train(train, val, hm, cfg);
  REQUIRE(res.trace.validation_cost.size() == 9);
  // checks land on epochs 0, 4, 8; the in-between entries repeat them
  for (size_t e = 0; e < 9; ++e)
    CHECK(res.trace.validation_cost[e] == res.trace.validation_cost[e - e % 4]);
  CHECK(res.trace.best_epoch % 4 == 0);

  // per-epoch run over the same data agrees wherever a check happened
  nnet::TrainConfig dense = cfg;
  dense.val_interval = 1;
  const auto ref = nnet::train(train, val, hm, dense);
  for (size_t e = 0; e < 9; e += 4)
    CHECK(res.trace.validation_cost[e] == doctest::Approx(ref.trace.validation_cost[e]));
}

TEST_CASE("fixed-epoch training keeps the final parameters") {
  const auto hm = sigmodel::periodic_observation_matrix(32, 0.1, 2);
  const auto train = gaussian_batch(4, 32, 65);
  nnet::TrainConfig cfg;
  cfg.seed = 11;
  const auto res = nnet::train(train, train, hm, cfg, 3);
  CHECK(res.trace.train_cost.size() == 3);
  CHECK(res.trace.stopped_reason == "fixed");
}

TEST_CASE("robust_normalize matches the closed form and its invariances") {
  const auto out = nnet::robust_normalize(std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});
  const double expect[5] = {-1.3486, -0.6743, 0.0, 0.6743, 1.3486};
  for (size_t i = 0; i < 5; ++i) CHECK(std::abs(out[i] - expect[i]) <= 1e-4);

  Rng rng(66);
  const auto g = rng.normal_vec(1000000);
  const auto gn = nnet::robust_normalize(g);
  double m = 0.0, v = 0.0;
  for (double x : gn) m += x;
  m /= double(gn.size());
  for (double x : gn) v += (x - m) * (x - m);
  v /= double(gn.size());
  CHECK(std::sqrt(v) == doctest::Approx(1.0).epsilon(0.01));

  std::vector<double> base{0.3, -1.2, 4.0, 2.2, -0.7, 1.1};
  auto scaled = base;
  for (auto& x : scaled) x = 10.0 * x + 7.0;
  const auto n1 = nnet::robust_normalize(base);
  const auto n2 = nnet::robust_normalize(scaled);
  for (size_t i = 0; i < base.size(); ++i) CHECK(n1[i] == doctest::Approx(n2[i]).epsilon(1e-12));

  CHECK_THROWS(nnet::robust_normalize(std::vector<double>(5, 3.0)));
}
