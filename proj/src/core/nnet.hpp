#pragma once

#include <optional>
#include <string>

#include "core/rng.hpp"
#include "core/sigmodel.hpp"
#include "core/types.hpp"

namespace lrao::nnet {

struct Arch {
  int num_layers = 3;
  int channels = 20;
  int filter = 3;

  int receptive_field() const { return num_layers * (filter - 1) + 1; }
  // interior-shift margin: half the receptive-field radius per side
  size_t default_margin() const { return static_cast<size_t>(num_layers * (filter - 1) / 2); }
};

// Bias-free conv stack with tanh activations; odd by construction.
struct ConvNetParams {
  struct Layer {
    int out_c = 0;
    int in_c = 0;
    int k = 0;
    std::vector<double> w;  // [out][in][k]

    double& at(int o, int i, int kk) { return w[static_cast<size_t>((o * in_c + i) * k + kk)]; }
    double at(int o, int i, int kk) const {
      return w[static_cast<size_t>((o * in_c + i) * k + kk)];
    }
  };
  Arch arch;
  std::vector<Layer> layers;

  size_t weight_count() const;
  std::vector<double> flat() const;
  void set_flat(const std::vector<double>& v);
};

// Uniform +-1/sqrt(fan_in) initialization, seeded.
ConvNetParams init_params(const Arch& arch, Rng& rng);

std::vector<double> forward(const ConvNetParams& p, std::span<const double> x);

struct TrainConfig {
  double step_dtheta = 1e-2;
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int patience = 3;
  int max_epochs = 500;
  // epochs between validation evaluations; patience counts evaluations, and
  // skipped epochs carry the last evaluated cost forward in the trace
  int val_interval = 1;
  uint64_t seed = 0;
  size_t margin = 3;              // interior-shift samples per side
  bool freeze_denominator = false;  // ablation: no gradient through the PSD
  double psd_floor_rel = 1e-8;
  // robust per-sequence normalization folded into the transform; applied
  // after the signal shift so the Jacobian is that of the composite map
  bool input_norm = false;
};

// Negative spectral LFI trace of the transformed batch for the
// observation matrix hm (the training objective).
double cost(const ConvNetParams& p, const TimeSeriesBatch& noise,
            const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg);

// Cost plus its analytic gradient with respect to every weight.
struct CostGrad {
  double value = 0.0;
  std::vector<double> grad;  // flat layout matching ConvNetParams::flat
};
CostGrad cost_grad(const ConvNetParams& p, const TimeSeriesBatch& noise,
                   const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg);

// AdamW with decoupled weight decay.
struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};
AdamWState init_adamw(size_t n);
void adamw_step(std::vector<double>& weights, const std::vector<double>& grads, AdamWState& state,
                double lr, double weight_decay);

struct TrainTrace {
  std::vector<double> train_cost;
  std::vector<double> validation_cost;
  int best_epoch = -1;  // 0-based epoch of the lowest validation cost
  std::string stopped_reason;  // "patience" or "max_epochs"
};

struct TrainResult {
  ConvNetParams params;
  TrainTrace trace;
};

// Full-batch AdamW with patience early stopping; keeps the parameters of
// the best validation epoch. When fixed_epochs is set, runs exactly that
// many epochs (no early stop) and keeps the final parameters.
TrainResult train(const TimeSeriesBatch& noise_train, const TimeSeriesBatch& noise_val,
                  const sigmodel::ObservationMatrix& hm, const TrainConfig& cfg,
                  std::optional<int> fixed_epochs = std::nullopt);

// (x - median) / (1.483 * median(|x - median|)).
std::vector<double> robust_normalize(std::span<const double> x);

// MAD-based scale estimate used by the SNR convention.
double robust_scale(std::span<const double> x);

}  // namespace lrao::nnet
