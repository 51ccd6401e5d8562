#pragma once

#include <string>

#include "core/harness.hpp"
#include "core/lfi.hpp"
#include "core/nnet.hpp"

namespace lrao::experiments {

// Detector context for an arbitrary length-preserving transform: PSD
// from the transformed noise batch, Jacobian from interior-shift central
// differences. With zero_mean set, mu0 is pinned to the zero vector (the
// right choice for odd-symmetric transforms on symmetric noise);
// otherwise it is the batch mean and the PSD is taken of the de-meaned
// outputs.
lfi::DetectorContext build_transform_context(const lfi::Transform& transform,
                                             const TimeSeriesBatch& noise,
                                             const sigmodel::ObservationMatrix& hm, double step,
                                             size_t margin, bool zero_mean = false);

// The net as a raw-data transform: optional robust per-sequence
// normalization, then the forward pass. Normalizing first keeps the map
// odd, so mu0 stays zero.
lfi::Transform net_transform(const nnet::ConvNetParams& params, bool input_norm);

// Context for a trained net; bias-free tanh stacks are exactly odd, so
// mu0 is zero by construction.
lfi::DetectorContext build_net_context(const nnet::ConvNetParams& params,
                                       const TimeSeriesBatch& noise,
                                       const sigmodel::ObservationMatrix& hm, double step,
                                       size_t margin, bool input_norm = false);

// LRao statistic of a raw sequence: transform, then the quadratic form.
double detect_lrao(const nnet::ConvNetParams& params, const lfi::DetectorContext& ctx,
                   std::span<const double> x, bool input_norm = false);

// Noncentrality at which the asymptotic detector reaches target_tpr at
// the given false-positive rate.
double lambda_for_tpr(int l, double fpr, double target_tpr);

// TrainConfig from config keys, with the defaults made explicit so the
// manifest echo is complete.
nnet::TrainConfig train_config_from(harness::Config& cfg, uint64_t seed);

// Dispatches one CLI command. cfg must carry every parameter (missing
// keys take documented defaults and are echoed into the manifest).
// Running again from the emitted manifest reproduces all outputs
// bit-exactly.
void run_command(const std::string& command, const harness::Config& cfg,
                 const std::string& out_dir);

}  // namespace lrao::experiments
