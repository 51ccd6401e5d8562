#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "core/lfi.hpp"
#include "core/nnet.hpp"

namespace lrao::modelio {

// Versioned, human-readable model file: architecture, training
// hyperparameters, weights, and (optionally) the frozen detector
// context. Floats are written with 17 significant digits so a
// save/load round trip is lossless.
struct ModelFile {
  nnet::ConvNetParams params;
  nnet::TrainConfig train_cfg;
  std::optional<lfi::DetectorContext> context;
  double context_f0 = 0.0;
  int context_harmonics = 0;
};

void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

void write_model(const ModelFile& m, std::ostream& os);
ModelFile read_model(std::istream& is);

}  // namespace lrao::modelio
