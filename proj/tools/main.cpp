// Command-line front end; all work happens behind the C API.
#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrao/lrao.h"

namespace {

struct KvFlag {
  std::string key;
  std::string value;
  CLI::Option* opt = nullptr;
};

struct Command {
  CLI::App* app = nullptr;
  std::string name;
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;  // raw key=value pairs
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::deque<KvFlag> flags;
};

void add_common(Command& cmd, bool experiment) {
  cmd.app->add_option("--config", cmd.config_path, "configuration file (key = value per line)");
  cmd.app->add_option("--out", cmd.out_dir, "output directory")->capture_default_str();
  cmd.app->add_option("--set", cmd.overrides, "override any config key (key=value, repeatable)");
  cmd.seed_opt = cmd.app->add_option("--seed", cmd.seed, "master seed");
  if (experiment) cmd.seed_opt->required();
}

// a named flag that mirrors one config key
void mirror(Command& cmd, const std::string& flag, const std::string& key,
            const std::string& desc) {
  cmd.flags.push_back({key, "", nullptr});
  cmd.flags.back().opt = cmd.app->add_option(flag, cmd.flags.back().value, desc);
}

std::string build_config_text(const Command& cmd) {
  std::string text;
  if (!cmd.config_path.empty()) {
    std::ifstream is(cmd.config_path);
    if (!is) throw std::runtime_error("cannot open config file: " + cmd.config_path);
    std::stringstream ss;
    ss << is.rdbuf();
    text = ss.str();
    if (!text.empty() && text.back() != '\n') text += '\n';
  }
  // later lines win, so flags and --set override the file
  for (const auto& f : cmd.flags)
    if (f.opt->count() > 0) text += f.key + " = " + f.value + "\n";
  for (const auto& kv : cmd.overrides) {
    if (kv.find('=') == std::string::npos)
      throw std::runtime_error("--set expects key=value, got: " + kv);
    text += kv + "\n";
  }
  if (cmd.seed_opt->count() > 0) text += "seed = " + std::to_string(cmd.seed) + "\n";
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-signal detection with a learned nonlinearity"};
  app.require_subcommand(1);

  std::vector<Command> cmds(7);
  auto setup = [&](size_t i, const char* name, const char* desc, bool experiment) -> Command& {
    cmds[i].name = name;
    cmds[i].app = app.add_subcommand(name, desc);
    add_common(cmds[i], experiment);
    return cmds[i];
  };

  {
    auto& c = setup(0, "simulate-cauchy",
                    "train on simulated heavy-tailed noise, then ROC + statistic histograms",
                    true);
    mirror(c, "--n", "n", "training sequence length");
    mirror(c, "--n-large", "n_large", "long-sequence evaluation length");
    mirror(c, "--trials", "trials", "Monte Carlo trials per hypothesis");
    mirror(c, "--f0", "f0", "normalized fundamental frequency");
    mirror(c, "--harmonics", "harmonics", "number of harmonics");
    mirror(c, "--ar-coeffs", "ar_coeffs", "autoregressive coefficients (comma separated)");
  }
  {
    auto& c = setup(1, "gm-demo",
                    "estimator and statistic sweep on Gaussian-mixture noise", true);
    mirror(c, "--n", "n", "sequence length");
    mirror(c, "--trials", "trials", "Monte Carlo trials per shift");
    mirror(c, "--gm-sigmas", "gm_sigmas", "mixture standard deviations (comma separated)");
    mirror(c, "--gm-weights", "gm_weights", "mixture weights (comma separated)");
  }
  {
    auto& c = setup(2, "train", "train a detector and save the model with its context", true);
    mirror(c, "--n", "n", "sequence length");
    mirror(c, "--f0", "f0", "normalized fundamental frequency");
    mirror(c, "--harmonics", "harmonics", "number of harmonics");
    mirror(c, "--noise-file", "noise_file", "noise-only series (one sample per line)");
  }
  {
    auto& c = setup(3, "detect", "detection statistics for a segmented input series", false);
    mirror(c, "--model", "model", "model file from the train command");
    mirror(c, "--input", "input", "input series (one sample per line)");
    mirror(c, "--statistic", "statistic", "lrao or llmp");
  }
  {
    auto& c = setup(4, "roc", "empirical ROC from labelled series files", false);
    mirror(c, "--model", "model", "model file from the train command");
    mirror(c, "--h0", "h0_file", "noise-only series");
    mirror(c, "--h1", "h1_file", "signal-plus-noise series");
  }
  {
    auto& c = setup(5, "sensor-cv",
                    "nested cross-validation against the reference detectors", true);
    mirror(c, "--n", "n", "sequence length");
    mirror(c, "--input-file", "input_file", "sensor series (surrogate when omitted)");
    mirror(c, "--snr-db", "snr_db", "injected signal-to-noise ratio in dB");
    mirror(c, "--repeats", "repeats", "evaluation repeats per outer fold");
    mirror(c, "--outer-folds", "outer_folds", "outer fold count");
    mirror(c, "--inner-folds", "inner_folds", "inner fold count");
  }
  {
    auto& c = setup(6, "surrogate-gen", "generate a spiky surrogate sensor series", true);
    mirror(c, "--length", "length", "series length in samples");
    mirror(c, "--spike-rate", "spike_rate", "per-sample impulse probability");
    mirror(c, "--spike-scale", "spike_scale", "impulse magnitude scale");
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& c : cmds) {
    if (!c.app->parsed()) continue;
    std::string text;
    try {
      text = build_config_text(c);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
    const int rc = lrao_run(c.name.c_str(), text.c_str(), c.out_dir.c_str());
    if (rc != LRAO_OK) {
      std::fprintf(stderr, "error: %s\n", lrao_last_error());
      return rc;
    }
    return 0;
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return 1;
}
