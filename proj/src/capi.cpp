#include "lrao/lrao.h"

#include <cmath>
#include <cstring>
#include <string>

#include "core/experiments.hpp"
#include "core/modelio.hpp"
#include "core/stats.hpp"

namespace {

thread_local std::string g_last_error = "ok";

void set_error(const char* what) { g_last_error = what; }

// invalid_argument -> LRAO_EINVAL, everything else -> LRAO_EFAIL
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return LRAO_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return LRAO_EINVAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return LRAO_EFAIL;
  } catch (...) {
    set_error("unknown error");
    return LRAO_EFAIL;
  }
}

}  // namespace

struct lrao_model {
  lrao::modelio::ModelFile file;
};

extern "C" {

const char* lrao_last_error(void) { return g_last_error.c_str(); }

lrao_model* lrao_model_load(const char* path) {
  if (!path) {
    set_error("null path");
    return nullptr;
  }
  lrao_model* m = nullptr;
  guarded([&] { m = new lrao_model{lrao::modelio::load_model(path)}; });
  return m;
}

int lrao_model_save(const lrao_model* model, const char* path) {
  if (!model || !path) {
    set_error("null argument");
    return LRAO_EINVAL;
  }
  return guarded([&] { lrao::modelio::save_model(model->file, path); });
}

void lrao_model_free(lrao_model* model) { delete model; }

size_t lrao_model_context_length(const lrao_model* model) {
  if (!model || !model->file.context) return 0;
  return static_cast<size_t>(model->file.context->mu0.size());
}

int lrao_model_dof(const lrao_model* model) {
  if (!model || !model->file.context) return 0;
  return static_cast<int>(model->file.context->jac.dmu.cols());
}

int lrao_model_forward(const lrao_model* model, const double* x, size_t n, double* y) {
  if (!model || !x || !y || n == 0) {
    set_error("null argument");
    return LRAO_EINVAL;
  }
  return guarded([&] {
    const auto tf =
        lrao::experiments::net_transform(model->file.params, model->file.train_cfg.input_norm);
    const auto out = tf(std::span<const double>(x, n));
    std::memcpy(y, out.data(), n * sizeof(double));
  });
}

int lrao_model_stat(const lrao_model* model, const char* statistic, const double* x, size_t n,
                    double* out_stat) {
  if (!model || !statistic || !x || !out_stat) {
    set_error("null argument");
    return LRAO_EINVAL;
  }
  return guarded([&] {
    if (!model->file.context) throw std::runtime_error("model carries no detector context");
    const auto& ctx = *model->file.context;
    if (n != static_cast<size_t>(ctx.mu0.size()))
      throw std::invalid_argument("sequence length does not match the detector context");
    const auto tf =
        lrao::experiments::net_transform(model->file.params, model->file.train_cfg.input_norm);
    const auto y = tf(std::span<const double>(x, n));
    const std::string kind = statistic;
    if (kind == "lrao")
      *out_stat = lrao::lfi::lrao(ctx, y);
    else if (kind == "llmp")
      *out_stat = lrao::lfi::llmp(ctx, y);
    else
      throw std::invalid_argument("statistic must be lrao or llmp");
  });
}

int lrao_chi2_threshold(int dof, double fpr, double* out_gamma) {
  if (!out_gamma) {
    set_error("null argument");
    return LRAO_EINVAL;
  }
  return guarded([&] { *out_gamma = lrao::lfi::lrao_threshold(dof, fpr); });
}

int lrao_chi2_right_tail(int dof, double noncentrality, double gamma, double* out_p) {
  if (!out_p) {
    set_error("null argument");
    return LRAO_EINVAL;
  }
  return guarded([&] { *out_p = lrao::stats::chi2_right_tail({dof, noncentrality}, gamma); });
}

int lrao_run(const char* command, const char* config_text, const char* out_dir) {
  if (!command || !config_text || !out_dir) {
    set_error("null argument");
    return LRAO_EINVAL;
  }
  return guarded([&] {
    const auto cfg = lrao::harness::Config::parse(config_text);
    lrao::experiments::run_command(command, cfg, out_dir);
  });
}

}  // extern "C"
