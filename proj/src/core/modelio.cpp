#include "core/modelio.hpp"

#include <fstream>
#include <sstream>

namespace lrao::modelio {

namespace {

void write_doubles(std::ostream& os, const char* key, std::span<const double> v) {
  os << key << ' ' << v.size();
  char buf[40];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, " %.17g", x);
    os << buf;
  }
  os << '\n';
}

std::vector<double> read_doubles(std::istringstream& line, const std::string& key) {
  size_t n = 0;
  line >> n;
  std::vector<double> v(n);
  for (auto& x : v)
    if (!(line >> x)) throw std::runtime_error("model file: truncated '" + key + "' array");
  return v;
}

}  // namespace

void write_model(const ModelFile& m, std::ostream& os) {
  os << "lrao-model 1\n";
  os << "arch " << m.params.arch.num_layers << ' ' << m.params.arch.channels << ' '
     << m.params.arch.filter << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "train %.17g %.17g %.17g %d %d %llu %zu %d %d\n",
                m.train_cfg.step_dtheta, m.train_cfg.learning_rate, m.train_cfg.weight_decay,
                m.train_cfg.patience, m.train_cfg.max_epochs,
                static_cast<unsigned long long>(m.train_cfg.seed), m.train_cfg.margin,
                m.train_cfg.input_norm ? 1 : 0, m.train_cfg.val_interval);
  os << buf;
  for (size_t li = 0; li < m.params.layers.size(); ++li) {
    const auto& l = m.params.layers[li];
    os << "layer " << li << ' ' << l.out_c << ' ' << l.in_c << ' ' << l.k << '\n';
    write_doubles(os, "weights", l.w);
  }
  if (m.context) {
    const auto& ctx = *m.context;
    std::snprintf(buf, sizeof buf, "context %lld %lld %.17g %d\n",
                  static_cast<long long>(ctx.mu0.size()),
                  static_cast<long long>(ctx.jac.dmu.cols()), m.context_f0, m.context_harmonics);
    os << buf;
    std::snprintf(buf, sizeof buf, "jacobian_meta %.17g %zu\n", ctx.jac.step,
                  ctx.jac.source_count);
    os << buf;
    write_doubles(os, "mu0", std::span<const double>(ctx.mu0.data(),
                                                     static_cast<size_t>(ctx.mu0.size())));
    write_doubles(os, "psd", ctx.spec.psd);
    std::vector<double> dmu(static_cast<size_t>(ctx.jac.dmu.size()));
    Eigen::Map<Eigen::MatrixXd>(dmu.data(), ctx.jac.dmu.rows(), ctx.jac.dmu.cols()) = ctx.jac.dmu;
    write_doubles(os, "dmu", dmu);
  }
  os << "end\n";
}

ModelFile read_model(std::istream& is) {
  ModelFile m;
  std::string line, key;
  bool header_seen = false;
  std::optional<Eigen::VectorXd> mu0;
  std::optional<spectral::SpectralModel> spec;
  std::optional<lfi::JacobianEstimate> jac;
  Eigen::Index ctx_n = 0, ctx_l = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls >> key;
    if (key == "lrao-model") {
      int version = 0;
      ls >> version;
      if (version != 1) throw std::runtime_error("model file: unsupported version");
      header_seen = true;
    } else if (key == "arch") {
      ls >> m.params.arch.num_layers >> m.params.arch.channels >> m.params.arch.filter;
    } else if (key == "train") {
      unsigned long long seed = 0;
      int inorm = 0;
      ls >> m.train_cfg.step_dtheta >> m.train_cfg.learning_rate >> m.train_cfg.weight_decay >>
          m.train_cfg.patience >> m.train_cfg.max_epochs >> seed >> m.train_cfg.margin >> inorm;
      m.train_cfg.seed = seed;
      m.train_cfg.input_norm = inorm != 0;
      int vint = 1;  // absent in older files
      if (ls >> vint) m.train_cfg.val_interval = vint;
    } else if (key == "layer") {
      size_t idx = 0;
      nnet::ConvNetParams::Layer l;
      ls >> idx >> l.out_c >> l.in_c >> l.k;
      if (idx != m.params.layers.size()) throw std::runtime_error("model file: layer order");
      std::getline(is, line);
      std::istringstream ws(line);
      ws >> key;
      if (key != "weights") throw std::runtime_error("model file: missing weights");
      l.w = read_doubles(ws, "weights");
      if (l.w.size() != static_cast<size_t>(l.out_c * l.in_c * l.k))
        throw std::runtime_error("model file: weight count mismatch");
      m.params.layers.push_back(std::move(l));
    } else if (key == "context") {
      ls >> ctx_n >> ctx_l >> m.context_f0 >> m.context_harmonics;
      jac = lfi::JacobianEstimate{};
    } else if (key == "jacobian_meta") {
      if (!jac) throw std::runtime_error("model file: jacobian_meta before context");
      ls >> jac->step >> jac->source_count;
    } else if (key == "mu0") {
      auto v = read_doubles(ls, key);
      mu0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else if (key == "psd") {
      spec = spectral::spectral_model_from_psd(read_doubles(ls, key));
    } else if (key == "dmu") {
      if (!jac) throw std::runtime_error("model file: dmu before context");
      auto v = read_doubles(ls, key);
      if (static_cast<Eigen::Index>(v.size()) != ctx_n * ctx_l)
        throw std::runtime_error("model file: dmu size mismatch");
      jac->dmu = Eigen::Map<const Eigen::MatrixXd>(v.data(), ctx_n, ctx_l);
    } else if (key == "end") {
      break;
    } else {
      throw std::runtime_error("model file: unknown key '" + key + "'");
    }
  }
  if (!header_seen) throw std::runtime_error("model file: missing header");
  if (m.params.layers.empty()) throw std::runtime_error("model file: no layers");
  if (jac) {
    if (!mu0 || !spec || jac->dmu.size() == 0)
      throw std::runtime_error("model file: incomplete context");
    m.context = lfi::make_context(std::move(*jac), std::move(*spec), std::move(*mu0));
  }
  return m;
}

void save_model(const ModelFile& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write model file: " + path);
  write_model(m, os);
  if (!os) throw std::runtime_error("error writing model file: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  return read_model(is);
}

}  // namespace lrao::modelio
