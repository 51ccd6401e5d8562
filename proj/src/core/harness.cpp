#include "core/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lrao::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& kv) { return kv.first == key; });
}

std::string Config::get(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->first == key) return it->second;
  throw std::runtime_error("missing config key: " + key);
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get(key);
  size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::runtime_error("config key " + key + ": bad number '" + v + "'");
  return d;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_long(const std::string& key) const {
  const std::string v = get(key);
  size_t pos = 0;
  const long d = std::stol(v, &pos);
  if (pos != v.size()) throw std::runtime_error("config key " + key + ": bad integer '" + v + "'");
  return d;
}

long Config::get_long(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

uint64_t Config::require_seed() const {
  if (!has("seed")) throw std::runtime_error("missing config key: seed (mandatory)");
  return static_cast<uint64_t>(std::stoull(get("seed")));
}

void Config::set(const std::string& key, const std::string& value) {
  for (auto& kv : entries_) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Config::set_double(const std::string& key, double value) { set(key, format_double(value)); }

void Config::set_long(const std::string& key, long value) { set(key, std::to_string(value)); }

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::vector<double> load_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open series file: " + path);
  std::vector<double> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != t.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed sample '" + t +
                               "'");
    out.push_back(v);
  }
  return out;
}

Dataset segment(const std::vector<double>& series, size_t n) {
  if (n < 1) throw std::invalid_argument("segment: n must be >= 1");
  if (series.size() < n)
    throw std::runtime_error("segment: series shorter than one sequence (" +
                             std::to_string(series.size()) + " < " + std::to_string(n) + ")");
  Dataset ds;
  const size_t count = series.size() / n;  // trailing remainder discarded
  ds.sequences.reserve(count);
  for (size_t i = 0; i < count; ++i)
    ds.sequences.emplace_back(series.begin() + static_cast<long>(i * n),
                              series.begin() + static_cast<long>((i + 1) * n));
  return ds;
}

std::vector<std::pair<size_t, size_t>> fold_ranges(size_t count, int folds) {
  if (folds < 1 || count < static_cast<size_t>(folds))
    throw std::invalid_argument("fold_ranges: dataset smaller than fold count");
  std::vector<std::pair<size_t, size_t>> out;
  size_t start = 0;
  for (int f = 0; f < folds; ++f) {
    const size_t end = count * static_cast<size_t>(f + 1) / static_cast<size_t>(folds);
    out.emplace_back(start, end);
    start = end;
  }
  return out;
}

std::vector<AucSummary> summarize_auc(const ExperimentResult& result) {
  std::map<std::string, std::vector<double>> per_det;
  for (const auto& r : result.aucs) per_det[r.detector].push_back(r.auc);
  std::vector<AucSummary> out;
  for (auto& [name, vals] : per_det) {
    std::sort(vals.begin(), vals.end());
    auto pct = [&](double p) {
      const double idx = p * static_cast<double>(vals.size() - 1);
      const size_t lo = static_cast<size_t>(idx);
      const size_t hi = std::min(lo + 1, vals.size() - 1);
      const double w = idx - static_cast<double>(lo);
      return (1.0 - w) * vals[lo] + w * vals[hi];
    };
    out.push_back({name, pct(0.025), pct(0.5), pct(0.975)});
  }
  return out;
}

ExperimentResult nested_cv(const Dataset& ds, const CvPlan& plan, const NestedCvFns& fns) {
  check_batch(ds.sequences);
  if (plan.repeats < 1) throw std::invalid_argument("nested_cv: repeats must be >= 1");
  const auto outer = fold_ranges(ds.sequences.size(), plan.outer_folds);
  ExperimentResult result;
  for (int fold = 0; fold < plan.outer_folds; ++fold) {
    const auto [t0, t1] = outer[static_cast<size_t>(fold)];
    TimeSeriesBatch rest;
    TimeSeriesBatch test;
    for (size_t i = 0; i < ds.sequences.size(); ++i) {
      if (i >= t0 && i < t1)
        test.push_back(ds.sequences[i]);
      else
        rest.push_back(ds.sequences[i]);
    }

    int epochs = 0;
    if (fns.tune) {
      // inner CV over the non-test data selects the epoch count
      const auto inner = fold_ranges(rest.size(), plan.inner_folds);
      long total = 0;
      for (int inf = 0; inf < plan.inner_folds; ++inf) {
        const auto [v0, v1] = inner[static_cast<size_t>(inf)];
        TimeSeriesBatch itrain, ival;
        for (size_t i = 0; i < rest.size(); ++i) {
          if (i >= v0 && i < v1)
            ival.push_back(rest[i]);
          else
            itrain.push_back(rest[i]);
        }
        Rng rng(mix_seed(plan.seed, 1000 + static_cast<uint64_t>(fold),
                         static_cast<uint64_t>(inf)));
        total += fns.tune(itrain, ival, rng);
      }
      epochs = std::max(1, static_cast<int>(std::lround(
                               static_cast<double>(total) / plan.inner_folds)));
    }

    for (int repeat = 0; repeat < plan.repeats; ++repeat) {
      Rng fit_rng(mix_seed(plan.seed, 2000 + static_cast<uint64_t>(fold),
                           static_cast<uint64_t>(repeat)));
      const ModelPtr model = fns.fit(rest, epochs, fit_rng);
      Rng eval_rng(mix_seed(plan.seed, 3000 + static_cast<uint64_t>(fold),
                            static_cast<uint64_t>(repeat)));
      const auto rocs = fns.evaluate(model, test, eval_rng);
      for (const auto& [name, curve] : rocs) {
        result.aucs.push_back({fold, repeat, name, curve.auc});
        for (const auto& [fpr, tpr] : curve.points)
          result.roc_points.push_back({fold, repeat, name, fpr, tpr});
      }
    }
  }
  return result;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows,
               const std::vector<std::string>& row_prefixes) {
  std::ofstream os(path, std::ios::binary);  // binary keeps LF endings
  if (!os) throw std::runtime_error("cannot write: " + path);
  os << header << '\n';
  for (size_t r = 0; r < rows.size(); ++r) {
    bool first = true;
    if (!row_prefixes.empty()) {
      os << row_prefixes[r];
      first = row_prefixes[r].empty();
    }
    for (double v : rows[r]) {
      if (!first) os << ',';
      os << format_double(v);
      first = false;
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("error writing: " + path);
}

void emit(const ExperimentResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> prefixes;
    for (const auto& r : result.roc_points) {
      prefixes.push_back(std::to_string(r.fold) + "," + std::to_string(r.repeat) + "," +
                         r.detector);
      rows.push_back({r.fpr, r.tpr});
    }
    write_csv(dir + "/roc.csv", "fold,repeat,detector,fpr,tpr", rows, prefixes);
  }
  {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> prefixes;
    for (const auto& r : result.aucs) {
      prefixes.push_back(std::to_string(r.fold) + "," + std::to_string(r.repeat) + "," +
                         r.detector);
      rows.push_back({r.auc});
    }
    write_csv(dir + "/summary.csv", "fold,repeat,detector,auc", rows, prefixes);
  }
  {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> prefixes;
    for (const auto& s : summarize_auc(result)) {
      prefixes.push_back(s.detector);
      rows.push_back({s.p025, s.median, s.p975});
    }
    write_csv(dir + "/auc_percentiles.csv", "detector,p2.5,median,p97.5", rows, prefixes);
  }
  {
    std::ofstream os(dir + "/manifest.txt", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write manifest in " + dir);
    os << result.manifest.to_text();
  }
}

}  // namespace lrao::harness
