#pragma once

#include <any>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "core/rng.hpp"
#include "core/stats.hpp"
#include "core/types.hpp"

namespace lrao::harness {

// Ordered key = value configuration; doubles as the manifest echo so an
// experiment can be re-run from its own manifest.
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws when missing
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key, long fallback) const;
  long get_long(const std::string& key) const;
  uint64_t require_seed() const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_long(const std::string& key, long value);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string to_text() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Segmented, equal-length sequences plus provenance.
struct Dataset {
  TimeSeriesBatch sequences;
  std::string provenance;
  std::string preproc;
};

std::vector<double> load_series(const std::string& path);
Dataset segment(const std::vector<double>& series, size_t n);

struct CvPlan {
  int outer_folds = 10;
  int inner_folds = 9;
  int repeats = 20;
  uint64_t seed = 0;
};

// Contiguous-block fold boundaries; sizes differ by at most one.
std::vector<std::pair<size_t, size_t>> fold_ranges(size_t count, int folds);

struct AucRecord {
  int fold = 0;
  int repeat = 0;
  std::string detector;
  double auc = 0.0;
};

struct RocPointRecord {
  int fold = 0;
  int repeat = 0;
  std::string detector;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct ExperimentResult {
  std::vector<AucRecord> aucs;
  std::vector<RocPointRecord> roc_points;
  Config manifest;
};

// 2.5 / 50 / 97.5 percentiles of AUC pooled over folds and repeats.
struct AucSummary {
  std::string detector;
  double p025 = 0.0, median = 0.0, p975 = 0.0;
};
std::vector<AucSummary> summarize_auc(const ExperimentResult& result);

using ModelPtr = std::shared_ptr<void>;

struct NestedCvFns {
  // Inner CV hyperparameter selection: (inner train, inner validation) ->
  // best early-stopping epoch. Null when nothing is tuned.
  std::function<int(const TimeSeriesBatch&, const TimeSeriesBatch&, Rng)> tune;
  // Fits on the combined train+validation data of an outer fold.
  std::function<ModelPtr(const TimeSeriesBatch&, int epochs, Rng)> fit;
  // Evaluates on the test fold; one ROC per detector.
  std::function<std::vector<std::pair<std::string, stats::RocCurve>>(
      const ModelPtr&, const TimeSeriesBatch&, Rng)>
      evaluate;
};

// Outer CV with per-fold inner epoch selection; each repeat refits with a
// fresh seed and evaluates with fresh H1 draws. Streams derive from
// (seed, fold, repeat) so fold/repeat order never changes results.
ExperimentResult nested_cv(const Dataset& ds, const CvPlan& plan, const NestedCvFns& fns);

// CSV + manifest emission: stable column order, LF endings, 17
// significant digits.
void emit(const ExperimentResult& result, const std::string& dir);
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows,
               const std::vector<std::string>& row_prefixes = {});
std::string format_double(double v);

}  // namespace lrao::harness
