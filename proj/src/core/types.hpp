#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrao {

// A set of equal-length real-valued sample sequences sharing one
// stationary noise source.
using TimeSeriesBatch = std::vector<std::vector<double>>;

using cvec = std::vector<std::complex<double>>;

inline void check_batch(const TimeSeriesBatch& b) {
  if (b.empty()) throw std::invalid_argument("empty batch");
  const size_t n = b.front().size();
  for (const auto& s : b)
    if (s.size() != n) throw std::invalid_argument("batch sequences differ in length");
}

}  // namespace lrao
