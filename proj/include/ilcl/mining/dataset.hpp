#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ilcl/tl/robustness.hpp"

namespace ilcl::mining {

class MiningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
  double range() const { return hi - lo; }
};

/// Expert traces (to be accepted) and policy traces (to be rejected), with
/// per-dimension threshold boxes.
struct Dataset {
  std::vector<tl::Trace> expert;
  std::vector<tl::Trace> negatives;
  /// [min - pad*range, max + pad*range] per dimension over every trace.
  std::vector<Bounds> bounds;
  /// Unpadded observed ranges.
  std::vector<double> ranges;
  /// Per dimension, every threshold at which some predicate on that
  /// dimension can change truth value on the data: midpoints between sorted
  /// distinct observed values, plus one point beyond each end.
  std::vector<std::vector<double>> cuts;

  std::size_t dims() const { return bounds.size(); }

  /// Throws MiningError on an empty expert set or mismatched dimensions.
  static Dataset make(std::vector<tl::Trace> expert, std::vector<tl::Trace> negatives,
                      double pad_fraction = 0.1);
};

}  // namespace ilcl::mining
