#include "ilcl/mining/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ilcl::mining {

Dataset Dataset::make(std::vector<tl::Trace> expert, std::vector<tl::Trace> negatives,
                      double pad_fraction) {
  if (expert.empty()) throw MiningError("dataset needs at least one expert trace");
  const std::size_t dims = expert.front().dims();
  if (dims == 0) throw MiningError("expert traces have no state dimensions");

  std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
  auto scan = [&](const std::vector<tl::Trace>& set, const char* what) {
    for (const auto& tr : set) {
      if (tr.dims() != dims)
        throw MiningError(std::string(what) + " trace has " + std::to_string(tr.dims()) +
                          " dims, expected " + std::to_string(dims));
      for (std::size_t t = 0; t < tr.length(); ++t) {
        for (std::size_t d = 0; d < dims; ++d) {
          lo[d] = std::min(lo[d], tr.at(t, d));
          hi[d] = std::max(hi[d], tr.at(t, d));
        }
      }
    }
  };
  scan(expert, "expert");
  scan(negatives, "negative");

  Dataset out;
  out.bounds.resize(dims);
  out.ranges.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    const double r = hi[d] - lo[d];
    // A constant feature still gets a box wide enough to place a threshold.
    const double pad = pad_fraction * (r > 0 ? r : std::max(1.0, std::abs(lo[d])));
    out.bounds[d] = {lo[d] - pad, hi[d] + pad};
    out.ranges[d] = r;
  }
  out.cuts.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> vals;
    for (const auto* set : {&expert, &negatives})
      for (const auto& tr : *set)
        for (std::size_t t = 0; t < tr.length(); ++t) vals.push_back(tr.at(t, d));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    auto& c = out.cuts[d];
    c.reserve(vals.size() + 1);
    c.push_back(out.bounds[d].lo);
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) c.push_back(0.5 * (vals[i] + vals[i + 1]));
    c.push_back(out.bounds[d].hi);
  }
  out.expert = std::move(expert);
  out.negatives = std::move(negatives);
  return out;
}

}  // namespace ilcl::mining
