#include "test_support.hpp"

namespace ilcl::testing {

namespace {

tl::Formula random_rec(std::mt19937_64& rng, const RandomFormulaOptions& opt, std::size_t depth,
                       int& next_param) {
  std::uniform_int_distribution<int> coin(0, 9);
  const bool leaf = depth == 0 || coin(rng) < 3;
  if (leaf) {
    const int pick = std::uniform_int_distribution<int>(0, 9)(rng);
    if (opt.allow_constants && pick == 0) return tl::Formula::top();
    if (opt.allow_constants && pick == 1) return tl::Formula::bottom();
    tl::Ap a;
    a.dim = std::uniform_int_distribution<std::size_t>(0, opt.dims - 1)(rng);
    a.sign = coin(rng) < 5 ? 1 : -1;
    if (opt.parametric) {
      a.threshold = tl::ParamId{next_param++};
    } else if (opt.grid_thresholds) {
      a.threshold = std::uniform_int_distribution<int>(-2, 2)(rng) * 0.25;
    } else {
      a.threshold = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    return pick == 2 ? tl::Formula::not_ap(a) : tl::Formula::ap(a);
  }
  static constexpr tl::Op kOps[] = {tl::Op::And,    tl::Op::Or,         tl::Op::Next,
                                    tl::Op::Always, tl::Op::Eventually, tl::Op::Until,
                                    tl::Op::Release};
  const tl::Op op = kOps[std::uniform_int_distribution<int>(0, 6)(rng)];
  if (tl::is_unary(op)) return tl::Formula::unary(op, random_rec(rng, opt, depth - 1, next_param));
  auto l = random_rec(rng, opt, depth - 1, next_param);
  auto r = random_rec(rng, opt, depth - 1, next_param);
  return tl::Formula::binary(op, l, r);
}

}  // namespace

tl::Formula random_formula(std::mt19937_64& rng, const RandomFormulaOptions& opt) {
  int next_param = 0;
  return random_rec(rng, opt, opt.max_depth, next_param);
}

tl::Trace random_trace(std::mt19937_64& rng, std::size_t dims, std::size_t max_len) {
  const std::size_t len = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(len * dims);
  for (auto& v : values) v = u(rng);
  return tl::Trace(dims, std::move(values));
}

}  // namespace ilcl::testing
