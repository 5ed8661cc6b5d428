#include "ilcl/envs/nav_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ilcl/automaton/dfa.hpp"
#include "ilcl/tl/robustness.hpp"
#include "ilcl/util/seed.hpp"

namespace ilcl::envs {

using nlohmann::json;

std::string color_name(Color c) {
  switch (c) {
    case Color::Red:
      return "red";
    case Color::Green:
      return "green";
    case Color::Blue:
      return "blue";
  }
  return "?";
}

namespace {

Color parse_color(const std::string& s) {
  if (s == "red") return Color::Red;
  if (s == "green") return Color::Green;
  if (s == "blue") return Color::Blue;
  throw std::invalid_argument("unknown region color '" + s + "'");
}

template <class T>
T need(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("env spec is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("env spec field '") + key + "': " + e.what());
  }
}

}  // namespace

json EnvSpec::to_json() const {
  json regs = json::array();
  for (const auto& r : regions)
    regs.push_back({{"color", color_name(r.color)}, {"x", r.x}, {"y", r.y}, {"radius", r.radius}});
  return {{"side", side},
          {"horizon", horizon},
          {"start", start},
          {"goal", goal},
          {"start_jitter", start_jitter},
          {"regions", regs},
          {"seed", seed},
          {"split", split == Split::Train ? "train" : "test"}};
}

EnvSpec EnvSpec::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("env spec must be a JSON object");
  static const std::vector<std::string> known{"side", "horizon", "start", "goal", "start_jitter",
                                              "regions", "seed", "split"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::invalid_argument("unknown env spec key '" + k + "'");
  EnvSpec s;
  s.side = need<double>(j, "side");
  s.horizon = need<std::size_t>(j, "horizon");
  s.start = need<std::array<double, 2>>(j, "start");
  s.goal = need<std::array<double, 2>>(j, "goal");
  if (j.contains("start_jitter")) s.start_jitter = need<double>(j, "start_jitter");
  if (j.contains("seed")) s.seed = need<std::uint64_t>(j, "seed");
  if (j.contains("split")) {
    const auto sp = need<std::string>(j, "split");
    if (sp != "train" && sp != "test") throw std::invalid_argument("split must be 'train' or 'test'");
    s.split = sp == "train" ? Split::Train : Split::Test;
  }
  for (const auto& r : need<json>(j, "regions")) {
    Region reg;
    reg.color = parse_color(need<std::string>(r, "color"));
    reg.x = need<double>(r, "x");
    reg.y = need<double>(r, "y");
    reg.radius = need<double>(r, "radius");
    if (!(reg.radius > 0)) throw std::invalid_argument("region radius must be positive");
    s.regions.push_back(reg);
  }
  if (!(s.side > 0)) throw std::invalid_argument("workspace side must be positive");
  if (s.horizon == 0) throw std::invalid_argument("horizon must be positive");
  return s;
}

std::string EnvSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const tl::FeatureTable& nav_features() {
  static const tl::FeatureTable table({"x_agt", "y_agt", "x_goal", "y_goal", "pR_dist", "pR_ang",
                                       "pG_dist", "pG_ang", "pB_dist", "pB_ang"});
  return table;
}

std::array<double, kNavStateDim> nav_state(const EnvSpec& spec, double x, double y) {
  std::array<double, kNavStateDim> s{x, y, spec.goal[0], spec.goal[1]};
  const double diag = spec.side * std::numbers::sqrt2;
  for (int c = 0; c < 3; ++c) {
    double best = std::numeric_limits<double>::infinity();
    double ang = 0.0;
    for (const auto& r : spec.regions) {
      if (static_cast<int>(r.color) != c) continue;
      const double dx = r.x - x, dy = r.y - y;
      const double d = std::hypot(dx, dy) - r.radius;
      if (d < best) {
        best = d;
        ang = std::atan2(dy, dx);
        if (ang <= -std::numbers::pi) ang = std::numbers::pi;
      }
    }
    s[4 + 2 * c] = std::isinf(best) ? diag : std::max(best, 0.0);
    s[5 + 2 * c] = std::isinf(best) ? 0.0 : ang;
  }
  return s;
}

NavEnv::NavEnv(EnvSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.side > 0) || spec_.horizon == 0) throw std::invalid_argument("invalid navigation spec");
  reset_at(spec_.start[0], spec_.start[1]);
}

std::vector<double> NavEnv::observe() const {
  const auto s = nav_state(spec_, pos_[0], pos_[1]);
  return {s.begin(), s.end()};
}

std::vector<double> NavEnv::reset(crl::Rng& rng) {
  double x = spec_.start[0], y = spec_.start[1];
  if (spec_.start_jitter > 0) {
    std::uniform_real_distribution<double> u(-spec_.start_jitter, spec_.start_jitter);
    x += u(rng);
    y += u(rng);
  }
  return reset_at(x, y);
}

std::vector<double> NavEnv::reset_at(double x, double y) {
  pos_ = {std::clamp(x, 0.0, spec_.side), std::clamp(y, 0.0, spec_.side)};
  t_ = 0;
  return observe();
}

double NavEnv::reward_at(double x, double y) const {
  return 1.0 - std::tanh(5.0 * std::hypot(x - spec_.goal[0], y - spec_.goal[1]));
}

crl::StepResult NavEnv::step(std::span<const double> action) {
  if (action.size() != 2) throw std::invalid_argument("navigation actions are 2-D");
  const double b = action_bound();
  for (int i = 0; i < 2; ++i) {
    const double a = std::isfinite(action[i]) ? std::clamp(action[i], -b, b) : 0.0;
    pos_[i] = std::clamp(pos_[i] + a, 0.0, spec_.side);
  }
  ++t_;
  return {observe(), reward_at(pos_[0], pos_[1]), t_ >= spec_.horizon};
}

std::unique_ptr<crl::Env> NavEnv::clone() const { return std::make_unique<NavEnv>(*this); }

const std::map<std::string, GroundTruth>& gt_constraints() {
  static const std::map<std::string, GroundTruth> table = [] {
    std::map<std::string, GroundTruth> m;
    auto add = [&](const std::string& name, const std::string& text, const tl::FeatureTable& ft) {
      m.emplace(name, GroundTruth{text, tl::parse_formula(text, ft), ft});
    };
    add("nav1", "G(pR_dist > 0.2) & (pB_dist > 0.25 U pG_dist < 0.08)", nav_features());
    add("nav2", "F(pR_dist < 0.06 & F(pG_dist < 0.05 & F(pB_dist < 0.04)))", nav_features());
    add("wiping", "f_c < 0.05 U (G(f_c > 1.6) R (Ax_agt > -0.1 & Ax_agt < 0.1))",
        tl::FeatureTable({"Ax_agt", "Ay_agt", "Bx_agt", "By_agt", "f_c"}));
    add("peg",
        "F(theta_peg > 34.88 & (theta_peg < 4.217 R d_jaw_peg < 0.0053) & G(d_hole_peg < 0.0072))",
        tl::FeatureTable({"x_grip",   "y_grip",   "theta_grip", "vx_grip",    "vy_grip",
                          "w_grip",   "x_peg",    "y_peg",      "theta_peg",  "vx_peg",
                          "vy_peg",   "w_peg",    "xd_grip",    "yd_grip",    "thetad_grip",
                          "d_jaw",    "vd_jaw",   "dd_jaw",     "d_hole_peg", "d_jaw_peg",
                          "cos_tilt", "sin_tilt"}));
    return m;
  }();
  return table;
}

std::vector<std::array<double, 2>> greedy_path(const EnvSpec& spec) {
  const double b = 0.05 * spec.side;
  std::array<double, 2> p{std::clamp(spec.start[0], 0.0, spec.side), std::clamp(spec.start[1], 0.0, spec.side)};
  std::vector<std::array<double, 2>> out{p};
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    for (int i = 0; i < 2; ++i) p[i] = std::clamp(p[i] + std::clamp(spec.goal[i] - p[i], -b, b), 0.0, spec.side);
    out.push_back(p);
  }
  return out;
}

std::optional<std::vector<std::array<double, 2>>> plan_satisfying(const EnvSpec& spec, const tl::Formula& f) {
  const automaton::Dfa dfa = automaton::to_dfa(f);
  const double h = 0.025 * spec.side;
  const auto lo_i = static_cast<long>(std::ceil(-spec.start[0] / h - 1e-9));
  const auto hi_i = static_cast<long>(std::floor((spec.side - spec.start[0]) / h + 1e-9));
  const auto lo_j = static_cast<long>(std::ceil(-spec.start[1] / h - 1e-9));
  const auto hi_j = static_cast<long>(std::floor((spec.side - spec.start[1]) / h + 1e-9));
  const std::size_t ni = static_cast<std::size_t>(hi_i - lo_i + 1);
  const std::size_t nj = static_cast<std::size_t>(hi_j - lo_j + 1);
  const std::size_t P = ni * nj, Q = dfa.state_count();
  auto pos_of = [&](std::size_t p) {
    return std::array<double, 2>{spec.start[0] + h * static_cast<double>(lo_i + static_cast<long>(p / nj)),
                                 spec.start[1] + h * static_cast<double>(lo_j + static_cast<long>(p % nj))};
  };
  std::vector<automaton::Valuation> labels(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto xy = pos_of(p);
    const auto s = nav_state(spec, xy[0], xy[1]);
    labels[p] = automaton::label(s, dfa.aps());
  }
  std::vector<bool> dead(Q);
  for (std::size_t q = 0; q < Q; ++q) dead[q] = dfa.residual(q).op() == tl::Op::False;

  const NavEnv env(spec);
  std::vector<double> reward(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto xy = pos_of(p);
    reward[p] = env.reward_at(xy[0], xy[1]);
  }
  constexpr std::uint32_t kUnseen = std::numeric_limits<std::uint32_t>::max();
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::uint32_t>> parent(spec.horizon + 1, std::vector<std::uint32_t>(P * Q, kUnseen));
  std::vector<double> value(P * Q, kNone), next_value(P * Q, kNone);
  const std::size_t p0 = static_cast<std::size_t>(-lo_i) * nj + static_cast<std::size_t>(-lo_j);
  const std::size_t q0 = dfa.next(dfa.initial(), labels[p0]);
  std::vector<std::size_t> frontier;
  if (!dead[q0]) {
    parent[0][p0 * Q + q0] = 0;
    value[p0 * Q + q0] = 0.0;
    frontier.push_back(p0 * Q + q0);
  }
  for (std::size_t t = 1; t <= spec.horizon && !frontier.empty(); ++t) {
    std::vector<std::size_t> next;
    for (std::size_t node : frontier) {
      const std::size_t p = node / Q, q = node % Q;
      const long pi = static_cast<long>(p / nj), pj = static_cast<long>(p % nj);
      for (long di = -2; di <= 2; ++di) {
        for (long dj = -2; dj <= 2; ++dj) {
          const long a = pi + di, b = pj + dj;
          if (a < 0 || b < 0 || a >= static_cast<long>(ni) || b >= static_cast<long>(nj)) continue;
          const std::size_t p2 = static_cast<std::size_t>(a) * nj + static_cast<std::size_t>(b);
          const std::size_t q2 = dfa.next(q, labels[p2]);
          if (dead[q2]) continue;
          const std::size_t n2 = p2 * Q + q2;
          const double v = value[node] + reward[p2];
          if (next_value[n2] == kNone) next.push_back(n2);
          if (v > next_value[n2]) {
            next_value[n2] = v;
            parent[t][n2] = static_cast<std::uint32_t>(node);
          }
        }
      }
    }
    for (std::size_t node : frontier) value[node] = kNone;
    std::swap(value, next_value);
    frontier = std::move(next);
  }
  std::sort(frontier.begin(), frontier.end(), [&](std::size_t a, std::size_t b) {
    return value[a] != value[b] ? value[a] > value[b] : a < b;
  });
  for (std::size_t node : frontier) {
    if (!dfa.accepting(node % Q)) continue;
    std::vector<std::array<double, 2>> path(spec.horizon + 1);
    std::size_t cur = node;
    for (std::size_t t = spec.horizon + 1; t-- > 0;) {
      path[t] = pos_of(cur / Q);
      cur = parent[t][cur];
    }
    return path;
  }
  return std::nullopt;
}

namespace {

// Shifts every concrete threshold so each predicate must hold with `m` to spare.
tl::Formula tighten(const tl::Formula& f, double m) {
  using tl::Formula;
  using tl::Op;
  switch (f.op()) {
    case Op::True:
    case Op::False:
      return f;
    case Op::Ap:
    case Op::NotAp: {
      tl::Ap a = f.ap();
      const double th = std::get<double>(a.threshold);
      const double dir = f.op() == Op::Ap ? 1.0 : -1.0;
      a.threshold = th - dir * a.sign * m;
      return f.op() == Op::Ap ? Formula::ap(a) : Formula::not_ap(a);
    }
    default:
      break;
  }
  if (tl::is_unary(f.op())) return Formula::unary(f.op(), tighten(f.child(), m));
  return Formula::binary(f.op(), tighten(f.lhs(), m), tighten(f.rhs(), m));
}

bool clear_of_regions(const std::vector<Region>& regions, double x, double y, double margin) {
  for (const auto& r : regions)
    if (std::hypot(r.x - x, r.y - y) < r.radius + margin) return false;
  return true;
}

tl::Trace path_trace(const EnvSpec& spec, const std::vector<std::array<double, 2>>& path) {
  std::vector<double> flat;
  for (const auto& p : path) {
    const auto s = nav_state(spec, p[0], p[1]);
    flat.insert(flat.end(), s.begin(), s.end());
  }
  return tl::Trace(kNavStateDim, std::move(flat));
}

// Reward collected after the first position.
double path_reward(const EnvSpec& spec, const std::vector<std::array<double, 2>>& path) {
  const NavEnv env(spec);
  double r = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) r += env.reward_at(path[i][0], path[i][1]);
  return r;
}

}  // namespace

EnvSpec randomize(std::uint64_t seed, Split split, const RandomizeOptions& opt) {
  crl::Rng rng(util::stream_seed(seed, split == Split::Train ? 1 : 2));
  const bool train = split == Split::Train;
  const double side = train ? 1.0 : 1.5;
  for (std::size_t attempt = 0; attempt < opt.max_attempts; ++attempt) {
    EnvSpec s;
    s.side = side;
    s.horizon = train ? 25 : 50;
    s.seed = seed;
    s.split = split;
    s.start_jitter = 0.03 * side;
    std::uniform_real_distribution<double> coord(0.05 * side, 0.95 * side);
    s.start = {coord(rng), coord(rng)};
    s.goal = {coord(rng), coord(rng)};
    if (std::hypot(s.goal[0] - s.start[0], s.goal[1] - s.start[1]) < 0.6 * side) continue;
    std::uniform_real_distribution<double> radius(0.05, train ? 0.10 : 0.12);
    std::uniform_int_distribution<int> count(1, train ? 1 : 2);
    for (Color c : {Color::Red, Color::Green, Color::Blue}) {
      const int n = count(rng);
      for (int k = 0; k < n; ++k) {
        const double r = radius(rng);
        std::uniform_real_distribution<double> centre(r, side - r);
        s.regions.push_back({c, centre(rng), centre(rng), r});
      }
    }
    if (!clear_of_regions(s.regions, s.start[0], s.start[1], s.start_jitter * std::numbers::sqrt2) ||
        !clear_of_regions(s.regions, s.goal[0], s.goal[1], 0.02))
      continue;
    if (opt.feasible_for) {
      if (opt.require_greedy_violation && tl::satisfies(path_trace(s, greedy_path(s)), *opt.feasible_for))
        continue;
      const auto plan = plan_satisfying(s, tighten(*opt.feasible_for, opt.margin));
      if (!plan) continue;
      if (opt.min_reward_ratio > 0 &&
          path_reward(s, *plan) < opt.min_reward_ratio * path_reward(s, greedy_path(s)))
        continue;
    }
    return s;
  }
  throw std::runtime_error("no admissible layout after " + std::to_string(opt.max_attempts) + " attempts");
}

}  // namespace ilcl::envs
