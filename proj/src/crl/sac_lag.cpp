#include "ilcl/crl/sac_lag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <thread>

#include "ilcl/crl/replay_buffer.hpp"
#include "ilcl/tl/parse.hpp"
#include "ilcl/util/json_config.hpp"
#include "ilcl/util/seed.hpp"

namespace ilcl::crl {

using nlohmann::json;

namespace {

constexpr float kLogStdMin = -5.0f;
constexpr float kLogStdMax = 1.0f;
constexpr float kSquashEps = 1e-6f;
constexpr char kMagic[8] = {'I', 'L', 'C', 'L', 'P', 'O', 'L', '1'};

float log_std_of(float raw) {
  return kLogStdMin + 0.5f * (kLogStdMax - kLogStdMin) * (std::tanh(raw) + 1.0f);
}

std::vector<std::size_t> layer_sizes(std::size_t in, std::size_t out, const CrlConfig& cfg) {
  std::vector<std::size_t> s{in};
  for (std::size_t i = 0; i < cfg.hidden_layers; ++i) s.push_back(cfg.hidden);
  s.push_back(out);
  return s;
}

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void CrlConfig::validate() const {
  cost.validate();
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must lie in (0, 1]");
  if (!(polyak > 0.0 && polyak <= 1.0)) throw std::invalid_argument("polyak must lie in (0, 1]");
  if (hidden == 0 || hidden_layers == 0) throw std::invalid_argument("networks need hidden units");
  for (double lr : {actor_lr, critic_lr, temperature_lr, lambda_lr})
    if (!(lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (!(initial_lambda >= 0.0)) throw std::invalid_argument("initial lambda must be non-negative");
  if (!(initial_temperature > 0.0)) throw std::invalid_argument("initial temperature must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (buffer_capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
}

json to_json(const CrlConfig& c) {
  return {{"alpha", c.cost.alpha},
          {"upsilon", c.cost.upsilon},
          {"epsilon", c.cost.epsilon},
          {"n_xi", c.cost.n_xi},
          {"discount", c.discount},
          {"polyak", c.polyak},
          {"hidden", c.hidden},
          {"hidden_layers", c.hidden_layers},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"temperature_lr", c.temperature_lr},
          {"lambda_lr", c.lambda_lr},
          {"initial_lambda", c.initial_lambda},
          {"initial_temperature", c.initial_temperature},
          {"batch_size", c.batch_size},
          {"total_steps", c.total_steps},
          {"random_steps", c.random_steps},
          {"update_after", c.update_after},
          {"updates_per_step", c.updates_per_step},
          {"buffer_capacity", c.buffer_capacity},
          {"seed", c.seed}};
}

CrlConfig crl_config_from_json(const json& j, CrlConfig c) {
  util::reject_unknown_keys(j, to_json(c), "crl");
  util::read_key(j, "alpha", c.cost.alpha);
  util::read_key(j, "upsilon", c.cost.upsilon);
  util::read_key(j, "epsilon", c.cost.epsilon);
  util::read_key(j, "n_xi", c.cost.n_xi);
  util::read_key(j, "discount", c.discount);
  util::read_key(j, "polyak", c.polyak);
  util::read_key(j, "hidden", c.hidden);
  util::read_key(j, "hidden_layers", c.hidden_layers);
  util::read_key(j, "actor_lr", c.actor_lr);
  util::read_key(j, "critic_lr", c.critic_lr);
  util::read_key(j, "temperature_lr", c.temperature_lr);
  util::read_key(j, "lambda_lr", c.lambda_lr);
  util::read_key(j, "initial_lambda", c.initial_lambda);
  util::read_key(j, "initial_temperature", c.initial_temperature);
  util::read_key(j, "batch_size", c.batch_size);
  util::read_key(j, "total_steps", c.total_steps);
  util::read_key(j, "random_steps", c.random_steps);
  util::read_key(j, "update_after", c.update_after);
  util::read_key(j, "updates_per_step", c.updates_per_step);
  util::read_key(j, "buffer_capacity", c.buffer_capacity);
  util::read_key(j, "seed", c.seed);
  c.validate();
  return c;
}

LagrangianPolicy::LagrangianPolicy(std::size_t state_dim, std::size_t action_dim, double action_bound,
                                   std::size_t horizon, const tl::Formula& constraint, const CrlConfig& cfg)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      action_bound_(action_bound),
      horizon_(horizon),
      dfa_(automaton::to_dfa(constraint)),
      cfg_(cfg) {
  cfg_.validate();
  if (state_dim == 0 || action_dim == 0 || horizon == 0) throw std::invalid_argument("empty policy shape");
  if (!(action_bound > 0)) throw std::invalid_argument("action bound must be positive");
  for (std::size_t d : tl::referenced_dims(constraint))
    if (d >= state_dim)
      throw std::invalid_argument("constraint reads dimension " + std::to_string(d) + " of a " +
                                  std::to_string(state_dim) + "-D state");
  Rng rng(util::stream_seed(cfg.seed, 0x5ac));
  const std::size_t obs = obs_dim();
  actor_ = Mlp(layer_sizes(obs, 2 * action_dim, cfg_), rng);
  for (int k = 0; k < 2; ++k) {
    reward_q_[k] = Mlp(layer_sizes(obs + action_dim, 1, cfg_), rng);
    reward_target_[k] = reward_q_[k];
    cost_q_[k] = Mlp(layer_sizes(obs + action_dim, 1, cfg_), rng);
    cost_target_[k] = cost_q_[k];
  }
  log_temperature_ = std::log(cfg_.initial_temperature);
  lambda_ = cfg_.initial_lambda;
}

double LagrangianPolicy::temperature() const { return std::exp(log_temperature_); }

void LagrangianPolicy::observe(std::span<const double> state, std::size_t q, std::size_t t, float* out) const {
  for (std::size_t i = 0; i < state_dim_; ++i) out[i] = static_cast<float>(state[i]);
  const std::size_t nq = dfa_.state_count();
  for (std::size_t i = 0; i < nq; ++i) out[state_dim_ + i] = i == q ? 1.0f : 0.0f;
  out[state_dim_ + nq] = static_cast<float>(t) / static_cast<float>(horizon_);
}

std::vector<double> LagrangianPolicy::act(std::span<const double> state, std::size_t q, std::size_t t, Rng& rng,
                                          bool deterministic) const {
  Matrix obs(obs_dim(), 1);
  observe(state, q, t, obs.data());
  const Matrix out = actor_.predict(obs);
  std::vector<double> a(action_dim_);
  std::normal_distribution<float> normal;
  for (std::size_t i = 0; i < action_dim_; ++i) {
    float u = out(static_cast<Eigen::Index>(i), 0);
    if (!deterministic) u += std::exp(log_std_of(out(static_cast<Eigen::Index>(action_dim_ + i), 0))) * normal(rng);
    a[i] = action_bound_ * std::tanh(static_cast<double>(u));
  }
  return a;
}

namespace {

void write_floats(std::ofstream& out, const Mlp::Buffer& v) {
  const std::uint64_t n = v.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
}

void read_floats(std::ifstream& in, Mlp::Buffer& v, const std::string& what) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n != v.size())
    throw std::runtime_error("checkpoint array '" + what + "' has " + std::to_string(n) + " values, expected " +
                             std::to_string(v.size()));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw std::runtime_error("checkpoint truncated in '" + what + "'");
}

}  // namespace

void LagrangianPolicy::save(const std::string& path) const {
  const std::vector<std::pair<std::string, const Mlp*>> nets{
      {"actor", &actor_},           {"reward_q0", &reward_q_[0]},      {"reward_q1", &reward_q_[1]},
      {"reward_target0", &reward_target_[0]}, {"reward_target1", &reward_target_[1]},
      {"cost_q0", &cost_q_[0]},     {"cost_q1", &cost_q_[1]},          {"cost_target0", &cost_target_[0]},
      {"cost_target1", &cost_target_[1]}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  json shapes = json::array();
  for (const auto& [name, net] : nets) {
    write_floats(out, net->params());
    shapes.push_back({{"name", name}, {"sizes", net->sizes()}});
  }
  out.write(reinterpret_cast<const char*>(&log_temperature_), sizeof log_temperature_);
  out.write(reinterpret_cast<const char*>(&lambda_), sizeof lambda_);
  if (!out) throw std::runtime_error("failed writing " + path);

  const json cfg = to_json(cfg_);
  const json side{{"format", "ilcl-policy-v1"},
                  {"state_dim", state_dim_},
                  {"action_dim", action_dim_},
                  {"action_bound", action_bound_},
                  {"horizon", horizon_},
                  {"constraint", tl::format_formula(dfa_.formula())},
                  {"dfa_states", dfa_.state_count()},
                  {"networks", shapes},
                  {"float", "float32 little-endian, each array prefixed by a uint64 count"},
                  {"log_temperature", log_temperature_},
                  {"lambda", lambda_},
                  {"seed", cfg_.seed},
                  {"config", cfg},
                  {"config_hash", fnv_hex(cfg.dump())}};
  std::ofstream js(path + ".json");
  if (!js) throw std::runtime_error("cannot write " + path + ".json");
  js << side.dump(2) << '\n';
}

LagrangianPolicy LagrangianPolicy::load(const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) throw std::runtime_error("cannot read " + path + ".json");
  json side;
  try {
    side = json::parse(js);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ".json: " + e.what());
  }
  if (side.value("format", "") != "ilcl-policy-v1") throw std::runtime_error(path + ": unknown checkpoint format");
  const auto state_dim = side.at("state_dim").get<std::size_t>();
  const tl::Formula constraint =
      tl::parse_formula(side.at("constraint").get<std::string>(), tl::FeatureTable::anonymous(state_dim));
  LagrangianPolicy p(state_dim, side.at("action_dim").get<std::size_t>(), side.at("action_bound").get<double>(),
                     side.at("horizon").get<std::size_t>(), constraint, crl_config_from_json(side.at("config")));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error(path + ": bad checkpoint header");
  const std::vector<std::pair<std::string, Mlp*>> nets{
      {"actor", &p.actor_},           {"reward_q0", &p.reward_q_[0]},      {"reward_q1", &p.reward_q_[1]},
      {"reward_target0", &p.reward_target_[0]}, {"reward_target1", &p.reward_target_[1]},
      {"cost_q0", &p.cost_q_[0]},     {"cost_q1", &p.cost_q_[1]},          {"cost_target0", &p.cost_target_[0]},
      {"cost_target1", &p.cost_target_[1]}};
  for (const auto& [name, net] : nets) read_floats(in, net->params(), name);
  in.read(reinterpret_cast<char*>(&p.log_temperature_), sizeof p.log_temperature_);
  in.read(reinterpret_cast<char*>(&p.lambda_), sizeof p.lambda_);
  if (!in) throw std::runtime_error(path + ": checkpoint truncated");
  return p;
}

class Learner {
 public:
  Learner(LagrangianPolicy& p, const ReplayBuffer& buffer, Rng& rng)
      : p_(p), buffer_(buffer), rng_(rng) {
    const auto& c = p.cfg_;
    actor_opt_ = Adam(p.actor_.params().size(), c.actor_lr);
    for (int k = 0; k < 2; ++k) {
      reward_opt_[k] = Adam(p.reward_q_[k].params().size(), c.critic_lr);
      cost_opt_[k] = Adam(p.cost_q_[k].params().size(), c.critic_lr);
    }
    temp_opt_ = Adam(1, c.temperature_lr);
    target_entropy_ = -static_cast<double>(p.action_dim_);
  }

  /// Mean cost of the latest N_ξ finished episodes, the signal λ ascends on.
  void record_episode_cost(double cost) {
    recent_.push_back(cost);
    if (recent_.size() > p_.cfg_.cost.n_xi) recent_.erase(recent_.begin());
    recent_cost_ = 0.0;
    for (double v : recent_) recent_cost_ += v;
    recent_cost_ /= static_cast<double>(recent_.size());
  }

  void update() {
    const auto& c = p_.cfg_;
    const std::size_t B = c.batch_size;
    const auto Bi = static_cast<Eigen::Index>(B);
    const std::size_t od = p_.obs_dim(), ad = p_.action_dim_;
    const auto odi = static_cast<Eigen::Index>(od), adi = static_cast<Eigen::Index>(ad);
    Matrix X(odi + adi, Bi), X2(odi + adi, Bi);
    Eigen::RowVectorXf r(Bi), cost(Bi), notdone(Bi);
    for (std::size_t j = 0; j < B; ++j) {
      const auto ref = buffer_.sample(rng_);
      const Trajectory& tr = buffer_.trajectory(ref.traj);
      const auto jj = static_cast<Eigen::Index>(j);
      p_.observe(tr.state(ref.t), tr.dfa_states[ref.t], ref.t, X.col(jj).data());
      p_.observe(tr.state(ref.t + 1), tr.dfa_states[ref.t + 1], ref.t + 1, X2.col(jj).data());
      const auto a = tr.action(ref.t);
      for (std::size_t i = 0; i < ad; ++i)
        X(odi + static_cast<Eigen::Index>(i), jj) = static_cast<float>(a[i] / p_.action_bound_);
      r(jj) = static_cast<float>(tr.rewards[ref.t]);
      cost(jj) = static_cast<float>(buffer_.redistribute(ref));
      notdone(jj) = ref.t + 1 >= tr.steps() ? 0.0f : 1.0f;
    }
    const float alpha = static_cast<float>(p_.temperature());
    const float gamma = static_cast<float>(c.discount);

    // Targets.
    Matrix eps2 = sample_noise(ad, B);
    const Matrix out2 = p_.actor_.predict(X2.topRows(odi));
    Eigen::RowVectorXf logp2(Bi);
    Matrix y2 = squash(out2, eps2, logp2, nullptr, nullptr);
    X2.bottomRows(adi) = y2;
    const Eigen::RowVectorXf qr_next = p_.reward_target_[0].predict(X2).cwiseMin(p_.reward_target_[1].predict(X2));
    const Eigen::RowVectorXf qc_next = p_.cost_target_[0].predict(X2).cwiseMax(p_.cost_target_[1].predict(X2));
    const Eigen::RowVectorXf y_r = r + gamma * notdone.cwiseProduct(qr_next - alpha * logp2);
    const Eigen::RowVectorXf y_c = cost + gamma * notdone.cwiseProduct(qc_next);

    for (int k = 0; k < 2; ++k) {
      fit_critic(p_.reward_q_[k], reward_opt_[k], X, y_r);
      fit_critic(p_.cost_q_[k], cost_opt_[k], X, y_c);
    }

    // Actor.
    const Matrix obs = X.topRows(odi);
    const Matrix out = p_.actor_.forward(obs);
    const Matrix eps = sample_noise(ad, B);
    Eigen::RowVectorXf logp(Bi);
    Matrix sigma, raw_std;
    const Matrix y = squash(out, eps, logp, &sigma, &raw_std);
    Matrix Xa(odi + adi, Bi);
    Xa.topRows(odi) = obs;
    Xa.bottomRows(adi) = y;
    Matrix qgrad[4];
    Eigen::RowVectorXf qv[4];
    Mlp* critics[4] = {&p_.reward_q_[0], &p_.reward_q_[1], &p_.cost_q_[0], &p_.cost_q_[1]};
    for (int k = 0; k < 4; ++k) {
      qv[k] = critics[k]->forward(Xa);
      qgrad[k] = critics[k]->backward(Matrix::Ones(1, Bi)).bottomRows(adi);
      critics[k]->zero_grad();
    }
    const float lam = static_cast<float>(p_.lambda_);
    Matrix dq(adi, Bi);
    double actor_loss = 0.0;
    for (Eigen::Index j = 0; j < Bi; ++j) {
      const int ri = qv[0](j) <= qv[1](j) ? 0 : 1;
      const int ci = qv[2](j) >= qv[3](j) ? 2 : 3;
      dq.col(j) = qgrad[ri].col(j) - lam * qgrad[ci].col(j);
      actor_loss += alpha * logp(j) - (qv[ri](j) - lam * qv[ci](j));
    }
    actor_loss /= static_cast<double>(B);
    if (!std::isfinite(actor_loss)) throw DivergenceError("actor loss is not finite");
    Matrix dout(2 * adi, Bi);
    const float inv_b = 1.0f / static_cast<float>(B);
    for (Eigen::Index j = 0; j < Bi; ++j) {
      for (Eigen::Index i = 0; i < adi; ++i) {
        const float yy = y(i, j), one_m = 1.0f - yy * yy;
        const float gu = alpha * 2.0f * yy * one_m / (one_m + kSquashEps) - dq(i, j) * one_m;
        dout(i, j) = gu * inv_b;
        const float dlogstd = (-alpha + gu * sigma(i, j) * eps(i, j)) * inv_b;
        const float th = std::tanh(raw_std(i, j));
        dout(adi + i, j) = dlogstd * 0.5f * (kLogStdMax - kLogStdMin) * (1.0f - th * th);
      }
    }
    p_.actor_.zero_grad();
    p_.actor_.backward(dout);
    actor_opt_.step(p_.actor_);

    // Temperature and multiplier.
    const float temp_grad = static_cast<float>(-(logp.mean() + target_entropy_));
    float log_t = static_cast<float>(p_.log_temperature_);
    temp_opt_.step(std::span<float>(&log_t, 1), std::span<const float>(&temp_grad, 1));
    p_.log_temperature_ = std::clamp(static_cast<double>(log_t), -20.0, 5.0);
    p_.lambda_ = std::max(0.0, p_.lambda_ + c.lambda_lr * (recent_cost_ - c.cost.threshold()));

    const float tau = static_cast<float>(c.polyak);
    for (int k = 0; k < 2; ++k) {
      p_.reward_target_[k].soft_update_from(p_.reward_q_[k], tau);
      p_.cost_target_[k].soft_update_from(p_.cost_q_[k], tau);
    }
  }

 private:
  Matrix sample_noise(std::size_t rows, std::size_t cols) {
    std::normal_distribution<float> n;
    Matrix e(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = n(rng_);
    return e;
  }

  // Squashed sample in [-1, 1] per action dimension and its log-density.
  Matrix squash(const Matrix& out, const Matrix& eps, Eigen::RowVectorXf& logp, Matrix* sigma_out,
                Matrix* raw_out) const {
    const Eigen::Index ad = eps.rows(), B = eps.cols();
    Matrix y(ad, B), sigma(ad, B);
    const float half_log_2pi = 0.5f * std::log(2.0f * std::numbers::pi_v<float>);
    for (Eigen::Index j = 0; j < B; ++j) {
      float lp = 0.0f;
      for (Eigen::Index i = 0; i < ad; ++i) {
        const float ls = log_std_of(out(ad + i, j));
        const float s = std::exp(ls);
        const float u = out(i, j) + s * eps(i, j);
        const float t = std::tanh(u);
        y(i, j) = t;
        sigma(i, j) = s;
        lp += -0.5f * eps(i, j) * eps(i, j) - ls - half_log_2pi - std::log(1.0f - t * t + kSquashEps);
      }
      logp(j) = lp;
    }
    if (sigma_out) *sigma_out = sigma;
    if (raw_out) *raw_out = out.bottomRows(ad);
    return y;
  }

  void fit_critic(Mlp& net, Adam& opt, const Matrix& X, const Eigen::RowVectorXf& target) {
    const Matrix q = net.forward(X);
    const Eigen::RowVectorXf diff = q.row(0) - target;
    const double loss = static_cast<double>(diff.squaredNorm()) / static_cast<double>(diff.size());
    if (!std::isfinite(loss)) throw DivergenceError("critic loss is not finite");
    net.zero_grad();
    net.backward((2.0f / static_cast<float>(diff.size())) * diff);
    opt.step(net);
  }

  LagrangianPolicy& p_;
  const ReplayBuffer& buffer_;
  Rng& rng_;
  Adam actor_opt_, reward_opt_[2], cost_opt_[2], temp_opt_;
  double target_entropy_ = 0.0;
  std::vector<double> recent_;
  double recent_cost_ = 0.0;
};

namespace {

Trajectory run_episode(const LagrangianPolicy& policy, Env& env, Rng& rng, bool deterministic, bool random_actions) {
  Trajectory tr;
  tr.state_dim = env.state_dim();
  tr.action_dim = env.action_dim();
  std::vector<double> s = env.reset(rng);
  if (s.size() != policy.state_dim()) throw std::invalid_argument("environment and policy state sizes differ");
  const auto& dfa = policy.dfa();
  std::size_t q = dfa.reset(s);
  tr.states.insert(tr.states.end(), s.begin(), s.end());
  std::uniform_real_distribution<double> uni(-env.action_bound(), env.action_bound());
  for (std::size_t t = 0;; ++t) {
    std::vector<double> a;
    if (random_actions) {
      a.resize(env.action_dim());
      for (auto& v : a) v = uni(rng);
    } else {
      a = policy.act(s, q, t, rng, deterministic);
    }
    StepResult res = env.step(a);
    tr.actions.insert(tr.actions.end(), a.begin(), a.end());
    tr.rewards.push_back(res.reward);
    tr.states.insert(tr.states.end(), res.state.begin(), res.state.end());
    q = dfa.step(q, res.state);
    s = std::move(res.state);
    if (res.done) break;
  }
  score(tr, dfa, policy.config().cost);
  return tr;
}

}  // namespace

LagrangianPolicy train_policy(const Env& env_proto, const tl::Formula& constraint,
                              const std::vector<Trajectory>& warm_start, const CrlConfig& cfg, TrainLog* log,
                              const TrainProgress& progress) {
  cfg.validate();
  LagrangianPolicy policy(env_proto.state_dim(), env_proto.action_dim(), env_proto.action_bound(),
                          env_proto.horizon(), constraint, cfg);
  TrainLog local;
  TrainLog& lg = log ? *log : local;
  lg = TrainLog{};
  const auto env = env_proto.clone();
  Rng rng(util::stream_seed(cfg.seed, 0x7a1));
  ReplayBuffer buffer(cfg.buffer_capacity);
  for (const auto& w : warm_start) {
    Trajectory t = w;
    if (t.state_dim != env->state_dim() || t.action_dim != env->action_dim() || t.steps() != env->horizon()) {
      ++lg.warm_start_rejected;
      continue;
    }
    score(t, policy.dfa(), cfg.cost);
    if (t.violation) {
      ++lg.warm_start_rejected;
      continue;
    }
    buffer.add(std::move(t));
    ++lg.warm_start_inserted;
  }
  Learner learner(policy, buffer, rng);
  const std::size_t T = env->horizon();
  std::size_t step = 0;
  while (step < cfg.total_steps) {
    const bool random = step < cfg.random_steps;
    // Updates interleave with acting; the episode's own steps join the buffer
    // once it ends and its trajectory cost is known.
    Trajectory tr;
    tr.state_dim = env->state_dim();
    tr.action_dim = env->action_dim();
    std::vector<double> s = env->reset(rng);
    std::size_t q = policy.dfa().reset(s);
    tr.states.insert(tr.states.end(), s.begin(), s.end());
    std::uniform_real_distribution<double> uni(-env->action_bound(), env->action_bound());
    bool truncated = false;
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> a;
      if (random) {
        a.resize(env->action_dim());
        for (auto& v : a) v = uni(rng);
      } else {
        a = policy.act(s, q, t, rng);
      }
      StepResult res = env->step(a);
      tr.actions.insert(tr.actions.end(), a.begin(), a.end());
      tr.rewards.push_back(res.reward);
      tr.states.insert(tr.states.end(), res.state.begin(), res.state.end());
      q = policy.dfa().step(q, res.state);
      s = std::move(res.state);
      ++step;
      if (step >= cfg.update_after && buffer.step_count() >= cfg.batch_size) {
        for (std::size_t u = 0; u < cfg.updates_per_step; ++u) {
          learner.update();
          ++lg.updates;
          lg.lambdas.push_back(policy.lambda());
        }
      }
      if (progress && step % 5000 == 0) progress(step, lg);
      if (res.done) break;
      if (step >= cfg.total_steps) {
        truncated = true;
        break;
      }
    }
    if (truncated) break;
    score(tr, policy.dfa(), cfg.cost);
    lg.episode_returns.push_back(tr.total_reward());
    lg.episode_rhos.push_back(*tr.rho);
    learner.record_episode_cost(tr.traj_cost);
    buffer.add(std::move(tr));
  }
  return policy;
}

Trajectory rollout(const LagrangianPolicy& policy, Env& env, Rng& rng, bool deterministic) {
  return run_episode(policy, env, rng, deterministic, false);
}

std::vector<Trajectory> rollouts(const LagrangianPolicy& policy, const Env& env, std::size_t n,
                                 const RolloutOptions& opt) {
  std::vector<Trajectory> out(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.workers, n));
  auto work = [&](std::size_t w) {
    const auto local = env.clone();
    for (std::size_t i = w; i < n; i += workers) {
      Rng rng(util::stream_seed(opt.seed, 0xe9, i));
      out[i] = run_episode(policy, *local, rng, opt.deterministic, false);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return out;
}

ZeroViolationSample sample_zero_violation(const LagrangianPolicy& policy, const Env& env,
                                          const tl::Formula& constraint, std::size_t n, std::size_t max_attempts,
                                          const RolloutOptions& opt) {
  ZeroViolationSample res;
  if (n == 0) return res;
  const automaton::Dfa dfa = automaton::to_dfa(constraint);
  const std::size_t batch = std::max<std::size_t>(n, 16);
  while (res.trajectories.size() < n && res.attempts < max_attempts) {
    const std::size_t k = std::min(batch, max_attempts - res.attempts);
    RolloutOptions o = opt;
    o.seed = util::stream_seed(opt.seed, 0x2e0, res.attempts);
    for (auto& t : rollouts(policy, env, k, o)) {
      if (res.trajectories.size() >= n) break;
      score(t, dfa, policy.config().cost);
      if (*t.rho >= 0.0) res.trajectories.push_back(std::move(t));
    }
    res.attempts += k;
  }
  res.cap_hit = res.trajectories.size() < n;
  return res;
}

Metrics evaluate_trajectories(const std::vector<Trajectory>& trajs, const tl::Formula& gt) {
  std::vector<double> rhos, returns;
  for (const auto& t : trajs) {
    rhos.push_back(tl::robustness(t.trace(), gt));
    returns.push_back(t.total_reward());
  }
  return compute_metrics(rhos, returns);
}

Metrics evaluate_policy(const LagrangianPolicy& policy, const std::vector<const Env*>& envs, const tl::Formula& gt,
                        std::size_t episodes, const RolloutOptions& opt) {
  std::vector<Trajectory> all;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    RolloutOptions o = opt;
    o.seed = util::stream_seed(opt.seed, 0xe7a, e);
    auto trs = rollouts(policy, *envs[e], episodes, o);
    all.insert(all.end(), std::make_move_iterator(trs.begin()), std::make_move_iterator(trs.end()));
  }
  return evaluate_trajectories(all, gt);
}

}  // namespace ilcl::crl
