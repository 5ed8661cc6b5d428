#include "ilcl/crl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace ilcl::crl {

Mlp::Mlp(std::vector<std::size_t> sizes, std::mt19937_64& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("network needs an input and an output size");
  // Every array starts on a 64-byte boundary so vectorised kernels take the
  // same path on every run.
  auto pad = [](std::size_t n) { return (n + 15) / 16 * 16; };
  std::size_t n = 0;
  for (std::size_t l = 0; l < layers(); ++l) {
    w_off_.push_back(n);
    n = pad(n + sizes_[l] * sizes_[l + 1]);
    b_off_.push_back(n);
    n = pad(n + sizes_[l + 1]);
  }
  params_.resize(n);
  grads_.assign(n, 0.0f);
  for (std::size_t l = 0; l < layers(); ++l) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(sizes_[l]));
    std::uniform_real_distribution<float> u(-bound, bound);
    for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i) params_[w_off_[l] + i] = u(rng);
    for (std::size_t i = 0; i < sizes_[l + 1]; ++i) params_[b_off_[l] + i] = u(rng);
  }
}

Mlp::CMapM Mlp::weight(std::size_t l) const {
  return CMapM(params_.data() + w_off_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
               static_cast<Eigen::Index>(sizes_[l]));
}

Mlp::CMapV Mlp::bias(std::size_t l) const {
  return CMapV(params_.data() + b_off_[l], static_cast<Eigen::Index>(sizes_[l + 1]));
}

Matrix Mlp::forward(const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != input_size()) throw std::invalid_argument("network input size mismatch");
  inputs_.resize(layers());
  pre_.resize(layers());
  Matrix h = x;
  for (std::size_t l = 0; l < layers(); ++l) {
    inputs_[l] = h;
    pre_[l] = (weight(l) * h).colwise() + bias(l);
    h = l + 1 < layers() ? Matrix(pre_[l].cwiseMax(0.0f)) : pre_[l];
  }
  return h;
}

Matrix Mlp::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_size()) throw std::invalid_argument("network input size mismatch");
  Matrix h = x;
  for (std::size_t l = 0; l < layers(); ++l) {
    Matrix z = (weight(l) * h).colwise() + bias(l);
    h = l + 1 < layers() ? Matrix(z.cwiseMax(0.0f)) : std::move(z);
  }
  return h;
}

Matrix Mlp::backward(const Matrix& dy) {
  if (inputs_.size() != layers()) throw std::logic_error("backward() without forward()");
  Matrix g = dy;
  for (std::size_t l = layers(); l-- > 0;) {
    if (l + 1 < layers()) g = g.cwiseProduct((pre_[l].array() > 0.0f).cast<float>().matrix());
    MapM gw(grads_.data() + w_off_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
            static_cast<Eigen::Index>(sizes_[l]));
    MapV gb(grads_.data() + b_off_[l], static_cast<Eigen::Index>(sizes_[l + 1]));
    gw.noalias() += g * inputs_[l].transpose();
    gb += g.rowwise().sum();
    g = weight(l).transpose() * g;
  }
  return g;
}

void Mlp::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0f); }

void Mlp::soft_update_from(const Mlp& src, float tau) {
  if (src.params_.size() != params_.size()) throw std::invalid_argument("soft update between different shapes");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += tau * (src.params_[i] - params_[i]);
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0f), v_(n, 0.0f) {}

void Adam::step(std::span<float> params, std::span<const float> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("optimizer state does not match parameter count");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const float step = static_cast<float>(lr_ * std::sqrt(c2) / c1);
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const float eps = static_cast<float>(eps_ * std::sqrt(c2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0f - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0f - b2) * grads[i] * grads[i];
    params[i] -= step * m_[i] / (std::sqrt(v_[i]) + eps);
  }
}

}  // namespace ilcl::crl
