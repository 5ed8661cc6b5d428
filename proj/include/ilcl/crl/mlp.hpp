#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ilcl::crl {

using Matrix = Eigen::MatrixXf;

/// Fully connected ReLU network with a linear output layer. Samples are
/// columns. All weights and biases live in one flat array so optimisers,
/// target averaging and checkpoints can treat the network as a vector.
class Mlp {
 public:
  Mlp() = default;
  /// sizes = {in, hidden..., out}. Weights and biases start at
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<std::size_t> sizes, std::mt19937_64& rng);

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  /// Forward pass that keeps activations for a following backward().
  Matrix forward(const Matrix& x);
  /// Forward pass without side effects.
  Matrix predict(const Matrix& x) const;
  /// Accumulates parameter gradients of sum(dy ∘ y) for the last forward()
  /// and returns its gradient with respect to the input.
  Matrix backward(const Matrix& dy);
  void zero_grad();

  using Buffer = std::vector<float, Eigen::aligned_allocator<float>>;
  Buffer& params() { return params_; }
  const Buffer& params() const { return params_; }
  const Buffer& grads() const { return grads_; }

  /// θ ← (1-τ)·θ + τ·θ_src.
  void soft_update_from(const Mlp& src, float tau);

 private:
  using MapM = Eigen::Map<Eigen::MatrixXf>;
  using MapV = Eigen::Map<Eigen::VectorXf>;
  using CMapM = Eigen::Map<const Eigen::MatrixXf>;
  using CMapV = Eigen::Map<const Eigen::VectorXf>;

  std::size_t layers() const { return sizes_.size() - 1; }
  CMapM weight(std::size_t l) const;
  CMapV bias(std::size_t l) const;

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> w_off_, b_off_;
  Buffer params_, grads_;
  std::vector<Matrix> inputs_;  // input to each layer from the last forward()
  std::vector<Matrix> pre_;     // pre-activations of each layer
};

/// Adam over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<float> params, std::span<const float> grads);
  void step(Mlp& net) { step(net.params(), net.grads()); }

 private:
  double lr_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<float> m_, v_;
};

}  // namespace ilcl::crl
