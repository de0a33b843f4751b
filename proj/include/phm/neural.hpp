#pragma once

// Small fully connected Q-network: hidden layers are Linear -> LayerNorm -> ReLU,
// the output layer is affine. Batches are stored column-wise.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "phm/random.hpp"

namespace phm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct HuberValue {
  double loss = 0.0;
  double grad = 0.0;
};

HuberValue huber(double residual, double delta = 1.0);

// Orthogonal matrix of shape rows x cols scaled by `gain` (QR of a Gaussian draw).
Matrix orthogonal(int rows, int cols, double gain, Rng& rng);

struct DenseLayer {
  Matrix W;
  Vector b;
  Vector gain;   // LayerNorm, empty on the output layer
  Vector shift;
  bool norm = true;
};

struct LayerGrad {
  Matrix dW;
  Vector db;
  Vector dgain;
  Vector dshift;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 1.0;  // elementwise gradient clip
};

class QNetwork {
 public:
  static constexpr double kLayerNormEps = 1e-5;

  struct Cache {
    std::uint64_t version = 0;
    Matrix input;
    std::vector<Matrix> pre;       // W h + b
    std::vector<Matrix> xhat;      // normalized pre-activations
    std::vector<Vector> inv_std;   // per column
    std::vector<Matrix> post;      // layer outputs
  };

  QNetwork() = default;
  // layer_sizes = [d_in, hidden..., d_out]; throws std::invalid_argument on sizes < 1.
  static QNetwork init(const std::vector<int>& layer_sizes, Rng& rng, double hidden_gain = 1.4142135623730951,
                       double output_gain = 1.0);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::uint64_t version() const { return version_; }
  std::uint64_t adam_steps() const { return adam_t_; }

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Cache& cache) const;
  Vector forward(const Vector& x) const;

  // Reverse pass for d(loss)/d(output). Throws StateError when the cache was
  // produced before the latest parameter update.
  std::vector<LayerGrad> gradients(const Cache& cache, const Matrix& d_out) const;

  // Elementwise clip then one Adam step; returns the pre-clip L2 norm.
  double apply(const std::vector<LayerGrad>& grads, double lr, const AdamConfig& adam = {});
  double backward_and_step(const Cache& cache, const Matrix& d_out, double lr, const AdamConfig& adam = {});

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  // Adam first and second moments, in parameter order.
  std::vector<double> optimizer_state() const;
  void set_optimizer_state(std::span<const double> flat, std::uint64_t steps);

  // this <- tau * source + (1 - tau) * this
  void soft_update(const QNetwork& source, double tau);

 private:
  void reset_moments();

  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
  std::vector<LayerGrad> m_;
  std::vector<LayerGrad> v_;
  std::uint64_t adam_t_ = 0;
  std::uint64_t version_ = 1;
};

std::vector<double> flatten(const std::vector<LayerGrad>& grads);

}  // namespace phm
