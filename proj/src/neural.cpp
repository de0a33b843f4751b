#include "phm/neural.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "phm/errors.hpp"

namespace phm {

namespace {

// Visits every parameter tensor of a layer-shaped structure in a fixed order.
template <typename L, typename Fn>
void each_tensor(L& layer, Fn&& fn) {
  if constexpr (std::is_same_v<std::remove_const_t<L>, DenseLayer>) {
    fn(layer.W);
    fn(layer.b);
    fn(layer.gain);
    fn(layer.shift);
  } else {
    fn(layer.dW);
    fn(layer.db);
    fn(layer.dgain);
    fn(layer.dshift);
  }
}

LayerGrad zeros_like(const DenseLayer& l) {
  LayerGrad g;
  g.dW = Matrix::Zero(l.W.rows(), l.W.cols());
  g.db = Vector::Zero(l.b.size());
  g.dgain = Vector::Zero(l.gain.size());
  g.dshift = Vector::Zero(l.shift.size());
  return g;
}

}  // namespace

HuberValue huber(double r, double delta) {
  const double a = std::abs(r);
  if (a <= delta) return {0.5 * r * r, r};
  return {delta * (a - 0.5 * delta), r > 0 ? delta : -delta};
}

Matrix orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(big, small);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(big, small);
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Matrix w = rows >= cols ? q : Matrix(q.transpose());
  return gain * w;
}

QNetwork QNetwork::init(const std::vector<int>& sizes, Rng& rng, double hidden_gain, double output_gain) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("layer size must be >= 1, got " + std::to_string(s));
  }
  QNetwork net;
  net.sizes_ = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const bool last = l + 2 == sizes.size();
    DenseLayer layer;
    layer.norm = !last;
    layer.W = orthogonal(sizes[l + 1], sizes[l], last ? output_gain : hidden_gain, rng);
    layer.b = Vector::Zero(sizes[l + 1]);
    if (!last) {
      layer.gain = Vector::Ones(sizes[l + 1]);
      layer.shift = Vector::Zero(sizes[l + 1]);
    }
    net.layers_.push_back(std::move(layer));
  }
  net.reset_moments();
  return net;
}

void QNetwork::reset_moments() {
  m_.clear();
  v_.clear();
  for (const auto& l : layers_) {
    m_.push_back(zeros_like(l));
    v_.push_back(zeros_like(l));
  }
  adam_t_ = 0;
}

Matrix QNetwork::forward(const Matrix& x) const {
  Cache scratch;
  return forward(x, scratch);
}

Vector QNetwork::forward(const Vector& x) const {
  Matrix m = x;
  return forward(m).col(0);
}

Matrix QNetwork::forward(const Matrix& x, Cache& c) const {
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("input has " + std::to_string(x.rows()) + " features, network expects " +
                                std::to_string(input_dim()));
  }
  c = Cache{};
  c.version = version_;
  c.input = x;
  Matrix h = x;
  for (const auto& l : layers_) {
    Matrix z = l.W * h;
    z.colwise() += l.b;
    c.pre.push_back(z);
    if (!l.norm) {
      c.xhat.emplace_back();
      c.inv_std.emplace_back();
      c.post.push_back(z);
      h = std::move(z);
      continue;
    }
    const double n = static_cast<double>(z.rows());
    Eigen::RowVectorXd mean = z.colwise().sum() / n;
    Matrix centered = z.rowwise() - mean;
    Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
    Vector inv = (var.array() + kLayerNormEps).rsqrt().transpose();
    Matrix xhat = centered * inv.asDiagonal();
    Matrix y = l.gain.asDiagonal() * xhat;
    y.colwise() += l.shift;
    Matrix out = y.cwiseMax(0.0);
    c.xhat.push_back(std::move(xhat));
    c.inv_std.push_back(std::move(inv));
    c.post.push_back(out);
    h = std::move(out);
  }
  return h;
}

std::vector<LayerGrad> QNetwork::gradients(const Cache& c, const Matrix& d_out) const {
  if (c.version != version_ || c.pre.size() != layers_.size()) {
    throw StateError("forward cache is stale: parameters changed since it was computed");
  }
  if (d_out.rows() != output_dim() || d_out.cols() != c.input.cols()) {
    throw std::invalid_argument("output gradient shape does not match the cached batch");
  }
  std::vector<LayerGrad> grads(layers_.size());
  Matrix g = d_out;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    auto& gr = grads[li];
    Matrix dz;
    if (!l.norm) {
      dz = g;
    } else {
      // ReLU
      Matrix dy = (c.post[li].array() > 0.0).select(g, 0.0);
      const Matrix& xhat = c.xhat[li];
      gr.dgain = (dy.cwiseProduct(xhat)).rowwise().sum();
      gr.dshift = dy.rowwise().sum();
      Matrix dxhat = l.gain.asDiagonal() * dy;
      const double n = static_cast<double>(xhat.rows());
      Eigen::RowVectorXd sum_dx = dxhat.colwise().sum();
      Eigen::RowVectorXd sum_dx_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
      dz = (n * dxhat).rowwise() - sum_dx;
      dz -= xhat * sum_dx_xhat.asDiagonal();
      dz = dz * (c.inv_std[li] / n).asDiagonal();
    }
    const Matrix& h_in = li == 0 ? c.input : c.post[li - 1];
    gr.dW = dz * h_in.transpose();
    gr.db = dz.rowwise().sum();
    if (li > 0) g = l.W.transpose() * dz;
  }
  return grads;
}

double QNetwork::apply(const std::vector<LayerGrad>& grads, double lr, const AdamConfig& adam) {
  if (grads.size() != layers_.size()) throw std::invalid_argument("gradient does not match network depth");
  double sq = 0.0;
  ++adam_t_;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam_t_));
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    auto step = [&](auto& p, const auto& g, auto& m, auto& v) {
      if (g.size() == 0) return;
      sq += g.squaredNorm();
      auto clipped = g.array().max(-adam.clip).min(adam.clip);
      m.array() = adam.beta1 * m.array() + (1.0 - adam.beta1) * clipped;
      v.array() = adam.beta2 * v.array() + (1.0 - adam.beta2) * clipped.square();
      p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + adam.eps);
    };
    auto& l = layers_[li];
    const auto& g = grads[li];
    step(l.W, g.dW, m_[li].dW, v_[li].dW);
    step(l.b, g.db, m_[li].db, v_[li].db);
    if (l.norm) {
      step(l.gain, g.dgain, m_[li].dgain, v_[li].dgain);
      step(l.shift, g.dshift, m_[li].dshift, v_[li].dshift);
    }
  }
  ++version_;
  return std::sqrt(sq);
}

double QNetwork::backward_and_step(const Cache& cache, const Matrix& d_out, double lr, const AdamConfig& adam) {
  return apply(gradients(cache, d_out), lr, adam);
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) each_tensor(l, [&n](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

std::vector<double> QNetwork::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    each_tensor(l, [&out](const auto& t) { out.insert(out.end(), t.data(), t.data() + t.size()); });
  }
  return out;
}

void QNetwork::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("expected " + std::to_string(parameter_count()) + " parameters, got " +
                                std::to_string(flat.size()));
  }
  std::size_t k = 0;
  for (auto& l : layers_) {
    each_tensor(l, [&](auto& t) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k),
                flat.begin() + static_cast<std::ptrdiff_t>(k + static_cast<std::size_t>(t.size())), t.data());
      k += static_cast<std::size_t>(t.size());
    });
  }
  ++version_;
}

std::vector<double> QNetwork::optimizer_state() const {
  std::vector<double> out;
  for (const auto* moments : {&m_, &v_}) {
    for (const auto& g : *moments) {
      each_tensor(g, [&out](const auto& t) { out.insert(out.end(), t.data(), t.data() + t.size()); });
    }
  }
  return out;
}

void QNetwork::set_optimizer_state(std::span<const double> flat, std::uint64_t steps) {
  if (flat.size() != 2 * parameter_count()) throw std::invalid_argument("optimizer state size mismatch");
  std::size_t k = 0;
  for (auto* moments : {&m_, &v_}) {
    for (auto& g : *moments) {
      each_tensor(g, [&](auto& t) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k),
                  flat.begin() + static_cast<std::ptrdiff_t>(k + static_cast<std::size_t>(t.size())), t.data());
        k += static_cast<std::size_t>(t.size());
      });
    }
  }
  adam_t_ = steps;
}

void QNetwork::soft_update(const QNetwork& src, double tau) {
  if (src.sizes_ != sizes_) throw std::invalid_argument("soft update between networks of different shape");
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    auto& d = layers_[li];
    const auto& s = src.layers_[li];
    d.W = tau * s.W + (1.0 - tau) * d.W;
    d.b = tau * s.b + (1.0 - tau) * d.b;
    if (d.norm) {
      d.gain = tau * s.gain + (1.0 - tau) * d.gain;
      d.shift = tau * s.shift + (1.0 - tau) * d.shift;
    }
  }
  ++version_;
}

std::vector<double> flatten(const std::vector<LayerGrad>& grads) {
  std::vector<double> out;
  for (const auto& g : grads) {
    each_tensor(g, [&out](const auto& t) { out.insert(out.end(), t.data(), t.data() + t.size()); });
  }
  return out;
}

}  // namespace phm
