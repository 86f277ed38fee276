#pragma once

// Fully connected network with tanh hidden layers and a linear output layer.
// Columns are samples: forward maps an (in x N) batch to (out x N).
//
// Flat parameter layout, layer by layer: weight (row-major, out x in) then bias.

#include <cmath>
#include <vector>

#include "evopath/random.hpp"
#include "evopath/types.hpp"

namespace evopath {

template <typename Scalar>
class Mlp {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  struct Layer {
    Matrix weight;
    Vector bias;
  };

  // Post-activation values; a[0] is the input, a.back() the output.
  struct Activations {
    std::vector<Matrix> a;
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw DimensionError("mlp needs at least input and output sizes");
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      if (sizes_[l - 1] < 1 || sizes_[l] < 1) throw DimensionError("mlp layer sizes must be >= 1");
      layers_.push_back({Matrix::Zero(sizes_[l], sizes_[l - 1]), Vector::Zero(sizes_[l])});
    }
  }

  // Gaussian weights with std 1/sqrt(fan_in); the output layer is further
  // scaled by output_scale. Biases start at zero.
  void initialize(Rng& rng, Scalar output_scale) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& w = layers_[l].weight;
      const Scalar std = Scalar(1) / std::sqrt(Scalar(w.cols()));
      const Scalar scale = (l + 1 == layers_.size()) ? output_scale : Scalar(1);
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = Scalar(rng.normal()) * std * scale;
      layers_[l].bias.setZero();
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  int num_params() const {
    int n = 0;
    for (const auto& layer : layers_) n += static_cast<int>(layer.weight.size() + layer.bias.size());
    return n;
  }

  Vector flat_params() const {
    Vector out(num_params());
    Eigen::Index off = 0;
    for (const auto& layer : layers_) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        out.segment(off, layer.weight.cols()) = layer.weight.row(r).transpose();
        off += layer.weight.cols();
      }
      out.segment(off, layer.bias.size()) = layer.bias;
      off += layer.bias.size();
    }
    return out;
  }

  void set_flat_params(const Eigen::Ref<const Vector>& params) {
    if (params.size() != num_params()) throw DimensionError("mlp: flat parameter length mismatch");
    Eigen::Index off = 0;
    for (auto& layer : layers_) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        layer.weight.row(r) = params.segment(off, layer.weight.cols()).transpose();
        off += layer.weight.cols();
      }
      layer.bias = params.segment(off, layer.bias.size());
      off += layer.bias.size();
    }
  }

  Matrix forward(const Eigen::Ref<const Matrix>& inputs, Activations* cache = nullptr) const {
    if (inputs.rows() != input_dim()) throw DimensionError("mlp: input dimension mismatch");
    Matrix x = inputs;
    if (cache) {
      cache->a.clear();
      cache->a.push_back(x);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * x;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.array().tanh().matrix();
      x = std::move(z);
      if (cache) cache->a.push_back(x);
    }
    return x;
  }

  Vector forward_one(const Eigen::Ref<const Vector>& input) const {
    if (input.size() != input_dim()) throw DimensionError("mlp: input dimension mismatch");
    Vector x = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Vector z = layers_[l].weight * x + layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.array().tanh().matrix();
      x = std::move(z);
    }
    return x;
  }

  // Gradient of sum_i <out_grad_i, output_i> w.r.t. the parameters, one
  // column per sample. grads must be (num_params x N).
  void per_sample_gradients(const Activations& cache, const Eigen::Ref<const Matrix>& out_grad,
                            Eigen::Ref<Matrix> grads) const {
    const Eigen::Index n = out_grad.cols();
    Matrix delta = out_grad;
    std::vector<Eigen::Index> offsets = layer_offsets();
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Matrix& prev = cache.a[l];
      const auto& w = layers_[l].weight;
      const Eigen::Index in = w.cols();
      Eigen::Index off = offsets[l];
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        grads.block(off + r * in, 0, in, n).noalias() = prev * delta.row(r).asDiagonal();
      }
      grads.block(off + w.size(), 0, w.rows(), n) = delta;
      if (l > 0) {
        Matrix back = w.transpose() * delta;
        delta = (back.array() * (Scalar(1) - prev.array().square())).matrix();
      }
    }
  }

  // Sum over samples of the per-sample gradients.
  Vector summed_gradient(const Activations& cache, const Eigen::Ref<const Matrix>& out_grad) const {
    Vector grad(num_params());
    Matrix delta = out_grad;
    std::vector<Eigen::Index> offsets = layer_offsets();
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Matrix& prev = cache.a[l];
      const auto& w = layers_[l].weight;
      Matrix gw = delta * prev.transpose();
      Eigen::Index off = offsets[l];
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        grad.segment(off + r * w.cols(), w.cols()) = gw.row(r).transpose();
      }
      grad.segment(off + w.size(), w.rows()) = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = w.transpose() * delta;
        delta = (back.array() * (Scalar(1) - prev.array().square())).matrix();
      }
    }
    return grad;
  }

 private:
  std::vector<Eigen::Index> layer_offsets() const {
    std::vector<Eigen::Index> offsets;
    Eigen::Index off = 0;
    for (const auto& layer : layers_) {
      offsets.push_back(off);
      off += layer.weight.size() + layer.bias.size();
    }
    return offsets;
  }

  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

}  // namespace evopath
