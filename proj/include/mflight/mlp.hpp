#pragma once

// Fully connected tanh network with explicit reverse-mode gradients.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mflight/rng.hpp"

namespace mflight {

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}
};

/// Orthogonal initialization: Gram-Schmidt on a Gaussian matrix, scaled by `gain`.
inline void orthogonal_init(DenseLayer& layer, double gain, Rng& rng) {
  // orthonormalize along the longer dimension's vectors of the shorter count
  const bool rows = layer.out <= layer.in;
  const std::size_t count = rows ? layer.out : layer.in;
  const std::size_t len = rows ? layer.in : layer.out;
  std::vector<std::vector<double>> vecs(count, std::vector<double>(len));
  for (auto& v : vecs)
    for (auto& e : v) e = rng.normal();
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += vecs[a][i] * vecs[b][i];
      for (std::size_t i = 0; i < len; ++i) vecs[a][i] -= dot * vecs[b][i];
    }
    double norm = 0.0;
    for (double e : vecs[a]) norm += e * e;
    norm = std::sqrt(norm);
    for (double& e : vecs[a]) e /= norm;
  }
  for (std::size_t r = 0; r < layer.out; ++r)
    for (std::size_t c = 0; c < layer.in; ++c)
      layer.weight[r * layer.in + c] = gain * (rows ? vecs[r][c] : vecs[c][r]);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

class Mlp {
 public:
  Mlp() = default;

  /// sizes = {input, hidden..., output}; tanh on hidden layers, identity output.
  explicit Mlp(const std::vector<std::size_t>& sizes) {
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) layers_.emplace_back(sizes[i], sizes[i + 1]);
  }

  void initialize(Rng& rng, double hidden_gain, double output_gain) {
    for (std::size_t l = 0; l < layers_.size(); ++l)
      orthogonal_init(layers_[l], l + 1 == layers_.size() ? output_gain : hidden_gain, rng);
  }

  std::size_t input_size() const { return layers_.front().in; }
  std::size_t output_size() const { return layers_.back().out; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Layer outputs kept for the backward pass; activations[0] is the input.
  struct Cache {
    std::vector<std::vector<double>> activations;
  };

  std::vector<double> forward(std::span<const double> input, Cache* cache = nullptr) const {
    std::vector<double> x(input.begin(), input.end());
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(x);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      assert(x.size() == L.in);
      std::vector<double> y(L.bias);
      for (std::size_t r = 0; r < L.out; ++r) {
        const double* w = &L.weight[r * L.in];
        double acc = 0.0;
        for (std::size_t c = 0; c < L.in; ++c) acc += w[c] * x[c];
        y[r] += acc;
      }
      if (l + 1 < layers_.size())
        for (double& v : y) v = std::tanh(v);
      if (cache) cache->activations.push_back(y);
      x = std::move(y);
    }
    return x;
  }

  /// Accumulates d(loss)/d(params) into `grad` (same architecture) given d(loss)/d(output).
  void backward(const Cache& cache, std::span<const double> grad_output, Mlp& grad) const {
    std::vector<double> delta(grad_output.begin(), grad_output.end());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& L = layers_[l];
      auto& G = grad.layers_[l];
      const auto& x = cache.activations[l];
      if (l + 1 < layers_.size()) {
        const auto& y = cache.activations[l + 1];
        for (std::size_t r = 0; r < L.out; ++r) delta[r] *= 1.0 - y[r] * y[r];
      }
      std::vector<double> prev(L.in, 0.0);
      for (std::size_t r = 0; r < L.out; ++r) {
        const double d = delta[r];
        G.bias[r] += d;
        const double* w = &L.weight[r * L.in];
        double* gw = &G.weight[r * L.in];
        for (std::size_t c = 0; c < L.in; ++c) {
          gw[c] += d * x[c];
          prev[c] += d * w[c];
        }
      }
      delta = std::move(prev);
    }
  }

  /// Same architecture, all parameters zero.
  Mlp zeros_like() const {
    Mlp z;
    for (const auto& L : layers_) z.layers_.emplace_back(L.in, L.out);
    return z;
  }

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace mflight
