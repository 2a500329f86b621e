// Copyright 2026 The lsbo Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Sequential dense networks with reverse-mode gradients and Adam.
//
// Activations are applied after every layer except the last, which stays
// linear. Batches are stored column-wise: an input batch is in x B.

#pragma once

#include "lsbo/core.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace lsbo {

/// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// Derivative of softplus.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

enum class Activation : std::uint32_t { softplus = 0, identity = 1 };

struct DenseLayer {
  Mat W;  // out x in
  Vec b;  // out
};

/// Intermediates of one forward pass, consumed by MLP::backward.
struct Tape {
  std::vector<Mat> inputs;  // input to each layer
  std::vector<Mat> pre;     // pre-activation of each layer
  Mat output;
  std::uint64_t version = 0;
};

struct Gradients {
  std::vector<Mat> dW;
  std::vector<Vec> db;
  Mat d_input;

  /// Same layout as MLP::flat_params().
  Vec flat() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < dW.size(); ++l) n += dW[l].size() + db[l].size();
    Vec out(n);
    Eigen::Index o = 0;
    for (std::size_t l = 0; l < dW.size(); ++l) {
      out.segment(o, dW[l].size()) = dW[l].reshaped();
      o += dW[l].size();
      out.segment(o, db[l].size()) = db[l];
      o += db[l].size();
    }
    return out;
  }
};

class MLP {
 public:
  MLP() = default;

  /// widths = {in, hidden..., out}; Glorot-uniform weights, zero biases.
  MLP(const std::vector<int>& widths, Rng& rng, Activation hidden = Activation::softplus)
      : hidden_(hidden) {
    if (widths.size() < 2) throw DimensionError("MLP: need at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int in = widths[l], out = widths[l + 1];
      if (in < 1 || out < 1) throw DimensionError("MLP: widths must be positive");
      const double a = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> u(-a, a);
      DenseLayer layer{Mat(out, in), Vec::Zero(out)};
      for (Eigen::Index j = 0; j < in; ++j) {
        for (Eigen::Index i = 0; i < out; ++i) layer.W(i, j) = u(rng);
      }
      layers_.push_back(std::move(layer));
    }
  }

  static MLP zeros(const std::vector<int>& widths, Activation hidden = Activation::softplus) {
    Rng rng(0);
    MLP net(widths, rng, hidden);
    for (auto& l : net.layers_) {
      l.W.setZero();
      l.b.setZero();
    }
    return net;
  }

  static MLP from_layers(std::vector<DenseLayer> layers, Activation hidden) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      require_dim(layers[l].b.size(), layers[l].W.rows(), "MLP bias");
      if (l > 0) require_dim(layers[l].W.cols(), layers[l - 1].W.rows(), "MLP layer chain");
    }
    MLP net;
    net.layers_ = std::move(layers);
    net.hidden_ = hidden;
    return net;
  }

  Eigen::Index input_dim() const { return layers_.empty() ? 0 : layers_.front().W.cols(); }
  Eigen::Index output_dim() const { return layers_.empty() ? 0 : layers_.back().W.rows(); }
  std::size_t depth() const { return layers_.size(); }
  Activation hidden_activation() const { return hidden_; }
  std::uint64_t version() const { return version_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Mutable access; invalidates outstanding tapes.
  std::vector<DenseLayer>& mutable_layers() {
    ++version_;
    return layers_;
  }

  std::vector<int> widths() const {
    std::vector<int> w;
    if (layers_.empty()) return w;
    w.push_back(static_cast<int>(input_dim()));
    for (const auto& l : layers_) w.push_back(static_cast<int>(l.W.rows()));
    return w;
  }

  Eigen::Index num_params() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.W.size() + l.b.size();
    return n;
  }

  Vec flat_params() const {
    Vec out(num_params());
    Eigen::Index o = 0;
    for (const auto& l : layers_) {
      out.segment(o, l.W.size()) = l.W.reshaped();
      o += l.W.size();
      out.segment(o, l.b.size()) = l.b;
      o += l.b.size();
    }
    return out;
  }

  void set_flat_params(const Vec& p) {
    require_dim(p.size(), num_params(), "MLP::set_flat_params");
    Eigen::Index o = 0;
    for (auto& l : layers_) {
      l.W.reshaped() = p.segment(o, l.W.size());
      o += l.W.size();
      l.b = p.segment(o, l.b.size());
      o += l.b.size();
    }
    ++version_;
  }

  Tape forward(const Mat& X) const {
    require_dim(X.rows(), input_dim(), "MLP::forward");
    Tape tape;
    tape.version = version_;
    Mat a = X;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      Mat z = layer.W * a;
      z.colwise() += layer.b;
      tape.inputs.push_back(std::move(a));
      if (l + 1 < layers_.size()) {
        a = activate(z);
      } else {
        a = z;
      }
      tape.pre.push_back(std::move(z));
    }
    tape.output = std::move(a);
    return tape;
  }

  Mat predict(const Mat& X) const {
    require_dim(X.rows(), input_dim(), "MLP::predict");
    Mat a = X;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Mat z = layers_[l].W * a;
      z.colwise() += layers_[l].b;
      a = (l + 1 < layers_.size()) ? activate(z) : std::move(z);
    }
    return a;
  }

  Vec operator()(const Vec& x) const { return predict(x); }

  /// Reverse-mode gradients of sum(output .* G) w.r.t. every weight, bias and
  /// the input. Gradients are summed over the batch.
  Gradients backward(const Tape& tape, const Mat& G) const {
    if (tape.version != version_ || tape.pre.size() != layers_.size()) {
      throw std::logic_error("MLP::backward: stale tape");
    }
    require_dim(G.rows(), output_dim(), "MLP::backward");
    require_dim(G.cols(), tape.output.cols(), "MLP::backward batch");
    Gradients g;
    g.dW.resize(layers_.size());
    g.db.resize(layers_.size());
    Mat delta = G;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (l + 1 < layers_.size() && hidden_ == Activation::softplus) {
        delta.array() *= tape.pre[l].unaryExpr([](double v) { return sigmoid(v); }).array();
      }
      g.dW[l] = delta * tape.inputs[l].transpose();
      g.db[l] = delta.rowwise().sum();
      delta = layers_[l].W.transpose() * delta;
    }
    g.d_input = std::move(delta);
    return g;
  }

 private:
  Mat activate(const Mat& z) const {
    if (hidden_ == Activation::identity) return z;
    return z.unaryExpr([](double v) { return softplus(v); });
  }

  std::vector<DenseLayer> layers_;
  Activation hidden_ = Activation::softplus;
  std::uint64_t version_ = 0;
};

struct AdamState {
  Vec m;
  Vec v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(Eigen::Index n, double lr) {
    AdamState s;
    s.m = Vec::Zero(n);
    s.v = Vec::Zero(n);
    s.lr = lr;
    return s;
  }
};

/// Bias-corrected Adam step; returns the updated parameters and advances state.t.
inline Vec adam_step(AdamState& s, const Vec& params, const Vec& grads) {
  require_dim(grads.size(), params.size(), "adam_step");
  require_dim(s.m.size(), params.size(), "adam_step state");
  ++s.t;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  const Vec mhat = s.m / c1;
  const Vec vhat = s.v / c2;
  return params.array() - s.lr * mhat.array() / (vhat.array().sqrt() + s.eps);
}

// Binary layout, all integers and floats little-endian:
//   "LSBOMLP1" | u32 activation | u32 layer count | per layer: u64 rows, u64 cols
//   | per layer: W row-major f64, then b f64.
namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 4);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("MLP stream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4)) throw std::runtime_error("MLP stream truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline constexpr char kMlpMagic[8] = {'L', 'S', 'B', 'O', 'M', 'L', 'P', '1'};

}  // namespace detail

inline void write_mlp(std::ostream& os, const MLP& net) {
  os.write(detail::kMlpMagic, 8);
  detail::put_u32(os, static_cast<std::uint32_t>(net.hidden_activation()));
  detail::put_u32(os, static_cast<std::uint32_t>(net.depth()));
  for (const auto& l : net.layers()) {
    detail::put_u64(os, static_cast<std::uint64_t>(l.W.rows()));
    detail::put_u64(os, static_cast<std::uint64_t>(l.W.cols()));
  }
  for (const auto& l : net.layers()) {
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) detail::put_f64(os, l.W(i, j));
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) detail::put_f64(os, l.b[i]);
  }
}

inline MLP read_mlp(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::kMlpMagic, 8) != 0) {
    throw std::runtime_error("not an MLP stream");
  }
  const auto act = detail::get_u32(is);
  if (act > 1) throw std::runtime_error("MLP stream: unknown activation");
  const auto depth = detail::get_u32(is);
  std::vector<DenseLayer> layers(depth);
  for (auto& l : layers) {
    const auto rows = static_cast<Eigen::Index>(detail::get_u64(is));
    const auto cols = static_cast<Eigen::Index>(detail::get_u64(is));
    if (rows < 1 || cols < 1 || rows > (1 << 20) || cols > (1 << 20)) {
      throw std::runtime_error("MLP stream: bad layer shape");
    }
    l.W.resize(rows, cols);
    l.b.resize(rows);
  }
  for (auto& l : layers) {
    for (Eigen::Index i = 0; i < l.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.W.cols(); ++j) l.W(i, j) = detail::get_f64(is);
    }
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = detail::get_f64(is);
  }
  return MLP::from_layers(std::move(layers), static_cast<Activation>(act));
}

inline void save_mlp(const std::string& path, const MLP& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_mlp(os, net);
}

inline MLP load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_mlp(is);
}

}  // namespace lsbo
