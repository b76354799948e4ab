/*
 * Copyright 2026 The fnorm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fnorm/autodiff.hpp"

#include <cmath>
#include <string>

#include "fnorm/error.hpp"

namespace fnorm::ad {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
  return out;
}

double stable_log_sigmoid(double x) {
  // log σ(x) = -log(1 + e^{-x}) = min(x, 0) - log1p(e^{-|x|})
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
  auto n = std::make_shared<Node>();
  n->grad = Matrix(value.rows(), value.cols());
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

void Tensor::zero_grad() {
  if (node_->requires_grad) node_->grad.fill(0.0);
}

Tensor detach(const Tensor& t) { return Tensor::constant(t.value()); }

void accumulate_grad(const Tensor& t, const Matrix& g) {
  if (!t.requires_grad()) return;
  Tensor handle = t;  // shares the node
  Matrix& dst = handle.mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst.data()[i] += g.data()[i];
}

Tape::~Tape() { clear(); }

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs,
                    BackwardFn backward) {
  bool needs = false;
  for (const Tensor& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return Tensor::constant(std::move(value));
  auto node = std::make_shared<Tensor::Node>();
  node->grad = Matrix(value.rows(), value.cols());
  node->value = std::move(value);
  node->requires_grad = true;
  node->tape_id = entries_.size();
  node->tape = this;
  entries_.push_back({node, std::move(backward)});
  return Tensor(node);
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw ValidationError("backward on undefined tensor");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ShapeError("backward requires a scalar (1x1) loss, got " +
                     loss.value().shape_string());
  }
  const auto& node = loss.node_;
  if (entries_.empty() || !node->tape_id || node->tape != this) {
    throw UnsupportedError(
        "backward: loss is not recorded on this tape (tape already consumed, "
        "or loss does not depend on any parameter)");
  }
  node->grad(0, 0) += 1.0;
  for (std::size_t k = *node->tape_id + 1; k-- > 0;) {
    Entry& e = entries_[k];
    e.backward(e.output->grad);
  }
  clear();
}

void Tape::clear() {
  for (Entry& e : entries_) {
    e.output->tape_id.reset();
    e.output->tape = nullptr;
  }
  entries_.clear();
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.value().shape_string() +
                     " * " + b.value().shape_string());
  }
  return tape.record(fnorm::matmul(a.value(), b.value()), {a, b},
                     [a, b](const Matrix& g) mutable {
                       if (a.requires_grad())
                         accumulate_grad(a, fnorm::matmul(g, transpose(b.value())));
                       if (b.requires_grad())
                         accumulate_grad(b, fnorm::matmul(transpose(a.value()), g));
                     });
}

Tensor spmm(Tape& tape, std::shared_ptr<const NormalizedAdjacency> adj,
            const Tensor& x) {
  if (adj->n != x.rows()) {
    throw ShapeError("spmm: adjacency of dimension " + std::to_string(adj->n) +
                     " vs " + x.value().shape_string());
  }
  Matrix out = fnorm::spmm(*adj, x.value());
  return tape.record(std::move(out), {x}, [adj, x](const Matrix& g) mutable {
    accumulate_grad(x, spmm_transposed(*adj, g));
  });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const bool broadcast =
      b.rows() == 1 && a.cols() == b.cols() && a.rows() != 1;
  if (!broadcast) require_same_shape("add", a, b);
  Matrix out = a.value();
  const std::size_t c = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] += b.value().data()[broadcast ? i % c : i];
  return tape.record(std::move(out), {a, b},
                     [a, b, broadcast, c](const Matrix& g) mutable {
                       accumulate_grad(a, g);
                       if (!b.requires_grad()) return;
                       if (!broadcast) {
                         accumulate_grad(b, g);
                         return;
                       }
                       Matrix gb(1, c);
                       for (std::size_t i = 0; i < g.rows(); ++i)
                         for (std::size_t j = 0; j < c; ++j) gb(0, j) += g(i, j);
                       accumulate_grad(b, gb);
                     });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] -= b.value().data()[i];
  return tape.record(std::move(out), {a, b}, [a, b](const Matrix& g) mutable {
    accumulate_grad(a, g);
    if (b.requires_grad()) accumulate_grad(b, map(g, [](double v) { return -v; }));
  });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return tape.record(map(a.value(), [factor](double v) { return v * factor; }),
                     {a}, [a, factor](const Matrix& g) mutable {
                       accumulate_grad(
                           a, map(g, [factor](double v) { return v * factor; }));
                     });
}

Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] *= b.value().data()[i];
  return tape.record(std::move(out), {a, b}, [a, b](const Matrix& g) mutable {
    if (a.requires_grad()) {
      Matrix ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i)
        ga.data()[i] *= b.value().data()[i];
      accumulate_grad(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i)
        gb.data()[i] *= a.value().data()[i];
      accumulate_grad(b, gb);
    }
  });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return tape.record(map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }),
                     {a}, [a](const Matrix& g) mutable {
                       Matrix ga = g;
                       for (std::size_t i = 0; i < ga.size(); ++i)
                         if (!(a.value().data()[i] > 0.0)) ga.data()[i] = 0.0;
                       accumulate_grad(a, ga);
                     });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  Matrix y = map(a.value(), stable_sigmoid);
  return tape.record(y, {a}, [a, y](const Matrix& g) mutable {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double s = y.data()[i];
      ga.data()[i] *= s * (1.0 - s);
    }
    accumulate_grad(a, ga);
  });
}

Tensor tanh(Tape& tape, const Tensor& a) {
  Matrix y = map(a.value(), [](double v) { return std::tanh(v); });
  return tape.record(y, {a}, [a, y](const Matrix& g) mutable {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double t = y.data()[i];
      ga.data()[i] *= 1.0 - t * t;
    }
    accumulate_grad(a, ga);
  });
}

Tensor dropout(Tape& tape, const Tensor& a, double p, bool train, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ValidationError("dropout rate must be in [0, 1), got " +
                          std::to_string(p));
  }
  if (!train || p == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.uniform() < p ? 0.0 : keep_scale;
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
  return tape.record(std::move(out), {a}, [a, mask](const Matrix& g) mutable {
    Matrix ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= mask.data()[i];
    accumulate_grad(a, ga);
  });
}

Tensor row_gather(Tape& tape, const Tensor& a,
                  std::span<const std::size_t> indices) {
  const std::size_t c = a.cols();
  Matrix out(indices.size(), c);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= a.rows()) {
      throw ShapeError("row_gather: index " + std::to_string(indices[r]) +
                       " out of range for " + a.value().shape_string());
    }
    const auto src = a.value().row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return tape.record(std::move(out), {a},
                     [a, idx = std::move(idx), c](const Matrix& g) mutable {
                       Matrix ga(a.rows(), c);
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                         const auto gr = g.row(r);
                         auto dst = ga.row(idx[r]);
                         for (std::size_t j = 0; j < c; ++j) dst[j] += gr[j];
                       }
                       accumulate_grad(a, ga);
                     });
}

Tensor rowwise_dot(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("rowwise_dot", a, b);
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i)
    out(i, 0) = dot(a.value().row(i), b.value().row(i));
  return tape.record(std::move(out), {a, b}, [a, b](const Matrix& g) mutable {
    const std::size_t c = a.cols();
    if (a.requires_grad()) {
      Matrix ga(a.rows(), c);
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < c; ++j) ga(i, j) = g(i, 0) * b.value()(i, j);
      accumulate_grad(a, ga);
    }
    if (b.requires_grad()) {
      Matrix gb(b.rows(), c);
      for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < c; ++j) gb(i, j) = g(i, 0) * a.value()(i, j);
      accumulate_grad(b, gb);
    }
  });
}

Tensor log(Tape& tape, const Tensor& a) {
  return tape.record(map(a.value(), [](double v) { return std::log(v); }), {a},
                     [a](const Matrix& g) mutable {
                       Matrix ga = g;
                       for (std::size_t i = 0; i < ga.size(); ++i)
                         ga.data()[i] /= a.value().data()[i];
                       accumulate_grad(a, ga);
                     });
}

Tensor log_sigmoid(Tape& tape, const Tensor& a) {
  return tape.record(map(a.value(), stable_log_sigmoid), {a},
                     [a](const Matrix& g) mutable {
                       // d/dx log σ(x) = 1 - σ(x) = σ(-x)
                       Matrix ga = g;
                       for (std::size_t i = 0; i < ga.size(); ++i)
                         ga.data()[i] *= stable_sigmoid(-a.value().data()[i]);
                       accumulate_grad(a, ga);
                     });
}

Tensor sum(Tape& tape, const Tensor& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return tape.record(Matrix(1, 1, s), {a}, [a](const Matrix& g) mutable {
    accumulate_grad(a, Matrix(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor mean(Tape& tape, const Tensor& a) {
  if (a.value().size() == 0) throw ShapeError("mean of an empty tensor");
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return tape.record(Matrix(1, 1, s / n), {a}, [a, n](const Matrix& g) mutable {
    accumulate_grad(a, Matrix(a.rows(), a.cols(), g(0, 0) / n));
  });
}

Tensor l2_row_norms(Tape& tape, const Tensor& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i)
    out(i, 0) = std::sqrt(squared_norm(a.value().row(i)));
  return tape.record(out, {a}, [a, out](const Matrix& g) mutable {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const double r = out(i, 0);
      if (r == 0.0) continue;  // subgradient 0 at the origin
      for (std::size_t j = 0; j < a.cols(); ++j)
        ga(i, j) = g(i, 0) * a.value()(i, j) / r;
    }
    accumulate_grad(a, ga);
  });
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols()) {
    throw ShapeError("concat_rows: column mismatch " +
                     a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
  Matrix out = a.value();
  out.append_rows(b.value());
  const std::size_t split = a.rows();
  return tape.record(std::move(out), {a, b},
                     [a, b, split](const Matrix& g) mutable {
                       const std::size_t c = g.cols();
                       if (a.requires_grad()) {
                         std::vector<double> top(g.data(), g.data() + split * c);
                         accumulate_grad(a, Matrix(split, c, std::move(top)));
                       }
                       if (b.requires_grad()) {
                         std::vector<double> bottom(g.data() + split * c,
                                                    g.data() + g.size());
                         accumulate_grad(
                             b, Matrix(g.rows() - split, c, std::move(bottom)));
                       }
                     });
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound,
                      Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  return uniform_matrix(rows, cols, glorot_bound(rows, cols), rng);
}

}  // namespace fnorm::ad
