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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fnorm/graph.hpp"
#include "fnorm/matrix.hpp"
#include "fnorm/rng.hpp"

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tensor is a shared handle to a value/gradient pair. Operations on
// tensors that require gradients are appended to a Tape in execution order;
// Tape::backward walks the tape in exact reverse, accumulates gradients into
// every reachable tensor that requires them, and then clears the tape.
// Gradients are plain matrices and are never themselves recorded, so
// higher-order differentiation is not available.
namespace fnorm::ad {

class Tape;

class Tensor {
 public:
  Tensor() = default;

  // Value-only tensor; never accumulates gradient.
  static Tensor constant(Matrix value);
  // Leaf tensor that accumulates gradient (a learnable parameter).
  static Tensor parameter(Matrix value);

  bool defined() const noexcept { return node_ != nullptr; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  // Position on the tape for recorded results; empty for leaves/constants.
  std::optional<std::size_t> tape_id() const { return node_->tape_id; }

  const Matrix& value() const { return node_->value; }
  // Direct access for optimizers and checkpoint restore.
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->grad; }
  void zero_grad();

  // Same identity (shared storage), not value equality.
  bool same(const Tensor& other) const noexcept {
    return node_ == other.node_;
  }

 private:
  friend class Tape;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::optional<std::size_t> tape_id;
    const Tape* tape = nullptr;
  };
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
};

// Value-equal tensor with no gradient and no tape parent.
Tensor detach(const Tensor& t);

// Adds `g` into t.grad if t requires gradients.
void accumulate_grad(const Tensor& t, const Matrix& g);

class Tape {
 public:
  // Receives the gradient flowing into the recorded output.
  using BackwardFn = std::function<void(const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  // Wraps an op result. When no input requires gradients the result is a
  // constant and nothing is recorded.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs,
                BackwardFn backward);

  // loss must be a 1x1 tensor recorded on this tape.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return entries_.size(); }
  void clear();

 private:
  struct Entry {
    std::shared_ptr<Tensor::Node> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

// Forward operations. Shape mismatches throw ShapeError naming both shapes.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor spmm(Tape& tape, std::shared_ptr<const NormalizedAdjacency> adj,
            const Tensor& x);
// a + b; b may also be a 1 x cols row vector broadcast over a's rows.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);
Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);
// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
// Identity when train is false or p == 0.
Tensor dropout(Tape& tape, const Tensor& a, double p, bool train, Rng& rng);
Tensor row_gather(Tape& tape, const Tensor& a,
                  std::span<const std::size_t> indices);
// Row-wise inner products; returns rows x 1.
Tensor rowwise_dot(Tape& tape, const Tensor& a, const Tensor& b);
Tensor log(Tape& tape, const Tensor& a);
// log(sigmoid(a)) evaluated without overflow for large |a|.
Tensor log_sigmoid(Tape& tape, const Tensor& a);
Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);
// Euclidean norm of each row; returns rows x 1.
Tensor l2_row_norms(Tape& tape, const Tensor& a);
// Stacks b's rows under a's.
Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);

// Glorot/Xavier uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);
// rows x cols entries uniform in [-bound, bound), drawn row-major.
Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound,
                      Rng& rng);
// Weight matrix with fan_in = rows, fan_out = cols.
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace fnorm::ad
