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

// Finite-difference gradient checks shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fnorm/autodiff.hpp"
#include "fnorm/models.hpp"
#include "fnorm/norms.hpp"
#include "oracles.hpp"

namespace gradcheck {

using fnorm::Matrix;
using fnorm::Rng;
using fnorm::ad::Tape;
using fnorm::ad::Tensor;

using Op = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Largest relative error between the tape gradient of
// loss = sum(op(inputs) ⊙ probe) and central differences, over every input.
inline double check_op(const Op& op, std::vector<Matrix> inputs, std::uint64_t seed) {
  Rng rng(seed);
  Matrix probe;
  auto forward = [&](std::vector<Tensor>& params, Tape& tape) {
    Tensor out = op(tape, params);
    if (probe.empty()) probe = oracle::random_matrix(out.rows(), out.cols(), rng);
    return fnorm::ad::sum(tape, fnorm::ad::hadamard(tape, out, Tensor::constant(probe)));
  };
  std::vector<Tensor> params;
  for (auto& m : inputs) params.push_back(Tensor::parameter(m));
  {
    Tape tape;
    tape.backward(forward(params, tape));
  }
  double worst = 0.0;
  for (auto& p : params) {
    const Matrix numeric = oracle::numeric_gradient(&p.mutable_value(), [&] {
      Tape tape;
      return forward(params, tape).value()(0, 0);
    });
    worst = std::max(worst, oracle::relative_error(p.grad(), numeric));
  }
  return worst;
}

inline Matrix rnd(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return oracle::random_matrix(r, c, rng, scale);
}

// Bounded away from zero so kinks and poles are not straddled by ±ε.
inline Matrix away_from_zero(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m = rnd(r, c, seed);
  for (double& v : m.values()) v = v >= 0 ? v + 0.1 : v - 0.1;
  return m;
}

struct Result {
  std::string name;
  double error = 0.0;
};

// Every differentiable op, including the norm layers, on a random 6-node
// graph.
inline std::vector<Result> op_errors(std::uint64_t graph_seed) {
  namespace ad = fnorm::ad;
  Rng g(graph_seed);
  const fnorm::Snapshot snap = oracle::random_snapshot(6, 0.5, g, true);
  auto adj = std::make_shared<const fnorm::NormalizedAdjacency>(fnorm::symmetric_normalize(snap));
  const std::vector<std::size_t> idx{0, 3, 3, 5, 1};
  struct Case {
    const char* name;
    Op op;
    std::vector<Matrix> inputs;
  };
  const std::vector<Case> cases{
      {"matmul", [](Tape& t, const auto& p) { return ad::matmul(t, p[0], p[1]); },
       {rnd(6, 4, 1), rnd(4, 3, 2)}},
      {"spmm", [&](Tape& t, const auto& p) { return ad::spmm(t, adj, p[0]); }, {rnd(6, 3, 3)}},
      {"add", [](Tape& t, const auto& p) { return ad::add(t, p[0], p[1]); },
       {rnd(6, 3, 4), rnd(6, 3, 5)}},
      {"add broadcast", [](Tape& t, const auto& p) { return ad::add(t, p[0], p[1]); },
       {rnd(6, 3, 6), rnd(1, 3, 7)}},
      {"sub", [](Tape& t, const auto& p) { return ad::sub(t, p[0], p[1]); },
       {rnd(6, 3, 8), rnd(6, 3, 9)}},
      {"scale", [](Tape& t, const auto& p) { return ad::scale(t, p[0], -1.7); }, {rnd(6, 3, 10)}},
      {"hadamard", [](Tape& t, const auto& p) { return ad::hadamard(t, p[0], p[1]); },
       {rnd(6, 3, 11), rnd(6, 3, 12)}},
      {"relu", [](Tape& t, const auto& p) { return ad::relu(t, p[0]); }, {away_from_zero(6, 3, 13)}},
      {"sigmoid", [](Tape& t, const auto& p) { return ad::sigmoid(t, p[0]); }, {rnd(6, 3, 14, 3.0)}},
      {"tanh", [](Tape& t, const auto& p) { return ad::tanh(t, p[0]); }, {rnd(6, 3, 15, 2.0)}},
      {"row_gather", [&](Tape& t, const auto& p) { return ad::row_gather(t, p[0], idx); },
       {rnd(6, 3, 16)}},
      {"rowwise_dot", [](Tape& t, const auto& p) { return ad::rowwise_dot(t, p[0], p[1]); },
       {rnd(6, 3, 17), rnd(6, 3, 18)}},
      {"log",
       [](Tape& t, const auto& p) {
         return ad::log(t, ad::add(t, ad::hadamard(t, p[0], p[0]), Tensor::constant(Matrix(6, 3, 0.5))));
       },
       {rnd(6, 3, 19)}},
      {"log_sigmoid", [](Tape& t, const auto& p) { return ad::log_sigmoid(t, p[0]); },
       {rnd(6, 3, 20, 6.0)}},
      {"sum", [](Tape& t, const auto& p) { return ad::sum(t, p[0]); }, {rnd(6, 3, 21)}},
      {"mean", [](Tape& t, const auto& p) { return ad::mean(t, p[0]); }, {rnd(6, 3, 22)}},
      {"l2_row_norms", [](Tape& t, const auto& p) { return ad::l2_row_norms(t, p[0]); },
       {away_from_zero(6, 3, 23)}},
      {"concat_rows", [](Tape& t, const auto& p) { return ad::concat_rows(t, p[0], p[1]); },
       {rnd(2, 3, 24), rnd(4, 3, 25)}},
      {"dropout (train, fixed mask)",
       [](Tape& t, const auto& p) {
         Rng r(3);
         return ad::dropout(t, p[0], 0.4, true, r);
       },
       {rnd(6, 3, 26)}},
      {"center", [](Tape& t, const auto& p) { return fnorm::center(t, p[0]); }, {rnd(6, 4, 27, 2.0)}},
      {"l2_row_normalize", [](Tape& t, const auto& p) { return fnorm::l2_row_normalize(t, p[0]); },
       {rnd(6, 4, 28, 2.0)}},
      {"feature_norm", [](Tape& t, const auto& p) { return fnorm::feature_norm(t, p[0]); },
       {rnd(6, 4, 29, 2.0)}},
      {"feature_norm (normalize first)",
       [](Tape& t, const auto& p) {
         return fnorm::feature_norm(t, p[0], fnorm::NormOrder::kNormalizeThenCenter);
       },
       {rnd(6, 4, 30, 2.0)}},
      {"pair_norm", [](Tape& t, const auto& p) { return fnorm::pair_norm(t, p[0], 1.3); },
       {rnd(6, 4, 31, 2.0)}},
      {"pair_norm_si", [](Tape& t, const auto& p) { return fnorm::pair_norm_si(t, p[0], 0.7); },
       {rnd(6, 4, 32, 2.0)}},
  };
  std::vector<Result> out;
  for (const Case& c : cases) out.push_back({c.name, check_op(c.op, c.inputs, 100)});
  return out;
}

// Gradient of sum(step output ⊙ probe) for every model parameter; each
// evaluation restarts from the same initial features.
inline double step_error(fnorm::Framework f, fnorm::NormVariant v, std::uint64_t graph_seed) {
  namespace ad = fnorm::ad;
  fnorm::ModelSpec spec;
  spec.framework = f;
  spec.norm.variant = v;
  spec.dim = 4;
  Rng prng(3);
  fnorm::ModelState state = fnorm::make_model(spec, prng);
  Rng g(graph_seed);
  const auto adj = std::make_shared<const fnorm::NormalizedAdjacency>(
      fnorm::symmetric_normalize(oracle::random_snapshot(6, 0.5, g, true)));
  const Matrix probe = rnd(6, 4, 9);
  auto loss = [&](Tape& tape) {
    state.reset_hidden();
    Rng frng(11), drng(12);
    fnorm::StepOptions opts;
    opts.train = true;
    const Tensor z = fnorm::step(tape, state, adj, frng, drng, opts);
    return ad::sum(tape, ad::hadamard(tape, z, Tensor::constant(probe)));
  };
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  double worst = 0.0;
  for (Tensor& p : state.parameters()) {
    const Matrix analytic = p.grad();
    const Matrix numeric = oracle::numeric_gradient(&p.mutable_value(), [&] {
      Tape tape;
      return loss(tape).value()(0, 0);
    });
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace gradcheck
