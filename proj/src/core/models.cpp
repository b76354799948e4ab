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

#include "fnorm/models.hpp"

#include "fnorm/error.hpp"

namespace fnorm {

Framework parse_framework(std::string_view name) {
  if (name == "dyn_gcn" || name == "dyngcn") return Framework::kDynGcn;
  if (name == "gru_gcn" || name == "grugcn") return Framework::kGruGcn;
  throw ValidationError("unknown framework '" + std::string(name) +
                        "' (expected dyn_gcn or gru_gcn)");
}

std::string_view framework_name(Framework f) {
  return f == Framework::kGruGcn ? "gru_gcn" : "dyn_gcn";
}

std::vector<ad::Tensor> ModelState::parameters() const {
  std::vector<ad::Tensor> p{block.w1, block.w2};
  if (cell) {
    p.insert(p.end(), {cell->w_update, cell->u_update, cell->b_update,
                       cell->w_reset, cell->u_reset, cell->b_reset,
                       cell->w_candidate, cell->u_candidate, cell->b_candidate});
  }
  return p;
}

std::vector<std::string> ModelState::parameter_names() const {
  std::vector<std::string> n{"gcn.w1", "gcn.w2"};
  if (cell) {
    n.insert(n.end(), {"gru.w_update", "gru.u_update", "gru.b_update",
                       "gru.w_reset", "gru.u_reset", "gru.b_reset",
                       "gru.w_candidate", "gru.u_candidate", "gru.b_candidate"});
  }
  return n;
}

void ModelState::reset_hidden() { hidden = ad::Tensor(); }

ModelState make_model(const ModelSpec& spec, Rng& param_rng) {
  if (spec.dim == 0) throw ValidationError("embedding dimension must be >= 1");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) {
    throw ValidationError("dropout must lie in [0, 1)");
  }
  validate(spec.norm);
  const std::size_t d = spec.dim;
  ModelState s;
  s.spec = spec;
  s.block.w1 = ad::Tensor::parameter(ad::glorot_uniform(d, d, param_rng));
  s.block.w2 = ad::Tensor::parameter(ad::glorot_uniform(d, d, param_rng));
  s.block.dropout_p = spec.dropout;
  if (spec.framework == Framework::kGruGcn) {
    auto w = [&] { return ad::Tensor::parameter(ad::glorot_uniform(d, d, param_rng)); };
    auto b = [&] { return ad::Tensor::parameter(Matrix(1, d)); };
    RecurrentCell c;
    c.w_update = w(); c.u_update = w(); c.b_update = b();
    c.w_reset = w(); c.u_reset = w(); c.b_reset = b();
    c.w_candidate = w(); c.u_candidate = w(); c.b_candidate = b();
    s.cell = std::move(c);
  }
  return s;
}

ModelState clone_parameters(const ModelState& state) {
  ModelState out;
  out.spec = state.spec;
  auto copy = [](const ad::Tensor& t) { return ad::Tensor::parameter(t.value()); };
  out.block.w1 = copy(state.block.w1);
  out.block.w2 = copy(state.block.w2);
  out.block.dropout_p = state.block.dropout_p;
  if (state.cell) {
    const RecurrentCell& c = *state.cell;
    out.cell = RecurrentCell{copy(c.w_update), copy(c.u_update), copy(c.b_update),
                             copy(c.w_reset), copy(c.u_reset), copy(c.b_reset),
                             copy(c.w_candidate), copy(c.u_candidate),
                             copy(c.b_candidate)};
  }
  return out;
}

ad::Tensor gcn_forward(ad::Tape& tape, const GcnBlock& block,
                       const std::shared_ptr<const NormalizedAdjacency>& adj,
                       const ad::Tensor& x, bool train, Rng& rng) {
  if (adj->n != x.rows()) {
    throw ShapeError("gcn_forward: adjacency dimension " +
                     std::to_string(adj->n) + " vs input " +
                     x.value().shape_string());
  }
  if (x.cols() != block.w1.rows()) {
    throw ShapeError("gcn_forward: input " + x.value().shape_string() +
                     " vs W1 " + block.w1.value().shape_string());
  }
  ad::Tensor h = ad::dropout(tape, x, block.dropout_p, train, rng);
  h = ad::relu(tape, ad::spmm(tape, adj, ad::matmul(tape, h, block.w1)));
  h = ad::dropout(tape, h, block.dropout_p, train, rng);
  return ad::spmm(tape, adj, ad::matmul(tape, h, block.w2));
}

ad::Tensor transform_only_forward(ad::Tape& tape, const GcnBlock& block,
                                  const ad::Tensor& x, bool train, Rng& rng) {
  ad::Tensor h = ad::dropout(tape, x, block.dropout_p, train, rng);
  h = ad::relu(tape, ad::matmul(tape, h, block.w1));
  h = ad::dropout(tape, h, block.dropout_p, train, rng);
  return ad::matmul(tape, h, block.w2);
}

ad::Tensor gru_forward(ad::Tape& tape, const RecurrentCell& cell,
                       const ad::Tensor& input, const ad::Tensor& prev) {
  using namespace ad;
  auto gate = [&](const Tensor& w, const Tensor& u, const Tensor& b,
                  const Tensor& h) {
    return add(tape, add(tape, matmul(tape, input, w), matmul(tape, h, u)), b);
  };
  const Tensor update = sigmoid(tape, gate(cell.w_update, cell.u_update,
                                           cell.b_update, prev));
  const Tensor reset = sigmoid(tape, gate(cell.w_reset, cell.u_reset,
                                          cell.b_reset, prev));
  const Tensor candidate =
      ad::tanh(tape, gate(cell.w_candidate, cell.u_candidate, cell.b_candidate,
                          hadamard(tape, reset, prev)));
  // (1 - u) ⊙ prev + u ⊙ c == prev + u ⊙ (c - prev)
  return add(tape, prev, hadamard(tape, update, sub(tape, candidate, prev)));
}

void grow_state(ModelState& state, std::size_t new_n, Rng& feature_rng,
                ad::Tape* tape) {
  const std::size_t old_n = state.num_rows();
  if (new_n < old_n) {
    throw ValidationError("grow_state: node set cannot shrink from " +
                          std::to_string(old_n) + " to " +
                          std::to_string(new_n));
  }
  if (new_n == old_n && state.hidden.defined()) return;
  const std::size_t d = state.spec.dim;
  Matrix fresh = ad::uniform_matrix(new_n - old_n, d, ad::glorot_bound(d, d),
                                    feature_rng);
  if (!state.hidden.defined()) {
    state.hidden = ad::Tensor::constant(std::move(fresh));
    return;
  }
  if (state.hidden.requires_grad()) {
    if (tape == nullptr) {
      throw ValidationError("grow_state: recorded hidden state needs a tape");
    }
    state.hidden = ad::concat_rows(*tape, state.hidden,
                                   ad::Tensor::constant(std::move(fresh)));
    return;
  }
  Matrix v = state.hidden.value();
  v.append_rows(fresh);
  state.hidden = ad::Tensor::constant(std::move(v));
}

namespace {

ad::Tensor finish_step(ad::Tape& tape, ModelState& state, ad::Tensor out,
                       const StepOptions& opts) {
  ad::Tensor z = apply_norm(tape, out, state.spec.norm);
  state.hidden = opts.keep_graph ? z : ad::detach(z);
  return z;
}

}  // namespace

ad::Tensor step_dyn_gcn(ad::Tape& tape, ModelState& state,
                        const std::shared_ptr<const NormalizedAdjacency>& adj,
                        Rng& feature_rng, Rng& dropout_rng,
                        const StepOptions& opts) {
  if (state.spec.framework != Framework::kDynGcn) {
    throw ValidationError("step_dyn_gcn called on a gru_gcn model");
  }
  grow_state(state, adj->n, feature_rng, &tape);
  const ad::Tensor x = state.hidden;
  ad::Tensor out =
      opts.skip_aggregation
          ? transform_only_forward(tape, state.block, x, opts.train, dropout_rng)
          : gcn_forward(tape, state.block, adj, x, opts.train, dropout_rng);
  return finish_step(tape, state, std::move(out), opts);
}

ad::Tensor step_gru_gcn(ad::Tape& tape, ModelState& state,
                        const std::shared_ptr<const NormalizedAdjacency>& adj,
                        Rng& feature_rng, Rng& dropout_rng,
                        const StepOptions& opts) {
  if (state.spec.framework != Framework::kGruGcn || !state.cell) {
    throw ValidationError("step_gru_gcn called on a model without a GRU cell");
  }
  grow_state(state, adj->n, feature_rng, &tape);
  const ad::Tensor prev = state.hidden;
  const ad::Tensor s =
      opts.skip_aggregation
          ? transform_only_forward(tape, state.block, prev, opts.train,
                                   dropout_rng)
          : gcn_forward(tape, state.block, adj, prev, opts.train, dropout_rng);
  return finish_step(tape, state, gru_forward(tape, *state.cell, s, prev),
                     opts);
}

ad::Tensor step(ad::Tape& tape, ModelState& state,
                const std::shared_ptr<const NormalizedAdjacency>& adj,
                Rng& feature_rng, Rng& dropout_rng, const StepOptions& opts) {
  return state.spec.framework == Framework::kGruGcn
             ? step_gru_gcn(tape, state, adj, feature_rng, dropout_rng, opts)
             : step_dyn_gcn(tape, state, adj, feature_rng, dropout_rng, opts);
}

}  // namespace fnorm
