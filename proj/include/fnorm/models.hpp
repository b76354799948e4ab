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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fnorm/autodiff.hpp"
#include "fnorm/graph.hpp"
#include "fnorm/norms.hpp"

namespace fnorm {

enum class Framework { kDynGcn, kGruGcn };

Framework parse_framework(std::string_view name);  // dyn_gcn | gru_gcn
std::string_view framework_name(Framework f);

// Two-layer graph convolution Ã ReLU(Ã X W1) W2. Shared by every step.
struct GcnBlock {
  ad::Tensor w1;  // d_in x d_h
  ad::Tensor w2;  // d_h x d_out
  double dropout_p = 0.25;
};

// GRU cell over the embedding dimension d. Each gate has an input map, a
// hidden map and a 1 x d bias.
struct RecurrentCell {
  ad::Tensor w_update, u_update, b_update;
  ad::Tensor w_reset, u_reset, b_reset;
  ad::Tensor w_candidate, u_candidate, b_candidate;
};

struct ModelSpec {
  Framework framework = Framework::kDynGcn;
  NormKind norm;
  std::size_t dim = 32;  // input, hidden and output width
  double dropout = 0.25;
};

// Learnable parameters plus the carried per-node state H_{t-1}.
struct ModelState {
  ModelSpec spec;
  GcnBlock block;
  std::optional<RecurrentCell> cell;
  // Carried state; may be recorded (not detached) inside a truncated
  // backpropagation window longer than one step.
  ad::Tensor hidden;

  std::size_t num_rows() const { return hidden.defined() ? hidden.rows() : 0; }
  // Every learnable tensor, in a fixed order (GCN first, then GRU gates).
  std::vector<ad::Tensor> parameters() const;
  std::vector<std::string> parameter_names() const;
  // Drops the carried state (start of a new pass over the sequence).
  void reset_hidden();
};

// Glorot-initialized weights, zero GRU biases, empty hidden state.
ModelState make_model(const ModelSpec& spec, Rng& param_rng);

// Deep copy of the parameters (fresh tensors) with an empty hidden state.
ModelState clone_parameters(const ModelState& state);

// Ã·ReLU(Ã·dropout(x)·W1) then dropout, Ã·(·)·W2. Dropout only in train mode.
ad::Tensor gcn_forward(ad::Tape& tape, const GcnBlock& block,
                       const std::shared_ptr<const NormalizedAdjacency>& adj,
                       const ad::Tensor& x, bool train, Rng& rng);

// Same block with the aggregation bypassed: ReLU(dropout(x)·W1)·W2.
ad::Tensor transform_only_forward(ad::Tape& tape, const GcnBlock& block,
                                  const ad::Tensor& x, bool train, Rng& rng);

// h = (1 - u) ⊙ prev + u ⊙ c with u, r, c the standard GRU gates.
ad::Tensor gru_forward(ad::Tape& tape, const RecurrentCell& cell,
                       const ad::Tensor& input, const ad::Tensor& prev);

// Appends new_n - rows Glorot rows (bound sqrt(6 / (d + d))); existing rows
// are untouched. Throws ValidationError when asked to shrink.
void grow_state(ModelState& state, std::size_t new_n, Rng& feature_rng,
                ad::Tape* tape = nullptr);

struct StepOptions {
  bool train = false;
  // Bypass aggregation (transformation only); used by diagnostics.
  bool skip_aggregation = false;
  // Keep the new hidden state on the tape instead of detaching it.
  bool keep_graph = false;
};

// One temporal step. Grows the state to the snapshot's node count, runs the
// framework, applies the configured norm to the final layer and carries the
// (by default detached) output as the next hidden state.
ad::Tensor step_dyn_gcn(ad::Tape& tape, ModelState& state,
                        const std::shared_ptr<const NormalizedAdjacency>& adj,
                        Rng& feature_rng, Rng& dropout_rng,
                        const StepOptions& opts = {});
ad::Tensor step_gru_gcn(ad::Tape& tape, ModelState& state,
                        const std::shared_ptr<const NormalizedAdjacency>& adj,
                        Rng& feature_rng, Rng& dropout_rng,
                        const StepOptions& opts = {});
// Dispatches on state.spec.framework.
ad::Tensor step(ad::Tape& tape, ModelState& state,
                const std::shared_ptr<const NormalizedAdjacency>& adj,
                Rng& feature_rng, Rng& dropout_rng,
                const StepOptions& opts = {});

// Checkpoint: magic "FNCKPT01", little-endian u64 header length, JSON header
// (framework, dims, norm, seed, extra metadata, array table), then the
// shape-tagged float64 arrays in table order.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string extra_json = "{}";  // embedded verbatim under "extra"
};

void save_checkpoint(const ModelState& state, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path,
                           CheckpointMeta* meta = nullptr);

}  // namespace fnorm
