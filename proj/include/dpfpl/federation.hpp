// Copyright 2026 The dpfpl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dpfpl/config.hpp"
#include "dpfpl/data.hpp"
#include "dpfpl/encoder.hpp"
#include "dpfpl/matrix.hpp"
#include "dpfpl/privacy.hpp"
#include "dpfpl/rng.hpp"

namespace dpfpl {

struct Variant {
  VariantMode mode = VariantMode::kDpFpl;
  index_t rank = 1;
  bool noise_enabled = true;
};

// Per-client protocol state. The local prompt persists across rounds and is
// never aggregated; only clipped global-prompt gradients cross the
// client -> server boundary.
struct ClientState {
  index_t id = 0;
  Matrix p_local;
  Matrix p_global_copy;
  std::vector<index_t> shard;  // train indices into the dataset
  RngStream rng{0, 0};
  double learning_rate = 0.0;
  // persistent-low-rank only: the factors trained across rounds.
  Matrix persistent_u;
  Matrix persistent_v;
  // Local component of the prompt as used in the forward pass this round
  // (equals p_local except for variants that drop the residual).
  Matrix p_deployed;
  bool warned_small_shard = false;
};

struct ServerState {
  Matrix p_global;
  double learning_rate = 0.0;
  RngStream rng{0, 0};
  index_t round = 0;
};

struct ClientRoundResult {
  Matrix grad_global;  // clipped, batch-averaged; noise is added server-side
  double loss = 0.0;
  double noise_norm_local = 0.0;
};

// One client iteration: sync, minibatch, factorize (per variant), forward,
// per-example clipping, batch averaging, local DP noise, gradient
// reconstruction and local update. Consumes the client stream in a fixed
// order (batch, probe, noise on grad_u, noise on grad_v).
ClientRoundResult client_round(ClientState& client, const Matrix& p_global,
                               const SyntheticDataset& data,
                               const FrozenEncoders& encoders,
                               const PrivacySpec& spec,
                               const NoiseScales& scales,
                               const Variant& variant);

struct AggregateResult {
  double noise_norm_global = 0.0;
};

// Weighted average of client gradients in client-id order, global DP noise,
// global prompt update. Weights are the shard-size weights of the federated
// objective (equal shards degenerate to 1/N).
AggregateResult server_aggregate(const std::vector<Matrix>& grads,
                                 std::span<const double> weights,
                                 ServerState& server,
                                 const NoiseScales& scales,
                                 bool noise_enabled);

struct RoundMetrics {
  index_t round = 0;
  double loss = 0.0;  // mean over clients
  std::vector<double> local_acc;
  std::vector<double> neighbor_acc;  // empty for dirichlet runs
  double noise_norm_local_mean = 0.0;
  double noise_norm_global = 0.0;
  double eps_spent = 0.0;
};

struct RunArtifact {
  RunConfig config;
  std::vector<RoundMetrics> metrics;
  Matrix final_global;
  // Deployed local component per client (u v for variants that drop the
  // residual from the forward pass, p_local otherwise).
  std::vector<Matrix> final_locals;
  BudgetReport budget;
};

// Deterministic run inputs derived from a config: dataset, split, eval sets,
// encoders and objective weights. run_training and the MIA harness share
// this so regenerated data always matches the original run.
struct RunSetup {
  SyntheticDataset data;
  SplitPlan plan;
  std::vector<EvalSets> evals;
  FrozenEncoders encoders;
  std::vector<double> weights;
  std::vector<std::vector<index_t>> shards;  // after shard_fraction capping
};

RunSetup prepare_run(const RunConfig& cfg);

// Full T-round protocol. The artifact is a pure function of (config, seed);
// clients within a round may execute on up to `threads` threads without
// affecting the result.
RunArtifact run_training(const RunConfig& cfg, index_t threads = 1);

}  // namespace dpfpl
