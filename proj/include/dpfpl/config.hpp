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

#include <cstdint>
#include <optional>
#include <string>

#include "dpfpl/data.hpp"
#include "dpfpl/encoder.hpp"
#include "dpfpl/privacy.hpp"

namespace dpfpl {

// Prompt-learner structure of a run.
//   kDpFpl:             per-round factorization, residual in the forward pass
//   kDpFplNoResidual:   same, but the residual is zeroed in the forward pass
//   kFullRankLocal:     full-rank global + local prompts (FedOTP-style,
//                       optimal transport replaced by plain local tuning)
//   kSharedOnly:        single shared prompt, local part frozen at zero
//                       (PromptFL-style FedAvg)
//   kPersistentLowRank: factorize once at round 1, then train u and v
//                       directly (FedPGP-style; residual discarded)
enum class VariantMode {
  kDpFpl,
  kDpFplNoResidual,
  kFullRankLocal,
  kSharedOnly,
  kPersistentLowRank,
};

std::string to_string(VariantMode mode);
VariantMode variant_from_string(const std::string& name);

std::string to_string(SplitScheme scheme);
SplitScheme scheme_from_string(const std::string& name);

inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  int schema_version = kConfigSchemaVersion;

  // dims
  index_t prompt_len = 4;
  index_t embed_dim = 32;
  index_t token_dim = 8;
  index_t image_dim = 16;
  index_t num_classes = 8;
  index_t rank = 1;

  // protocol
  index_t num_clients = 4;
  index_t rounds = 20;
  index_t batch_size = 16;
  double eta_global = 0.01;
  double eta_local = 0.01;
  double temperature = 0.01;

  // privacy
  double epsilon = 0.1;
  double delta = 1e-5;
  double clip_threshold = 10.0;
  bool noise = true;

  VariantMode variant = VariantMode::kDpFpl;

  // split
  SplitScheme scheme = SplitScheme::kPathological;
  index_t classes_per_client = 2;
  double alpha = 0.3;

  // data
  index_t per_class = 100;
  double data_noise_scale = 0.25;
  double shard_fraction = 1.0;  // keep only the first fraction of each shard

  // seeds; the task seed pins class means, frozen encoders and the split
  // plan (shadow-model runs share a task while redrawing samples). Unset
  // means the task follows the master seed.
  std::uint64_t master_seed = 1;
  std::optional<std::uint64_t> task_seed;
  index_t repetitions = 1;

  double prompt_init_scale = 0.01;

  std::uint64_t effective_task_seed() const {
    return task_seed.value_or(master_seed);
  }

  void validate() const;  // throws std::invalid_argument, field-level message

  PrivacySpec privacy_spec() const;
  EncoderDims encoder_dims() const;
};

}  // namespace dpfpl
