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

#include <vector>

#include "dpfpl/config.hpp"
#include "dpfpl/federation.hpp"

namespace dpfpl {

// One black-box query against a target or shadow model: the model's
// confidence vector for a sample, the sample's class, and whether the sample
// was in the attacked client's training shard.
struct AttackRecord {
  index_t label = 0;
  std::vector<double> confidence;
  bool member = false;
};

struct AttackDataset {
  std::vector<AttackRecord> records;

  // Throws unless every class has equal member / non-member counts.
  void validate_balanced() const;
};

// Queries a trained model (its run artifact) for the membership-attack
// records of `target_client`: all capped-shard training samples as members
// and an equal-size draw of that client's local-class test samples as
// non-members, balanced per class. Only confidence outputs are read.
AttackDataset collect_attack_records(const RunConfig& cfg,
                                     const RunArtifact& artifact,
                                     index_t target_client);

// S independent runs of the same configuration family on freshly generated
// datasets (seeds derived from the base seed). Requires S >= 2.
std::vector<RunArtifact> train_shadows(const RunConfig& base,
                                       index_t num_shadows,
                                       index_t threads = 1);

// Shadow records pooled over all shadows, ready to fit the attack.
AttackDataset shadow_attack_dataset(const RunConfig& base, index_t num_shadows,
                                    index_t target_client,
                                    index_t threads = 1);

struct AttackOutcome {
  double success_rate = 0.0;
  double ci_low = 0.0;   // Wilson 95% interval
  double ci_high = 0.0;
  index_t n_queries = 0;
};

// Yeom-style attack: per class, a threshold on the max-confidence is fitted
// on the (balanced) shadow records and applied to the target records.
// Returns the fraction of correct membership guesses with its binomial 95%
// interval.
AttackOutcome attack(const AttackDataset& attack_train,
                     const AttackDataset& target_records);

struct AttackReport {
  double success_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  index_t n_queries = 0;
  double epsilon = 0.0;
  std::string variant;
};

// End-to-end helper: shadows + attack against a finished target run.
AttackReport run_mia(const RunConfig& target_cfg, const RunArtifact& target,
                     index_t num_shadows, index_t target_client,
                     index_t threads = 1);

}  // namespace dpfpl
