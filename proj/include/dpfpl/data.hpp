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

#include "dpfpl/matrix.hpp"
#include "dpfpl/rng.hpp"
#include "dpfpl/sample.hpp"

namespace dpfpl {

// Gaussian-blob classification data with a fixed 70/30 stratified train/test
// split. Stands in for the image datasets at desk scale; the frozen random
// image projection plays the role of a pre-trained image encoder.
struct SyntheticDataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
  Matrix class_means;  // C x m
  double noise_scale = 0.0;
  index_t num_classes = 0;
  index_t feature_dim = 0;
};

SyntheticDataset generate(index_t num_classes, index_t per_class_count,
                          index_t feature_dim, double noise_scale,
                          RngStream& rng);

// Split construction: means come from one stream (the "task"), samples from
// another, so shadow-model runs can share a task while drawing disjoint
// samples. generate() is the single-stream composition of the two.
Matrix sample_class_means(index_t num_classes, index_t feature_dim,
                          RngStream& rng);
SyntheticDataset generate_from_means(const Matrix& class_means,
                                     index_t per_class_count,
                                     double noise_scale, RngStream& rng);

enum class SplitScheme { kPathological, kDirichlet };

struct SplitPlan {
  SplitScheme scheme = SplitScheme::kPathological;
  double alpha = 0.0;  // Dirichlet concentration (unused for pathological)
  // Train-sample index -> client id; -1 marks samples of classes no client
  // owns (possible when num_clients * classes_per_client < num_classes).
  std::vector<index_t> assignment;
  std::vector<std::vector<index_t>> client_train;   // per-client train indices
  std::vector<std::vector<index_t>> local_classes;  // per-client sorted classes
};

// Disjoint class sets: a random permutation of classes is dealt out
// classes_per_client at a time; each client receives every training sample of
// its classes.
SplitPlan pathological_split(const SyntheticDataset& ds, index_t num_clients,
                             index_t classes_per_client, RngStream& rng);

// Per class, proportions ~ Dirichlet(alpha * 1_N) partition that class's
// training samples (largest-remainder rounding, so counts are conserved
// exactly). A client's local classes are those where it holds at least one
// training sample.
SplitPlan dirichlet_split(const SyntheticDataset& ds, index_t num_clients,
                          double alpha, RngStream& rng);

// Per-client test-index sets: local = test samples with labels in the
// client's class set; neighbor = test samples whose labels are owned by
// other clients (and not by this one).
struct EvalSets {
  std::vector<index_t> local_test;
  std::vector<index_t> neighbor_test;
};

std::vector<EvalSets> eval_sets(const SplitPlan& plan,
                                const SyntheticDataset& ds);

// Gamma(alpha, 1) sampler (Marsaglia-Tsang), deterministic per stream.
double sample_gamma(double alpha, RngStream& rng);

}  // namespace dpfpl
