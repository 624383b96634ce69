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

namespace dpfpl {

// Privacy parameters of a run plus the derived mechanism sensitivities.
//
// Sensitivities follow the add/remove neighboring convention with
// per-example clipping before batch averaging:
//   S_local  = clip_threshold / batch_size
//   S_global = clip_threshold / (num_clients * batch_size)
struct PrivacySpec {
  double epsilon = 0.1;
  double delta = 1e-5;
  double clip_threshold = 10.0;
  index_t rounds = 100;
  index_t batch_size = 32;
  index_t num_clients = 10;

  void validate() const;  // throws std::invalid_argument with field messages

  double local_sensitivity() const {
    return clip_threshold / static_cast<double>(batch_size);
  }
  double global_sensitivity() const {
    return clip_threshold /
           static_cast<double>(num_clients * batch_size);
  }
};

struct NoiseScales {
  double sigma_local = 0.0;
  double sigma_global = 0.0;
};

// Gaussian-mechanism scale for an (epsilon, delta) target over `rounds`
// sequential applications (advanced composition):
//   sigma = sensitivity * sqrt(rounds) * sqrt(2 ln(1.25/delta)) / epsilon
double calibrate_sigma(double sensitivity, double epsilon, double delta,
                       index_t rounds);

// Both scales for one spec; sigma_global = sigma_local / num_clients.
NoiseScales calibrate(const PrivacySpec& spec);

// Frobenius-norm clipping: returns g unchanged when ||g||_F <= threshold,
// otherwise g scaled so the output norm is <= threshold (and equals it up to
// rounding). Idempotent bit-for-bit.
Matrix clip(const Matrix& g, double threshold);

// Gaussian mechanism: g + N(0, sigma^2) per entry; sigma = 0 returns g
// unchanged without consuming the stream.
Matrix privatize(const Matrix& g, double sigma, RngStream& rng);

// Per-example clipping followed by averaging over the nominal batch size
// (the denominator stays fixed even if fewer gradients are passed, which is
// what makes the add/remove sensitivity bound hold).
Matrix clip_and_average(const std::vector<Matrix>& per_example,
                        double threshold, index_t nominal_batch);

struct BudgetReport {
  double epsilon_spent_local = 0.0;
  double epsilon_spent_global = 0.0;
  double delta = 0.0;
  index_t rounds_elapsed = 0;
  double sigma_local = 0.0;
  double sigma_global = 0.0;
};

// Closed-form budget under advanced composition: each track has consumed
// epsilon * sqrt(t / T) after t of T rounds. The local figure is the joint
// budget across all clients: their mechanisms act on disjoint shards, so
// parallel composition makes the joint cost the per-client maximum, not the
// sum. rounds_elapsed > spec.rounds is rejected (budget exhausted).
BudgetReport account(const PrivacySpec& spec, index_t rounds_elapsed);

}  // namespace dpfpl
