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

#include "dpfpl/privacy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpfpl {

void PrivacySpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("privacy.epsilon: must be > 0, got " +
                                std::to_string(epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("privacy.delta: must be in (0, 1), got " +
                                std::to_string(delta));
  }
  if (!(clip_threshold > 0.0) || !std::isfinite(clip_threshold)) {
    throw std::invalid_argument("privacy.clip_threshold: must be > 0, got " +
                                std::to_string(clip_threshold));
  }
  if (rounds < 1) {
    throw std::invalid_argument("privacy.rounds: must be >= 1, got " +
                                std::to_string(rounds));
  }
  if (batch_size < 1) {
    throw std::invalid_argument("privacy.batch_size: must be >= 1, got " +
                                std::to_string(batch_size));
  }
  if (num_clients < 1) {
    throw std::invalid_argument("privacy.num_clients: must be >= 1, got " +
                                std::to_string(num_clients));
  }
}

double calibrate_sigma(double sensitivity, double epsilon, double delta,
                       index_t rounds) {
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw std::invalid_argument("calibrate_sigma: sensitivity must be > 0");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("calibrate_sigma: epsilon must be > 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("calibrate_sigma: delta must be in (0, 1)");
  }
  if (rounds < 1) {
    throw std::invalid_argument("calibrate_sigma: rounds must be >= 1");
  }
  return sensitivity * std::sqrt(static_cast<double>(rounds)) *
         std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

NoiseScales calibrate(const PrivacySpec& spec) {
  spec.validate();
  NoiseScales scales;
  scales.sigma_local = calibrate_sigma(spec.local_sensitivity(), spec.epsilon,
                                       spec.delta, spec.rounds);
  scales.sigma_global = calibrate_sigma(
      spec.global_sensitivity(), spec.epsilon, spec.delta, spec.rounds);
  return scales;
}

Matrix clip(const Matrix& g, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw std::invalid_argument("clip: threshold must be > 0, got " +
                                std::to_string(threshold));
  }
  const double norm = frobenius_norm(g);
  if (norm <= threshold) return g;
  double scale = threshold / norm;
  Matrix out = scale * g;
  // Rounding can leave the rescaled norm an ulp above the threshold; walk the
  // scale down so clip(clip(g)) == clip(g) bit-for-bit.
  while (frobenius_norm(out) > threshold) {
    scale = std::nextafter(scale, 0.0);
    out = scale * g;
  }
  return out;
}

Matrix privatize(const Matrix& g, double sigma, RngStream& rng) {
  if (sigma == 0.0) return g;
  return g + gaussian_matrix(g.rows(), g.cols(), sigma, rng);
}

Matrix clip_and_average(const std::vector<Matrix>& per_example,
                        double threshold, index_t nominal_batch) {
  if (per_example.empty()) {
    throw std::invalid_argument("clip_and_average: empty gradient list");
  }
  if (nominal_batch < 1) {
    throw std::invalid_argument("clip_and_average: nominal batch must be >= 1");
  }
  Matrix sum(per_example.front().rows(), per_example.front().cols());
  for (const Matrix& g : per_example) {
    sum += clip(g, threshold);
  }
  return (1.0 / static_cast<double>(nominal_batch)) * sum;
}

BudgetReport account(const PrivacySpec& spec, index_t rounds_elapsed) {
  spec.validate();
  if (rounds_elapsed < 0) {
    throw std::invalid_argument("account: rounds_elapsed must be >= 0");
  }
  if (rounds_elapsed > spec.rounds) {
    throw std::invalid_argument(
        "account: budget exhausted, rounds_elapsed " +
        std::to_string(rounds_elapsed) + " exceeds configured rounds " +
        std::to_string(spec.rounds));
  }
  const double fraction = std::sqrt(static_cast<double>(rounds_elapsed) /
                                    static_cast<double>(spec.rounds));
  const NoiseScales scales = calibrate(spec);
  BudgetReport report;
  report.epsilon_spent_local = spec.epsilon * fraction;
  report.epsilon_spent_global = spec.epsilon * fraction;
  report.delta = spec.delta;
  report.rounds_elapsed = rounds_elapsed;
  report.sigma_local = scales.sigma_local;
  report.sigma_global = scales.sigma_global;
  return report;
}

}  // namespace dpfpl
