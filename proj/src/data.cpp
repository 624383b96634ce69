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

#include "dpfpl/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpfpl {

double sample_gamma(double alpha, RngStream& rng) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("sample_gamma: alpha must be > 0");
  }
  if (alpha < 1.0) {
    // Boost: Gamma(a) = Gamma(a + 1) * U^(1/a).
    const double u = std::max(rng.next_uniform(), 1e-300);
    return sample_gamma(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.next_gaussian();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.next_uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 &&
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

Matrix sample_class_means(index_t num_classes, index_t feature_dim,
                          RngStream& rng) {
  if (num_classes < 2) {
    throw std::invalid_argument("generate: need at least 2 classes, got " +
                                std::to_string(num_classes));
  }
  if (feature_dim < 1) {
    throw std::invalid_argument("generate: feature_dim must be >= 1");
  }
  Matrix means = gaussian_matrix(num_classes, feature_dim, 1.0, rng);
  for (index_t a = 0; a < num_classes; ++a) {
    for (index_t b = a + 1; b < num_classes; ++b) {
      double diff = 0.0;
      for (index_t j = 0; j < feature_dim; ++j) {
        diff = std::max(diff, std::abs(means(a, j) - means(b, j)));
      }
      if (diff == 0.0) {
        throw std::runtime_error("generate: class means collide");
      }
    }
  }
  return means;
}

SyntheticDataset generate_from_means(const Matrix& class_means,
                                     index_t per_class_count,
                                     double noise_scale, RngStream& rng) {
  if (class_means.rows() < 2 || class_means.cols() < 1) {
    throw std::invalid_argument("generate: class means must be C x m, C >= 2");
  }
  if (per_class_count < 2) {
    throw std::invalid_argument(
        "generate: need at least 2 samples per class, got " +
        std::to_string(per_class_count));
  }
  if (noise_scale < 0.0 || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("generate: noise_scale must be >= 0");
  }
  SyntheticDataset ds;
  ds.num_classes = class_means.rows();
  ds.feature_dim = class_means.cols();
  ds.noise_scale = noise_scale;
  ds.class_means = class_means;

  const index_t test_count = static_cast<index_t>(
      std::llround(0.3 * static_cast<double>(per_class_count)));
  for (index_t c = 0; c < ds.num_classes; ++c) {
    for (index_t s = 0; s < per_class_count; ++s) {
      Sample sample;
      sample.label = c;
      sample.x.resize(static_cast<std::size_t>(ds.feature_dim));
      for (index_t j = 0; j < ds.feature_dim; ++j) {
        sample.x[static_cast<std::size_t>(j)] =
            ds.class_means(c, j) + rng.next_gaussian(noise_scale);
      }
      // Samples are i.i.d., so taking the tail as the test split is already
      // a random stratified split.
      if (s < per_class_count - test_count) {
        ds.train.push_back(std::move(sample));
      } else {
        ds.test.push_back(std::move(sample));
      }
    }
  }
  return ds;
}

SyntheticDataset generate(index_t num_classes, index_t per_class_count,
                          index_t feature_dim, double noise_scale,
                          RngStream& rng) {
  const Matrix means = sample_class_means(num_classes, feature_dim, rng);
  return generate_from_means(means, per_class_count, noise_scale, rng);
}

SplitPlan pathological_split(const SyntheticDataset& ds, index_t num_clients,
                             index_t classes_per_client, RngStream& rng) {
  if (num_clients < 1 || classes_per_client < 1) {
    throw std::invalid_argument("pathological_split: clients and classes per "
                                "client must be >= 1");
  }
  if (num_clients * classes_per_client > ds.num_classes) {
    throw std::invalid_argument(
        "pathological_split: " + std::to_string(num_clients) + " clients x " +
        std::to_string(classes_per_client) + " classes exceed " +
        std::to_string(ds.num_classes) + " available classes");
  }
  std::vector<index_t> perm(static_cast<std::size_t>(ds.num_classes));
  std::iota(perm.begin(), perm.end(), 0);
  for (index_t i = ds.num_classes - 1; i > 0; --i) {
    const index_t j = static_cast<index_t>(rng.next_u64() %
                                           static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }

  SplitPlan plan;
  plan.scheme = SplitScheme::kPathological;
  plan.local_classes.resize(static_cast<std::size_t>(num_clients));
  std::vector<index_t> owner(static_cast<std::size_t>(ds.num_classes), -1);
  for (index_t i = 0; i < num_clients; ++i) {
    auto& classes = plan.local_classes[static_cast<std::size_t>(i)];
    for (index_t k = 0; k < classes_per_client; ++k) {
      const index_t cls = perm[static_cast<std::size_t>(i * classes_per_client + k)];
      classes.push_back(cls);
      owner[static_cast<std::size_t>(cls)] = i;
    }
    std::sort(classes.begin(), classes.end());
  }
  plan.assignment.resize(ds.train.size(), -1);
  plan.client_train.resize(static_cast<std::size_t>(num_clients));
  for (std::size_t idx = 0; idx < ds.train.size(); ++idx) {
    const index_t cl = owner[static_cast<std::size_t>(ds.train[idx].label)];
    plan.assignment[idx] = cl;
    if (cl >= 0) {
      plan.client_train[static_cast<std::size_t>(cl)].push_back(
          static_cast<index_t>(idx));
    }
  }
  return plan;
}

SplitPlan dirichlet_split(const SyntheticDataset& ds, index_t num_clients,
                          double alpha, RngStream& rng) {
  if (num_clients < 2) {
    throw std::invalid_argument("dirichlet_split: need >= 2 clients");
  }
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("dirichlet_split: alpha must be > 0");
  }
  SplitPlan plan;
  plan.scheme = SplitScheme::kDirichlet;
  plan.alpha = alpha;
  plan.assignment.resize(ds.train.size(), -1);
  plan.client_train.resize(static_cast<std::size_t>(num_clients));
  plan.local_classes.resize(static_cast<std::size_t>(num_clients));

  // Train indices grouped by class, in dataset order.
  std::vector<std::vector<index_t>> by_class(
      static_cast<std::size_t>(ds.num_classes));
  for (std::size_t idx = 0; idx < ds.train.size(); ++idx) {
    by_class[static_cast<std::size_t>(ds.train[idx].label)].push_back(
        static_cast<index_t>(idx));
  }

  std::vector<double> gammas(static_cast<std::size_t>(num_clients));
  for (index_t c = 0; c < ds.num_classes; ++c) {
    const auto& members = by_class[static_cast<std::size_t>(c)];
    const index_t total = static_cast<index_t>(members.size());
    if (total == 0) continue;
    double gamma_sum = 0.0;
    for (index_t i = 0; i < num_clients; ++i) {
      gammas[static_cast<std::size_t>(i)] = sample_gamma(alpha, rng);
      gamma_sum += gammas[static_cast<std::size_t>(i)];
    }
    // Largest-remainder rounding of proportional counts.
    std::vector<index_t> counts(static_cast<std::size_t>(num_clients), 0);
    std::vector<std::pair<double, index_t>> remainders;
    index_t assigned = 0;
    for (index_t i = 0; i < num_clients; ++i) {
      const double share = gamma_sum > 0.0
                               ? gammas[static_cast<std::size_t>(i)] / gamma_sum
                               : 1.0 / static_cast<double>(num_clients);
      const double exact = share * static_cast<double>(total);
      const index_t floor_count = static_cast<index_t>(std::floor(exact));
      counts[static_cast<std::size_t>(i)] = floor_count;
      assigned += floor_count;
      remainders.emplace_back(exact - static_cast<double>(floor_count), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) {
                       if (a.first != b.first) return a.first > b.first;
                       return a.second < b.second;
                     });
    const index_t leftover = total - assigned;
    for (index_t k = 0; k < leftover; ++k) {
      counts[static_cast<std::size_t>(
          remainders[static_cast<std::size_t>(k)].second)]++;
    }
    std::size_t cursor = 0;
    for (index_t i = 0; i < num_clients; ++i) {
      for (index_t k = 0; k < counts[static_cast<std::size_t>(i)]; ++k) {
        const index_t idx = members[cursor++];
        plan.assignment[static_cast<std::size_t>(idx)] = i;
        plan.client_train[static_cast<std::size_t>(i)].push_back(idx);
      }
    }
  }
  for (index_t i = 0; i < num_clients; ++i) {
    auto& classes = plan.local_classes[static_cast<std::size_t>(i)];
    std::vector<bool> seen(static_cast<std::size_t>(ds.num_classes), false);
    for (index_t idx : plan.client_train[static_cast<std::size_t>(i)]) {
      seen[static_cast<std::size_t>(ds.train[static_cast<std::size_t>(idx)].label)] = true;
    }
    for (index_t c = 0; c < ds.num_classes; ++c) {
      if (seen[static_cast<std::size_t>(c)]) classes.push_back(c);
    }
  }
  return plan;
}

std::vector<EvalSets> eval_sets(const SplitPlan& plan,
                                const SyntheticDataset& ds) {
  const std::size_t num_clients = plan.local_classes.size();
  std::vector<EvalSets> out(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    std::vector<bool> own(static_cast<std::size_t>(ds.num_classes), false);
    for (index_t c : plan.local_classes[i]) own[static_cast<std::size_t>(c)] = true;
    std::vector<bool> neighbor(static_cast<std::size_t>(ds.num_classes), false);
    for (std::size_t j = 0; j < num_clients; ++j) {
      if (j == i) continue;
      for (index_t c : plan.local_classes[j]) {
        if (!own[static_cast<std::size_t>(c)]) neighbor[static_cast<std::size_t>(c)] = true;
      }
    }
    for (std::size_t idx = 0; idx < ds.test.size(); ++idx) {
      const auto label = static_cast<std::size_t>(ds.test[idx].label);
      if (own[label]) out[i].local_test.push_back(static_cast<index_t>(idx));
      if (neighbor[label]) out[i].neighbor_test.push_back(static_cast<index_t>(idx));
    }
  }
  return out;
}

}  // namespace dpfpl
