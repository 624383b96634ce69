#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dpfpl/data.hpp"

using namespace dpfpl;

namespace {

SyntheticDataset small_dataset(std::uint64_t seed, index_t classes = 4,
                               index_t per_class = 20, double noise = 0.1) {
  RngStream rng(seed, kStreamData);
  return generate(classes, per_class, 6, noise, rng);
}

}  // namespace

TEST_CASE("zero noise collapses blobs onto their means") {
  RngStream rng(70, kStreamData);
  const SyntheticDataset ds = generate(3, 10, 5, 0.0, rng);
  for (const Sample& s : ds.train) {
    for (index_t j = 0; j < ds.feature_dim; ++j) {
      CHECK(s.x[static_cast<std::size_t>(j)] == ds.class_means(s.label, j));
    }
  }
}

TEST_CASE("well-separated two-class data is nearest-mean separable") {
  RngStream rng(71, kStreamData);
  const SyntheticDataset ds = generate(2, 60, 8, 0.05, rng);
  index_t correct = 0;
  for (const Sample& s : ds.test) {
    double best = 1e300;
    index_t pick = -1;
    for (index_t c = 0; c < ds.num_classes; ++c) {
      double dist = 0.0;
      for (index_t j = 0; j < ds.feature_dim; ++j) {
        const double diff = s.x[static_cast<std::size_t>(j)] - ds.class_means(c, j);
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        pick = c;
      }
    }
    if (pick == s.label) ++correct;
  }
  CHECK(correct == static_cast<index_t>(ds.test.size()));
}

TEST_CASE("stratified split puts 30 percent of each class in test") {
  const SyntheticDataset ds = small_dataset(72, 5, 21);
  for (index_t c = 0; c < ds.num_classes; ++c) {
    index_t test_count = 0;
    for (const Sample& s : ds.test) {
      if (s.label == c) ++test_count;
    }
    CHECK(std::abs(static_cast<double>(test_count) - 0.3 * 21.0) <= 1.0);
  }
  CHECK(ds.train.size() + ds.test.size() == 5 * 21);
}

TEST_CASE("generate rejects degenerate parameters") {
  RngStream rng(73, kStreamData);
  CHECK_THROWS_AS(generate(1, 10, 4, 0.1, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate(3, 1, 4, 0.1, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate(3, 10, 4, -0.5, rng), std::invalid_argument);
}

TEST_CASE("train and test class means agree within three standard errors") {
  RngStream rng(74, kStreamData);
  const SyntheticDataset ds = generate(4, 200, 8, 0.5, rng);
  for (index_t c = 0; c < ds.num_classes; ++c) {
    std::vector<double> mean_train(static_cast<std::size_t>(ds.feature_dim), 0.0);
    std::vector<double> mean_test(static_cast<std::size_t>(ds.feature_dim), 0.0);
    index_t n_train = 0, n_test = 0;
    for (const Sample& s : ds.train) {
      if (s.label != c) continue;
      ++n_train;
      for (index_t j = 0; j < ds.feature_dim; ++j) {
        mean_train[static_cast<std::size_t>(j)] += s.x[static_cast<std::size_t>(j)];
      }
    }
    for (const Sample& s : ds.test) {
      if (s.label != c) continue;
      ++n_test;
      for (index_t j = 0; j < ds.feature_dim; ++j) {
        mean_test[static_cast<std::size_t>(j)] += s.x[static_cast<std::size_t>(j)];
      }
    }
    double gap_sq = 0.0;
    for (index_t j = 0; j < ds.feature_dim; ++j) {
      const double a = mean_train[static_cast<std::size_t>(j)] / n_train;
      const double b = mean_test[static_cast<std::size_t>(j)] / n_test;
      gap_sq += (a - b) * (a - b);
    }
    const double se = ds.noise_scale *
                      std::sqrt(static_cast<double>(ds.feature_dim) *
                                (1.0 / n_train + 1.0 / n_test));
    CHECK(std::sqrt(gap_sq) <= 3.0 * se);
  }
}

TEST_CASE("pathological split with one class each is a permutation") {
  const SyntheticDataset ds = small_dataset(75, 10, 10);
  RngStream rng(76, 1);
  const SplitPlan plan = pathological_split(ds, 10, 1, rng);
  std::set<index_t> seen;
  for (const auto& classes : plan.local_classes) {
    REQUIRE(classes.size() == 1);
    seen.insert(classes[0]);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("pathological class sets partition the assigned classes") {
  const SyntheticDataset ds = small_dataset(77, 8, 12);
  RngStream rng(78, 1);
  const SplitPlan plan = pathological_split(ds, 4, 2, rng);
  std::set<index_t> all;
  std::size_t total = 0;
  for (const auto& classes : plan.local_classes) {
    for (index_t c : classes) all.insert(c);
    total += classes.size();
  }
  CHECK(all.size() == total);  // pairwise disjoint
  CHECK(total == 8);

  // Sample counts per client match the per-class counts.
  for (std::size_t i = 0; i < plan.client_train.size(); ++i) {
    index_t expected = 0;
    for (index_t c : plan.local_classes[i]) {
      for (const Sample& s : ds.train) {
        if (s.label == c) ++expected;
      }
    }
    CHECK(static_cast<index_t>(plan.client_train[i].size()) == expected);
  }
  // Every train sample of an owned class is assigned exactly once.
  std::size_t assigned = 0;
  for (index_t a : plan.assignment) {
    if (a >= 0) ++assigned;
  }
  CHECK(assigned == ds.train.size());
}

TEST_CASE("pathological split rejects infeasible configurations") {
  const SyntheticDataset ds = small_dataset(79, 4, 10);
  RngStream rng(80, 1);
  CHECK_THROWS_AS(pathological_split(ds, 3, 2, rng), std::invalid_argument);
}

TEST_CASE("dirichlet with huge alpha approaches the uniform split") {
  const SyntheticDataset ds = small_dataset(81, 4, 200, 0.3);
  RngStream rng(82, 1);
  const SplitPlan plan = dirichlet_split(ds, 4, 1e6, rng);
  const double per_client_class = 140.0 / 4.0;  // 200 * 0.7 train per class
  for (const auto& shard : plan.client_train) {
    std::vector<index_t> counts(4, 0);
    for (index_t idx : shard) {
      counts[static_cast<std::size_t>(ds.train[static_cast<std::size_t>(idx)].label)]++;
    }
    for (index_t c : counts) {
      CHECK(std::abs(static_cast<double>(c) - per_client_class) <=
            0.05 * per_client_class);
    }
  }
}

TEST_CASE("dirichlet alpha 0.3 is a valid, heterogeneous partition") {
  const SyntheticDataset ds = small_dataset(83, 10, 40, 0.3);
  RngStream rng(84, 1);
  const SplitPlan plan = dirichlet_split(ds, 25, 0.3, rng);

  // Every train sample assigned exactly once.
  std::vector<index_t> hits(ds.train.size(), 0);
  for (const auto& shard : plan.client_train) {
    for (index_t idx : shard) hits[static_cast<std::size_t>(idx)]++;
  }
  for (index_t h : hits) CHECK(h == 1);

  // Heterogeneity: mean max-class share per client beats the near-uniform
  // baseline computed from a fresh high-alpha draw.
  auto mean_max_share = [&](const SplitPlan& p) {
    double total = 0.0;
    index_t counted = 0;
    for (const auto& shard : p.client_train) {
      if (shard.empty()) continue;
      std::vector<index_t> counts(static_cast<std::size_t>(ds.num_classes), 0);
      for (index_t idx : shard) {
        counts[static_cast<std::size_t>(ds.train[static_cast<std::size_t>(idx)].label)]++;
      }
      total += static_cast<double>(*std::max_element(counts.begin(),
                                                     counts.end())) /
               static_cast<double>(shard.size());
      ++counted;
    }
    return total / static_cast<double>(counted);
  };
  RngStream uniform_rng(85, 1);
  const SplitPlan uniform = dirichlet_split(ds, 25, 1e6, uniform_rng);
  CHECK(mean_max_share(plan) > mean_max_share(uniform));
}

TEST_CASE("dirichlet per-class counts are conserved exactly") {
  const SyntheticDataset ds = small_dataset(86, 6, 33, 0.3);
  RngStream rng(87, 1);
  const SplitPlan plan = dirichlet_split(ds, 5, 0.3, rng);
  for (index_t c = 0; c < ds.num_classes; ++c) {
    index_t total = 0;
    for (const auto& shard : plan.client_train) {
      for (index_t idx : shard) {
        if (ds.train[static_cast<std::size_t>(idx)].label == c) ++total;
      }
    }
    index_t expected = 0;
    for (const Sample& s : ds.train) {
      if (s.label == c) ++expected;
    }
    CHECK(total == expected);
  }
}

TEST_CASE("dirichlet local classes are the classes with training data") {
  const SyntheticDataset ds = small_dataset(88, 6, 24, 0.3);
  RngStream rng(89, 1);
  const SplitPlan plan = dirichlet_split(ds, 6, 0.3, rng);
  for (std::size_t i = 0; i < plan.client_train.size(); ++i) {
    std::set<index_t> expected;
    for (index_t idx : plan.client_train[i]) {
      expected.insert(ds.train[static_cast<std::size_t>(idx)].label);
    }
    const std::set<index_t> got(plan.local_classes[i].begin(),
                                plan.local_classes[i].end());
    CHECK(got == expected);
  }
}

TEST_CASE("eval sets split local and neighbor classes") {
  const SyntheticDataset ds = small_dataset(90, 4, 20);
  RngStream rng(91, 1);
  const SplitPlan plan = pathological_split(ds, 2, 2, rng);
  const std::vector<EvalSets> evals = eval_sets(plan, ds);
  REQUIRE(evals.size() == 2);

  // Client 0's neighbor set is exactly client 1's local set and vice versa.
  for (int i = 0; i < 2; ++i) {
    const auto& own = plan.local_classes[static_cast<std::size_t>(i)];
    const auto& other = plan.local_classes[static_cast<std::size_t>(1 - i)];
    for (index_t idx : evals[static_cast<std::size_t>(i)].local_test) {
      const index_t label = ds.test[static_cast<std::size_t>(idx)].label;
      CHECK(std::find(own.begin(), own.end(), label) != own.end());
    }
    for (index_t idx : evals[static_cast<std::size_t>(i)].neighbor_test) {
      const index_t label = ds.test[static_cast<std::size_t>(idx)].label;
      CHECK(std::find(other.begin(), other.end(), label) != other.end());
    }
    // Local and neighbor cover all test samples of assigned classes,
    // disjointly.
    CHECK(evals[static_cast<std::size_t>(i)].local_test.size() +
              evals[static_cast<std::size_t>(i)].neighbor_test.size() ==
          ds.test.size());
    std::set<index_t> overlap(evals[static_cast<std::size_t>(i)].local_test.begin(),
                              evals[static_cast<std::size_t>(i)].local_test.end());
    for (index_t idx : evals[static_cast<std::size_t>(i)].neighbor_test) {
      CHECK(overlap.find(idx) == overlap.end());
    }
  }
}

TEST_CASE("splits are reproducible from the seed") {
  const SyntheticDataset ds_a = small_dataset(92);
  const SyntheticDataset ds_b = small_dataset(92);
  CHECK(ds_a.train.size() == ds_b.train.size());
  for (std::size_t i = 0; i < ds_a.train.size(); ++i) {
    CHECK(ds_a.train[i].label == ds_b.train[i].label);
    CHECK(ds_a.train[i].x == ds_b.train[i].x);
  }
  RngStream r1(93, 1), r2(93, 1);
  const SplitPlan p1 = pathological_split(ds_a, 2, 2, r1);
  const SplitPlan p2 = pathological_split(ds_b, 2, 2, r2);
  CHECK(p1.assignment == p2.assignment);
  CHECK(p1.local_classes == p2.local_classes);
}

TEST_CASE("no test sample is reachable from training shards") {
  // Train and test are separate pools; shards index only into train.
  const SyntheticDataset ds = small_dataset(94, 6, 30);
  RngStream rng(95, 1);
  const SplitPlan plan = dirichlet_split(ds, 3, 0.5, rng);
  for (const auto& shard : plan.client_train) {
    for (index_t idx : shard) {
      CHECK(idx >= 0);
      CHECK(static_cast<std::size_t>(idx) < ds.train.size());
    }
  }
}

TEST_CASE("gamma sampler has roughly the right mean") {
  RngStream rng(96, 1);
  for (double alpha : {0.3, 1.0, 4.5}) {
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += sample_gamma(alpha, rng);
    CHECK(std::abs(sum / n - alpha) <= 0.05 * std::max(alpha, 1.0));
  }
}
