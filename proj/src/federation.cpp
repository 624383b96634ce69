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

#include "dpfpl/federation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <thread>

#include "dpfpl/factorization.hpp"

namespace dpfpl {
namespace {

std::vector<Sample> sample_batch(const std::vector<index_t>& shard,
                                 const SyntheticDataset& data,
                                 index_t batch_size, ClientState& client) {
  if (shard.empty()) {
    throw std::runtime_error("client_round: client " +
                             std::to_string(client.id) + " has an empty shard");
  }
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  const auto n = static_cast<std::uint64_t>(shard.size());
  if (static_cast<index_t>(shard.size()) < batch_size) {
    if (!client.warned_small_shard) {
      std::fprintf(stderr,
                   "warning: client %lld shard (%zu) smaller than batch size "
                   "(%lld); sampling with replacement\n",
                   static_cast<long long>(client.id), shard.size(),
                   static_cast<long long>(batch_size));
      client.warned_small_shard = true;
    }
    for (index_t k = 0; k < batch_size; ++k) {
      const auto pick = static_cast<std::size_t>(client.rng.next_u64() % n);
      batch.push_back(data.train[static_cast<std::size_t>(shard[pick])]);
    }
    return batch;
  }
  // Partial Fisher-Yates over a scratch copy: first batch_size entries form
  // a uniform sample without replacement.
  std::vector<index_t> scratch = shard;
  for (index_t k = 0; k < batch_size; ++k) {
    const auto span_left = static_cast<std::uint64_t>(scratch.size() - k);
    const auto pick = static_cast<std::size_t>(k) +
                      static_cast<std::size_t>(client.rng.next_u64() % span_left);
    std::swap(scratch[static_cast<std::size_t>(k)], scratch[pick]);
    batch.push_back(
        data.train[static_cast<std::size_t>(scratch[static_cast<std::size_t>(k)])]);
  }
  return batch;
}

double combined_noise_norm(const Matrix& noisy_a, const Matrix& clean_a,
                           const Matrix& noisy_b, const Matrix& clean_b) {
  const double na = frobenius_norm(noisy_a - clean_a);
  const double nb = frobenius_norm(noisy_b - clean_b);
  return std::sqrt(na * na + nb * nb);
}

}  // namespace

ClientRoundResult client_round(ClientState& client, const Matrix& p_global,
                               const SyntheticDataset& data,
                               const FrozenEncoders& encoders,
                               const PrivacySpec& spec,
                               const NoiseScales& scales,
                               const Variant& variant) {
  client.p_global_copy = p_global;
  const std::vector<Sample> batch =
      sample_batch(client.shard, data, spec.batch_size, client);
  const double sigma_local = variant.noise_enabled ? scales.sigma_local : 0.0;

  ClientRoundResult result;

  switch (variant.mode) {
    case VariantMode::kSharedOnly: {
      // Single shared prompt: the local component stays frozen at zero.
      PromptGradients core =
          prompt_gradients(client.p_global_copy, client.p_local, encoders, batch);
      result.grad_global = clip_and_average(
          core.per_example_grad, spec.clip_threshold, spec.batch_size);
      result.loss = core.mean_loss;
      client.p_deployed = client.p_local;
      break;
    }
    case VariantMode::kFullRankLocal: {
      PromptGradients core =
          prompt_gradients(client.p_global_copy, client.p_local, encoders, batch);
      const Matrix avg = clip_and_average(
          core.per_example_grad, spec.clip_threshold, spec.batch_size);
      result.grad_global = avg;
      // LDP noise goes straight onto the full-rank local gradient.
      const Matrix noisy = privatize(avg, sigma_local, client.rng);
      result.noise_norm_local = frobenius_norm(noisy - avg);
      client.p_local -= client.learning_rate * noisy;
      result.loss = core.mean_loss;
      client.p_deployed = client.p_local;
      break;
    }
    case VariantMode::kPersistentLowRank: {
      if (client.persistent_u.empty()) {
        const FactoredPrompt once =
            factorize(client.p_local, variant.rank, client.rng);
        client.persistent_u = once.u;
        client.persistent_v = once.v;
      }
      FactoredPrompt factored;
      factored.rank = variant.rank;
      factored.u = client.persistent_u;
      factored.v = client.persistent_v;
      factored.r = Matrix::zero(client.p_local.rows(), client.p_local.cols());
      BatchGrads grads =
          loss_and_grads(client.p_global_copy, factored, encoders, batch);
      std::vector<Matrix> g_global, g_u, g_v;
      g_global.reserve(grads.per_example.size());
      for (auto& eg : grads.per_example) {
        g_global.push_back(std::move(eg.grad_global));
        g_u.push_back(std::move(eg.grad_u));
        g_v.push_back(std::move(eg.grad_v));
      }
      result.grad_global =
          clip_and_average(g_global, spec.clip_threshold, spec.batch_size);
      const Matrix avg_u =
          clip_and_average(g_u, spec.clip_threshold, spec.batch_size);
      const Matrix avg_v =
          clip_and_average(g_v, spec.clip_threshold, spec.batch_size);
      const Matrix noisy_u = privatize(avg_u, sigma_local, client.rng);
      const Matrix noisy_v = privatize(avg_v, sigma_local, client.rng);
      result.noise_norm_local =
          combined_noise_norm(noisy_u, avg_u, noisy_v, avg_v);
      client.persistent_u -= client.learning_rate * noisy_u;
      client.persistent_v -= client.learning_rate * noisy_v;
      client.p_local = matmul(client.persistent_u, client.persistent_v);
      result.loss = grads.loss;
      client.p_deployed = client.p_local;
      break;
    }
    case VariantMode::kDpFpl:
    case VariantMode::kDpFplNoResidual: {
      FactoredPrompt factored =
          factorize(client.p_local, variant.rank, client.rng);
      client.p_local = factored.reconstruct();
      const bool keep_residual = variant.mode == VariantMode::kDpFpl;
      FactoredPrompt forward = factored;
      if (!keep_residual) {
        forward.r = Matrix::zero(factored.r.rows(), factored.r.cols());
      }
      BatchGrads grads =
          loss_and_grads(client.p_global_copy, forward, encoders, batch);
      std::vector<Matrix> g_global, g_u, g_v;
      g_global.reserve(grads.per_example.size());
      for (auto& eg : grads.per_example) {
        g_global.push_back(std::move(eg.grad_global));
        g_u.push_back(std::move(eg.grad_u));
        g_v.push_back(std::move(eg.grad_v));
      }
      result.grad_global =
          clip_and_average(g_global, spec.clip_threshold, spec.batch_size);
      const Matrix avg_u =
          clip_and_average(g_u, spec.clip_threshold, spec.batch_size);
      const Matrix avg_v =
          clip_and_average(g_v, spec.clip_threshold, spec.batch_size);
      const Matrix noisy_u = privatize(avg_u, sigma_local, client.rng);
      const Matrix noisy_v = privatize(avg_v, sigma_local, client.rng);
      result.noise_norm_local =
          combined_noise_norm(noisy_u, avg_u, noisy_v, avg_v);
      const Matrix grad_local =
          reconstruct_gradient(noisy_u, noisy_v, factored.u, factored.v);
      client.p_local -= client.learning_rate * grad_local;
      result.loss = grads.loss;
      client.p_deployed =
          keep_residual ? client.p_local : factored.low_rank();
      break;
    }
  }
  return result;
}

AggregateResult server_aggregate(const std::vector<Matrix>& grads,
                                 std::span<const double> weights,
                                 ServerState& server,
                                 const NoiseScales& scales,
                                 bool noise_enabled) {
  if (grads.empty()) {
    throw std::invalid_argument("server_aggregate: empty gradient list");
  }
  if (weights.size() != grads.size()) {
    throw std::invalid_argument("server_aggregate: " +
                                std::to_string(grads.size()) +
                                " gradients but " +
                                std::to_string(weights.size()) + " weights");
  }
  Matrix mean(grads.front().rows(), grads.front().cols());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].same_shape(mean)) {
      throw std::invalid_argument("server_aggregate: gradient " +
                                  std::to_string(i) + " has wrong shape");
    }
    mean += weights[i] * grads[i];
  }
  const double sigma = noise_enabled ? scales.sigma_global : 0.0;
  const Matrix noisy = privatize(mean, sigma, server.rng);
  AggregateResult result;
  result.noise_norm_global = frobenius_norm(noisy - mean);
  server.p_global -= server.learning_rate * noisy;
  server.round += 1;
  return result;
}

RunSetup prepare_run(const RunConfig& cfg) {
  cfg.validate();
  const std::uint64_t task = cfg.effective_task_seed();
  RngStream means_rng(task, kStreamTaskMeans);
  const Matrix means =
      sample_class_means(cfg.num_classes, cfg.image_dim, means_rng);
  RngStream data_rng(cfg.master_seed, kStreamData);
  SyntheticDataset data = generate_from_means(means, cfg.per_class,
                                              cfg.data_noise_scale, data_rng);
  RngStream split_rng(task, kStreamSplit);
  SplitPlan plan =
      cfg.scheme == SplitScheme::kPathological
          ? pathological_split(data, cfg.num_clients, cfg.classes_per_client,
                               split_rng)
          : dirichlet_split(data, cfg.num_clients, cfg.alpha, split_rng);
  std::vector<EvalSets> evals = eval_sets(plan, data);

  RngStream enc_rng(task, kStreamEncoders);
  FrozenEncoders encoders(cfg.encoder_dims(), cfg.temperature, enc_rng);

  std::vector<std::vector<index_t>> shards = plan.client_train;
  if (cfg.shard_fraction < 1.0) {
    for (auto& shard : shards) {
      const auto keep = static_cast<std::size_t>(std::ceil(
          cfg.shard_fraction * static_cast<double>(shard.size())));
      if (keep < shard.size()) shard.resize(std::max<std::size_t>(keep, 1));
    }
  }
  double total = 0.0;
  std::vector<double> weights(static_cast<std::size_t>(cfg.num_clients), 0.0);
  for (std::size_t i = 0; i < shards.size(); ++i) {
    weights[i] = static_cast<double>(shards[i].size());
    total += weights[i];
  }
  if (total <= 0.0) {
    throw std::runtime_error("prepare_run: all client shards are empty");
  }
  for (double& w : weights) w /= total;

  return RunSetup{std::move(data), std::move(plan), std::move(evals),
                  std::move(encoders), std::move(weights), std::move(shards)};
}

RunArtifact run_training(const RunConfig& cfg, index_t threads) {
  RunSetup setup = prepare_run(cfg);
  const PrivacySpec spec = cfg.privacy_spec();
  const NoiseScales scales = cfg.noise ? calibrate(spec) : NoiseScales{};
  const Variant variant{cfg.variant, cfg.rank, cfg.noise};

  ServerState server;
  server.rng = RngStream(cfg.master_seed, kStreamServer);
  server.learning_rate = cfg.eta_global;
  server.p_global = gaussian_matrix(cfg.prompt_len, cfg.embed_dim,
                                    cfg.prompt_init_scale, server.rng);

  std::vector<ClientState> clients;
  clients.reserve(static_cast<std::size_t>(cfg.num_clients));
  for (index_t i = 0; i < cfg.num_clients; ++i) {
    ClientState c;
    c.id = i;
    c.rng = RngStream(cfg.master_seed, kStreamClientBase +
                                           static_cast<std::uint64_t>(i));
    c.learning_rate = cfg.eta_local;
    c.shard = setup.shards[static_cast<std::size_t>(i)];
    c.p_local = cfg.variant == VariantMode::kSharedOnly
                    ? Matrix::zero(cfg.prompt_len, cfg.embed_dim)
                    : gaussian_matrix(cfg.prompt_len, cfg.embed_dim,
                                      cfg.prompt_init_scale, c.rng);
    c.p_deployed = c.p_local;
    clients.push_back(std::move(c));
  }

  // Image features of the test set do not depend on prompts; cache them.
  std::vector<std::vector<double>> test_feats;
  test_feats.reserve(setup.data.test.size());
  for (const Sample& s : setup.data.test) {
    test_feats.push_back(setup.encoders.image_feature(s.x));
  }

  auto accuracy = [&](const Matrix& prompt,
                      const std::vector<index_t>& test_indices,
                      const std::vector<index_t>& label_set) {
    if (test_indices.empty() || label_set.empty()) return 0.0;
    index_t correct = 0;
    for (index_t idx : test_indices) {
      const auto u_idx = static_cast<std::size_t>(idx);
      if (classify(prompt, setup.encoders, test_feats[u_idx], label_set) ==
          setup.data.test[u_idx].label) {
        ++correct;
      }
    }
    return static_cast<double>(correct) /
           static_cast<double>(test_indices.size());
  };

  std::vector<index_t> all_classes(static_cast<std::size_t>(cfg.num_classes));
  for (index_t c = 0; c < cfg.num_classes; ++c) {
    all_classes[static_cast<std::size_t>(c)] = c;
  }
  std::vector<index_t> all_test(setup.data.test.size());
  for (std::size_t i = 0; i < all_test.size(); ++i) {
    all_test[i] = static_cast<index_t>(i);
  }
  std::vector<std::vector<index_t>> neighbor_labels(
      static_cast<std::size_t>(cfg.num_clients));
  for (index_t i = 0; i < cfg.num_clients; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    std::vector<bool> own(static_cast<std::size_t>(cfg.num_classes), false);
    for (index_t c : setup.plan.local_classes[ui]) {
      own[static_cast<std::size_t>(c)] = true;
    }
    std::vector<bool> taken(static_cast<std::size_t>(cfg.num_classes), false);
    for (index_t j = 0; j < cfg.num_clients; ++j) {
      if (j == i) continue;
      for (index_t c : setup.plan.local_classes[static_cast<std::size_t>(j)]) {
        if (!own[static_cast<std::size_t>(c)]) {
          taken[static_cast<std::size_t>(c)] = true;
        }
      }
    }
    for (index_t c = 0; c < cfg.num_classes; ++c) {
      if (taken[static_cast<std::size_t>(c)]) {
        neighbor_labels[ui].push_back(c);
      }
    }
  }

  RunArtifact artifact;
  artifact.config = cfg;
  artifact.metrics.reserve(static_cast<std::size_t>(cfg.rounds));

  const double boundary_slack = spec.clip_threshold + 1e-9;
  std::vector<ClientRoundResult> results(
      static_cast<std::size_t>(cfg.num_clients));
  for (index_t round = 1; round <= cfg.rounds; ++round) {
    auto run_client = [&](index_t i) {
      const auto ui = static_cast<std::size_t>(i);
      results[ui] = client_round(clients[ui], server.p_global, setup.data,
                                 setup.encoders, spec, scales, variant);
    };
    if (threads > 1 && cfg.num_clients > 1) {
      std::atomic<index_t> next{0};
      std::vector<std::thread> pool;
      const index_t workers = std::min<index_t>(threads, cfg.num_clients);
      pool.reserve(static_cast<std::size_t>(workers));
      for (index_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (index_t i = next.fetch_add(1); i < cfg.num_clients;
               i = next.fetch_add(1)) {
            run_client(i);
          }
        });
      }
      for (auto& t : pool) t.join();
    } else {
      for (index_t i = 0; i < cfg.num_clients; ++i) run_client(i);
    }

    // Reduction in client-id order; the privacy boundary requires every
    // matrix crossing it to respect the clipping threshold.
    std::vector<Matrix> grads;
    grads.reserve(results.size());
    RoundMetrics rm;
    rm.round = round;
    for (const auto& r : results) {
      if (frobenius_norm(r.grad_global) > boundary_slack) {
        throw std::runtime_error(
            "run_training: invariant breach, client gradient norm exceeds "
            "the clipping threshold");
      }
      grads.push_back(r.grad_global);
      rm.loss += r.loss;
      rm.noise_norm_local_mean += r.noise_norm_local;
    }
    rm.loss /= static_cast<double>(cfg.num_clients);
    rm.noise_norm_local_mean /= static_cast<double>(cfg.num_clients);

    const AggregateResult agg =
        server_aggregate(grads, setup.weights, server, scales, cfg.noise);
    rm.noise_norm_global = agg.noise_norm_global;
    rm.eps_spent = account(spec, round).epsilon_spent_local;

    for (index_t i = 0; i < cfg.num_clients; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const Matrix deployed =
          clients[ui].p_global_copy + clients[ui].p_deployed;
      if (cfg.scheme == SplitScheme::kPathological) {
        rm.local_acc.push_back(accuracy(deployed,
                                        setup.evals[ui].local_test,
                                        setup.plan.local_classes[ui]));
        rm.neighbor_acc.push_back(accuracy(deployed,
                                           setup.evals[ui].neighbor_test,
                                           neighbor_labels[ui]));
      } else {
        // Dirichlet runs report overall accuracy only.
        rm.local_acc.push_back(accuracy(deployed, all_test, all_classes));
      }
    }
    artifact.metrics.push_back(std::move(rm));
  }

  artifact.final_global = server.p_global;
  artifact.final_locals.reserve(clients.size());
  for (const auto& c : clients) artifact.final_locals.push_back(c.p_deployed);
  artifact.budget = account(spec, cfg.rounds);
  return artifact;
}

}  // namespace dpfpl
