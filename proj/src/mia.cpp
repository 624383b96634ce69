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

#include "dpfpl/mia.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace dpfpl {
namespace {

double max_confidence(const std::vector<double>& confidence) {
  double best = 0.0;
  for (double c : confidence) best = std::max(best, c);
  return best;
}

// Threshold rule "member iff maxconf >= tau" (or the flipped direction when
// shadows say members sit below). Ties resolve to the smallest tau with the
// member-above direction preferred.
struct ThresholdRule {
  double tau = 0.0;
  bool member_above = true;

  bool guess(double score) const {
    return member_above ? score >= tau : score < tau;
  }
};

ThresholdRule fit_threshold(std::vector<std::pair<double, bool>>& scored) {
  std::sort(scored.begin(), scored.end());
  const auto n = static_cast<double>(scored.size());
  // Candidate cuts: below everything, between neighbors, above everything.
  std::vector<double> candidates;
  candidates.push_back(scored.front().first - 1.0);
  for (std::size_t i = 0; i + 1 < scored.size(); ++i) {
    if (scored[i].first < scored[i + 1].first) {
      candidates.push_back(0.5 * (scored[i].first + scored[i + 1].first));
    }
  }
  candidates.push_back(scored.back().first + 1.0);
  ThresholdRule best;
  double best_acc = -1.0;
  for (const bool member_above : {true, false}) {
    for (double tau : candidates) {
      const ThresholdRule rule{tau, member_above};
      index_t correct = 0;
      for (const auto& [score, member] : scored) {
        if (rule.guess(score) == member) ++correct;
      }
      const double acc = static_cast<double>(correct) / n;
      if (acc > best_acc) {
        best_acc = acc;
        best = rule;
      }
    }
  }
  return best;
}

}  // namespace

void AttackDataset::validate_balanced() const {
  if (records.empty()) {
    throw std::invalid_argument("AttackDataset: empty record set");
  }
  std::map<index_t, std::pair<index_t, index_t>> counts;
  for (const AttackRecord& r : records) {
    auto& [in, out] = counts[r.label];
    (r.member ? in : out) += 1;
  }
  for (const auto& [label, pair] : counts) {
    if (pair.first != pair.second) {
      throw std::invalid_argument(
          "AttackDataset: class " + std::to_string(label) + " unbalanced (" +
          std::to_string(pair.first) + " members vs " +
          std::to_string(pair.second) + " non-members)");
    }
  }
}

AttackDataset collect_attack_records(const RunConfig& cfg,
                                     const RunArtifact& artifact,
                                     index_t target_client) {
  if (target_client < 0 || target_client >= cfg.num_clients) {
    throw std::invalid_argument("collect_attack_records: bad target client " +
                                std::to_string(target_client));
  }
  RunSetup setup = prepare_run(cfg);
  const auto ut = static_cast<std::size_t>(target_client);
  const PromptState deployed{artifact.final_global,
                             artifact.final_locals[ut]};

  // Member / non-member pools grouped by class. Non-members come from the
  // client's local-class test samples, which are disjoint from training by
  // construction.
  std::map<index_t, std::vector<const Sample*>> members, non_members;
  for (index_t idx : setup.shards[ut]) {
    const Sample& s = setup.data.train[static_cast<std::size_t>(idx)];
    members[s.label].push_back(&s);
  }
  for (index_t idx : setup.evals[ut].local_test) {
    const Sample& s = setup.data.test[static_cast<std::size_t>(idx)];
    non_members[s.label].push_back(&s);
  }

  AttackDataset out;
  for (const auto& [label, member_pool] : members) {
    const auto it = non_members.find(label);
    if (it == non_members.end()) continue;
    const std::size_t take = std::min(member_pool.size(), it->second.size());
    for (std::size_t i = 0; i < take; ++i) {
      for (const bool member : {true, false}) {
        const Sample* s = member ? member_pool[i] : it->second[i];
        AttackRecord rec;
        rec.label = label;
        rec.member = member;
        rec.confidence = predict_proba(deployed, setup.encoders,
                                       setup.encoders.image_feature(s->x));
        out.records.push_back(std::move(rec));
      }
    }
  }
  if (out.records.empty()) {
    throw std::runtime_error(
        "collect_attack_records: no balanced member/non-member pairs");
  }
  return out;
}

std::vector<RunArtifact> train_shadows(const RunConfig& base,
                                       index_t num_shadows, index_t threads) {
  if (num_shadows < 2) {
    throw std::invalid_argument("train_shadows: need at least 2 shadows");
  }
  std::vector<RunArtifact> shadows;
  shadows.reserve(static_cast<std::size_t>(num_shadows));
  for (index_t s = 0; s < num_shadows; ++s) {
    RunConfig cfg = base;
    // Shadows share the target's task (class means, encoders, split) and
    // redraw everything run-level: samples, inits, batches, noise.
    cfg.task_seed = base.effective_task_seed();
    cfg.master_seed =
        derive_seed(base.master_seed, 0x5ad0u + static_cast<std::uint64_t>(s));
    shadows.push_back(run_training(cfg, threads));
  }
  return shadows;
}

AttackDataset shadow_attack_dataset(const RunConfig& base, index_t num_shadows,
                                    index_t target_client, index_t threads) {
  AttackDataset pooled;
  for (const RunArtifact& shadow :
       train_shadows(base, num_shadows, threads)) {
    AttackDataset part =
        collect_attack_records(shadow.config, shadow, target_client);
    pooled.records.insert(pooled.records.end(),
                          std::make_move_iterator(part.records.begin()),
                          std::make_move_iterator(part.records.end()));
  }
  return pooled;
}

AttackOutcome attack(const AttackDataset& attack_train,
                     const AttackDataset& target_records) {
  attack_train.validate_balanced();
  if (target_records.records.empty()) {
    throw std::invalid_argument("attack: empty target record set");
  }

  std::map<index_t, std::vector<std::pair<double, bool>>> by_class;
  std::vector<std::pair<double, bool>> pooled;
  for (const AttackRecord& r : attack_train.records) {
    const double score = max_confidence(r.confidence);
    by_class[r.label].emplace_back(score, r.member);
    pooled.emplace_back(score, r.member);
  }
  std::map<index_t, ThresholdRule> thresholds;
  for (auto& [label, scored] : by_class) {
    thresholds[label] = fit_threshold(scored);
  }
  const ThresholdRule fallback = fit_threshold(pooled);

  index_t correct = 0;
  for (const AttackRecord& r : target_records.records) {
    const auto it = thresholds.find(r.label);
    const ThresholdRule& rule =
        it == thresholds.end() ? fallback : it->second;
    if (rule.guess(max_confidence(r.confidence)) == r.member) ++correct;
  }
  AttackOutcome outcome;
  outcome.n_queries = static_cast<index_t>(target_records.records.size());
  const double n = static_cast<double>(outcome.n_queries);
  const double p = static_cast<double>(correct) / n;
  outcome.success_rate = p;
  // Wilson interval at 95%.
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  outcome.ci_low = std::max(0.0, center - half);
  outcome.ci_high = std::min(1.0, center + half);
  return outcome;
}

AttackReport run_mia(const RunConfig& target_cfg, const RunArtifact& target,
                     index_t num_shadows, index_t target_client,
                     index_t threads) {
  const AttackDataset shadow_records =
      shadow_attack_dataset(target_cfg, num_shadows, target_client, threads);
  const AttackDataset target_records =
      collect_attack_records(target_cfg, target, target_client);
  const AttackOutcome outcome = attack(shadow_records, target_records);
  AttackReport report;
  report.success_rate = outcome.success_rate;
  report.ci_low = outcome.ci_low;
  report.ci_high = outcome.ci_high;
  report.n_queries = outcome.n_queries;
  report.epsilon = target_cfg.noise ? target_cfg.epsilon : 0.0;
  report.variant = to_string(target_cfg.variant);
  return report;
}

}  // namespace dpfpl
