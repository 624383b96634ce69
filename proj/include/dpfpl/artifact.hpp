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

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dpfpl/config.hpp"
#include "dpfpl/federation.hpp"
#include "dpfpl/mia.hpp"

namespace dpfpl {

using json = nlohmann::json;

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

json config_to_json(const RunConfig& cfg);
// Strict parse: unknown keys and type mismatches are rejected with the
// offending field in the message. Missing fields fall back to defaults.
RunConfig config_from_json(const json& j);

json budget_to_json(const BudgetReport& report);
json artifact_to_json(const RunArtifact& artifact);
RunArtifact artifact_from_json(const json& j);

json dataset_to_json(const SyntheticDataset& ds, const SplitPlan& plan);
json attack_report_to_json(const AttackReport& report);

// FNV-1a hash of the canonical config JSON with the seed zeroed, so
// repetitions of one configuration land in sibling directories.
std::string config_hash(const RunConfig& cfg);

// metrics.csv with the fixed header
//   round,client,loss,local_acc,neighbor_acc,eps_spent,sigma_local,sigma_global
// one row per (round, client). Missing values (neighbor accuracy under a
// Dirichlet split) are empty cells; any non-finite value is an invariant
// breach.
std::string metrics_csv(const RunArtifact& artifact);

// Writes run.json + metrics.csv (+ data.json when emit_data) into
// out_root/<config-hash>-s<seed>. Refuses to reuse an existing directory:
// artifacts are append-only. Returns the run directory.
std::filesystem::path write_run_artifact(const RunArtifact& artifact,
                                         const std::filesystem::path& out_root,
                                         bool emit_data = false);

RunArtifact load_run_artifact(const std::filesystem::path& run_dir);

}  // namespace dpfpl
