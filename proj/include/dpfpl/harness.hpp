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
#include <optional>
#include <string>

#include "dpfpl/config.hpp"
#include "dpfpl/federation.hpp"

namespace dpfpl {

// Exit codes shared by the CLI and the library entry points.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInvariantBreach = 3;

struct CliOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides seeds.master when set
  index_t threads = 1;
  bool emit_data = false;
};

// Subcommand bodies. Each catches validation errors (exit 2) and runtime
// invariant breaches (exit 3), printing the diagnostic to stderr.
int cmd_run(const CliOptions& options);
int cmd_sweep(const CliOptions& options);
int cmd_mia(const CliOptions& options);
int cmd_validate(const CliOptions& options);

// Mean of the last up-to-10 rounds of the per-client mean accuracy, the
// summary statistic used by sweep tables.
struct RunSummary {
  double local_acc = 0.0;
  double neighbor_acc = 0.0;
  bool has_neighbor = false;
  double loss = 0.0;
};
RunSummary summarize_run(const RunArtifact& artifact);

}  // namespace dpfpl
