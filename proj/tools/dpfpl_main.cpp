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

#include <string>

#include <CLI11.hpp>

#include "dpfpl/harness.hpp"

namespace {

// Attaches the flags shared by every subcommand. DPFPL_* environment
// variables override the built-in defaults (flags still win), so CI can
// steer output locations and seeds without editing configs.
void add_common_options(CLI::App* cmd, dpfpl::CliOptions* options,
                        std::string* seed_text) {
  cmd->add_option("--config", options->config_path, "JSON config file")
      ->required();
  cmd->add_option("--out", options->out_dir, "output directory root")
      ->envname("DPFPL_OUT");
  cmd->add_option("--seed", *seed_text, "override seeds.master")
      ->envname("DPFPL_SEED");
  cmd->add_option("--threads", options->threads,
                  "max concurrent clients / sweep workers")
      ->envname("DPFPL_THREADS");
  cmd->add_flag("--emit-data", options->emit_data,
                "also write the generated dataset and split plan");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Desk-scale simulator of differentially private federated prompt "
      "learning: per-round low-rank factorization with residual, "
      "local/global Gaussian DP, privacy accounting and a membership "
      "inference evaluation."};
  app.require_subcommand(1);

  dpfpl::CliOptions options;
  std::string seed_text;

  CLI::App* run = app.add_subcommand(
      "run", "execute one training run and write its artifacts");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "run a (variant x epsilon x rank x seed) grid and summarize");
  CLI::App* mia = app.add_subcommand(
      "mia", "attack a finished run with shadow models");
  CLI::App* validate = app.add_subcommand(
      "validate", "parse and validate a config without running");
  for (CLI::App* cmd : {run, sweep, mia, validate}) {
    add_common_options(cmd, &options, &seed_text);
  }

  CLI11_PARSE(app, argc, argv);

  if (!seed_text.empty()) {
    try {
      options.seed = std::stoull(seed_text);
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: --seed: not an unsigned integer: %s\n",
                   seed_text.c_str());
      return dpfpl::kExitValidation;
    }
  }
  if (options.threads < 1) {
    std::fprintf(stderr, "error: --threads must be >= 1\n");
    return dpfpl::kExitValidation;
  }

  if (run->parsed()) return dpfpl::cmd_run(options);
  if (sweep->parsed()) return dpfpl::cmd_sweep(options);
  if (mia->parsed()) return dpfpl::cmd_mia(options);
  return dpfpl::cmd_validate(options);
}
