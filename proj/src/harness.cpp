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

#include "dpfpl/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <vector>

#include "dpfpl/artifact.hpp"
#include "dpfpl/mia.hpp"

namespace dpfpl {
namespace {

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::invalid_argument("cannot open config file " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + path.string() +
                                ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << content;
}

// One guarded entry point so every subcommand maps exceptions to exit codes
// the same way: std::invalid_argument -> validation (2), anything else ->
// runtime invariant breach (3).
template <typename Fn>
int guarded(Fn&& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitInvariantBreach;
  }
}

RunConfig load_config(const CliOptions& options) {
  RunConfig cfg = config_from_json(load_json(options.config_path));
  if (options.seed.has_value()) {
    cfg.master_seed = *options.seed;
    cfg.validate();
  }
  return cfg;
}

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

}  // namespace

RunSummary summarize_run(const RunArtifact& artifact) {
  RunSummary summary;
  const auto& metrics = artifact.metrics;
  if (metrics.empty()) return summary;
  const std::size_t window = std::min<std::size_t>(10, metrics.size());
  std::size_t counted = 0;
  for (std::size_t i = metrics.size() - window; i < metrics.size(); ++i) {
    const RoundMetrics& rm = metrics[i];
    double local = 0.0;
    for (double a : rm.local_acc) local += a;
    summary.local_acc += local / static_cast<double>(rm.local_acc.size());
    if (!rm.neighbor_acc.empty()) {
      double neighbor = 0.0;
      for (double a : rm.neighbor_acc) neighbor += a;
      summary.neighbor_acc +=
          neighbor / static_cast<double>(rm.neighbor_acc.size());
      summary.has_neighbor = true;
    }
    summary.loss += rm.loss;
    ++counted;
  }
  summary.local_acc /= static_cast<double>(counted);
  summary.neighbor_acc /= static_cast<double>(counted);
  summary.loss /= static_cast<double>(counted);
  return summary;
}

int cmd_run(const CliOptions& options) {
  return guarded([&] {
    const RunConfig cfg = load_config(options);
    const RunArtifact artifact = run_training(cfg, options.threads);
    const std::filesystem::path dir =
        write_run_artifact(artifact, options.out_dir, options.emit_data);
    const RunSummary summary = summarize_run(artifact);
    std::printf("run %s: %lld rounds, final local_acc %.4f", dir.c_str(),
                static_cast<long long>(cfg.rounds), summary.local_acc);
    if (summary.has_neighbor) {
      std::printf(", neighbor_acc %.4f", summary.neighbor_acc);
    }
    std::printf(", eps_spent %.4g\n", artifact.budget.epsilon_spent_local);
    return kExitOk;
  });
}

int cmd_validate(const CliOptions& options) {
  return guarded([&] {
    load_config(options);
    std::printf("config %s: ok\n", options.config_path.c_str());
    return kExitOk;
  });
}

int cmd_sweep(const CliOptions& options) {
  return guarded([&] {
    const json j = load_json(options.config_path);
    if (!j.is_object() || !j.contains("base")) {
      throw std::invalid_argument("sweep config: needs a \"base\" run config");
    }
    for (const auto& [key, value] : j.items()) {
      if (key != "base" && key != "grid" && key != "seeds") {
        throw std::invalid_argument("sweep config: unknown key \"" + key +
                                    "\"");
      }
    }
    const RunConfig base = config_from_json(j.at("base"));

    std::vector<double> epsilons{base.epsilon};
    std::vector<index_t> ranks{base.rank};
    std::vector<std::string> variants{to_string(base.variant)};
    if (j.contains("grid")) {
      const json& grid = j.at("grid");
      for (const auto& [key, value] : grid.items()) {
        if (key != "epsilon" && key != "rank" && key != "variant") {
          throw std::invalid_argument("sweep grid: unknown axis \"" + key +
                                      "\" (expected epsilon, rank, variant)");
        }
      }
      if (grid.contains("epsilon")) {
        epsilons = grid.at("epsilon").get<std::vector<double>>();
      }
      if (grid.contains("rank")) {
        ranks = grid.at("rank").get<std::vector<index_t>>();
      }
      if (grid.contains("variant")) {
        variants = grid.at("variant").get<std::vector<std::string>>();
      }
    }
    std::vector<std::uint64_t> seeds;
    if (j.contains("seeds")) {
      seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      for (index_t r = 0; r < base.repetitions; ++r) {
        seeds.push_back(base.master_seed + static_cast<std::uint64_t>(r));
      }
    }
    if (epsilons.empty() || ranks.empty() || variants.empty() ||
        seeds.empty()) {
      throw std::invalid_argument("sweep config: empty grid axis");
    }

    std::filesystem::create_directories(options.out_dir);
    std::string csv =
        "variant,epsilon,rank,n_seeds,local_mean,local_std,neighbor_mean,"
        "neighbor_std,loss_mean,status\n";
    index_t cell_count = 0;
    for (const std::string& variant : variants) {
      for (double epsilon : epsilons) {
        for (index_t rank : ranks) {
          ++cell_count;
          std::vector<double> locals, neighbors, losses;
          bool has_neighbor = false;
          std::string status = "ok";
          try {
            for (std::uint64_t seed : seeds) {
              RunConfig cfg = base;
              cfg.variant = variant_from_string(variant);
              cfg.epsilon = epsilon;
              cfg.rank = rank;
              cfg.master_seed = seed;
              cfg.validate();
              const RunArtifact artifact = run_training(cfg, options.threads);
              write_run_artifact(artifact, options.out_dir,
                                 options.emit_data);
              const RunSummary summary = summarize_run(artifact);
              locals.push_back(summary.local_acc);
              losses.push_back(summary.loss);
              if (summary.has_neighbor) {
                neighbors.push_back(summary.neighbor_acc);
                has_neighbor = true;
              }
            }
          } catch (const std::exception& e) {
            status = "error";
            std::fprintf(stderr, "sweep cell (%s, eps=%g, rank=%lld): %s\n",
                         variant.c_str(), epsilon,
                         static_cast<long long>(rank), e.what());
          }
          const Aggregate local = aggregate(locals);
          const Aggregate neighbor = aggregate(neighbors);
          const Aggregate loss = aggregate(losses);
          csv += variant + ',' + format_double(epsilon) + ',' +
                 std::to_string(rank) + ',' +
                 std::to_string(locals.size()) + ',';
          if (!locals.empty()) {
            csv += format_double(local.mean);
            csv += ',';
            csv += format_double(local.stddev);
          } else {
            csv += ',';
          }
          csv += ',';
          if (has_neighbor) {
            csv += format_double(neighbor.mean);
            csv += ',';
            csv += format_double(neighbor.stddev);
          } else {
            csv += ',';
          }
          csv += ',';
          if (!losses.empty()) csv += format_double(loss.mean);
          csv += ',' + status + '\n';
        }
      }
    }
    write_text_file(options.out_dir / "summary.csv", csv);
    std::printf("sweep: %lld cells x %zu seeds, summary at %s\n",
                static_cast<long long>(cell_count), seeds.size(),
                (options.out_dir / "summary.csv").c_str());
    return kExitOk;
  });
}

int cmd_mia(const CliOptions& options) {
  return guarded([&] {
    const json j = load_json(options.config_path);
    for (const auto& [key, value] : j.items()) {
      if (key != "target_artifact" && key != "shadows" &&
          key != "target_client") {
        throw std::invalid_argument("mia config: unknown key \"" + key +
                                    "\"");
      }
    }
    if (!j.contains("target_artifact")) {
      throw std::invalid_argument(
          "mia config: needs \"target_artifact\" (run directory)");
    }
    const std::filesystem::path target_dir =
        j.at("target_artifact").get<std::string>();
    if (!std::filesystem::exists(target_dir / "run.json")) {
      throw std::invalid_argument("mia: missing target artifact at " +
                                  target_dir.string());
    }
    const index_t shadows = j.value("shadows", index_t{8});
    const index_t target_client = j.value("target_client", index_t{0});
    if (shadows < 2) {
      throw std::invalid_argument("mia config: shadows must be >= 2");
    }

    const RunArtifact target = load_run_artifact(target_dir);
    const AttackReport report = run_mia(target.config, target, shadows,
                                        target_client, options.threads);
    std::filesystem::create_directories(options.out_dir);
    const std::filesystem::path report_path =
        options.out_dir / "attack_report.json";
    write_text_file(report_path, attack_report_to_json(report).dump(2));
    std::printf("mia: success_rate %.4f [%.4f, %.4f] over %lld queries -> %s\n",
                report.success_rate, report.ci_low, report.ci_high,
                static_cast<long long>(report.n_queries),
                report_path.c_str());
    return kExitOk;
  });
}

}  // namespace dpfpl
