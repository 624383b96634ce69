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

#include "dpfpl/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace dpfpl {
namespace {

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::invalid_argument("cannot open " + path.string());
  }
  return json::parse(in);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double require_finite(double v, const char* column) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("metrics_csv: non-finite value in "
                                         "column ") +
                             column);
  }
  return v;
}

// Typed field extraction with field-path diagnostics.
template <typename T>
T get_field(const json& obj, const char* section, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string(section) + "." + key +
                                ": wrong type");
  }
}

void reject_unknown_keys(const json& obj, const char* section,
                         const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (known.find(key) == known.end()) {
      throw std::invalid_argument(std::string(section) + ": unknown key \"" +
                                  key + "\"");
    }
  }
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.values().begin(),
                                           m.values().end())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<index_t>();
  const auto cols = j.at("cols").get<index_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<index_t>(data.size()) != rows * cols) {
    throw std::invalid_argument("matrix: data length mismatch");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  if (!all_finite(m)) {
    throw std::invalid_argument("matrix: non-finite entries");
  }
  return m;
}

json config_to_json(const RunConfig& cfg) {
  return json{
      {"schema_version", cfg.schema_version},
      {"dims",
       {{"prompt_len", cfg.prompt_len},
        {"embed_dim", cfg.embed_dim},
        {"token_dim", cfg.token_dim},
        {"image_dim", cfg.image_dim},
        {"num_classes", cfg.num_classes},
        {"rank", cfg.rank}}},
      {"protocol",
       {{"num_clients", cfg.num_clients},
        {"rounds", cfg.rounds},
        {"batch_size", cfg.batch_size},
        {"eta_global", cfg.eta_global},
        {"eta_local", cfg.eta_local},
        {"temperature", cfg.temperature}}},
      {"privacy",
       {{"epsilon", cfg.epsilon},
        {"delta", cfg.delta},
        {"clip_threshold", cfg.clip_threshold},
        {"noise", cfg.noise}}},
      {"variant", to_string(cfg.variant)},
      {"split",
       {{"scheme", to_string(cfg.scheme)},
        {"classes_per_client", cfg.classes_per_client},
        {"alpha", cfg.alpha}}},
      {"data",
       {{"per_class", cfg.per_class},
        {"noise_scale", cfg.data_noise_scale},
        {"shard_fraction", cfg.shard_fraction}}},
      {"seeds",
       [&] {
         json seeds{{"master", cfg.master_seed},
                    {"repetitions", cfg.repetitions}};
         if (cfg.task_seed.has_value()) seeds["task"] = *cfg.task_seed;
         return seeds;
       }()},
      {"init", {{"prompt_scale", cfg.prompt_init_scale}}},
  };
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: top level must be a JSON object");
  }
  reject_unknown_keys(j, "config",
                      {"schema_version", "dims", "protocol", "privacy",
                       "variant", "split", "data", "seeds", "init"});
  RunConfig cfg;
  cfg.schema_version = get_field(j, "config", "schema_version",
                                 kConfigSchemaVersion);
  if (j.contains("dims")) {
    const json& d = j.at("dims");
    reject_unknown_keys(d, "dims",
                        {"prompt_len", "embed_dim", "token_dim", "image_dim",
                         "num_classes", "rank"});
    cfg.prompt_len = get_field(d, "dims", "prompt_len", cfg.prompt_len);
    cfg.embed_dim = get_field(d, "dims", "embed_dim", cfg.embed_dim);
    cfg.token_dim = get_field(d, "dims", "token_dim", cfg.token_dim);
    cfg.image_dim = get_field(d, "dims", "image_dim", cfg.image_dim);
    cfg.num_classes = get_field(d, "dims", "num_classes", cfg.num_classes);
    cfg.rank = get_field(d, "dims", "rank", cfg.rank);
  }
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    reject_unknown_keys(p, "protocol",
                        {"num_clients", "rounds", "batch_size", "eta_global",
                         "eta_local", "temperature"});
    cfg.num_clients = get_field(p, "protocol", "num_clients", cfg.num_clients);
    cfg.rounds = get_field(p, "protocol", "rounds", cfg.rounds);
    cfg.batch_size = get_field(p, "protocol", "batch_size", cfg.batch_size);
    cfg.eta_global = get_field(p, "protocol", "eta_global", cfg.eta_global);
    cfg.eta_local = get_field(p, "protocol", "eta_local", cfg.eta_local);
    cfg.temperature =
        get_field(p, "protocol", "temperature", cfg.temperature);
  }
  if (j.contains("privacy")) {
    const json& p = j.at("privacy");
    reject_unknown_keys(p, "privacy",
                        {"epsilon", "delta", "clip_threshold", "noise"});
    cfg.epsilon = get_field(p, "privacy", "epsilon", cfg.epsilon);
    cfg.delta = get_field(p, "privacy", "delta", cfg.delta);
    cfg.clip_threshold =
        get_field(p, "privacy", "clip_threshold", cfg.clip_threshold);
    cfg.noise = get_field(p, "privacy", "noise", cfg.noise);
  }
  if (j.contains("variant")) {
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown_keys(s, "split", {"scheme", "classes_per_client", "alpha"});
    if (s.contains("scheme")) {
      cfg.scheme = scheme_from_string(s.at("scheme").get<std::string>());
    }
    cfg.classes_per_client =
        get_field(s, "split", "classes_per_client", cfg.classes_per_client);
    cfg.alpha = get_field(s, "split", "alpha", cfg.alpha);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown_keys(d, "data", {"per_class", "noise_scale",
                                    "shard_fraction"});
    cfg.per_class = get_field(d, "data", "per_class", cfg.per_class);
    cfg.data_noise_scale =
        get_field(d, "data", "noise_scale", cfg.data_noise_scale);
    cfg.shard_fraction =
        get_field(d, "data", "shard_fraction", cfg.shard_fraction);
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    reject_unknown_keys(s, "seeds", {"master", "repetitions", "task"});
    cfg.master_seed = get_field(s, "seeds", "master", cfg.master_seed);
    cfg.repetitions = get_field(s, "seeds", "repetitions", cfg.repetitions);
    if (s.contains("task")) {
      cfg.task_seed = get_field(s, "seeds", "task", std::uint64_t{0});
    }
  }
  if (j.contains("init")) {
    const json& i = j.at("init");
    reject_unknown_keys(i, "init", {"prompt_scale"});
    cfg.prompt_init_scale =
        get_field(i, "init", "prompt_scale", cfg.prompt_init_scale);
  }
  cfg.validate();
  return cfg;
}

json budget_to_json(const BudgetReport& report) {
  return json{{"epsilon_spent_local", report.epsilon_spent_local},
              {"epsilon_spent_global", report.epsilon_spent_global},
              {"delta", report.delta},
              {"rounds_elapsed", report.rounds_elapsed},
              {"sigma_local", report.sigma_local},
              {"sigma_global", report.sigma_global}};
}

json artifact_to_json(const RunArtifact& artifact) {
  json metrics = json::array();
  for (const RoundMetrics& rm : artifact.metrics) {
    metrics.push_back(json{{"round", rm.round},
                           {"loss", rm.loss},
                           {"local_acc", rm.local_acc},
                           {"neighbor_acc", rm.neighbor_acc},
                           {"noise_norm_local", rm.noise_norm_local_mean},
                           {"noise_norm_global", rm.noise_norm_global},
                           {"eps_spent", rm.eps_spent}});
  }
  json locals = json::array();
  for (const Matrix& m : artifact.final_locals) {
    locals.push_back(matrix_to_json(m));
  }
  return json{{"schema_version", kConfigSchemaVersion},
              {"config", config_to_json(artifact.config)},
              {"metrics", metrics},
              {"budget", budget_to_json(artifact.budget)},
              {"final_prompts",
               {{"global", matrix_to_json(artifact.final_global)},
                {"locals", locals}}}};
}

RunArtifact artifact_from_json(const json& j) {
  RunArtifact artifact;
  artifact.config = config_from_json(j.at("config"));
  for (const json& m : j.at("metrics")) {
    RoundMetrics rm;
    rm.round = m.at("round").get<index_t>();
    rm.loss = m.at("loss").get<double>();
    rm.local_acc = m.at("local_acc").get<std::vector<double>>();
    rm.neighbor_acc = m.at("neighbor_acc").get<std::vector<double>>();
    rm.noise_norm_local_mean = m.at("noise_norm_local").get<double>();
    rm.noise_norm_global = m.at("noise_norm_global").get<double>();
    rm.eps_spent = m.at("eps_spent").get<double>();
    artifact.metrics.push_back(std::move(rm));
  }
  const json& budget = j.at("budget");
  artifact.budget.epsilon_spent_local =
      budget.at("epsilon_spent_local").get<double>();
  artifact.budget.epsilon_spent_global =
      budget.at("epsilon_spent_global").get<double>();
  artifact.budget.delta = budget.at("delta").get<double>();
  artifact.budget.rounds_elapsed = budget.at("rounds_elapsed").get<index_t>();
  artifact.budget.sigma_local = budget.at("sigma_local").get<double>();
  artifact.budget.sigma_global = budget.at("sigma_global").get<double>();
  const json& prompts = j.at("final_prompts");
  artifact.final_global = matrix_from_json(prompts.at("global"));
  for (const json& m : prompts.at("locals")) {
    artifact.final_locals.push_back(matrix_from_json(m));
  }
  return artifact;
}

json dataset_to_json(const SyntheticDataset& ds, const SplitPlan& plan) {
  auto samples_to_json = [](const std::vector<Sample>& samples) {
    json arr = json::array();
    for (const Sample& s : samples) {
      arr.push_back(json{{"x", s.x}, {"label", s.label}});
    }
    return arr;
  };
  return json{
      {"num_classes", ds.num_classes},
      {"feature_dim", ds.feature_dim},
      {"noise_scale", ds.noise_scale},
      {"class_means", matrix_to_json(ds.class_means)},
      {"train", samples_to_json(ds.train)},
      {"test", samples_to_json(ds.test)},
      {"plan",
       {{"scheme", to_string(plan.scheme)},
        {"alpha", plan.alpha},
        {"assignment", plan.assignment},
        {"local_classes", plan.local_classes}}},
  };
}

json attack_report_to_json(const AttackReport& report) {
  return json{{"success_rate", report.success_rate},
              {"ci_low", report.ci_low},
              {"ci_high", report.ci_high},
              {"n_queries", report.n_queries},
              {"epsilon", report.epsilon},
              {"variant", report.variant}};
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig canonical = cfg;
  canonical.master_seed = 0;
  const std::string dump = config_to_json(canonical).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%012llx",
                static_cast<unsigned long long>(h & 0xffffffffffffULL));
  return buf;
}

std::string metrics_csv(const RunArtifact& artifact) {
  std::string out =
      "round,client,loss,local_acc,neighbor_acc,eps_spent,sigma_local,"
      "sigma_global\n";
  const double sigma_local =
      artifact.config.noise ? artifact.budget.sigma_local : 0.0;
  const double sigma_global =
      artifact.config.noise ? artifact.budget.sigma_global : 0.0;
  for (const RoundMetrics& rm : artifact.metrics) {
    for (std::size_t c = 0; c < rm.local_acc.size(); ++c) {
      out += std::to_string(rm.round);
      out += ',';
      out += std::to_string(c);
      out += ',';
      out += format_double(require_finite(rm.loss, "loss"));
      out += ',';
      out += format_double(require_finite(rm.local_acc[c], "local_acc"));
      out += ',';
      if (c < rm.neighbor_acc.size()) {
        out += format_double(
            require_finite(rm.neighbor_acc[c], "neighbor_acc"));
      }
      out += ',';
      out += format_double(require_finite(rm.eps_spent, "eps_spent"));
      out += ',';
      out += format_double(require_finite(sigma_local, "sigma_local"));
      out += ',';
      out += format_double(require_finite(sigma_global, "sigma_global"));
      out += '\n';
    }
  }
  return out;
}

std::filesystem::path write_run_artifact(const RunArtifact& artifact,
                                         const std::filesystem::path& out_root,
                                         bool emit_data) {
  const std::string name = config_hash(artifact.config) + "-s" +
                           std::to_string(artifact.config.master_seed);
  const std::filesystem::path run_dir = out_root / name;
  if (std::filesystem::exists(run_dir)) {
    throw std::invalid_argument("output directory " + run_dir.string() +
                                " already exists; artifacts are append-only");
  }
  std::filesystem::create_directories(run_dir);
  write_text_file(run_dir / "run.json", artifact_to_json(artifact).dump(2));
  write_text_file(run_dir / "metrics.csv", metrics_csv(artifact));
  if (emit_data) {
    RunSetup setup = prepare_run(artifact.config);
    write_text_file(run_dir / "data.json",
                    dataset_to_json(setup.data, setup.plan).dump(2));
  }
  return run_dir;
}

RunArtifact load_run_artifact(const std::filesystem::path& run_dir) {
  return artifact_from_json(load_json_file(run_dir / "run.json"));
}

}  // namespace dpfpl
