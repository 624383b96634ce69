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

#include "dpfpl/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpfpl {

std::string to_string(VariantMode mode) {
  switch (mode) {
    case VariantMode::kDpFpl: return "dp-fpl";
    case VariantMode::kDpFplNoResidual: return "dp-fpl-no-residual";
    case VariantMode::kFullRankLocal: return "full-rank-local";
    case VariantMode::kSharedOnly: return "shared-only";
    case VariantMode::kPersistentLowRank: return "persistent-low-rank";
  }
  throw std::invalid_argument("to_string: bad variant");
}

VariantMode variant_from_string(const std::string& name) {
  if (name == "dp-fpl") return VariantMode::kDpFpl;
  if (name == "dp-fpl-no-residual") return VariantMode::kDpFplNoResidual;
  if (name == "full-rank-local") return VariantMode::kFullRankLocal;
  if (name == "shared-only") return VariantMode::kSharedOnly;
  if (name == "persistent-low-rank") return VariantMode::kPersistentLowRank;
  throw std::invalid_argument(
      "variant: unknown mode \"" + name +
      "\" (expected dp-fpl, dp-fpl-no-residual, full-rank-local, "
      "shared-only or persistent-low-rank)");
}

std::string to_string(SplitScheme scheme) {
  return scheme == SplitScheme::kPathological ? "pathological" : "dirichlet";
}

SplitScheme scheme_from_string(const std::string& name) {
  if (name == "pathological") return SplitScheme::kPathological;
  if (name == "dirichlet") return SplitScheme::kDirichlet;
  throw std::invalid_argument("split.scheme: unknown scheme \"" + name +
                              "\" (expected pathological or dirichlet)");
}

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw std::invalid_argument("schema_version: expected " +
                                std::to_string(kConfigSchemaVersion) +
                                ", got " + std::to_string(schema_version));
  }
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(prompt_len >= 1, "dims.prompt_len: must be >= 1");
  require(embed_dim >= 1, "dims.embed_dim: must be >= 1");
  require(token_dim >= 1, "dims.token_dim: must be >= 1");
  require(image_dim >= 1, "dims.image_dim: must be >= 1");
  require(num_classes >= 2, "dims.num_classes: must be >= 2");
  require(rank >= 1 && rank <= std::min(prompt_len, embed_dim),
          "dims.rank: must be in [1, min(prompt_len, embed_dim)], got " +
              std::to_string(rank));
  require(num_clients >= 1, "protocol.num_clients: must be >= 1");
  require(rounds >= 1, "protocol.rounds: must be >= 1");
  require(batch_size >= 1, "protocol.batch_size: must be >= 1");
  require(eta_global >= 0.0 && std::isfinite(eta_global),
          "protocol.eta_global: must be finite and >= 0");
  require(eta_local >= 0.0 && std::isfinite(eta_local),
          "protocol.eta_local: must be finite and >= 0");
  require(temperature > 0.0 && std::isfinite(temperature),
          "protocol.temperature: must be > 0");
  privacy_spec().validate();
  if (scheme == SplitScheme::kPathological) {
    require(classes_per_client >= 1,
            "split.classes_per_client: must be >= 1");
    require(num_clients * classes_per_client <= num_classes,
            "split.classes_per_client: num_clients * classes_per_client "
            "exceeds dims.num_classes");
  } else {
    require(alpha > 0.0 && std::isfinite(alpha), "split.alpha: must be > 0");
    require(num_clients >= 2, "split: dirichlet scheme needs >= 2 clients");
  }
  require(per_class >= 2, "data.per_class: must be >= 2");
  require(data_noise_scale >= 0.0 && std::isfinite(data_noise_scale),
          "data.noise_scale: must be >= 0");
  require(shard_fraction > 0.0 && shard_fraction <= 1.0,
          "data.shard_fraction: must be in (0, 1]");
  require(repetitions >= 1, "seeds.repetitions: must be >= 1");
  require(prompt_init_scale >= 0.0 && std::isfinite(prompt_init_scale),
          "init.prompt_scale: must be >= 0");
}

PrivacySpec RunConfig::privacy_spec() const {
  PrivacySpec spec;
  spec.epsilon = epsilon;
  spec.delta = delta;
  spec.clip_threshold = clip_threshold;
  spec.rounds = rounds;
  spec.batch_size = batch_size;
  spec.num_clients = num_clients;
  return spec;
}

EncoderDims RunConfig::encoder_dims() const {
  EncoderDims dims;
  dims.prompt_len = prompt_len;
  dims.embed_dim = embed_dim;
  dims.token_dim = token_dim;
  dims.image_dim = image_dim;
  dims.num_classes = num_classes;
  return dims;
}

}  // namespace dpfpl
