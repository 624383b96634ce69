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

#include <cstdint>

namespace dpfpl {

// Seeded, counter-based pseudorandom stream (splitmix64 core).
//
// Identical (seed, stream_id) yields the identical sample sequence on every
// platform: the integer path uses only 64-bit arithmetic. Each simulation
// actor (server, each client, data generator, encoder init) owns its own
// stream so that scheduling order never affects results. Streams must not be
// shared across concurrently executing actors.
//
// next_gaussian() consumes exactly two 64-bit words per draw (Box-Muller,
// cosine branch only), so the word counter advances identically regardless of
// the mix of uniform and Gaussian draws requested.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_uniform();

  // N(0, 1).
  double next_gaussian();

  // N(0, sigma^2); sigma = 0 returns 0.0 without consuming state.
  double next_gaussian(double sigma);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t state_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

// Derives a fresh, decorrelated seed from a master seed and a salt (used for
// shadow-model runs and sweep repetitions).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt);

// Stream-id conventions used by the protocol engine. Task-level streams
// (class means, frozen encoders, split plan) are keyed by the task seed;
// run-level streams (sample draws, server, clients) by the master seed.
inline constexpr std::uint64_t kStreamData = 0;
inline constexpr std::uint64_t kStreamServer = 1;
inline constexpr std::uint64_t kStreamEncoders = 2;
inline constexpr std::uint64_t kStreamTaskMeans = 3;
inline constexpr std::uint64_t kStreamSplit = 4;
inline constexpr std::uint64_t kStreamClientBase = 16;

}  // namespace dpfpl
