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

#include <span>
#include <vector>

#include "dpfpl/factorization.hpp"
#include "dpfpl/matrix.hpp"
#include "dpfpl/rng.hpp"
#include "dpfpl/sample.hpp"

namespace dpfpl {

struct EncoderDims {
  index_t prompt_len = 4;    // b: rows of the soft prompt
  index_t embed_dim = 32;    // d: feature space shared by text and image
  index_t token_dim = 8;     // e: raw class-token space
  index_t image_dim = 16;    // m: raw image space
  index_t num_classes = 8;   // C
};

// Frozen random encoders standing in for a pre-trained vision-language
// backbone. All weights are drawn once at construction (scaled by
// 1/sqrt(fan_in)) and never change; the same instance is shared by every
// client.
//
// Text path for class j with prompt p (b x d): the class token (1 x e) is
// lifted into the d-dimensional token space and appended after the b prompt
// rows (token position "end"). The b+1 tokens are flattened and mapped by a
// single linear text projection ((b+1)*d -> d), i.e. one d x d block per
// token position, then L2-normalized. Distinct position blocks make the
// prompt-row gradients position-dependent, the way a sequence encoder
// treats its context tokens. Image path: x (m) -> image_proj (d x m) ->
// L2-normalize.
class FrozenEncoders {
 public:
  FrozenEncoders(const EncoderDims& dims, double temperature, RngStream& rng);

  const EncoderDims& dims() const { return dims_; }
  double temperature() const { return tau_; }

  std::vector<double> image_feature(std::span<const double> x) const;
  std::vector<double> text_feature(const Matrix& prompt,
                                   index_t class_id) const;

  // Lifted class token (length d), the "end" token of the text sequence.
  std::span<const double> lifted_class_token(index_t class_id) const;

  // End-position projection of every class token (C x d), cached at
  // construction since tokens and projection are both frozen.
  const Matrix& projected_class_tokens() const { return projected_tokens_; }

  const Matrix& text_proj() const { return text_proj_; }
  const Matrix& image_proj() const { return image_proj_; }
  const Matrix& class_embeds() const { return class_embeds_; }
  const Matrix& token_lift() const { return token_lift_; }

 private:
  EncoderDims dims_;
  double tau_;
  Matrix class_embeds_;      // C x e
  Matrix token_lift_;        // e x d
  Matrix text_proj_;         // d x (b+1)*d, block i handles token position i
  Matrix image_proj_;        // d x m
  Matrix lifted_tokens_;     // C x d, class_embeds * token_lift
  Matrix projected_tokens_;  // C x d, end-position block applied to tokens
};

struct PromptState {
  Matrix p_global;
  Matrix p_local;
};

// Softmax over cos[f(p, c_j), image_feat] / tau with p = p_global + p_local.
// image_feat must be a unit vector from image_feature().
std::vector<double> predict_proba(const PromptState& prompts,
                                  const FrozenEncoders& encoders,
                                  std::span<const double> image_feat);

// Argmax of the cosine score over a restricted label set (evaluation helper;
// ties resolve to the earlier entry).
index_t classify(const Matrix& combined_prompt, const FrozenEncoders& encoders,
                 std::span<const double> image_feat,
                 std::span<const index_t> label_set);

// Per-example cross-entropy and exact gradient w.r.t. the combined prompt
// (which equals the gradient w.r.t. either additive component).
struct PromptGradients {
  double mean_loss = 0.0;
  std::vector<double> per_example_loss;
  std::vector<Matrix> per_example_grad;  // each b x d
};

PromptGradients prompt_gradients(const Matrix& p_global,
                                 const Matrix& p_local_forward,
                                 const FrozenEncoders& encoders,
                                 std::span<const Sample> batch);

// Gradients routed through the factored local prompt: forward uses
// p_local = u v + r; grad_u = G v^T and grad_v = u^T G with G the per-example
// prompt gradient.
struct ExampleGrads {
  double loss = 0.0;
  Matrix grad_global;  // b x d
  Matrix grad_u;       // b x k
  Matrix grad_v;       // k x d
};

struct BatchGrads {
  double loss = 0.0;  // batch mean
  std::vector<ExampleGrads> per_example;
};

BatchGrads loss_and_grads(const Matrix& p_global, const FactoredPrompt& factored,
                          const FrozenEncoders& encoders,
                          std::span<const Sample> batch);

}  // namespace dpfpl
