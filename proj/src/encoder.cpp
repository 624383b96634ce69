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

#include "dpfpl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpfpl {
namespace {

void normalize_in_place(std::vector<double>& v) {
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  if (norm_sq == 0.0) return;  // degenerate input stays the zero vector
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& x : v) x *= inv;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != static_cast<index_t>(x.size())) {
    throw std::invalid_argument("matvec: matrix " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) +
                                " against vector of length " +
                                std::to_string(x.size()));
  }
  std::vector<double> out(static_cast<std::size_t>(a.rows()), 0.0);
  for (index_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (index_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

double dot_vec(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Per-class forward state shared by a whole batch (the prompt is fixed
// within one call).
struct ClassForward {
  std::vector<double> feature;  // f_j, unit or zero
  double z_norm = 0.0;          // ||z_j|| before normalization
};

// Prompt-position part of the text projection: sum_i block_i * p_row_i.
std::vector<double> prompt_projection(const Matrix& prompt,
                                      const FrozenEncoders& enc) {
  const EncoderDims& dims = enc.dims();
  const index_t b = dims.prompt_len, d = dims.embed_dim;
  const Matrix& proj = enc.text_proj();
  std::vector<double> base(static_cast<std::size_t>(d), 0.0);
  for (index_t r = 0; r < d; ++r) {
    double s = 0.0;
    for (index_t i = 0; i < b; ++i) {
      const index_t offset = i * d;
      for (index_t k = 0; k < d; ++k) s += proj(r, offset + k) * prompt(i, k);
    }
    base[static_cast<std::size_t>(r)] = s;
  }
  return base;
}

std::vector<ClassForward> forward_classes(const Matrix& prompt,
                                          const FrozenEncoders& enc) {
  const EncoderDims& dims = enc.dims();
  const index_t d = dims.embed_dim;
  const std::vector<double> base = prompt_projection(prompt, enc);
  const Matrix& tokens = enc.projected_class_tokens();
  std::vector<ClassForward> out(static_cast<std::size_t>(dims.num_classes));
  for (index_t c = 0; c < dims.num_classes; ++c) {
    std::vector<double> z(static_cast<std::size_t>(d));
    for (index_t r = 0; r < d; ++r) {
      z[static_cast<std::size_t>(r)] =
          base[static_cast<std::size_t>(r)] + tokens(c, r);
    }
    double norm_sq = 0.0;
    for (double x : z) norm_sq += x * x;
    ClassForward& cf = out[static_cast<std::size_t>(c)];
    cf.z_norm = std::sqrt(norm_sq);
    if (cf.z_norm > 0.0) {
      const double inv = 1.0 / cf.z_norm;
      for (double& x : z) x *= inv;
    }
    cf.feature = std::move(z);
  }
  return out;
}

}  // namespace

FrozenEncoders::FrozenEncoders(const EncoderDims& dims, double temperature,
                               RngStream& rng)
    : dims_(dims), tau_(temperature) {
  if (dims.prompt_len < 1 || dims.embed_dim < 1 || dims.token_dim < 1 ||
      dims.image_dim < 1 || dims.num_classes < 2) {
    throw std::invalid_argument(
        "FrozenEncoders: dims must be positive with at least 2 classes");
  }
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("FrozenEncoders: temperature must be > 0");
  }
  const index_t b = dims.prompt_len, d = dims.embed_dim;
  // Draw order is part of the determinism contract; do not reorder.
  class_embeds_ = gaussian_matrix(dims.num_classes, dims.token_dim, 1.0, rng);
  token_lift_ = gaussian_matrix(
      dims.token_dim, d,
      1.0 / std::sqrt(static_cast<double>(dims.token_dim)), rng);
  text_proj_ =
      gaussian_matrix(d, (b + 1) * d,
                      1.0 / std::sqrt(static_cast<double>(d)), rng);
  image_proj_ = gaussian_matrix(
      d, dims.image_dim,
      1.0 / std::sqrt(static_cast<double>(dims.image_dim)), rng);
  lifted_tokens_ = matmul(class_embeds_, token_lift_);

  // End-position block applied to every class token, cached since both are
  // frozen.
  projected_tokens_ = Matrix(dims.num_classes, d);
  const index_t end_offset = b * d;
  for (index_t c = 0; c < dims.num_classes; ++c) {
    for (index_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (index_t k = 0; k < d; ++k) {
        s += text_proj_(r, end_offset + k) * lifted_tokens_(c, k);
      }
      projected_tokens_(c, r) = s;
    }
  }
}

std::vector<double> FrozenEncoders::image_feature(
    std::span<const double> x) const {
  std::vector<double> f = matvec(image_proj_, x);
  normalize_in_place(f);
  return f;
}

std::span<const double> FrozenEncoders::lifted_class_token(
    index_t class_id) const {
  if (class_id < 0 || class_id >= dims_.num_classes) {
    throw std::invalid_argument("lifted_class_token: unknown class " +
                                std::to_string(class_id));
  }
  return lifted_tokens_.row(class_id);
}

std::vector<double> FrozenEncoders::text_feature(const Matrix& prompt,
                                                 index_t class_id) const {
  if (prompt.rows() != dims_.prompt_len || prompt.cols() != dims_.embed_dim) {
    throw std::invalid_argument("text_feature: prompt must be " +
                                std::to_string(dims_.prompt_len) + "x" +
                                std::to_string(dims_.embed_dim));
  }
  if (class_id < 0 || class_id >= dims_.num_classes) {
    throw std::invalid_argument("text_feature: unknown class " +
                                std::to_string(class_id));
  }
  std::vector<double> z = prompt_projection(prompt, *this);
  for (index_t r = 0; r < dims_.embed_dim; ++r) {
    z[static_cast<std::size_t>(r)] += projected_tokens_(class_id, r);
  }
  normalize_in_place(z);
  return z;
}

std::vector<double> predict_proba(const PromptState& prompts,
                                  const FrozenEncoders& encoders,
                                  std::span<const double> image_feat) {
  const Matrix combined = prompts.p_global + prompts.p_local;
  const index_t num_classes = encoders.dims().num_classes;
  std::vector<double> logits(static_cast<std::size_t>(num_classes));
  const double inv_tau = 1.0 / encoders.temperature();
  for (index_t c = 0; c < num_classes; ++c) {
    const std::vector<double> f = encoders.text_feature(combined, c);
    logits[static_cast<std::size_t>(c)] = dot_vec(f, image_feat) * inv_tau;
  }
  double max_logit = logits[0];
  for (double l : logits) max_logit = std::max(max_logit, l);
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    sum += l;
  }
  for (double& l : logits) l /= sum;
  return logits;
}

index_t classify(const Matrix& combined_prompt, const FrozenEncoders& encoders,
                 std::span<const double> image_feat,
                 std::span<const index_t> label_set) {
  if (label_set.empty()) {
    throw std::invalid_argument("classify: empty label set");
  }
  index_t best = label_set[0];
  double best_score = -std::numeric_limits<double>::infinity();
  for (index_t c : label_set) {
    const std::vector<double> f = encoders.text_feature(combined_prompt, c);
    const double score = dot_vec(f, image_feat);
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

PromptGradients prompt_gradients(const Matrix& p_global,
                                 const Matrix& p_local_forward,
                                 const FrozenEncoders& encoders,
                                 std::span<const Sample> batch) {
  if (batch.empty()) {
    throw std::invalid_argument("prompt_gradients: empty batch");
  }
  const EncoderDims& dims = encoders.dims();
  if (!p_global.same_shape(p_local_forward) ||
      p_global.rows() != dims.prompt_len || p_global.cols() != dims.embed_dim) {
    throw std::invalid_argument("prompt_gradients: prompt shape mismatch");
  }
  const Matrix combined = p_global + p_local_forward;
  const index_t b = dims.prompt_len, d = dims.embed_dim, C = dims.num_classes;
  const std::vector<ClassForward> classes =
      forward_classes(combined, encoders);
  const double inv_tau = 1.0 / encoders.temperature();

  PromptGradients out;
  out.per_example_loss.reserve(batch.size());
  out.per_example_grad.reserve(batch.size());

  std::vector<double> logits(static_cast<std::size_t>(C));
  std::vector<double> w(static_cast<std::size_t>(d));
  for (const Sample& sample : batch) {
    if (sample.label < 0 || sample.label >= C) {
      throw std::invalid_argument("prompt_gradients: label " +
                                  std::to_string(sample.label) +
                                  " out of range");
    }
    const std::vector<double> g = encoders.image_feature(sample.x);
    for (index_t c = 0; c < C; ++c) {
      logits[static_cast<std::size_t>(c)] =
          dot_vec(classes[static_cast<std::size_t>(c)].feature, g) * inv_tau;
    }
    double max_logit = logits[0];
    for (double l : logits) max_logit = std::max(max_logit, l);
    double sum_exp = 0.0;
    for (double l : logits) sum_exp += std::exp(l - max_logit);
    const double lse = max_logit + std::log(sum_exp);
    const double loss = lse - logits[static_cast<std::size_t>(sample.label)];

    // dL/dz_c = (prob_c - 1{c=y}) / tau * (I - f f^T) g / ||z_c||, summed
    // into w; position block transposes then route w to each prompt row.
    std::fill(w.begin(), w.end(), 0.0);
    for (index_t c = 0; c < C; ++c) {
      const ClassForward& cf = classes[static_cast<std::size_t>(c)];
      if (cf.z_norm == 0.0) continue;
      double dl = std::exp(logits[static_cast<std::size_t>(c)] - lse);
      if (c == sample.label) dl -= 1.0;
      const double coeff = dl * inv_tau / cf.z_norm;
      const double fg = dot_vec(cf.feature, g);
      for (index_t j = 0; j < d; ++j) {
        w[static_cast<std::size_t>(j)] +=
            coeff * (g[static_cast<std::size_t>(j)] -
                     cf.feature[static_cast<std::size_t>(j)] * fg);
      }
    }
    Matrix grad(b, d);
    const Matrix& proj = encoders.text_proj();
    for (index_t i = 0; i < b; ++i) {
      const index_t offset = i * d;
      for (index_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (index_t r = 0; r < d; ++r) {
          s += proj(r, offset + k) * w[static_cast<std::size_t>(r)];
        }
        grad(i, k) = s;
      }
    }
    out.per_example_loss.push_back(loss);
    out.per_example_grad.push_back(std::move(grad));
    out.mean_loss += loss;
  }
  out.mean_loss /= static_cast<double>(batch.size());
  return out;
}

BatchGrads loss_and_grads(const Matrix& p_global, const FactoredPrompt& factored,
                          const FrozenEncoders& encoders,
                          std::span<const Sample> batch) {
  const Matrix p_local_forward = factored.reconstruct();
  PromptGradients core =
      prompt_gradients(p_global, p_local_forward, encoders, batch);
  const Matrix u_t = transpose(factored.u);
  const Matrix v_t = transpose(factored.v);
  BatchGrads out;
  out.loss = core.mean_loss;
  out.per_example.reserve(core.per_example_grad.size());
  for (std::size_t i = 0; i < core.per_example_grad.size(); ++i) {
    ExampleGrads eg;
    eg.loss = core.per_example_loss[i];
    eg.grad_u = matmul(core.per_example_grad[i], v_t);
    eg.grad_v = matmul(u_t, core.per_example_grad[i]);
    eg.grad_global = std::move(core.per_example_grad[i]);
    out.per_example.push_back(std::move(eg));
  }
  return out;
}

}  // namespace dpfpl
