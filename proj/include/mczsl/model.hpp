#pragma once

// Attribute-to-visual embedding network with attribute self-gating, scaled
// layer normalization and cosine classification.
//
//   G = relu(A Wa + ba) * sigmoid(A Ws + bs) + relu(A Wb + bb)     (C x H)
//   E = SCN2(SCN1(G) Wp + bp) [Wo + bo]                             (C x d)
//   logits = scale * cos(X, E)                                      (n x C)
//
// The bracketed output projection only exists when the visual feature width
// d differs from the hidden width H. All trainable values live in one flat
// vector, in the order listed by ParamLayout, so meta-learning updates can
// treat the network as a single parameter vector.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mczsl/layers.hpp"
#include "mczsl/rng.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

enum class Normalization { none, plain_cn, scn };

std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view s);

struct ModelConfig {
  Index hidden_width = 2048;
  Real logit_scale = 10;
  bool disable_self_gating = false;
  Normalization normalization = Normalization::scn;
  std::uint64_t init_seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Tensor : std::size_t {
  phi_a_weight,
  phi_a_bias,
  phi_s_weight,
  phi_s_bias,
  phi_b_weight,
  phi_b_bias,
  scn1_alpha,
  scn1_beta,
  proj_weight,
  proj_bias,
  scn2_alpha,
  scn2_beta,
  out_weight,
  out_bias,
};
inline constexpr std::size_t kTensorCount = 14;

struct TensorSlot {
  std::string_view name;
  Index offset = 0;
  Index rows = 0;
  Index cols = 0;

  Index size() const { return rows * cols; }

  friend bool operator==(const TensorSlot&, const TensorSlot&) = default;
};

/// Offsets of every tensor inside the flat parameter vector. The output
/// projection slots are zero-sized when hidden_width == feat_dim.
class ParamLayout {
 public:
  ParamLayout(Index attr_dim, Index hidden_width, Index feat_dim);

  const TensorSlot& operator[](Tensor t) const { return slots_[static_cast<std::size_t>(t)]; }
  std::span<const TensorSlot> slots() const { return slots_; }
  Index total() const { return total_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::array<TensorSlot, kTensorCount> slots_{};
  Index total_ = 0;
};

class ModelParams {
 public:
  /// Zero-initialized parameters with alpha = beta = 1.
  ModelParams(ModelConfig config, Index attr_dim, Index feat_dim);

  const ModelConfig& config() const { return config_; }
  Index attr_dim() const { return attr_dim_; }
  Index feat_dim() const { return feat_dim_; }
  Index hidden_width() const { return config_.hidden_width; }
  bool has_output_projection() const { return config_.hidden_width != feat_dim_; }
  const ParamLayout& layout() const { return layout_; }
  Index size() const { return values_.size(); }

  std::span<const Real> values() const { return values_; }
  std::span<Real> values() { return values_; }
  std::span<const Real> tensor(Tensor t) const;
  std::span<Real> tensor(Tensor t);

  AffineView phi_a() const { return affine(Tensor::phi_a_weight); }
  AffineView phi_s() const { return affine(Tensor::phi_s_weight); }
  AffineView phi_b() const { return affine(Tensor::phi_b_weight); }
  AffineView proj() const { return affine(Tensor::proj_weight); }
  AffineView out() const { return affine(Tensor::out_weight); }
  /// Effective normalization parameters; plain_cn pins alpha = beta = 1.
  ScnParams scn1() const;
  ScnParams scn2() const;

  std::vector<Real> flatten() const { return values_; }
  void unflatten(std::span<const Real> flat);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  AffineView affine(Tensor weight) const;
  ScnParams scn(Tensor alpha) const;

  ModelConfig config_;
  Index attr_dim_ = 0;
  Index feat_dim_ = 0;
  ParamLayout layout_;
  std::vector<Real> values_;
};

/// Affine weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases 0,
/// alpha = beta = 1. Deterministic given the generator state.
ModelParams init_params(const ModelConfig& cfg, Index attr_dim, Index feat_dim, Rng& rng);
/// Same, seeded from cfg.init_seed.
ModelParams init_params(const ModelConfig& cfg, Index attr_dim, Index feat_dim);

/// Parameters connected to the loss under the configured ablations.
Index trainable_parameter_count(const ModelConfig& cfg, Index attr_dim, Index feat_dim);

struct GateCache {
  AffineCache phi_a, phi_s, phi_b;
  ReluCache relu_a, relu_b;
  SigmoidCache gate;
};

struct EmbedCache {
  GateCache gate;
  std::optional<ScnCache> scn1;
  AffineCache proj;
  std::optional<ScnCache> scn2;
  std::optional<AffineCache> out;
};

struct LogitsCache {
  EmbedCache embed;
  CosineCache cosine;
};

/// relu(phi_a(A)) * sigmoid(phi_s(A)) + relu(phi_b(A)), or relu(phi_a(A))
/// when self-gating is disabled.
Forward<GateCache> self_gate(const ModelParams& p, MatrixView attributes);

/// Maps class attributes (C x z) into the visual feature space (C x d).
Forward<EmbedCache> embed_attributes(const ModelParams& p, MatrixView attributes);

/// Cosine logits of features (n x d) against embedded candidate classes.
Forward<LogitsCache> forward_logits(const ModelParams& p, MatrixView features,
                                    MatrixView candidate_attributes);

struct LossAndGrad {
  double loss = 0;
  std::vector<Real> grad;  // flatten order
};

/// Cross-entropy of forward_logits; labels index rows of candidate_attributes.
LossAndGrad loss_and_grads(const ModelParams& p, MatrixView features, std::span<const int> labels,
                           MatrixView candidate_attributes);

double loss_only(const ModelParams& p, MatrixView features, std::span<const int> labels,
                 MatrixView candidate_attributes);

/// Argmax over candidates per row, ties to the lowest candidate index.
std::vector<int> predict(const ModelParams& p, MatrixView features,
                         MatrixView candidate_attributes);

std::vector<int> argmax_rows(MatrixView logits);

/// Rows of `m` selected by index, in the given order.
Dense2D gather_rows(MatrixView m, std::span<const int> rows);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
