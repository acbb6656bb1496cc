#include "mczsl/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::plain_cn: return "plain_cn";
    case Normalization::scn: return "scn";
  }
  return "scn";
}

Normalization parse_normalization(std::string_view s) {
  if (s == "none") return Normalization::none;
  if (s == "plain_cn") return Normalization::plain_cn;
  if (s == "scn") return Normalization::scn;
  throw std::invalid_argument("unknown normalization '" + std::string(s) + "'");
}

ParamLayout::ParamLayout(Index attr_dim, Index hidden_width, Index feat_dim) {
  const Index z = attr_dim;
  const Index h = hidden_width;
  const bool out = hidden_width != feat_dim;
  const std::array<TensorSlot, kTensorCount> shapes = {{
      {"phi_a.weight", 0, z, h},
      {"phi_a.bias", 0, 1, h},
      {"phi_s.weight", 0, z, h},
      {"phi_s.bias", 0, 1, h},
      {"phi_b.weight", 0, z, h},
      {"phi_b.bias", 0, 1, h},
      {"scn1.alpha", 0, 1, 1},
      {"scn1.beta", 0, 1, 1},
      {"proj.weight", 0, h, h},
      {"proj.bias", 0, 1, h},
      {"scn2.alpha", 0, 1, 1},
      {"scn2.beta", 0, 1, 1},
      {"out.weight", 0, out ? h : 0, out ? feat_dim : 0},
      {"out.bias", 0, out ? Index{1} : Index{0}, out ? feat_dim : 0},
  }};
  Index offset = 0;
  for (std::size_t i = 0; i < kTensorCount; ++i) {
    slots_[i] = shapes[i];
    slots_[i].offset = offset;
    offset += shapes[i].size();
  }
  total_ = offset;
}

ModelParams::ModelParams(ModelConfig config, Index attr_dim, Index feat_dim)
    : config_(config),
      attr_dim_(attr_dim),
      feat_dim_(feat_dim),
      layout_(attr_dim, config.hidden_width, feat_dim),
      values_(layout_.total(), Real(0)) {
  if (attr_dim == 0 || feat_dim == 0 || config.hidden_width == 0) {
    throw std::invalid_argument("ModelParams: attr_dim, feat_dim and hidden_width must be >= 1");
  }
  for (Tensor t : {Tensor::scn1_alpha, Tensor::scn1_beta, Tensor::scn2_alpha, Tensor::scn2_beta}) {
    tensor(t)[0] = Real(1);
  }
}

std::span<const Real> ModelParams::tensor(Tensor t) const {
  const TensorSlot& s = layout_[t];
  return std::span<const Real>(values_).subspan(s.offset, s.size());
}

std::span<Real> ModelParams::tensor(Tensor t) {
  const TensorSlot& s = layout_[t];
  return std::span<Real>(values_).subspan(s.offset, s.size());
}

AffineView ModelParams::affine(Tensor weight) const {
  const TensorSlot& w = layout_[weight];
  const auto bias = static_cast<Tensor>(static_cast<std::size_t>(weight) + 1);
  return {MatrixView{tensor(weight), w.rows, w.cols}, tensor(bias)};
}

ScnParams ModelParams::scn(Tensor alpha) const {
  if (config_.normalization == Normalization::plain_cn) return ScnParams{};
  const auto beta = static_cast<Tensor>(static_cast<std::size_t>(alpha) + 1);
  return ScnParams{tensor(alpha)[0], tensor(beta)[0], kEpsVar};
}

ScnParams ModelParams::scn1() const { return scn(Tensor::scn1_alpha); }
ScnParams ModelParams::scn2() const { return scn(Tensor::scn2_alpha); }

void ModelParams::unflatten(std::span<const Real> flat) {
  check_shape(flat.size() == values_.size(), "ModelParams::unflatten: length mismatch");
  std::copy(flat.begin(), flat.end(), values_.begin());
}

ModelParams init_params(const ModelConfig& cfg, Index attr_dim, Index feat_dim, Rng& rng) {
  ModelParams p(cfg, attr_dim, feat_dim);
  for (Tensor t : {Tensor::phi_a_weight, Tensor::phi_s_weight, Tensor::phi_b_weight,
                   Tensor::proj_weight, Tensor::out_weight}) {
    const TensorSlot& slot = p.layout()[t];
    if (slot.size() == 0) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(slot.rows + slot.cols));
    for (Real& w : p.tensor(t)) w = static_cast<Real>(rng.uniform(-limit, limit));
  }
  return p;
}

ModelParams init_params(const ModelConfig& cfg, Index attr_dim, Index feat_dim) {
  Rng rng(cfg.init_seed);
  return init_params(cfg, attr_dim, feat_dim, rng);
}

Index trainable_parameter_count(const ModelConfig& cfg, Index attr_dim, Index feat_dim) {
  const ParamLayout layout(attr_dim, cfg.hidden_width, feat_dim);
  Index count = layout.total();
  if (cfg.disable_self_gating) {
    for (Tensor t : {Tensor::phi_s_weight, Tensor::phi_s_bias, Tensor::phi_b_weight,
                     Tensor::phi_b_bias}) {
      count -= layout[t].size();
    }
  }
  if (cfg.normalization != Normalization::scn) count -= 4;
  return count;
}

Forward<GateCache> self_gate(const ModelParams& p, MatrixView attributes) {
  check_shape(attributes.cols == p.attr_dim(),
              "self_gate: attribute width " + std::to_string(attributes.cols) +
                  " != model attr_dim " + std::to_string(p.attr_dim()));
  GateCache cache;
  auto a = affine_forward(p.phi_a(), attributes);
  auto relu_a = relu_forward(a.output);
  cache.phi_a = std::move(a.cache);
  cache.relu_a = std::move(relu_a.cache);
  if (p.config().disable_self_gating) {
    return {std::move(relu_a.output), std::move(cache)};
  }
  auto s = affine_forward(p.phi_s(), attributes);
  auto gate = sigmoid_forward(s.output);
  auto b = affine_forward(p.phi_b(), attributes);
  auto relu_b = relu_forward(b.output);
  Dense2D g(attributes.rows, p.hidden_width());
  for (Index i = 0; i < g.size(); ++i) {
    g.data()[i] = relu_a.output.data()[i] * gate.output.data()[i] + relu_b.output.data()[i];
  }
  cache.phi_s = std::move(s.cache);
  cache.gate = std::move(gate.cache);
  cache.phi_b = std::move(b.cache);
  cache.relu_b = std::move(relu_b.cache);
  return {std::move(g), std::move(cache)};
}

Forward<EmbedCache> embed_attributes(const ModelParams& p, MatrixView attributes) {
  const bool normalize = p.config().normalization != Normalization::none;
  EmbedCache cache;
  auto gate = self_gate(p, attributes);
  cache.gate = std::move(gate.cache);
  Dense2D h = std::move(gate.output);
  if (normalize) {
    auto n1 = scn_forward(p.scn1(), h);
    h = std::move(n1.output);
    cache.scn1 = std::move(n1.cache);
  }
  auto proj = affine_forward(p.proj(), h);
  cache.proj = std::move(proj.cache);
  h = std::move(proj.output);
  if (normalize) {
    auto n2 = scn_forward(p.scn2(), h);
    h = std::move(n2.output);
    cache.scn2 = std::move(n2.cache);
  }
  if (p.has_output_projection()) {
    auto out = affine_forward(p.out(), h);
    cache.out = std::move(out.cache);
    h = std::move(out.output);
  }
  return {std::move(h), std::move(cache)};
}

Forward<LogitsCache> forward_logits(const ModelParams& p, MatrixView features,
                                    MatrixView candidate_attributes) {
  check_shape(candidate_attributes.rows > 0, "forward_logits: empty candidate set");
  check_shape(features.cols == p.feat_dim(),
              "forward_logits: feature width " + std::to_string(features.cols) +
                  " != model feat_dim " + std::to_string(p.feat_dim()));
  auto embed = embed_attributes(p, candidate_attributes);
  auto cos = cosine_logits(features, embed.output, p.config().logit_scale);
  return {std::move(cos.output), LogitsCache{std::move(embed.cache), std::move(cos.cache)}};
}

namespace {

AffineGradRef grad_ref(const ModelParams& p, std::vector<Real>& grad, Tensor weight) {
  const TensorSlot& w = p.layout()[weight];
  const TensorSlot& b = p.layout()[static_cast<Tensor>(static_cast<std::size_t>(weight) + 1)];
  return {std::span<Real>(grad).subspan(w.offset, w.size()),
          std::span<Real>(grad).subspan(b.offset, b.size())};
}

void store_scn_grad(const ModelParams& p, std::vector<Real>& grad, Tensor alpha,
                    const ScnGrad& g) {
  if (p.config().normalization != Normalization::scn) return;
  grad[p.layout()[alpha].offset] += static_cast<Real>(g.alpha);
  grad[p.layout()[static_cast<Tensor>(static_cast<std::size_t>(alpha) + 1)].offset] +=
      static_cast<Real>(g.beta);
}

void gate_backward(const ModelParams& p, const GateCache& cache, const Dense2D& dg,
                   std::vector<Real>& grad) {
  if (p.config().disable_self_gating) {
    const Dense2D da = relu_backward(cache.relu_a, dg);
    affine_backward(p.phi_a(), cache.phi_a, da, grad_ref(p, grad, Tensor::phi_a_weight), false);
    return;
  }
  const Dense2D& gate = cache.gate.output;
  const Dense2D& pre_a = cache.relu_a.input;
  Dense2D d_relu_a(dg.rows(), dg.cols());
  Dense2D d_gate(dg.rows(), dg.cols());
  for (Index i = 0; i < dg.size(); ++i) {
    d_relu_a.data()[i] = dg.data()[i] * gate.data()[i];
    d_gate.data()[i] = dg.data()[i] * std::max(pre_a.data()[i], Real(0));
  }
  const Dense2D da = relu_backward(cache.relu_a, d_relu_a);
  const Dense2D ds = sigmoid_backward(cache.gate, d_gate);
  const Dense2D db = relu_backward(cache.relu_b, dg);
  affine_backward(p.phi_a(), cache.phi_a, da, grad_ref(p, grad, Tensor::phi_a_weight), false);
  affine_backward(p.phi_s(), cache.phi_s, ds, grad_ref(p, grad, Tensor::phi_s_weight), false);
  affine_backward(p.phi_b(), cache.phi_b, db, grad_ref(p, grad, Tensor::phi_b_weight), false);
}

void embed_backward(const ModelParams& p, const EmbedCache& cache, Dense2D de,
                    std::vector<Real>& grad) {
  if (cache.out) {
    de = affine_backward(p.out(), *cache.out, de, grad_ref(p, grad, Tensor::out_weight));
  }
  if (cache.scn2) {
    ScnGrad g;
    de = scn_backward(*cache.scn2, de, &g);
    store_scn_grad(p, grad, Tensor::scn2_alpha, g);
  }
  de = affine_backward(p.proj(), cache.proj, de, grad_ref(p, grad, Tensor::proj_weight));
  if (cache.scn1) {
    ScnGrad g;
    de = scn_backward(*cache.scn1, de, &g);
    store_scn_grad(p, grad, Tensor::scn1_alpha, g);
  }
  gate_backward(p, cache.gate, de, grad);
}

}  // namespace

LossAndGrad loss_and_grads(const ModelParams& p, MatrixView features, std::span<const int> labels,
                           MatrixView candidate_attributes) {
  auto fwd = forward_logits(p, features, candidate_attributes);
  XentResult xent = softmax_xent(fwd.output, labels);
  LossAndGrad result;
  result.loss = xent.loss;
  result.grad.assign(p.size(), Real(0));
  CosineGrads cg = cosine_logits_backward(fwd.cache.cosine, xent.dlogits);
  embed_backward(p, fwd.cache.embed, std::move(cg.de), result.grad);
  ensure_finite(result.grad, "loss_and_grads gradient");
  return result;
}

double loss_only(const ModelParams& p, MatrixView features, std::span<const int> labels,
                 MatrixView candidate_attributes) {
  auto fwd = forward_logits(p, features, candidate_attributes);
  return softmax_xent(fwd.output, labels).loss;
}

std::vector<int> argmax_rows(MatrixView logits) {
  std::vector<int> out(logits.rows);
  for (Index r = 0; r < logits.rows; ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<int> predict(const ModelParams& p, MatrixView features,
                         MatrixView candidate_attributes) {
  return argmax_rows(forward_logits(p, features, candidate_attributes).output);
}

Dense2D gather_rows(MatrixView m, std::span<const int> rows) {
  Dense2D out(rows.size(), m.cols);
  for (Index i = 0; i < rows.size(); ++i) {
    check_shape(rows[i] >= 0 && static_cast<Index>(rows[i]) < m.rows, "gather_rows: index");
    const auto src = m.row(static_cast<Index>(rows[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
