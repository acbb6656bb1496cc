#pragma once

// Finite-difference checks of every backward pass. Each check draws random
// instances, builds a scalar objective sum(R * op(x)) with a random R (or the
// loss itself), and compares the analytic gradient with central differences
// for every input and parameter. Meant for the 64-bit build.

#include <cstdint>
#include <string>
#include <vector>

#include "mczsl/model.hpp"
#include "oracles.hpp"

namespace mczsl_test {
inline namespace MCZSL_PRECISION_NS {

struct GradCheck {
  std::string name;
  int instances = 0;
  double worst = 0;  // largest relative error seen
};

namespace detail {

using namespace mczsl;

inline double weighted_sum(MatrixView y, const Dense2D& r) {
  double s = 0.0;
  for (Index i = 0; i < y.data.size(); ++i) s += static_cast<double>(y.data[i]) * r.data()[i];
  return s;
}

// Entries closer than this to a ReLU kink make central differences straddle it.
inline bool near_kink(std::span<const Real> pre, double margin) {
  for (Real v : pre)
    if (std::abs(static_cast<double>(v)) < margin) return true;
  return false;
}

inline void note(GradCheck& c, double err) {
  c.instances += 1;
  c.worst = std::max(c.worst, err);
}

inline GradCheck check_affine(Rng& rng, int instances, double h) {
  GradCheck c{"affine"};
  for (int k = 0; k < instances; ++k) {
    const Index n = 1 + rng.uniform_index(4), in = 1 + rng.uniform_index(5),
                out = 1 + rng.uniform_index(5);
    const Dense2D x = random_matrix(rng, n, in);
    const Dense2D w = random_matrix(rng, in, out);
    const std::vector<Real> b = random_vector(rng, out);
    const Dense2D r = random_matrix(rng, n, out);
    auto loss = [&](const Dense2D& xx, const Dense2D& ww, const std::vector<Real>& bb) {
      return weighted_sum(affine_forward(AffineView{ww.view(), bb}, xx).output, r);
    };
    AffineParams p(w, b);
    auto fwd = affine_forward(p.view(), x);
    const Dense2D dx = affine_backward(p.view(), fwd.cache, r, p.grad());
    const auto fx = central_diff([&](const std::vector<Real>& v) {
      return loss(Dense2D(n, in, v), w, b); }, x.storage(), h);
    const auto fw = central_diff([&](const std::vector<Real>& v) {
      return loss(x, Dense2D(in, out, v), b); }, w.storage(), h);
    const auto fb = central_diff([&](const std::vector<Real>& v) { return loss(x, w, v); }, b, h);
    note(c, std::max({rel_err(dx.data(), fx), rel_err(p.grad_weight.data(), fw),
                      rel_err(p.grad_bias, fb)}));
  }
  return c;
}

inline GradCheck check_relu(Rng& rng, int instances, double h) {
  GradCheck c{"relu"};
  while (c.instances < instances) {
    const Index n = 1 + rng.uniform_index(4), m = 1 + rng.uniform_index(6);
    const Dense2D x = random_matrix(rng, n, m);
    if (near_kink(x.data(), 1e-3)) continue;
    const Dense2D r = random_matrix(rng, n, m);
    auto fwd = relu_forward(x);
    const Dense2D dx = relu_backward(fwd.cache, r);
    const auto fx = central_diff([&](const std::vector<Real>& v) {
      return weighted_sum(relu_forward(Dense2D(n, m, v)).output, r); }, x.storage(), h);
    note(c, rel_err(dx.data(), fx));
  }
  return c;
}

inline GradCheck check_sigmoid(Rng& rng, int instances, double h) {
  GradCheck c{"sigmoid"};
  for (int k = 0; k < instances; ++k) {
    const Index n = 1 + rng.uniform_index(4), m = 1 + rng.uniform_index(6);
    const Dense2D x = random_matrix(rng, n, m, 3.0);
    const Dense2D r = random_matrix(rng, n, m);
    auto fwd = sigmoid_forward(x);
    const Dense2D dx = sigmoid_backward(fwd.cache, r);
    const auto fx = central_diff([&](const std::vector<Real>& v) {
      return weighted_sum(sigmoid_forward(Dense2D(n, m, v)).output, r); }, x.storage(), h);
    note(c, rel_err(dx.data(), fx));
  }
  return c;
}

inline GradCheck check_scn(Rng& rng, int instances, double h) {
  GradCheck c{"scn"};
  for (int k = 0; k < instances; ++k) {
    const Index n = 1 + rng.uniform_index(4), m = 2 + rng.uniform_index(6);
    const Dense2D x = random_matrix(rng, n, m, 2.0);
    const Dense2D r = random_matrix(rng, n, m);
    const Real alpha = static_cast<Real>(rng.uniform(0.3, 1.7));
    const Real beta = static_cast<Real>(rng.uniform(0.3, 1.7));
    auto loss = [&](const Dense2D& xx, Real a, Real b) {
      return weighted_sum(scn_forward(ScnParams::make(a, b), xx).output, r);
    };
    auto fwd = scn_forward(ScnParams::make(alpha, beta), x);
    ScnGrad g;
    const Dense2D dx = scn_backward(fwd.cache, r, &g);
    const auto fx = central_diff([&](const std::vector<Real>& v) {
      return loss(Dense2D(n, m, v), alpha, beta); }, x.storage(), h);
    const auto fab = central_diff([&](const std::vector<Real>& v) { return loss(x, v[0], v[1]); },
                                  {alpha, beta}, h);
    const std::vector<double> gab{g.alpha, g.beta};
    note(c, std::max(rel_err(dx.data(), fx), rel_err(gab, fab)));
  }
  return c;
}

inline GradCheck check_cosine(Rng& rng, int instances, double h) {
  GradCheck c{"cosine_logits"};
  for (int k = 0; k < instances; ++k) {
    const Index n = 1 + rng.uniform_index(4), classes = 1 + rng.uniform_index(4),
                d = 2 + rng.uniform_index(5);
    const Dense2D x = random_matrix(rng, n, d);
    const Dense2D e = random_matrix(rng, classes, d);
    const Dense2D r = random_matrix(rng, n, classes);
    const Real scale = static_cast<Real>(rng.uniform(1.0, 10.0));
    auto fwd = cosine_logits(x, e, scale);
    const CosineGrads g = cosine_logits_backward(fwd.cache, r);
    const auto fx = central_diff([&](const std::vector<Real>& v) {
      return weighted_sum(cosine_logits(Dense2D(n, d, v), e, scale).output, r); }, x.storage(), h);
    const auto fe = central_diff([&](const std::vector<Real>& v) {
      return weighted_sum(cosine_logits(x, Dense2D(classes, d, v), scale).output, r); },
      e.storage(), h);
    note(c, std::max(rel_err(g.dx.data(), fx), rel_err(g.de.data(), fe)));
  }
  return c;
}

inline GradCheck check_xent(Rng& rng, int instances, double h) {
  GradCheck c{"softmax_xent"};
  for (int k = 0; k < instances; ++k) {
    const Index n = 1 + rng.uniform_index(5), classes = 2 + rng.uniform_index(5);
    const Dense2D z = random_matrix(rng, n, classes, 3.0);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.uniform_index(classes));
    const XentResult res = softmax_xent(z, labels);
    const auto fz = central_diff([&](const std::vector<Real>& v) {
      return softmax_xent(Dense2D(n, classes, v), labels).loss; }, z.storage(), h);
    note(c, rel_err(res.dlogits.data(), fz));
  }
  return c;
}

struct ModelVariant {
  const char* name;
  bool self_gating;
  Normalization norm;
};

inline constexpr ModelVariant kModelVariants[] = {
    {"model full", true, Normalization::scn},
    {"model no-self-gating", false, Normalization::scn},
    {"model no-norm", true, Normalization::none},
    {"model plain-cn", true, Normalization::plain_cn},
    {"model no-self-gating no-norm", false, Normalization::none},
    {"model no-self-gating plain-cn", false, Normalization::plain_cn},
};

inline bool gate_near_kink(const ModelParams& p, MatrixView attrs) {
  const auto g = self_gate(p, attrs);
  if (near_kink(g.cache.relu_a.input.data(), 1e-3)) return true;
  return !p.config().disable_self_gating && near_kink(g.cache.relu_b.input.data(), 1e-3);
}

// End to end through embed, cosine and cross-entropy. Alternates between an
// output projection (H != d) and none (H == d).
inline GradCheck check_model(const ModelVariant& variant, Rng& rng, int instances, double h) {
  GradCheck c{variant.name};
  while (c.instances < instances) {
    const bool square = c.instances % 2 == 1;
    const Index z = 2 + rng.uniform_index(3), d = 3 + rng.uniform_index(3);
    const Index hidden = square ? d : d + 1 + rng.uniform_index(3);
    const Index classes = 2 + rng.uniform_index(3), n = 2 + rng.uniform_index(4);
    ModelConfig cfg;
    cfg.hidden_width = hidden;
    cfg.logit_scale = static_cast<Real>(rng.uniform(2.0, 10.0));
    cfg.disable_self_gating = !variant.self_gating;
    cfg.normalization = variant.norm;
    ModelParams p = init_params(cfg, z, d, rng);
    // Non-trivial biases and normalization scalars so every gradient is exercised.
    for (Tensor t : {Tensor::phi_a_bias, Tensor::phi_s_bias, Tensor::phi_b_bias, Tensor::proj_bias,
                     Tensor::out_bias}) {
      for (Real& v : p.tensor(t)) v = static_cast<Real>(0.1 * rng.normal());
    }
    for (Tensor t : {Tensor::scn1_alpha, Tensor::scn1_beta, Tensor::scn2_alpha, Tensor::scn2_beta}) {
      p.tensor(t)[0] = static_cast<Real>(rng.uniform(0.5, 1.5));
    }
    const Dense2D attrs = random_matrix(rng, classes, z);
    const Dense2D x = random_matrix(rng, n, d);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.uniform_index(classes));
    if (gate_near_kink(p, attrs)) continue;

    const LossAndGrad lg = loss_and_grads(p, x, labels, attrs);
    ModelParams probe = p;
    const auto fd = central_diff([&](const std::vector<Real>& v) {
      probe.unflatten(v);
      return loss_only(probe, x, labels, attrs); }, p.flatten(), h);
    note(c, rel_err(lg.grad, fd));
  }
  return c;
}

}  // namespace detail

inline std::vector<GradCheck> run_gradient_suite(int instances, std::uint64_t seed,
                                                 double h = 1e-5) {
  mczsl::Rng rng(seed);
  std::vector<GradCheck> out;
  out.push_back(detail::check_affine(rng, instances, h));
  out.push_back(detail::check_relu(rng, instances, h));
  out.push_back(detail::check_sigmoid(rng, instances, h));
  out.push_back(detail::check_scn(rng, instances, h));
  out.push_back(detail::check_cosine(rng, instances, h));
  out.push_back(detail::check_xent(rng, instances, h));
  for (const auto& v : detail::kModelVariants) out.push_back(detail::check_model(v, rng, instances, h));
  return out;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl_test
