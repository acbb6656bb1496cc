#pragma once

// Differentiable primitives with explicit forward and backward passes.
//
// Every forward returns the output together with a cache holding exactly
// what the matching backward needs. A cache is only valid for the forward
// call that produced it. Parameter gradients are accumulated (+=) into
// caller-owned buffers so several backward passes can share one buffer.

#include <span>
#include <vector>

#include "mczsl/numerics.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

/// Denominator floor for cosine similarity; rows below it are rejected.
inline constexpr double kEpsNorm = 1e-12;

template <class Cache>
struct Forward {
  Dense2D output;
  Cache cache;
};

// ---------------------------------------------------------------- affine

/// Read-only weights of y = x * W + b, W is in x out.
struct AffineView {
  MatrixView weight;
  std::span<const Real> bias;

  Index in() const { return weight.rows; }
  Index out() const { return weight.cols; }
};

/// Gradient accumulators matching an AffineView.
struct AffineGradRef {
  std::span<Real> weight;
  std::span<Real> bias;
};

/// Owning affine layer with parallel gradient buffers.
struct AffineParams {
  Dense2D weight;
  std::vector<Real> bias;
  Dense2D grad_weight;
  std::vector<Real> grad_bias;

  AffineParams() = default;
  AffineParams(Dense2D w, std::vector<Real> b);

  AffineView view() const { return {weight.view(), bias}; }
  AffineGradRef grad() { return {grad_weight.data(), grad_bias}; }
  void zero_grad();
};

struct AffineCache {
  Dense2D input;
};

Forward<AffineCache> affine_forward(const AffineView& p, MatrixView x);

/// Accumulates dW and db into `grad` and returns dx (empty when !need_input_grad).
Dense2D affine_backward(const AffineView& p, const AffineCache& cache, MatrixView dy,
                        AffineGradRef grad, bool need_input_grad = true);

// ----------------------------------------------------------- activations

struct ReluCache {
  Dense2D input;
};

Forward<ReluCache> relu_forward(MatrixView x);
/// Subgradient convention: relu'(0) = 0.
Dense2D relu_backward(const ReluCache& cache, MatrixView dy);

struct SigmoidCache {
  Dense2D output;
};

Forward<SigmoidCache> sigmoid_forward(MatrixView x);
Dense2D sigmoid_backward(const SigmoidCache& cache, MatrixView dy);

// -------------------------------------------- scaled layer normalization

/// y = (h - alpha * mean) / (beta * std), row statistics over the feature
/// axis. alpha = beta = 1 is plain layer normalization without gain.
struct ScnParams {
  Real alpha = 1;
  Real beta = 1;
  double eps_var = kEpsVar;

  /// Rejects beta == 0 and non-finite scalars.
  static ScnParams make(Real alpha, Real beta, double eps_var = kEpsVar);
};

struct ScnGrad {
  double alpha = 0;
  double beta = 0;
};

struct ScnCache {
  Dense2D normalized;  // (h - mean) / std
  Dense2D output;
  std::vector<Real> mean;
  std::vector<Real> std;
  Real alpha = 1;
  Real beta = 1;
};

Forward<ScnCache> scn_forward(const ScnParams& p, MatrixView h);

/// Returns dh; accumulates d(alpha), d(beta) into `grad` when non-null.
Dense2D scn_backward(const ScnCache& cache, MatrixView dy, ScnGrad* grad);

// ------------------------------------------------------- cosine logits

struct CosineCache {
  Dense2D x_unit;
  Dense2D e_unit;
  std::vector<Real> x_norm;
  std::vector<Real> e_norm;
  Real scale = 1;
};

/// logits[i, c] = scale * cos(x_i, e_c). Throws NumericError for rows with
/// norm below kEpsNorm.
Forward<CosineCache> cosine_logits(MatrixView x, MatrixView e, Real scale);

struct CosineGrads {
  Dense2D dx;
  Dense2D de;
};

CosineGrads cosine_logits_backward(const CosineCache& cache, MatrixView dlogits);

// --------------------------------------------------- softmax cross-entropy

struct XentResult {
  double loss = 0;
  Dense2D dlogits;
};

/// Mean negative log-likelihood over rows and its gradient (softmax - onehot) / n.
XentResult softmax_xent(MatrixView logits, std::span<const int> labels);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
