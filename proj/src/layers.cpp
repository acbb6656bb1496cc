#include "mczsl/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

AffineParams::AffineParams(Dense2D w, std::vector<Real> b)
    : weight(std::move(w)),
      bias(std::move(b)),
      grad_weight(weight.rows(), weight.cols()),
      grad_bias(bias.size(), Real(0)) {
  check_shape(bias.size() == weight.cols(), "AffineParams: bias length must equal out");
}

void AffineParams::zero_grad() {
  std::fill(grad_weight.data().begin(), grad_weight.data().end(), Real(0));
  std::fill(grad_bias.begin(), grad_bias.end(), Real(0));
}

Forward<AffineCache> affine_forward(const AffineView& p, MatrixView x) {
  check_shape(p.bias.size() == p.out(), "affine_forward: bias length must equal out");
  check_shape(x.cols == p.in(), "affine_forward: input width " + std::to_string(x.cols) +
                                    " != layer input " + std::to_string(p.in()));
  Dense2D y = matmul(x, p.weight);
  for (Index r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (Index c = 0; c < row.size(); ++c) row[c] += p.bias[c];
  }
  return {std::move(y), AffineCache{to_dense(x)}};
}

Dense2D affine_backward(const AffineView& p, const AffineCache& cache, MatrixView dy,
                        AffineGradRef grad, bool need_input_grad) {
  check_shape(dy.rows == cache.input.rows() && dy.cols == p.out(),
              "affine_backward: upstream gradient shape");
  check_shape(grad.weight.size() == p.in() * p.out() && grad.bias.size() == p.out(),
              "affine_backward: gradient buffer shape");
  const Dense2D dw = matmul_tn(cache.input, dy);
  for (Index i = 0; i < dw.size(); ++i) grad.weight[i] += dw.data()[i];
  for (Index r = 0; r < dy.rows; ++r) {
    const auto row = dy.row(r);
    for (Index c = 0; c < row.size(); ++c) grad.bias[c] += row[c];
  }
  if (!need_input_grad) return {};
  return matmul_nt(dy, p.weight);
}

Forward<ReluCache> relu_forward(MatrixView x) {
  Dense2D y(x.rows, x.cols);
  for (Index i = 0; i < y.size(); ++i) y.data()[i] = std::max(x.data[i], Real(0));
  return {std::move(y), ReluCache{to_dense(x)}};
}

Dense2D relu_backward(const ReluCache& cache, MatrixView dy) {
  check_shape(dy.rows == cache.input.rows() && dy.cols == cache.input.cols(),
              "relu_backward: shape");
  Dense2D dx(dy.rows, dy.cols);
  for (Index i = 0; i < dx.size(); ++i) {
    dx.data()[i] = cache.input.data()[i] > Real(0) ? dy.data[i] : Real(0);
  }
  return dx;
}

Forward<SigmoidCache> sigmoid_forward(MatrixView x) {
  Dense2D y(x.rows, x.cols);
  for (Index i = 0; i < y.size(); ++i) {
    const double v = x.data[i];
    // Branch keeps exp() from overflowing for large |v|.
    y.data()[i] = static_cast<Real>(v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                                           : std::exp(v) / (1.0 + std::exp(v)));
  }
  Dense2D copy = y;
  return {std::move(y), SigmoidCache{std::move(copy)}};
}

Dense2D sigmoid_backward(const SigmoidCache& cache, MatrixView dy) {
  check_shape(dy.rows == cache.output.rows() && dy.cols == cache.output.cols(),
              "sigmoid_backward: shape");
  Dense2D dx(dy.rows, dy.cols);
  for (Index i = 0; i < dx.size(); ++i) {
    const Real s = cache.output.data()[i];
    dx.data()[i] = dy.data[i] * s * (Real(1) - s);
  }
  return dx;
}

ScnParams ScnParams::make(Real alpha, Real beta, double eps_var) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw NumericError("ScnParams: alpha and beta must be finite");
  }
  if (beta == Real(0)) throw std::invalid_argument("ScnParams: beta must be non-zero");
  if (!(eps_var > 0)) throw std::invalid_argument("ScnParams: eps_var must be positive");
  return ScnParams{alpha, beta, eps_var};
}

Forward<ScnCache> scn_forward(const ScnParams& p, MatrixView h) {
  if (p.beta == Real(0) || !std::isfinite(p.beta) || !std::isfinite(p.alpha)) {
    throw NumericError("scn_forward: beta must be finite and non-zero");
  }
  RowStats stats = rowwise_mean_std(h, p.eps_var);
  ScnCache cache;
  cache.normalized = Dense2D(h.rows, h.cols);
  cache.output = Dense2D(h.rows, h.cols);
  cache.alpha = p.alpha;
  cache.beta = p.beta;
  for (Index r = 0; r < h.rows; ++r) {
    const double mean = stats.mean[r];
    const double sd = stats.std[r];
    const double shift = static_cast<double>(p.alpha) * mean;
    const double denom = static_cast<double>(p.beta) * sd;
    const auto in = h.row(r);
    auto norm = cache.normalized.row(r);
    auto out = cache.output.row(r);
    for (Index c = 0; c < h.cols; ++c) {
      norm[c] = static_cast<Real>((in[c] - mean) / sd);
      out[c] = static_cast<Real>((in[c] - shift) / denom);
    }
  }
  ensure_finite(cache.output.data(), "scn_forward");
  cache.mean = std::move(stats.mean);
  cache.std = std::move(stats.std);
  Dense2D y = cache.output;
  return {std::move(y), std::move(cache)};
}

Dense2D scn_backward(const ScnCache& cache, MatrixView dy, ScnGrad* grad) {
  const Index rows = cache.output.rows();
  const Index cols = cache.output.cols();
  check_shape(dy.rows == rows && dy.cols == cols, "scn_backward: shape");
  const double alpha = cache.alpha;
  const double beta = cache.beta;
  Dense2D dh(rows, cols);
  double d_alpha = 0.0;
  double d_beta = 0.0;
  for (Index r = 0; r < rows; ++r) {
    const auto g = dy.row(r);
    const auto y = cache.output.row(r);
    const auto xhat = cache.normalized.row(r);
    const double sd = cache.std[r];
    double sum_g = 0.0;
    double sum_gy = 0.0;
    for (Index c = 0; c < cols; ++c) {
      sum_g += g[c];
      sum_gy += static_cast<double>(g[c]) * y[c];
    }
    const double mean_g = sum_g / static_cast<double>(cols);
    const double mean_gy = sum_gy / static_cast<double>(cols);
    auto out = dh.row(r);
    for (Index c = 0; c < cols; ++c) {
      out[c] = static_cast<Real>((g[c] - alpha * mean_g) / (beta * sd) - mean_gy * xhat[c] / sd);
    }
    d_alpha += -sum_g * cache.mean[r] / (beta * sd);
    d_beta += -sum_gy / beta;
  }
  if (grad != nullptr) {
    grad->alpha += d_alpha;
    grad->beta += d_beta;
  }
  return dh;
}

namespace {

void normalize_rows(MatrixView m, Dense2D& unit, std::vector<Real>& norms, const char* what) {
  unit = Dense2D(m.rows, m.cols);
  norms.resize(m.rows);
  for (Index r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    double sq = 0.0;
    for (Real v : row) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(norm > kEpsNorm)) {
      throw NumericError(std::string("cosine_logits: near-zero norm in ") + what + " row " +
                         std::to_string(r));
    }
    norms[r] = static_cast<Real>(norm);
    auto out = unit.row(r);
    for (Index c = 0; c < m.cols; ++c) out[c] = static_cast<Real>(row[c] / norm);
  }
}

// Removes the radial component of the upstream gradient: (g - (g.u) u) / |v|.
void project_tangent(const Dense2D& unit, const std::vector<Real>& norms, Dense2D& g) {
  for (Index r = 0; r < g.rows(); ++r) {
    auto gr = g.row(r);
    const auto u = unit.row(r);
    double dot = 0.0;
    for (Index c = 0; c < gr.size(); ++c) dot += static_cast<double>(gr[c]) * u[c];
    const double inv = 1.0 / static_cast<double>(norms[r]);
    for (Index c = 0; c < gr.size(); ++c) {
      gr[c] = static_cast<Real>((gr[c] - dot * u[c]) * inv);
    }
  }
}

}  // namespace

Forward<CosineCache> cosine_logits(MatrixView x, MatrixView e, Real scale) {
  check_shape(x.cols == e.cols, "cosine_logits: feature width mismatch " +
                                    std::to_string(x.cols) + " vs " + std::to_string(e.cols));
  CosineCache cache;
  cache.scale = scale;
  normalize_rows(x, cache.x_unit, cache.x_norm, "features");
  normalize_rows(e, cache.e_unit, cache.e_norm, "embeddings");
  Dense2D logits = matmul_nt(cache.x_unit, cache.e_unit);
  for (Real& v : logits.data()) v *= scale;
  return {std::move(logits), std::move(cache)};
}

CosineGrads cosine_logits_backward(const CosineCache& cache, MatrixView dlogits) {
  check_shape(dlogits.rows == cache.x_unit.rows() && dlogits.cols == cache.e_unit.rows(),
              "cosine_logits_backward: shape");
  Dense2D scaled = to_dense(dlogits);
  for (Real& v : scaled.data()) v *= cache.scale;
  CosineGrads grads{matmul(scaled, cache.e_unit), matmul_tn(scaled, cache.x_unit)};
  project_tangent(cache.x_unit, cache.x_norm, grads.dx);
  project_tangent(cache.e_unit, cache.e_norm, grads.de);
  return grads;
}

XentResult softmax_xent(MatrixView logits, std::span<const int> labels) {
  check_shape(labels.size() == logits.rows, "softmax_xent: one label per row required");
  check_shape(logits.rows > 0 && logits.cols > 0, "softmax_xent: empty logits");
  XentResult result;
  result.dlogits = Dense2D(logits.rows, logits.cols);
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  double total = 0.0;
  std::vector<double> p(logits.cols);
  for (Index r = 0; r < logits.rows; ++r) {
    const int label = labels[r];
    check_shape(label >= 0 && static_cast<Index>(label) < logits.cols,
                "softmax_xent: label out of range");
    const auto row = logits.row(r);
    const double max = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (Index c = 0; c < row.size(); ++c) {
      p[c] = std::exp(static_cast<double>(row[c]) - max);
      z += p[c];
    }
    total += -(static_cast<double>(row[label]) - max - std::log(z));
    auto out = result.dlogits.row(r);
    for (Index c = 0; c < row.size(); ++c) {
      const double onehot = static_cast<Index>(label) == c ? 1.0 : 0.0;
      out[c] = static_cast<Real>((p[c] / z - onehot) * inv_n);
    }
  }
  result.loss = total * inv_n;
  if (!std::isfinite(result.loss)) throw NumericError("softmax_xent: non-finite loss");
  return result;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
