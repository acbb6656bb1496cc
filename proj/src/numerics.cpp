#include "mczsl/numerics.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

using EigenMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenMatrix>;
using MutMap = Eigen::Map<EigenMatrix>;

ConstMap as_eigen(MatrixView v) {
  return ConstMap(v.data.data(), static_cast<Eigen::Index>(v.rows),
                  static_cast<Eigen::Index>(v.cols));
}

MutMap as_eigen(Dense2D& m) {
  return MutMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

std::string dims(MatrixView v) {
  return std::to_string(v.rows) + "x" + std::to_string(v.cols);
}

}  // namespace

Dense2D::Dense2D(Index rows, Index cols, Real fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Dense2D::Dense2D(Index rows, Index cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  check_shape(data_.size() == rows_ * cols_, "Dense2D data length must equal rows*cols");
}

Dense2D Dense2D::from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
  const Index r = rows.size();
  const Index c = r == 0 ? 0 : rows.begin()->size();
  std::vector<Real> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    check_shape(row.size() == c, "Dense2D::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Dense2D(r, c, std::move(data));
}

Dense2D Dense2D::identity(Index n) {
  Dense2D m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = Real(1);
  return m;
}

Dense2D to_dense(MatrixView v) {
  return Dense2D(v.rows, v.cols, std::vector<Real>(v.data.begin(), v.data.end()));
}

void check_shape(bool ok, std::string_view what) {
  if (!ok) throw ShapeError(std::string(what));
}

Dense2D matmul(MatrixView a, MatrixView b) {
  check_shape(a.cols == b.rows, "matmul: " + dims(a) + " * " + dims(b));
  Dense2D out(a.rows, b.cols);
  if (a.cols == 0) return out;
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
  ensure_finite(out.data(), "matmul");
  return out;
}

Dense2D matmul_tn(MatrixView a, MatrixView b) {
  check_shape(a.rows == b.rows, "matmul_tn: " + dims(a) + "^T * " + dims(b));
  Dense2D out(a.cols, b.cols);
  if (a.rows == 0) return out;
  as_eigen(out).noalias() = as_eigen(a).transpose() * as_eigen(b);
  ensure_finite(out.data(), "matmul_tn");
  return out;
}

Dense2D matmul_nt(MatrixView a, MatrixView b) {
  check_shape(a.cols == b.cols, "matmul_nt: " + dims(a) + " * " + dims(b) + "^T");
  Dense2D out(a.rows, b.rows);
  if (a.cols == 0) return out;
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(b).transpose();
  ensure_finite(out.data(), "matmul_nt");
  return out;
}

RowStats rowwise_mean_std(MatrixView h, double eps_var) {
  check_shape(h.cols >= 1, "rowwise_mean_std: need at least one column");
  RowStats stats;
  stats.mean.resize(h.rows);
  stats.std.resize(h.rows);
  const double inv_d = 1.0 / static_cast<double>(h.cols);
  for (Index r = 0; r < h.rows; ++r) {
    const auto row = h.row(r);
    double sum = 0.0;
    for (Real v : row) sum += v;
    const double mean = sum * inv_d;
    double sq = 0.0;
    for (Real v : row) {
      const double c = static_cast<double>(v) - mean;
      sq += c * c;
    }
    stats.mean[r] = static_cast<Real>(mean);
    stats.std[r] = static_cast<Real>(std::sqrt(sq * inv_d + eps_var));
  }
  ensure_finite(stats.mean, "rowwise_mean_std mean");
  return stats;
}

Dense2D finite_diff_grad(const std::function<double(const Dense2D&)>& f, const Dense2D& x,
                         double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Dense2D grad(x.rows(), x.cols());
  Dense2D probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Real saved = probe.data()[i];
    probe.data()[i] = static_cast<Real>(saved + h);
    const double plus = f(probe);
    probe.data()[i] = static_cast<Real>(saved - h);
    const double minus = f(probe);
    probe.data()[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_diff_grad: non-finite function value");
    }
    grad.data()[i] = static_cast<Real>((plus - minus) / (2.0 * h));
  }
  return grad;
}

double relative_error(std::span<const Real> a, std::span<const Real> b) {
  check_shape(a.size() == b.size(), "relative_error: length mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    diff += d * d;
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

bool all_finite(std::span<const Real> values) {
  for (Real v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void ensure_finite(std::span<const Real> values, std::string_view what) {
  if (!all_finite(values)) {
    throw NumericError("non-finite value in " + std::string(what));
  }
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
