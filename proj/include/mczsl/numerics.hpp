#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "mczsl/errors.hpp"
#include "mczsl/real.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

/// Non-owning read-only view of a row-major matrix.
struct MatrixView {
  std::span<const Real> data;
  Index rows = 0;
  Index cols = 0;

  Real operator()(Index r, Index c) const { return data[r * cols + c]; }
  std::span<const Real> row(Index r) const { return data.subspan(r * cols, cols); }
};

/// Row-major dense matrix. Storage length always equals rows * cols.
class Dense2D {
 public:
  Dense2D() = default;
  Dense2D(Index rows, Index cols, Real fill = Real(0));
  Dense2D(Index rows, Index cols, std::vector<Real> data);

  static Dense2D from_rows(std::initializer_list<std::initializer_list<Real>> rows);
  static Dense2D identity(Index n);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real& operator()(Index r, Index c) { return data_[r * cols_ + c]; }
  Real operator()(Index r, Index c) const { return data_[r * cols_ + c]; }

  std::span<Real> row(Index r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(Index r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  const std::vector<Real>& storage() const noexcept { return data_; }

  MatrixView view() const noexcept { return {data_, rows_, cols_}; }
  operator MatrixView() const noexcept { return view(); }  // NOLINT

  friend bool operator==(const Dense2D&, const Dense2D&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Real> data_;
};

Dense2D to_dense(MatrixView v);

/// a * b. Single-threaded with a fixed reduction order, so results are
/// bit-stable run to run.
Dense2D matmul(MatrixView a, MatrixView b);
/// transpose(a) * b
Dense2D matmul_tn(MatrixView a, MatrixView b);
/// a * transpose(b)
Dense2D matmul_nt(MatrixView a, MatrixView b);

/// Variance floor added inside every standard deviation.
inline constexpr double kEpsVar = 1e-5;

struct RowStats {
  std::vector<Real> mean;
  std::vector<Real> std;
};

/// Per-row mean and biased standard deviation sqrt(var + eps_var).
RowStats rowwise_mean_std(MatrixView h, double eps_var = kEpsVar);

/// Central-difference gradient of a scalar function, one entry at a time.
/// Throws NumericError if f returns a non-finite value.
Dense2D finite_diff_grad(const std::function<double(const Dense2D&)>& f, const Dense2D& x,
                         double h);

/// ||a - b|| / max(||a||, ||b||); 0 when both are zero.
double relative_error(std::span<const Real> a, std::span<const Real> b);

bool all_finite(std::span<const Real> values);
/// Throws NumericError naming `what` on the first non-finite entry.
void ensure_finite(std::span<const Real> values, std::string_view what);

void check_shape(bool ok, std::string_view what);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
