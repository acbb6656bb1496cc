#pragma once

// Reference implementations used by the unit and acceptance tests. Each one is
// written from the definition, with plain loops and no calls into the library
// code it is compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mczsl/numerics.hpp"
#include "mczsl/rng.hpp"

namespace mczsl_test {
inline namespace MCZSL_PRECISION_NS {

using mczsl::Index;
using mczsl::Real;

// Triple loop in double.
inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                        Index n, Index k, Index m) {
  std::vector<double> out(n * m, 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Index p = 0; p < k; ++p) s += a[i * k + p] * b[p * m + j];
      out[i * m + j] = s;
    }
  return out;
}

// Central difference of f at x, one coordinate at a time.
inline std::vector<double> central_diff(const std::function<double(const std::vector<Real>&)>& f,
                                        std::vector<Real> x, double h) {
  std::vector<double> g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const Real keep = x[i];
    x[i] = static_cast<Real>(keep + h);
    const double up = f(x);
    x[i] = static_cast<Real>(keep - h);
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
template <class A, class B>
double rel_err(const A& a, const B& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    diff += (x - y) * (x - y);
    na += x * x;
    nb += y * y;
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline std::vector<Real> random_vector(mczsl::Rng& rng, Index n, double scale = 1.0) {
  std::vector<Real> v(n);
  for (Real& x : v) x = static_cast<Real>(scale * rng.normal());
  return v;
}

inline mczsl::Dense2D random_matrix(mczsl::Rng& rng, Index rows, Index cols, double scale = 1.0) {
  return mczsl::Dense2D(rows, cols, random_vector(rng, rows * cols, scale));
}

// Mean over classes (ascending) of 100 * hits / count, skipping empty classes.
inline double oracle_class_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                                    const std::set<int>& classes) {
  double sum = 0.0;
  int counted = 0;
  for (int c : classes) {
    int hits = 0, total = 0;
    for (Index i = 0; i < truth.size(); ++i) {
      if (truth[i] != c) continue;
      ++total;
      if (pred[i] == c) ++hits;
    }
    if (total == 0) continue;
    sum += 100.0 * hits / total;
    ++counted;
  }
  return sum / counted;
}

inline double oracle_harmonic(double s, double u) {
  return s + u == 0.0 ? 0.0 : 2.0 * s * u / (s + u);
}

inline std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mczsl-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl_test
