#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "mczsl/numerics.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

struct AdamState {
  std::vector<Real> m;
  std::vector<Real> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Index n);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<Real> params, std::span<const Real> grad, AdamState& state, double lr);

enum class InnerOptimizer { adam, sgd };
/// `adam` feeds the Reptile pseudo-gradient to Adam; `plain` applies
/// theta <- theta - lr * (theta - adapted) directly.
enum class MetaUpdate { adam, plain };

std::string_view to_string(InnerOptimizer o);
std::string_view to_string(MetaUpdate m);
InnerOptimizer parse_inner_optimizer(std::string_view s);
MetaUpdate parse_meta_update(std::string_view s);

struct MetaSchedule {
  double meta_lr = 1e-3;  // initial outer learning rate
  double inner_lr = 1e-4;
  Index inner_steps = 5;
  Index epochs = 200;
  InnerOptimizer inner_optimizer = InnerOptimizer::adam;
  MetaUpdate meta_update = MetaUpdate::adam;
};

/// meta_lr * (1 - e / (E - 1)); a single-epoch schedule keeps the base rate.
double meta_lr(Index epoch, const MetaSchedule& sched);

/// Returns the loss at theta and writes d loss / d theta into grad.
using LossGradFn = std::function<double(std::span<const Real> theta, std::span<Real> grad)>;

/// Runs sched.inner_steps updates from a copy of theta at the constant inner
/// learning rate, with a fresh optimizer state, and returns the adapted vector.
std::vector<Real> inner_loop(std::span<const Real> theta, const LossGradFn& loss,
                             const MetaSchedule& sched);

/// Reptile outer update with (theta - adapted) as the gradient.
void reptile_outer_step(std::span<Real> theta, std::span<const Real> adapted,
                        AdamState& meta_state, double lr, MetaUpdate mode = MetaUpdate::adam);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
