#include "mczsl/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

AdamState AdamState::zeros(Index n) {
  AdamState s;
  s.m.assign(n, Real(0));
  s.v.assign(n, Real(0));
  return s;
}

void adam_step(std::span<Real> params, std::span<const Real> grad, AdamState& state, double lr) {
  check_shape(params.size() == grad.size(), "adam_step: gradient length mismatch");
  if (state.m.empty() && state.v.empty() && state.t == 0) {
    state.m.assign(params.size(), Real(0));
    state.v.assign(params.size(), Real(0));
  }
  check_shape(state.m.size() == params.size() && state.v.size() == params.size(),
              "adam_step: optimizer state length mismatch");
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, eps = state.eps;
  const double step = lr / c1, inv_c2 = 1.0 / c2;
  Real* __restrict p = params.data();
  const Real* __restrict gp = grad.data();
  Real* __restrict mp = state.m.data();
  Real* __restrict vp = state.v.data();
  const Index n = params.size();
  for (Index i = 0; i < n; ++i) {
    const double g = gp[i];
    const double m = b1 * mp[i] + (1.0 - b1) * g;
    const double v = b2 * vp[i] + (1.0 - b2) * g * g;
    mp[i] = static_cast<Real>(m);
    vp[i] = static_cast<Real>(v);
    p[i] = static_cast<Real>(p[i] - step * m / (std::sqrt(v * inv_c2) + eps));
  }
}

std::string_view to_string(InnerOptimizer o) { return o == InnerOptimizer::adam ? "adam" : "sgd"; }
std::string_view to_string(MetaUpdate m) { return m == MetaUpdate::adam ? "adam" : "plain"; }

InnerOptimizer parse_inner_optimizer(std::string_view s) {
  if (s == "adam") return InnerOptimizer::adam;
  if (s == "sgd") return InnerOptimizer::sgd;
  throw std::invalid_argument("unknown inner optimizer '" + std::string(s) + "'");
}

MetaUpdate parse_meta_update(std::string_view s) {
  if (s == "adam") return MetaUpdate::adam;
  if (s == "plain") return MetaUpdate::plain;
  throw std::invalid_argument("unknown meta update '" + std::string(s) + "'");
}

double meta_lr(Index epoch, const MetaSchedule& sched) {
  if (epoch >= sched.epochs) {
    throw std::out_of_range("meta_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(sched.epochs) + ")");
  }
  if (sched.epochs == 1) return sched.meta_lr;
  const double frac = static_cast<double>(epoch) / static_cast<double>(sched.epochs - 1);
  return std::max(0.0, sched.meta_lr * (1.0 - frac));
}

std::vector<Real> inner_loop(std::span<const Real> theta, const LossGradFn& loss,
                             const MetaSchedule& sched) {
  std::vector<Real> adapted(theta.begin(), theta.end());
  if (sched.inner_steps == 0) return adapted;
  std::vector<Real> grad(adapted.size());
  AdamState state = AdamState::zeros(adapted.size());
  for (Index step = 0; step < sched.inner_steps; ++step) {
    std::fill(grad.begin(), grad.end(), Real(0));
    const double value = loss(adapted, grad);
    if (!std::isfinite(value)) throw NumericError("inner_loop: non-finite loss");
    if (sched.inner_optimizer == InnerOptimizer::adam) {
      adam_step(adapted, grad, state, sched.inner_lr);
    } else {
      for (Index i = 0; i < adapted.size(); ++i) {
        adapted[i] = static_cast<Real>(adapted[i] - sched.inner_lr * grad[i]);
      }
    }
  }
  return adapted;
}

void reptile_outer_step(std::span<Real> theta, std::span<const Real> adapted,
                        AdamState& meta_state, double lr, MetaUpdate mode) {
  check_shape(theta.size() == adapted.size(), "reptile_outer_step: length mismatch");
  if (mode == MetaUpdate::plain) {
    for (Index i = 0; i < theta.size(); ++i) {
      theta[i] = static_cast<Real>(theta[i] - lr * (theta[i] - adapted[i]));
    }
    return;
  }
  std::vector<Real> pseudo_grad(theta.size());
  for (Index i = 0; i < theta.size(); ++i) pseudo_grad[i] = theta[i] - adapted[i];
  adam_step(theta, pseudo_grad, meta_state, lr);
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
