#include <cmath>

#include "doctest.h"
#include "mczsl/optim.hpp"
#include "../support/oracles.hpp"

using namespace mczsl;
using namespace mczsl_test;

TEST_CASE("adam matches a scalar reference over many steps") {
  Rng rng(8);
  std::vector<Real> p = random_vector(rng, 6);
  std::vector<double> ref(p.begin(), p.end()), m(6, 0.0), v(6, 0.0);
  AdamState s = AdamState::zeros(6);
  const double lr = 0.01;
  for (int t = 1; t <= 25; ++t) {
    const std::vector<Real> g = random_vector(rng, 6);
    adam_step(p, g, s, lr);
    for (int i = 0; i < 6; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * double(g[i]) * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK(s.t == 25);
  for (int i = 0; i < 6; ++i) CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-5));
}

TEST_CASE("first adam step moves every coordinate by about lr") {
  std::vector<Real> p{0, 0, 0};
  const std::vector<Real> g{3, -0.01f, 100};
  AdamState s;
  adam_step(p, g, s, 0.5);
  CHECK(p[0] == doctest::Approx(-0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == doctest::Approx(-0.5));
  CHECK_THROWS_AS(adam_step(p, std::vector<Real>(2), s, 0.1), ShapeError);
}

TEST_CASE("meta learning rate decays linearly to zero") {
  MetaSchedule s;
  s.meta_lr = 1e-3;
  s.epochs = 200;
  CHECK(meta_lr(0, s) == doctest::Approx(1e-3));
  CHECK(meta_lr(199, s) == 0.0);
  for (Index e = 0; e < 200; ++e) CHECK(meta_lr(e, s) == doctest::Approx(1e-3 * (1.0 - e / 199.0)));
  CHECK_THROWS_AS(meta_lr(200, s), std::out_of_range);
  s.epochs = 1;
  CHECK(meta_lr(0, s) == doctest::Approx(1e-3));
}

TEST_CASE("optimizer names round trip") {
  CHECK(parse_inner_optimizer(to_string(InnerOptimizer::sgd)) == InnerOptimizer::sgd);
  CHECK(parse_inner_optimizer("adam") == InnerOptimizer::adam);
  CHECK(parse_meta_update(to_string(MetaUpdate::plain)) == MetaUpdate::plain);
  CHECK_THROWS(parse_meta_update("nesterov"));
}

TEST_CASE("single SGD inner step is theta - gamma * grad") {
  const std::vector<Real> theta{1, -2, 0.5f};
  auto loss = [](std::span<const Real> t, std::span<Real> g) {
    double l = 0;
    for (Index i = 0; i < t.size(); ++i) {
      l += 0.5 * (i + 1.0) * t[i] * t[i];
      g[i] = static_cast<Real>((i + 1.0) * t[i]);
    }
    return l;
  };
  MetaSchedule s;
  s.inner_steps = 1;
  s.inner_lr = 0.1;
  s.inner_optimizer = InnerOptimizer::sgd;
  const auto out = inner_loop(theta, loss, s);
  for (Index i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(theta[i] - 0.1 * (i + 1.0) * theta[i]));
  s.inner_steps = 0;
  CHECK(inner_loop(theta, loss, s) == theta);
  s.inner_steps = 2;
  CHECK_THROWS_AS(inner_loop(theta, [](std::span<const Real>, std::span<Real>) { return std::nan(""); }, s),
                  NumericError);
}

TEST_CASE("reptile on quadratic tasks settles near the mean optimum") {
  // Task k: 0.5 |theta - y_k|^2 with shared curvature, so the Reptile fixed
  // point is the average of the task optima.
  Rng rng(21);
  const Index dim = 4, tasks = 6;
  std::vector<std::vector<Real>> optima;
  std::vector<double> mean(dim, 0.0);
  for (Index k = 0; k < tasks; ++k) {
    optima.push_back(random_vector(rng, dim, 2.0));
    for (Index i = 0; i < dim; ++i) mean[i] += optima.back()[i] / double(tasks);
  }
  MetaSchedule s;
  s.inner_steps = 5;
  s.inner_lr = 0.1;
  s.inner_optimizer = InnerOptimizer::sgd;
  std::vector<Real> theta(dim, 10.0f);
  AdamState meta;
  for (int round = 0; round < 3000; ++round) {
    const auto& y = optima[rng.uniform_index(tasks)];
    auto loss = [&](std::span<const Real> t, std::span<Real> g) {
      double l = 0;
      for (Index i = 0; i < dim; ++i) {
        l += 0.5 * (t[i] - y[i]) * (t[i] - y[i]);
        g[i] = t[i] - y[i];
      }
      return l;
    };
    const double eta = 0.05 * (1.0 - round / 3000.0) + 1e-3;
    reptile_outer_step(theta, inner_loop(theta, loss, s), meta, eta, MetaUpdate::plain);
  }
  for (Index i = 0; i < dim; ++i) CHECK(std::abs(theta[i] - mean[i]) < 0.15);
}

TEST_CASE("adam outer step uses theta minus adapted as the gradient") {
  std::vector<Real> a{1, 2}, b{1, 2};
  const std::vector<Real> adapted{0.5f, 2.5f};
  AdamState s1, s2;
  reptile_outer_step(a, adapted, s1, 0.01, MetaUpdate::adam);
  const std::vector<Real> pseudo{0.5f, -0.5f};
  adam_step(b, pseudo, s2, 0.01);
  CHECK(a == b);
}
