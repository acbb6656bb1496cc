#include <numeric>

#include "doctest.h"
#include "mczsl/protocols.hpp"
#include "../support/protocol_oracle.hpp"

using namespace mczsl;
using namespace mczsl_test;

namespace {

DatasetMeta registry(const char* name) { return *find_dataset(name); }

std::vector<int> iota(int from, int to) {
  std::vector<int> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

TEST_CASE("per-class accuracy worked examples") {
  // Class 0: 1 of 1 right, class 1: 1 of 3 right.
  const std::vector<int> truth{0, 1, 1, 1}, pred{0, 1, 0, 2}, classes{0, 1};
  CHECK(per_class_accuracy(pred, truth, classes) == doctest::Approx((100.0 + 100.0 / 3) / 2));
  // Classes without samples are skipped, samples outside the set ignored.
  const std::vector<int> wider{0, 1, 5};
  CHECK(per_class_accuracy(pred, truth, wider) == per_class_accuracy(pred, truth, classes));
  const std::vector<int> only1{1};
  CHECK(per_class_accuracy(pred, truth, only1) == doctest::Approx(100.0 / 3));
  CHECK_THROWS_AS(per_class_accuracy(pred, truth, std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(per_class_accuracy(pred, truth, std::vector<int>{9}), std::invalid_argument);
}

TEST_CASE("harmonic mean worked examples") {
  CHECK(harmonic_mean(50, 50) == 50);
  CHECK(harmonic_mean(100, 0) == 0);
  CHECK(harmonic_mean(0, 0) == 0);
  CHECK(std::abs(harmonic_mean(77.9, 67.1) - 72.1) < 0.05);
  CHECK(std::abs(harmonic_mean(68.01, 48.38) - 56.54) < 0.01);
}

TEST_CASE("protocol scoring matches the brute-force oracle") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const std::string err = check_protocol_instance(rng);
    INFO(i);
    CHECK(err == "");
  }
}

TEST_CASE("even split puts the larger groups last") {
  CHECK(even_split(10, 5) == std::vector<Index>(5, 2));
  CHECK(even_split(11, 3) == std::vector<Index>{3, 4, 4});
  CHECK(even_split(717, 15) == [] {
    std::vector<Index> v(15, 47);
    for (int i = 3; i < 15; ++i) v[i] = 48;
    return v;
  }());
  CHECK_THROWS_AS(even_split(3, 4), ConfigError);
  CHECK_THROWS_AS(even_split(3, 0), ConfigError);
}

TEST_CASE("fixed layout on the registry datasets") {
  Rng rng(1);
  const PlanOptions opt;
  const ClassLayout awa = fixed_layout(registry("AWA2"), opt, rng);
  REQUIRE(awa.tasks.size() == 5);
  CHECK(awa.tasks[0].seen == iota(0, 10));
  CHECK(awa.tasks[0].unseen == iota(10, 50));
  CHECK(awa.tasks[3].unseen == iota(40, 50));
  CHECK(awa.tasks[4].unseen.empty());
  CHECK(awa.reservoir_budget == 25 * 50);
  CHECK(fixed_layout(registry("CUB"), opt, rng).tasks.size() == 20);
  CHECK(fixed_layout(registry("CUB"), opt, rng).reservoir_budget == 10 * 200);
  CHECK(fixed_layout(registry("aPY"), opt, rng).tasks.size() == 4);
  CHECK(fixed_layout(registry("aPY"), opt, rng).reservoir_budget == 25 * 32);
  const ClassLayout sun = fixed_layout(registry("SUN"), opt, rng);
  CHECK(sun.tasks.size() == 15);
  CHECK(sun.tasks[0].seen.size() == 47);
  CHECK(sun.tasks[14].seen.size() == 48);
  CHECK(sun.reservoir_budget == 5 * 717);
}

TEST_CASE("dynamic layout on the registry datasets") {
  Rng rng(1);
  const PlanOptions opt;
  auto partition = [](const DatasetMeta& m) {
    return ClassPartition{iota(0, static_cast<int>(m.num_seen)),
                          iota(static_cast<int>(m.num_seen), static_cast<int>(m.num_classes))};
  };
  const DatasetMeta awa = registry("AWA1");
  const ClassLayout l = dynamic_layout(awa, partition(awa), opt, rng);
  REQUIRE(l.tasks.size() == 5);
  CHECK(l.tasks[0].seen == iota(0, 8));
  CHECK(l.tasks[0].unseen == iota(40, 42));
  CHECK(l.reservoir_budget == 25 * 40);
  const DatasetMeta cub = registry("CUB");
  const ClassLayout c = dynamic_layout(cub, partition(cub), opt, rng);
  CHECK(c.tasks.size() == 20);
  CHECK(c.tasks[0].seen.size() == 7);
  CHECK(c.tasks[19].unseen.size() == 3);
  CHECK(c.reservoir_budget == 10 * 150);
  const DatasetMeta apy = registry("aPY");
  CHECK(dynamic_layout(apy, partition(apy), opt, rng).tasks[2].unseen.size() == 3);
  const DatasetMeta sun = registry("SUN");
  const ClassLayout s = dynamic_layout(sun, partition(sun), opt, rng);
  CHECK(s.tasks.size() == 15);
  CHECK(s.tasks[0].unseen.size() == 4);
  CHECK(s.tasks[14].unseen.size() == 5);
  CHECK(s.reservoir_budget == 5 * 645);
}

TEST_CASE("layouts partition the classes, with overrides") {
  Rng rng(4);
  for (bool shuffle : {false, true}) {
    PlanOptions opt;
    opt.num_tasks = 3;
    opt.shuffle_classes = shuffle;
    opt.reservoir_budget = 17;
    const ClassLayout l = fixed_layout(registry("AWA2"), opt, rng);
    CHECK(l.tasks.size() == 3);
    CHECK(l.reservoir_budget == 17);
    std::set<int> all;
    Index total = 0;
    for (const auto& t : l.tasks) {
      all.insert(t.seen.begin(), t.seen.end());
      total += t.seen.size();
      CHECK(std::is_sorted(t.seen.begin(), t.seen.end()));
    }
    CHECK(total == 50);
    CHECK(all.size() == 50);
  }
  // Non-registry data: 5 even tasks and a 25-per-class budget.
  DatasetMeta other{"mine", 8, 4, 12, 9, 3};
  const ClassLayout l = fixed_layout(other, PlanOptions{}, rng);
  CHECK(l.tasks.size() == 5);
  CHECK(l.tasks[0].seen.size() == 2);
  CHECK(l.tasks[4].seen.size() == 3);
  CHECK(l.reservoir_budget == 25 * 12);
  // A registry name whose dimensions differ is treated as ordinary data.
  DatasetMeta trimmed = registry("AWA2");
  trimmed.num_classes = 20;
  trimmed.num_seen = 16;
  trimmed.num_unseen = 4;
  CHECK(fixed_layout(trimmed, PlanOptions{}, rng).tasks.size() == 5);
}

TEST_CASE("bound plans keep samples disjoint and complete") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const ProtocolInstance inst = random_protocol_instance(rng);
    PlanOptions opt;
    opt.num_tasks = inst.tasks;
    const DatasetMeta meta = meta_of(inst.data);
    const ProtocolPlan fixed = build_plan(Protocol::fixed, inst.data, meta, opt, rng);
    std::vector<int> uses(inst.data.num_samples(), 0);
    for (const auto& t : fixed.tasks) {
      for (Index i : t.train) uses[i] += 1;
      for (Index i : t.test_seen) uses[i] += 1;
      for (Index i : t.train) CHECK(std::binary_search(t.classes.seen.begin(), t.classes.seen.end(), inst.data.labels[i]));
    }
    for (int u : uses) CHECK(u == 1);
    CHECK(fixed.tasks.size() == inst.tasks);
    CHECK_FALSE(eval_sets(fixed, inst.tasks - 1));
    const auto first = eval_sets(fixed, 0);
    REQUIRE(first);
    CHECK(first->seen_classes.size() + first->unseen_classes.size() == inst.data.num_classes());

    const ProtocolPlan dyn = build_plan(Protocol::dynamic, inst.data, meta, opt, rng);
    const auto last = eval_sets(dyn, inst.tasks - 1);
    REQUIRE(last);
    CHECK(last->candidates.size() == inst.data.num_classes());
    CHECK(last->unseen_samples.size() == inst.data.test_unseen.size());
    CHECK_THROWS_AS(eval_sets(dyn, inst.tasks), std::out_of_range);
  }
}

TEST_CASE("two-task fixed protocol has a single evaluation") {
  Rng rng(2);
  ProtocolInstance inst = random_protocol_instance(rng);
  PlanOptions opt;
  opt.num_tasks = 2;
  const ProtocolPlan plan = build_plan(Protocol::fixed, inst.data, meta_of(inst.data), opt, rng);
  inst.coin.resize(2);
  const MetricsRecord m = evaluate_fixed(plan, inst.data, table_classifier(inst));
  CHECK(m.tasks.size() == 1);
  CHECK(m.mean_harmonic == m.tasks[0].harmonic);
  CHECK_THROWS_AS(evaluate_dynamic(plan, inst.data, table_classifier(inst)), ConfigError);
}

TEST_CASE("a perfect classifier scores 100 everywhere") {
  Rng rng(6);
  const ProtocolInstance inst = random_protocol_instance(rng);
  PlanOptions opt;
  opt.num_tasks = inst.tasks;
  const ProtocolPlan plan = build_plan(Protocol::dynamic, inst.data, meta_of(inst.data), opt, rng);
  const MetricsRecord m = evaluate_dynamic(plan, inst.data, [&](Index, MatrixView x, std::span<const int>) {
    std::vector<int> out;
    for (Index r = 0; r < x.rows; ++r) out.push_back(inst.data.labels[static_cast<Index>(x(r, 0))]);
    return out;
  });
  CHECK(m.mean_seen == 100);
  CHECK(m.mean_unseen == 100);
  CHECK(m.mean_harmonic == 100);
}

TEST_CASE("gzsl plan and scores are invariant to test order") {
  Rng rng(8);
  ProtocolInstance inst = random_protocol_instance(rng);
  const DatasetMeta meta = meta_of(inst.data);
  const ProtocolPlan plan = build_plan(Protocol::gzsl, inst.data, meta, PlanOptions{}, rng);
  REQUIRE(plan.tasks.size() == 1);
  CHECK(plan.reservoir_budget == 0);
  auto classify = [&](MatrixView x, std::span<const int> c) {
    return table_classifier(inst)(0, x, c);
  };
  const MetricsRecord a = evaluate_gzsl(plan, inst.data, classify);
  ProtocolInstance shuffled = inst;
  rng.shuffle(std::span<Index>(shuffled.data.test_seen));
  rng.shuffle(std::span<Index>(shuffled.data.test_unseen));
  const ProtocolPlan plan2 = build_plan(Protocol::gzsl, shuffled.data, meta, PlanOptions{}, rng);
  const MetricsRecord b = evaluate_gzsl(plan2, shuffled.data, classify);
  CHECK(a == b);
}

TEST_CASE("protocol names") {
  for (Protocol p : {Protocol::gzsl, Protocol::fixed, Protocol::dynamic}) CHECK(parse_protocol(to_string(p)) == p);
  CHECK_THROWS_AS(parse_protocol("incremental"), ConfigError);
}
