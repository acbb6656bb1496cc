#include "mczsl/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

struct RegistryLayout {
  std::string_view name;
  std::vector<Index> fixed_sizes;
  Index fixed_budget_per_class;
  std::vector<std::pair<Index, Index>> dynamic_sizes;  // (seen, unseen) per task
  Index dynamic_budget_per_class;
};

template <class T>
std::vector<T> repeat(Index n, T v) {
  return std::vector<T>(n, v);
}

template <class T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<RegistryLayout>& registry_layouts() {
  using P = std::pair<Index, Index>;
  static const std::vector<RegistryLayout> layouts = {
      {"AWA1", repeat<Index>(5, 10), 25, repeat(5, P{8, 2}), 25},
      {"AWA2", repeat<Index>(5, 10), 25, repeat(5, P{8, 2}), 25},
      {"CUB", repeat<Index>(20, 10), 10, concat(repeat(10, P{7, 2}), repeat(10, P{8, 3})), 10},
      {"aPY", repeat<Index>(4, 8), 25, repeat(4, P{5, 3}), 25},
      {"SUN", concat(repeat<Index>(3, 47), repeat<Index>(12, 48)), 5,
       concat(repeat(3, P{43, 4}), repeat(12, P{43, 5})), 5},
  };
  return layouts;
}

const RegistryLayout* registry_layout(const DatasetMeta& meta) {
  const auto known = find_dataset(meta.name);
  if (!known || known->num_classes != meta.num_classes || known->num_seen != meta.num_seen ||
      known->num_unseen != meta.num_unseen) {
    return nullptr;
  }
  for (const auto& l : registry_layouts()) {
    if (l.name == meta.name) return &l;
  }
  return nullptr;
}

constexpr Index kDefaultTasks = 5;
constexpr Index kDefaultBudgetPerClass = 25;

std::vector<std::vector<int>> chunk(const std::vector<int>& classes,
                                    const std::vector<Index>& sizes) {
  std::vector<std::vector<int>> out;
  Index at = 0;
  for (Index s : sizes) {
    out.emplace_back(classes.begin() + static_cast<std::ptrdiff_t>(at),
                     classes.begin() + static_cast<std::ptrdiff_t>(at + s));
    std::sort(out.back().begin(), out.back().end());
    at += s;
  }
  return out;
}

void maybe_shuffle(std::vector<int>& classes, const PlanOptions& options, Rng& rng) {
  if (options.shuffle_classes) rng.shuffle(std::span<int>(classes));
}

std::vector<int> merged(const std::vector<int>& a, const std::vector<int>& b) {
  std::set<int> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

}  // namespace

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::gzsl: return "gzsl";
    case Protocol::fixed: return "fixed";
    case Protocol::dynamic: return "dynamic";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "gzsl") return Protocol::gzsl;
  if (s == "fixed") return Protocol::fixed;
  if (s == "dynamic") return Protocol::dynamic;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected gzsl, fixed or dynamic)");
}

double per_class_accuracy(std::span<const int> predicted, std::span<const int> truth,
                          std::span<const int> classes) {
  check_shape(predicted.size() == truth.size(), "per_class_accuracy: length mismatch");
  if (classes.empty()) throw std::invalid_argument("per_class_accuracy: empty class set");
  std::map<int, std::pair<Index, Index>> tally;  // class -> (correct, total)
  for (int c : classes) tally[c];
  for (Index i = 0; i < truth.size(); ++i) {
    auto it = tally.find(truth[i]);
    if (it == tally.end()) continue;
    it->second.second += 1;
    if (predicted[i] == truth[i]) it->second.first += 1;
  }
  double sum = 0.0;
  Index counted = 0;
  for (const auto& [cls, ct] : tally) {
    if (ct.second == 0) continue;
    sum += 100.0 * static_cast<double>(ct.first) / static_cast<double>(ct.second);
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("per_class_accuracy: no samples for any class");
  return sum / static_cast<double>(counted);
}

double harmonic_mean(double seen, double unseen) {
  if (seen + unseen == 0.0) return 0.0;
  return 2.0 * seen * unseen / (seen + unseen);
}

std::vector<Index> even_split(Index n, Index parts) {
  if (parts == 0 || parts > n) {
    throw ConfigError("cannot split " + std::to_string(n) + " classes into " +
                      std::to_string(parts) + " non-empty tasks");
  }
  std::vector<Index> sizes(parts, n / parts);
  const Index rem = n % parts;
  for (Index i = parts - rem; i < parts; ++i) sizes[i] += 1;
  return sizes;
}

ClassLayout fixed_layout(const DatasetMeta& meta, const PlanOptions& options, Rng& rng) {
  const RegistryLayout* reg = registry_layout(meta);
  const bool use_registry = reg != nullptr && (options.num_tasks == 0 ||
                                               options.num_tasks == reg->fixed_sizes.size());
  const std::vector<Index> sizes =
      use_registry ? reg->fixed_sizes
                   : even_split(meta.num_classes, options.num_tasks ? options.num_tasks : kDefaultTasks);
  std::vector<int> classes(meta.num_classes);
  for (Index c = 0; c < classes.size(); ++c) classes[c] = static_cast<int>(c);
  maybe_shuffle(classes, options, rng);
  const auto groups = chunk(classes, sizes);

  ClassLayout layout;
  for (Index i = 0; i < groups.size(); ++i) {
    std::vector<int> rest;
    for (Index j = i + 1; j < groups.size(); ++j) rest = merged(rest, groups[j]);
    layout.tasks.push_back({groups[i], std::move(rest)});
  }
  const Index per_class = use_registry ? reg->fixed_budget_per_class : kDefaultBudgetPerClass;
  layout.reservoir_budget = options.reservoir_budget.value_or(per_class * meta.num_classes);
  return layout;
}

ClassLayout dynamic_layout(const DatasetMeta& meta, const ClassPartition& partition,
                           const PlanOptions& options, Rng& rng) {
  const RegistryLayout* reg = registry_layout(meta);
  const bool use_registry = reg != nullptr && (options.num_tasks == 0 ||
                                               options.num_tasks == reg->dynamic_sizes.size());
  std::vector<Index> seen_sizes;
  std::vector<Index> unseen_sizes;
  if (use_registry) {
    for (const auto& [s, u] : reg->dynamic_sizes) {
      seen_sizes.push_back(s);
      unseen_sizes.push_back(u);
    }
  } else {
    const Index k = options.num_tasks ? options.num_tasks : kDefaultTasks;
    seen_sizes = even_split(partition.seen.size(), k);
    unseen_sizes = even_split(partition.unseen.size(), k);
  }
  std::vector<int> seen = partition.seen;
  std::vector<int> unseen = partition.unseen;
  maybe_shuffle(seen, options, rng);
  maybe_shuffle(unseen, options, rng);
  const auto s_groups = chunk(seen, seen_sizes);
  const auto u_groups = chunk(unseen, unseen_sizes);

  ClassLayout layout;
  for (Index i = 0; i < s_groups.size(); ++i) layout.tasks.push_back({s_groups[i], u_groups[i]});
  const Index per_class = use_registry ? reg->dynamic_budget_per_class : kDefaultBudgetPerClass;
  layout.reservoir_budget = options.reservoir_budget.value_or(per_class * partition.seen.size());
  return layout;
}

ClassLayout gzsl_layout(const DatasetMeta& meta, const ClassPartition& partition,
                        const PlanOptions& options) {
  (void)meta;
  ClassLayout layout;
  layout.tasks.push_back({partition.seen, partition.unseen});
  layout.reservoir_budget = options.reservoir_budget.value_or(0);
  return layout;
}

ProtocolPlan bind_samples(Protocol protocol, const ClassLayout& layout,
                          const DatasetContainer& data, const PlanOptions& options, Rng& rng) {
  ProtocolPlan plan;
  plan.protocol = protocol;
  plan.reservoir_budget = layout.reservoir_budget;
  plan.num_classes = data.num_classes();

  const Index classes = data.num_classes();
  std::vector<std::vector<Index>> train(classes);
  std::vector<std::vector<Index>> test(classes);
  if (protocol == Protocol::fixed) {
    if (!(options.train_fraction > 0 && options.train_fraction < 1)) {
      throw ConfigError("train_fraction must lie in (0, 1)");
    }
    std::vector<std::vector<Index>> all(classes);
    for (Index i = 0; i < data.num_samples(); ++i) all[data.labels[i]].push_back(i);
    for (Index c = 0; c < classes; ++c) {
      auto& idx = all[c];
      rng.shuffle(std::span<Index>(idx));
      const Index m = idx.size();
      Index n_train = static_cast<Index>(std::floor(static_cast<double>(m) * options.train_fraction + 0.5));
      n_train = m >= 2 ? std::clamp<Index>(n_train, 1, m - 1) : m;
      train[c].assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
      test[c].assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
      std::sort(train[c].begin(), train[c].end());
      std::sort(test[c].begin(), test[c].end());
    }
  } else {
    for (Index i : data.train) train[data.labels[i]].push_back(i);
    for (Index i : data.test_seen) test[data.labels[i]].push_back(i);
    for (Index i : data.test_unseen) test[data.labels[i]].push_back(i);
  }

  for (const auto& tc : layout.tasks) {
    TaskSplit split;
    split.classes = tc;
    for (int c : tc.seen) {
      if (c < 0 || static_cast<Index>(c) >= classes) throw ConfigError("layout class out of range");
      split.train.insert(split.train.end(), train[c].begin(), train[c].end());
      split.test_seen.insert(split.test_seen.end(), test[c].begin(), test[c].end());
    }
    for (int c : tc.unseen) {
      if (c < 0 || static_cast<Index>(c) >= classes) throw ConfigError("layout class out of range");
      split.test_unseen.insert(split.test_unseen.end(), test[c].begin(), test[c].end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test_seen.begin(), split.test_seen.end());
    std::sort(split.test_unseen.begin(), split.test_unseen.end());
    plan.tasks.push_back(std::move(split));
  }
  return plan;
}

ProtocolPlan build_plan(Protocol protocol, const DatasetContainer& data, const DatasetMeta& meta,
                        const PlanOptions& options, Rng& rng) {
  ClassLayout layout;
  switch (protocol) {
    case Protocol::fixed:
      layout = fixed_layout(meta, options, rng);
      break;
    case Protocol::dynamic:
      layout = dynamic_layout(meta, gzsl_partition(data), options, rng);
      break;
    case Protocol::gzsl:
      layout = gzsl_layout(meta, gzsl_partition(data), options);
      break;
  }
  return bind_samples(protocol, layout, data, options, rng);
}

std::optional<EvalSets> eval_sets(const ProtocolPlan& plan, Index task) {
  if (task >= plan.tasks.size()) throw std::out_of_range("eval_sets: task index out of range");
  if (plan.protocol == Protocol::fixed && task + 1 == plan.tasks.size()) return std::nullopt;
  EvalSets sets;
  for (Index j = 0; j <= task; ++j) {
    const TaskSplit& t = plan.tasks[j];
    sets.seen_classes = merged(sets.seen_classes, t.classes.seen);
    sets.seen_samples.insert(sets.seen_samples.end(), t.test_seen.begin(), t.test_seen.end());
    if (plan.protocol != Protocol::fixed) {
      sets.unseen_classes = merged(sets.unseen_classes, t.classes.unseen);
      sets.unseen_samples.insert(sets.unseen_samples.end(), t.test_unseen.begin(),
                                 t.test_unseen.end());
    }
  }
  if (plan.protocol == Protocol::fixed) {
    const TaskSplit& t = plan.tasks[task];
    sets.unseen_classes = merged({}, t.classes.unseen);
    sets.unseen_samples = t.test_unseen;
  }
  std::sort(sets.seen_samples.begin(), sets.seen_samples.end());
  std::sort(sets.unseen_samples.begin(), sets.unseen_samples.end());
  sets.candidates = merged(sets.seen_classes, sets.unseen_classes);
  return sets;
}

namespace {

std::vector<int> labels_of(const DatasetContainer& data, const std::vector<Index>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (Index i : samples) out.push_back(data.labels[i]);
  return out;
}

Dense2D rows_of(const DatasetContainer& data, const std::vector<Index>& samples) {
  Dense2D out(samples.size(), data.feat_dim());
  for (Index r = 0; r < samples.size(); ++r) {
    const auto src = data.features.row(samples[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

double score(const DatasetContainer& data, const std::vector<Index>& samples,
             const std::vector<int>& classes, const std::vector<int>& candidates,
             const TaskClassifier& classify) {
  const Dense2D x = rows_of(data, samples);
  const std::vector<int> pred = classify(x, candidates);
  check_shape(pred.size() == samples.size(), "classifier returned the wrong number of predictions");
  return per_class_accuracy(pred, labels_of(data, samples), classes);
}

}  // namespace

TaskMetrics evaluate_task(const DatasetContainer& data, const EvalSets& sets, Index task,
                          const TaskClassifier& classify) {
  TaskMetrics m;
  m.task = task;
  m.seen_acc = score(data, sets.seen_samples, sets.seen_classes, sets.candidates, classify);
  m.unseen_acc = score(data, sets.unseen_samples, sets.unseen_classes, sets.candidates, classify);
  m.harmonic = harmonic_mean(m.seen_acc, m.unseen_acc);
  return m;
}

void summarize(MetricsRecord& record) {
  record.mean_seen = record.mean_unseen = record.mean_harmonic = 0.0;
  if (record.tasks.empty()) return;
  for (const auto& t : record.tasks) {
    record.mean_seen += t.seen_acc;
    record.mean_unseen += t.unseen_acc;
    record.mean_harmonic += t.harmonic;
  }
  const double n = static_cast<double>(record.tasks.size());
  record.mean_seen /= n;
  record.mean_unseen /= n;
  record.mean_harmonic /= n;
}

MetricsRecord evaluate_plan(const ProtocolPlan& plan, const DatasetContainer& data,
                            const PlanClassifier& classify) {
  MetricsRecord record;
  record.protocol = std::string(to_string(plan.protocol));
  for (Index t = 0; t < plan.tasks.size(); ++t) {
    const auto sets = eval_sets(plan, t);
    if (!sets) continue;
    record.tasks.push_back(evaluate_task(data, *sets, t, [&](MatrixView x, std::span<const int> c) {
      return classify(t, x, c);
    }));
  }
  summarize(record);
  return record;
}

namespace {

void expect_protocol(const ProtocolPlan& plan, Protocol p) {
  if (plan.protocol != p) {
    throw ConfigError("plan is for protocol " + std::string(to_string(plan.protocol)) + ", not " +
                      std::string(to_string(p)));
  }
}

}  // namespace

MetricsRecord evaluate_fixed(const ProtocolPlan& plan, const DatasetContainer& data,
                             const PlanClassifier& classify) {
  expect_protocol(plan, Protocol::fixed);
  return evaluate_plan(plan, data, classify);
}

MetricsRecord evaluate_dynamic(const ProtocolPlan& plan, const DatasetContainer& data,
                               const PlanClassifier& classify) {
  expect_protocol(plan, Protocol::dynamic);
  return evaluate_plan(plan, data, classify);
}

MetricsRecord evaluate_gzsl(const ProtocolPlan& plan, const DatasetContainer& data,
                            const TaskClassifier& classify) {
  expect_protocol(plan, Protocol::gzsl);
  if (plan.tasks.empty() || plan.tasks[0].classes.unseen.empty()) {
    throw ConfigError("gzsl evaluation needs unseen classes");
  }
  return evaluate_plan(plan, data, [&](Index, MatrixView x, std::span<const int> c) {
    return classify(x, c);
  });
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
