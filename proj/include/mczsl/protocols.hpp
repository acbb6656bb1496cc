#pragma once

// Continual zero-shot evaluation protocols.
//
//   fixed    every class is split across K tasks. After training on task i the
//            model is scored on the classes of tasks 1..i (seen) against the
//            classes of tasks i+1..K (unseen), for i = 1..K-1.
//   dynamic  seen and unseen classes are both split across K tasks. After task
//            i, seen = seen classes of tasks 1..i and unseen = unseen classes
//            of tasks 1..i, for i = 1..K.
//   gzsl     a single task with the dataset's own seen/unseen partition.
//
// Scores are per-class top-1 accuracies over the union of seen and unseen
// candidates, so seen and unseen classes compete for every test sample.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mczsl/data.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

enum class Protocol { gzsl, fixed, dynamic };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

/// Mean over `classes` of 100 * correct / total, counting only samples whose
/// true label is in `classes`. Classes with no samples are skipped. Throws
/// std::invalid_argument if `classes` is empty or none of them has a sample.
double per_class_accuracy(std::span<const int> predicted, std::span<const int> truth,
                          std::span<const int> classes);

/// 2 S U / (S + U), or 0 when both are 0.
double harmonic_mean(double seen, double unseen);

struct TaskClasses {
  std::vector<int> seen;    // classes whose training data arrive with this task
  std::vector<int> unseen;  // fixed: every later task's classes; dynamic: this task's

  friend bool operator==(const TaskClasses&, const TaskClasses&) = default;
};

struct ClassLayout {
  std::vector<TaskClasses> tasks;
  Index reservoir_budget = 0;
};

struct PlanOptions {
  Index num_tasks = 0;                  // 0: registry layout, else 5 even tasks
  std::optional<Index> reservoir_budget;
  double train_fraction = 0.8;          // fixed protocol per-class re-split
  bool shuffle_classes = false;         // false: canonical class index order
};

/// Splits sizes as evenly as possible; the larger groups come last.
std::vector<Index> even_split(Index n, Index parts);

/// Class layouts. Registry datasets use their published task layout and
/// replay budget unless options.num_tasks overrides the task count.
ClassLayout fixed_layout(const DatasetMeta& meta, const PlanOptions& options, Rng& rng);
ClassLayout dynamic_layout(const DatasetMeta& meta, const ClassPartition& partition,
                           const PlanOptions& options, Rng& rng);
ClassLayout gzsl_layout(const DatasetMeta& meta, const ClassPartition& partition,
                        const PlanOptions& options);

struct TaskSplit {
  TaskClasses classes;
  std::vector<Index> train;        // training samples of classes.seen
  std::vector<Index> test_seen;    // test samples of classes.seen
  std::vector<Index> test_unseen;  // test samples of classes.unseen
};

struct ProtocolPlan {
  Protocol protocol = Protocol::gzsl;
  std::vector<TaskSplit> tasks;
  Index reservoir_budget = 0;
  Index num_classes = 0;
};

/// Attaches sample indices to a class layout. fixed re-splits every class's
/// samples with `train_fraction`, because its unseen classes become seen
/// later and need training data; dynamic and gzsl use the container splits.
ProtocolPlan bind_samples(Protocol protocol, const ClassLayout& layout,
                          const DatasetContainer& data, const PlanOptions& options, Rng& rng);

ProtocolPlan build_plan(Protocol protocol, const DatasetContainer& data, const DatasetMeta& meta,
                        const PlanOptions& options, Rng& rng);

/// Seen/unseen classes and test samples scored after a task.
struct EvalSets {
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
  std::vector<Index> seen_samples;
  std::vector<Index> unseen_samples;
  std::vector<int> candidates;  // seen ∪ unseen, ascending
};

/// nullopt for the last fixed-protocol task, which has no next task.
std::optional<EvalSets> eval_sets(const ProtocolPlan& plan, Index task);

/// Predicted global class ids for `features`, chosen among `candidates`.
using TaskClassifier =
    std::function<std::vector<int>(MatrixView features, std::span<const int> candidates)>;

struct TaskMetrics {
  Index task = 0;  // zero-based
  double seen_acc = 0;
  double unseen_acc = 0;
  double harmonic = 0;

  friend bool operator==(const TaskMetrics&, const TaskMetrics&) = default;
};

struct MetricsRecord {
  std::string protocol;
  std::string dataset;
  std::vector<TaskMetrics> tasks;
  double mean_seen = 0;      // mSA
  double mean_unseen = 0;    // mUA
  double mean_harmonic = 0;  // mH, the mean of per-task harmonic means

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

TaskMetrics evaluate_task(const DatasetContainer& data, const EvalSets& sets, Index task,
                          const TaskClassifier& classify);

/// Fills the means from `tasks`. Empty input leaves them at 0.
void summarize(MetricsRecord& record);

/// Classifier state after training through `task`.
using PlanClassifier = std::function<std::vector<int>(Index task, MatrixView features,
                                                      std::span<const int> candidates)>;

/// Scores every evaluable task of the plan and fills the aggregates.
MetricsRecord evaluate_plan(const ProtocolPlan& plan, const DatasetContainer& data,
                            const PlanClassifier& classify);
/// evaluate_plan with a protocol check; ConfigError on mismatch.
MetricsRecord evaluate_fixed(const ProtocolPlan& plan, const DatasetContainer& data,
                             const PlanClassifier& classify);
MetricsRecord evaluate_dynamic(const ProtocolPlan& plan, const DatasetContainer& data,
                               const PlanClassifier& classify);
MetricsRecord evaluate_gzsl(const ProtocolPlan& plan, const DatasetContainer& data,
                            const TaskClassifier& classify);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
