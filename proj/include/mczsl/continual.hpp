#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "mczsl/model.hpp"
#include "mczsl/optim.hpp"
#include "mczsl/rng.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

enum class ReplayPolicy { reservoir, ring };

std::string_view to_string(ReplayPolicy p);
ReplayPolicy parse_replay_policy(std::string_view s);

struct ReplayItem {
  std::vector<Real> feature;
  int label = 0;
  int task = 0;
  std::uint64_t stamp = 0;  // arrival order, used for FIFO eviction

  friend bool operator==(const ReplayItem&, const ReplayItem&) = default;
};

/// Fixed-budget replay memory. Never holds more than `capacity` items.
///
/// reservoir policy: the N-th offered item is kept with probability M/N and
/// replaces a uniformly chosen slot, so every item seen so far is resident
/// with equal probability.
///
/// ring policy: per-class FIFO. When full, the oldest item of the currently
/// largest class is evicted, which holds every class at the M / #classes quota.
class Reservoir {
 public:
  Reservoir(Index capacity, Index feat_dim, ReplayPolicy policy = ReplayPolicy::reservoir);

  /// Dispatches on the configured policy.
  void offer(std::span<const Real> feature, int label, int task, Rng& rng);
  void reservoir_offer(std::span<const Real> feature, int label, int task, Rng& rng);
  void ring_offer(std::span<const Real> feature, int label, int task);

  Index capacity() const { return capacity_; }
  Index feat_dim() const { return feat_dim_; }
  Index size() const { return slots_.size(); }
  std::uint64_t seen_count() const { return seen_; }
  std::uint64_t next_stamp() const { return next_stamp_; }
  ReplayPolicy policy() const { return policy_; }
  std::span<const ReplayItem> slots() const { return slots_; }

  /// Distinct resident labels, ascending.
  std::vector<int> classes() const;
  std::map<int, Index> class_counts() const;

  friend bool operator==(const Reservoir&, const Reservoir&) = default;

 private:
  friend Reservoir load_reservoir(const std::filesystem::path& path);
  ReplayItem make_item(std::span<const Real> feature, int label, int task);

  Index capacity_ = 0;
  Index feat_dim_ = 0;
  ReplayPolicy policy_ = ReplayPolicy::reservoir;
  std::vector<ReplayItem> slots_;
  std::uint64_t seen_ = 0;
  std::uint64_t next_stamp_ = 0;
};

/// Reservoir snapshot (MCZR v1), little-endian:
///
///   "MCZR"  u32 version = 1  u32 policy (0 reservoir, 1 ring)
///   u64 capacity  u64 seen_count  u64 next_stamp  u32 feat_dim  u64 slot_count
///   slot_count x (u32 label, u32 task, u64 stamp)
///   slot_count x feat_dim x f32 features
inline constexpr std::uint32_t kReservoirVersion = 1;

void save_reservoir(const Reservoir& r, const std::filesystem::path& path);
Reservoir load_reservoir(const std::filesystem::path& path);

/// Training samples of the current task: rows `indices` of a feature matrix.
struct TaskSamples {
  MatrixView features;
  std::span<const int> labels;    // one per feature row
  std::span<const Index> indices;
};

/// One N-way K-shot batch. `labels` index into `candidates`, which lists the
/// global class ids of every class available when the episode was drawn.
struct Episode {
  Dense2D features;
  std::vector<int> labels;
  std::vector<int> candidates;
  Index way = 0;
  Index shot = 0;
};

/// Pools the current task's samples with the replay memory, grouped by class.
/// The reservoir must not change while the sampler is alive.
class EpisodeSampler {
 public:
  EpisodeSampler(const TaskSamples& current, const Reservoir& replay);

  /// Classes available to episodes, ascending.
  const std::vector<int>& classes() const { return classes_; }
  Index pool_size() const { return pool_size_; }

  /// Draws min(way, #classes) classes uniformly without replacement, then up
  /// to `shot` samples of each without replacement.
  Episode sample(Index way, Index shot, Rng& rng) const;

 private:
  struct Source {
    const Real* feature;
  };

  Index feat_dim_ = 0;
  std::vector<int> classes_;
  std::vector<std::vector<Source>> by_class_;
  Index pool_size_ = 0;
};

Episode sample_episode(const TaskSamples& current, const Reservoir& replay, Index way,
                       Index shot, Rng& rng);

struct TrainerConfig {
  Index way = 32;
  Index shot = 4;
  bool meta = true;              // false: plain Adam on each episode's loss
  Index batches_per_epoch = 0;   // 0: ceil(task size / (way * shot))
};

struct TaskContext {
  TaskSamples samples;
  MatrixView attributes;  // all classes, C x z
  int task_id = 0;
};

struct EpochReport {
  int task_id = 0;
  Index epoch = 0;
  double mean_loss = 0;
  double lr = 0;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Trains on one task: for every epoch, meta-batches of episodes drawn from
/// the task's samples and the replay memory, each adapted with the inner loop
/// and folded back with a Reptile step at the epoch's meta learning rate.
/// Afterwards the task's samples are streamed into the replay memory.
void run_task(ModelParams& params, Reservoir& replay, const TaskContext& task,
              const MetaSchedule& sched, const TrainerConfig& cfg, Rng& rng,
              const EpochCallback& on_epoch = {});

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
