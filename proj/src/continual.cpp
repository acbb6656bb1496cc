#include "mczsl/continual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

std::string_view to_string(ReplayPolicy p) { return p == ReplayPolicy::ring ? "ring" : "reservoir"; }

ReplayPolicy parse_replay_policy(std::string_view s) {
  if (s == "reservoir") return ReplayPolicy::reservoir;
  if (s == "ring") return ReplayPolicy::ring;
  throw std::invalid_argument("unknown replay policy '" + std::string(s) + "'");
}

Reservoir::Reservoir(Index capacity, Index feat_dim, ReplayPolicy policy)
    : capacity_(capacity), feat_dim_(feat_dim), policy_(policy) {
  slots_.reserve(std::min<Index>(capacity, 1 << 16));
}

ReplayItem Reservoir::make_item(std::span<const Real> feature, int label, int task) {
  return {std::vector<Real>(feature.begin(), feature.end()), label, task, next_stamp_++};
}

void Reservoir::offer(std::span<const Real> feature, int label, int task, Rng& rng) {
  if (policy_ == ReplayPolicy::ring) {
    ring_offer(feature, label, task);
  } else {
    reservoir_offer(feature, label, task, rng);
  }
}

void Reservoir::reservoir_offer(std::span<const Real> feature, int label, int task, Rng& rng) {
  check_shape(feature.size() == feat_dim_, "Reservoir: feature width mismatch");
  ++seen_;
  if (slots_.size() < capacity_) {
    slots_.push_back(make_item(feature, label, task));
    return;
  }
  if (capacity_ == 0) return;
  const std::uint64_t j = rng.uniform_index(seen_);
  if (j < capacity_) slots_[j] = make_item(feature, label, task);
}

void Reservoir::ring_offer(std::span<const Real> feature, int label, int task) {
  check_shape(feature.size() == feat_dim_, "Reservoir: feature width mismatch");
  ++seen_;
  if (capacity_ == 0) return;
  if (slots_.size() < capacity_) {
    slots_.push_back(make_item(feature, label, task));
    return;
  }
  // Count the incoming item so a class already at its quota evicts from itself.
  auto counts = class_counts();
  ++counts[label];
  Index largest = 0;
  for (const auto& [cls, n] : counts) largest = std::max(largest, n);
  Index victim = slots_.size();
  for (Index i = 0; i < slots_.size(); ++i) {
    if (counts[slots_[i].label] != largest) continue;
    if (victim == slots_.size() || slots_[i].stamp < slots_[victim].stamp) victim = i;
  }
  if (victim == slots_.size()) return;
  slots_[victim] = make_item(feature, label, task);
}

std::vector<int> Reservoir::classes() const {
  std::set<int> s;
  for (const auto& item : slots_) s.insert(item.label);
  return {s.begin(), s.end()};
}

std::map<int, Index> Reservoir::class_counts() const {
  std::map<int, Index> counts;
  for (const auto& item : slots_) ++counts[item.label];
  return counts;
}

void save_reservoir(const Reservoir& r, const std::filesystem::path& path) {
  detail::BinaryWriter w;
  w.magic("MCZR");
  w.u32(kReservoirVersion);
  w.u32(r.policy() == ReplayPolicy::ring ? 1 : 0);
  w.u64(r.capacity());
  w.u64(r.seen_count());
  w.u64(r.next_stamp());
  w.u32(static_cast<std::uint32_t>(r.feat_dim()));
  w.u64(r.size());
  for (const auto& item : r.slots()) {
    w.u32(static_cast<std::uint32_t>(item.label));
    w.u32(static_cast<std::uint32_t>(item.task));
    w.u64(item.stamp);
  }
  for (const auto& item : r.slots()) w.f32_array(std::span<const Real>(item.feature));
  w.save(path);
}

Reservoir load_reservoir(const std::filesystem::path& path) {
  auto r = detail::BinaryReader::open(path);
  r.expect_magic("MCZR");
  r.expect_version(kReservoirVersion);
  const std::uint32_t policy = r.u32();
  if (policy > 1) {
    throw DataError(DataErrorKind::invariant_violation, r.name() + ": unknown replay policy");
  }
  const std::uint64_t capacity = r.u64();
  const std::uint64_t seen = r.u64();
  const std::uint64_t next_stamp = r.u64();
  const std::uint64_t d = r.u32();
  const std::uint64_t n = r.u64();
  if (n > capacity || n > seen) {
    throw DataError(DataErrorKind::invariant_violation,
                    r.name() + ": more resident items than capacity or arrivals");
  }
  r.need_elements(n, 16);
  if (d > 0) r.need_elements(n * 4 + n * d, 4);

  Reservoir res(capacity, d, policy == 1 ? ReplayPolicy::ring : ReplayPolicy::reservoir);
  res.seen_ = seen;
  res.next_stamp_ = next_stamp;
  res.slots_.resize(n);
  for (auto& item : res.slots_) {
    item.label = static_cast<int>(r.u32());
    item.task = static_cast<int>(r.u32());
    item.stamp = r.u64();
    if (item.stamp >= next_stamp) {
      throw DataError(DataErrorKind::invariant_violation, r.name() + ": slot stamp beyond counter");
    }
  }
  for (auto& item : res.slots_) {
    item.feature = r.f32_array<Real>(d);
    if (!all_finite(item.feature)) {
      throw DataError(DataErrorKind::invariant_violation, r.name() + ": non-finite feature");
    }
  }
  r.expect_end();
  return res;
}

EpisodeSampler::EpisodeSampler(const TaskSamples& current, const Reservoir& replay)
    : feat_dim_(current.features.cols) {
  check_shape(current.labels.size() == current.features.rows,
              "EpisodeSampler: one label per feature row");
  check_shape(replay.size() == 0 || replay.feat_dim() == feat_dim_,
              "EpisodeSampler: replay feature width differs from task features");
  std::set<int> labels;
  for (Index i : current.indices) {
    check_shape(i < current.features.rows, "EpisodeSampler: sample index out of range");
    labels.insert(current.labels[i]);
  }
  for (const auto& item : replay.slots()) labels.insert(item.label);
  classes_.assign(labels.begin(), labels.end());
  by_class_.resize(classes_.size());
  auto slot_of = [&](int label) {
    return static_cast<Index>(std::lower_bound(classes_.begin(), classes_.end(), label) -
                              classes_.begin());
  };
  for (Index i : current.indices) {
    by_class_[slot_of(current.labels[i])].push_back(
        {current.features.data.data() + i * current.features.cols});
  }
  for (const auto& item : replay.slots()) {
    by_class_[slot_of(item.label)].push_back({item.feature.data()});
  }
  pool_size_ = current.indices.size() + replay.size();
}

namespace {

// First `k` entries of `v` become a uniform draw without replacement.
template <class T>
void partial_shuffle(std::vector<T>& v, Index k, Rng& rng) {
  for (Index i = 0; i < k && i + 1 < v.size(); ++i) {
    const Index j = i + static_cast<Index>(rng.uniform_index(v.size() - i));
    std::swap(v[i], v[j]);
  }
}

}  // namespace

Episode EpisodeSampler::sample(Index way, Index shot, Rng& rng) const {
  if (classes_.empty()) throw std::logic_error("EpisodeSampler: no samples to draw from");
  if (way == 0 || shot == 0) throw std::invalid_argument("EpisodeSampler: way and shot must be >= 1");
  const Index n_way = std::min(way, classes_.size());
  std::vector<Index> order(classes_.size());
  for (Index i = 0; i < order.size(); ++i) order[i] = i;
  partial_shuffle(order, n_way, rng);

  Episode ep;
  ep.way = n_way;
  ep.shot = shot;
  ep.candidates = classes_;
  std::vector<const Real*> rows;
  for (Index c = 0; c < n_way; ++c) {
    const Index cls = order[c];
    std::vector<Source> pool = by_class_[cls];
    const Index take = std::min(shot, pool.size());
    partial_shuffle(pool, take, rng);
    for (Index s = 0; s < take; ++s) {
      rows.push_back(pool[s].feature);
      ep.labels.push_back(static_cast<int>(cls));
    }
  }
  ep.features = Dense2D(rows.size(), feat_dim_);
  for (Index i = 0; i < rows.size(); ++i) {
    std::copy_n(rows[i], feat_dim_, ep.features.row(i).begin());
  }
  return ep;
}

Episode sample_episode(const TaskSamples& current, const Reservoir& replay, Index way,
                       Index shot, Rng& rng) {
  return EpisodeSampler(current, replay).sample(way, shot, rng);
}

void run_task(ModelParams& params, Reservoir& replay, const TaskContext& task,
              const MetaSchedule& sched, const TrainerConfig& cfg, Rng& rng,
              const EpochCallback& on_epoch) {
  check_shape(task.attributes.cols == params.attr_dim(), "run_task: attribute width mismatch");
  check_shape(task.samples.features.cols == params.feat_dim(), "run_task: feature width mismatch");
  if (sched.epochs == 0) throw ConfigError("run_task: epochs must be >= 1");

  if (!task.samples.indices.empty()) {
    const EpisodeSampler sampler(task.samples, replay);
    const Index n_way = std::min(cfg.way, sampler.classes().size());
    Index batches = cfg.batches_per_epoch;
    if (batches == 0) {
      const Index per_episode = std::max<Index>(1, n_way * cfg.shot);
      batches = std::max<Index>(1, (task.samples.indices.size() + per_episode - 1) / per_episode);
    }
    std::vector<int> cand_ids = sampler.classes();
    const Dense2D cand_attrs = gather_rows(task.attributes, cand_ids);

    ModelParams work = params;
    AdamState meta_state = AdamState::zeros(params.size());
    for (Index epoch = 0; epoch < sched.epochs; ++epoch) {
      const double lr = meta_lr(epoch, sched);
      double loss_sum = 0.0;
      for (Index b = 0; b < batches; ++b) {
        const Episode ep = sampler.sample(cfg.way, cfg.shot, rng);
        double first_loss = std::numeric_limits<double>::quiet_NaN();
        const LossGradFn fn = [&](std::span<const Real> theta, std::span<Real> grad) {
          work.unflatten(theta);
          LossAndGrad lg = loss_and_grads(work, ep.features, ep.labels, cand_attrs);
          if (!std::isfinite(lg.loss)) throw NumericError("run_task: non-finite episode loss");
          std::copy(lg.grad.begin(), lg.grad.end(), grad.begin());
          if (std::isnan(first_loss)) first_loss = lg.loss;
          return lg.loss;
        };
        if (cfg.meta) {
          const std::vector<Real> adapted = inner_loop(params.values(), fn, sched);
          if (std::isnan(first_loss)) {
            std::vector<Real> scratch(params.size());
            fn(params.values(), scratch);
          }
          reptile_outer_step(params.values(), adapted, meta_state, lr, sched.meta_update);
        } else {
          std::vector<Real> grad(params.size());
          fn(params.values(), grad);
          adam_step(params.values(), grad, meta_state, lr);
        }
        if (!all_finite(params.values())) throw NumericError("run_task: parameters became non-finite");
        loss_sum += first_loss;
      }
      if (on_epoch) {
        on_epoch({task.task_id, epoch, loss_sum / static_cast<double>(batches), lr});
      }
    }
  }

  for (Index i : task.samples.indices) {
    const Real* row = task.samples.features.data.data() + i * task.samples.features.cols;
    replay.offer(std::span<const Real>(row, task.samples.features.cols), task.samples.labels[i],
                 task.task_id, rng);
  }
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
