#include "mczsl/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mczsl/checkpoint.hpp"

#ifndef MCZSL_VERSION
#define MCZSL_VERSION "0.0.0"
#endif

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

// Fixed stream ids so plan, training and evaluation draws never interleave.
constexpr std::uint64_t kPlanStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kPermuteStream = 3;

void emit(std::ostream* log, std::ofstream* file, const std::string& line) {
  if (log) *log << line << "\n";
  if (file && *file) *file << line << "\n";
}

std::vector<int> classify_with(const ModelParams& params, const DatasetContainer& data,
                               MatrixView features, std::span<const int> candidates) {
  const Dense2D cand = gather_rows(data.attributes, candidates);
  const std::vector<int> local = predict(params, features, cand);
  std::vector<int> out(local.size());
  for (Index i = 0; i < local.size(); ++i) out[i] = candidates[local[i]];
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string version_string() { return MCZSL_VERSION; }

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv("MCZSL_OUTPUT_ROOT"); root && *root) return root;
  return "runs";
}

std::filesystem::path task_checkpoint_path(const std::filesystem::path& run_dir, Index task) {
  return run_dir / ("task_" + std::to_string(task + 1) + ".mczp");
}

std::filesystem::path task_replay_path(const std::filesystem::path& run_dir, Index task) {
  return run_dir / ("replay_" + std::to_string(task + 1) + ".mczr");
}

DatasetContainer load_run_data(const RunConfig& cfg) {
  if (!cfg.data_path.empty()) return read_container(cfg.data_path);
  Rng rng(cfg.synth_seed);
  return synth_dataset(cfg.synth, rng);
}

std::string run_dataset_name(const RunConfig& cfg) {
  if (!cfg.data_name.empty()) return cfg.data_name;
  if (!cfg.data_path.empty()) return std::filesystem::path(cfg.data_path).stem().string();
  return "synth";
}

DatasetMeta run_meta(const DatasetContainer& data, const std::string& name) {
  DatasetMeta derived = meta_of(data, name);
  if (const auto reg = find_dataset(name)) {
    if (reg->attr_dim != derived.attr_dim || reg->num_classes != derived.num_classes) {
      throw DataError(DataErrorKind::incompatible,
                      "container does not match registry entry " + name + ": z=" +
                          std::to_string(derived.attr_dim) + " C=" +
                          std::to_string(derived.num_classes));
    }
    // Registry seen/unseen counts pick the published task layout even when a
    // container's splits are trimmed.
    derived.num_seen = reg->num_seen;
    derived.num_unseen = reg->num_unseen;
  }
  return derived;
}

ProtocolPlan run_plan(const RunConfig& cfg, const DatasetContainer& data) {
  const ResolvedRun run = resolve(cfg);
  Rng master(cfg.seed);
  Rng plan_rng = master.split(kPlanStream);
  return build_plan(cfg.protocol, data, run_meta(data, run_dataset_name(cfg)), run.plan, plan_rng);
}

RunResult run_experiment(const RunConfig& cfg, const DatasetContainer& data,
                         const std::optional<std::filesystem::path>& out_dir, std::ostream* log) {
  const ResolvedRun run = resolve(cfg);
  const std::string name = run_dataset_name(cfg);
  Rng master(cfg.seed);
  Rng plan_rng = master.split(kPlanStream);
  Rng train_rng = master.split(kTrainStream);
  const ProtocolPlan plan =
      build_plan(cfg.protocol, data, run_meta(data, name), run.plan, plan_rng);

  std::ofstream log_file;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    std::ofstream conf(*out_dir / "config.txt", std::ios::binary | std::ios::trunc);
    if (!conf) throw DataError(DataErrorKind::io, "cannot write config.txt in " + out_dir->string());
    conf << "# mczsl " << version_string() << " (" << (sizeof(Real) == 4 ? "f32" : "f64") << ")\n";
    conf << serialize_config(cfg);
    log_file.open(*out_dir / "train.log", std::ios::binary | std::ios::trunc);
  }

  char buf[256];
  std::snprintf(buf, sizeof buf, "run protocol=%s dataset=%s tasks=%zu replay=%zu seed=%llu",
                std::string(to_string(plan.protocol)).c_str(), name.c_str(), plan.tasks.size(),
                static_cast<std::size_t>(plan.reservoir_budget),
                static_cast<unsigned long long>(cfg.seed));
  emit(log, &log_file, buf);

  ModelParams params = init_params(run.model, data.attr_dim(), data.feat_dim());
  Reservoir replay(plan.reservoir_budget, data.feat_dim(), run.replay_policy);
  MetricsRecord metrics;
  metrics.protocol = std::string(to_string(plan.protocol));
  metrics.dataset = name;

  for (Index t = 0; t < plan.tasks.size(); ++t) {
    const TaskSplit& split = plan.tasks[t];
    const TaskContext ctx{{data.features, data.labels, split.train}, data.attributes,
                          static_cast<int>(t)};
    run_task(params, replay, ctx, run.schedule, run.trainer, train_rng,
             [&](const EpochReport& r) {
               std::snprintf(buf, sizeof buf, "task %d epoch %zu loss %.6f lr %.6g", r.task_id + 1,
                             static_cast<std::size_t>(r.epoch), r.mean_loss, r.lr);
               emit(log, &log_file, buf);
             });
    if (out_dir) {
      save_checkpoint(params, task_checkpoint_path(*out_dir, t));
      save_reservoir(replay, task_replay_path(*out_dir, t));
    }
    if (const auto sets = eval_sets(plan, t)) {
      const TaskMetrics m = evaluate_task(data, *sets, t, [&](MatrixView x, std::span<const int> c) {
        return classify_with(params, data, x, c);
      });
      metrics.tasks.push_back(m);
      std::snprintf(buf, sizeof buf, "task %zu seen %.2f unseen %.2f H %.2f",
                    static_cast<std::size_t>(t + 1), m.seen_acc, m.unseen_acc, m.harmonic);
      emit(log, &log_file, buf);
    }
  }
  summarize(metrics);
  std::snprintf(buf, sizeof buf, "final mSA %.2f mUA %.2f mH %.2f", metrics.mean_seen,
                metrics.mean_unseen, metrics.mean_harmonic);
  emit(log, &log_file, buf);
  if (out_dir) {
    write_metrics_json(metrics, *out_dir / "metrics.json");
    std::ofstream csv(*out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    csv << metrics_to_csv(metrics);
  }
  return {std::move(metrics), std::move(params)};
}

MetricsRecord evaluate_run(const std::filesystem::path& run_dir,
                           std::optional<std::uint64_t> permute_seed,
                           const std::optional<std::filesystem::path>& checkpoint) {
  const std::string text = read_text(run_dir / "config.txt");
  const RunConfig cfg = parse_config(text);
  const DatasetContainer data = load_run_data(cfg);
  const ProtocolPlan plan = run_plan(cfg, data);
  std::optional<Rng> permute;
  if (permute_seed) permute.emplace(Rng(*permute_seed).split(kPermuteStream));

  std::optional<ModelParams> fixed_params;
  if (checkpoint) fixed_params = load_checkpoint(*checkpoint);

  MetricsRecord metrics;
  metrics.protocol = std::string(to_string(plan.protocol));
  metrics.dataset = run_dataset_name(cfg);
  for (Index t = 0; t < plan.tasks.size(); ++t) {
    auto sets = eval_sets(plan, t);
    if (!sets) continue;
    const ModelParams params = fixed_params ? *fixed_params : load_checkpoint(task_checkpoint_path(run_dir, t));
    if (params.attr_dim() != data.attr_dim() || params.feat_dim() != data.feat_dim()) {
      throw DataError(DataErrorKind::incompatible, "checkpoint dimensions do not match the dataset");
    }
    if (permute) {
      permute->shuffle(std::span<Index>(sets->seen_samples));
      permute->shuffle(std::span<Index>(sets->unseen_samples));
    }
    metrics.tasks.push_back(evaluate_task(data, *sets, t, [&](MatrixView x, std::span<const int> c) {
      return classify_with(params, data, x, c);
    }));
  }
  summarize(metrics);
  return metrics;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
