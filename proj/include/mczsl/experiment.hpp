#pragma once

// End-to-end runs: load or synthesize data, build the protocol plan, train task
// by task, score after each task and write the run directory:
//
//   config.txt              full RunConfig plus version and seed provenance
//   train.log               one line per epoch and per evaluated task
//   task_<k>.mczp           parameters after task k (1-based)
//   replay_<k>.mczr         replay memory after task k
//   metrics.json            per-task scores and aggregates
//   metrics.csv             the same rows as CSV

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "mczsl/metrics_io.hpp"
#include "mczsl/run_config.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

/// Dataset from cfg.data_path, or the synthetic generator when it is empty.
DatasetContainer load_run_data(const RunConfig& cfg);
/// cfg.data_name, else the file stem, else "synth".
std::string run_dataset_name(const RunConfig& cfg);

/// Meta for plan building: registry dimensions when the container matches
/// the named registry entry, otherwise derived from the container.
DatasetMeta run_meta(const DatasetContainer& data, const std::string& name);

ProtocolPlan run_plan(const RunConfig& cfg, const DatasetContainer& data);

struct RunResult {
  MetricsRecord metrics;
  ModelParams params;  // after the last task
};

/// Trains and scores. With `out_dir` set, writes every artifact listed above.
/// `log` receives the same lines as train.log.
RunResult run_experiment(const RunConfig& cfg, const DatasetContainer& data,
                         const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                         std::ostream* log = nullptr);

/// Re-scores a finished run from its per-task checkpoints without touching
/// parameters. `permute_seed` shuffles the test samples before scoring.
MetricsRecord evaluate_run(const std::filesystem::path& run_dir,
                           std::optional<std::uint64_t> permute_seed = std::nullopt,
                           const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

std::filesystem::path task_checkpoint_path(const std::filesystem::path& run_dir, Index task);
std::filesystem::path task_replay_path(const std::filesystem::path& run_dir, Index task);

/// $MCZSL_OUTPUT_ROOT, or "runs" when unset.
std::filesystem::path default_output_root();

std::string version_string();

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
