#pragma once

// Run configuration as a flat `key = value` file. Blank lines and lines
// starting with '#' are ignored; unknown keys are errors. Precedence when
// layering is CLI over file over defaults: start from RunConfig{}, apply the
// file, then apply command-line pairs with set_config_key.
//
//   data.path              CZSF container; empty selects the synthetic generator
//   data.name              registry name (AWA1, AWA2, CUB, SUN, aPY) or a label
//   synth.seen / synth.unseen / synth.feat_dim / synth.attr_dim
//   synth.noise / synth.per_class / synth.test_fraction / synth.seed
//   protocol               gzsl | fixed | dynamic
//   tasks                  0 = registry layout (or 5 for other data)
//   seed
//   model.hidden / model.logit_scale / model.self_gating / model.norm
//   meta.lr / meta.inner_lr / meta.inner_steps / meta.epochs
//   meta.inner_opt (adam | sgd) / meta.update (adam | plain)
//   episode.way / episode.shot / episode.batches (0 = auto)
//   replay.policy (reservoir | ring) / replay.budget (auto or a slot count)
//   split.train_fraction / split.shuffle_classes
//   ablate                 comma list of no-meta, no-self-gating, no-norm,
//                          plain-cn, sequential
//   output.dir

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mczsl/continual.hpp"
#include "mczsl/data.hpp"
#include "mczsl/protocols.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

struct RunConfig {
  std::string data_path;
  std::string data_name;
  SynthSpec synth;
  std::uint64_t synth_seed = 1;
  Protocol protocol = Protocol::fixed;
  Index num_tasks = 0;
  std::uint64_t seed = 0;
  ModelConfig model;
  MetaSchedule schedule;
  TrainerConfig trainer;
  ReplayPolicy replay_policy = ReplayPolicy::reservoir;
  std::optional<Index> replay_budget;
  double train_fraction = 0.8;
  bool shuffle_classes = false;
  std::vector<std::string> ablations;
  std::string output_dir;
};

/// Every accepted key, in serialization order.
std::vector<std::string_view> config_keys();

/// ConfigError on an unknown key or an unparsable value.
void set_config_key(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_key(const RunConfig& cfg, std::string_view key);

RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
/// Every key, one per line, so parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

inline constexpr std::string_view kAblations[] = {"no-meta", "no-self-gating", "no-norm",
                                                  "plain-cn", "sequential"};

/// Settings actually used for training once ablations are folded in.
struct ResolvedRun {
  ModelConfig model;
  MetaSchedule schedule;
  TrainerConfig trainer;
  PlanOptions plan;
  ReplayPolicy replay_policy = ReplayPolicy::reservoir;
  bool sequential = false;  // replay memory disabled
};

ResolvedRun resolve(const RunConfig& cfg);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
