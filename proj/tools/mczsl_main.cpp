// mczsl command-line tool: synth, train, eval, report.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numerical failure, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mczsl/experiment.hpp"

namespace {

using namespace mczsl;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct SynthArgs {
  std::string out;
  SynthSpec spec;
  std::uint64_t seed = 1;
};

struct TrainArgs {
  std::string config;
  std::string data;
  bool synth = false;
  std::string dataset;
  std::string protocol;
  std::optional<Index> tasks;
  std::optional<std::uint64_t> seed;
  std::optional<Index> epochs;
  std::optional<Index> hidden;
  std::string replay_budget;
  std::vector<std::string> ablate;
  std::vector<std::string> sets;
  std::string out;
  bool quiet = false;
};

struct EvalArgs {
  std::string run_dir;
  std::string checkpoint;
  std::optional<std::uint64_t> permute_seed;
  std::string out;
};

struct ReportArgs {
  std::string run_dir;
  std::string out;
};

void write_or_print(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError(DataErrorKind::io, "cannot write '" + path + "'");
  f << text;
}

int cmd_synth(const SynthArgs& a) {
  Rng rng(a.seed);
  const DatasetContainer c = synth_dataset(a.spec, rng);
  write_container(c, a.out);
  std::printf("wrote %s: n=%zu d=%zu C=%zu z=%zu train=%zu test_seen=%zu test_unseen=%zu\n",
              a.out.c_str(), static_cast<std::size_t>(c.num_samples()),
              static_cast<std::size_t>(c.feat_dim()), static_cast<std::size_t>(c.num_classes()),
              static_cast<std::size_t>(c.attr_dim()), c.train.size(), c.test_seen.size(),
              c.test_unseen.size());
  return 0;
}

RunConfig build_train_config(const TrainArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_config(a.config, cfg);
  std::vector<std::pair<std::string, std::string>> cli;
  if (a.synth) cli.emplace_back("data.path", "");
  if (!a.data.empty()) cli.emplace_back("data.path", a.data);
  if (!a.dataset.empty()) cli.emplace_back("data.name", a.dataset);
  if (!a.protocol.empty()) cli.emplace_back("protocol", a.protocol);
  if (a.tasks) cli.emplace_back("tasks", std::to_string(*a.tasks));
  if (a.seed) cli.emplace_back("seed", std::to_string(*a.seed));
  if (a.epochs) cli.emplace_back("meta.epochs", std::to_string(*a.epochs));
  if (a.hidden) cli.emplace_back("model.hidden", std::to_string(*a.hidden));
  if (!a.replay_budget.empty()) cli.emplace_back("replay.budget", a.replay_budget);
  if (!a.ablate.empty()) {
    std::string joined = get_config_key(cfg, "ablate");
    for (const auto& x : a.ablate) joined += (joined.empty() ? "" : ",") + x;
    cli.emplace_back("ablate", joined);
  }
  if (!a.out.empty()) cli.emplace_back("output.dir", a.out);
  for (const auto& [k, v] : cli) set_config_key(cfg, k, v);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  // eval re-reads config.txt from the run directory, possibly from elsewhere.
  if (!cfg.data_path.empty()) cfg.data_path = std::filesystem::absolute(cfg.data_path).string();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = build_train_config(a);
  resolve(cfg);  // reject bad combinations before touching data
  std::filesystem::path out = cfg.output_dir;
  if (out.empty()) {
    out = default_output_root() /
          (run_dataset_name(cfg) + "-" + std::string(to_string(cfg.protocol)) + "-seed" +
           std::to_string(cfg.seed));
  }
  const DatasetContainer data = load_run_data(cfg);
  const RunResult result = run_experiment(cfg, data, out, a.quiet ? nullptr : &std::cerr);
  std::cout << format_metrics(result.metrics);
  std::cout << "artifacts in " << out.string() << "\n";
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  std::optional<std::filesystem::path> ckpt;
  if (!a.checkpoint.empty()) ckpt = a.checkpoint;
  const MetricsRecord m = evaluate_run(a.run_dir, a.permute_seed, ckpt);
  write_or_print(metrics_to_json(m), a.out);
  return 0;
}

int cmd_report(const ReportArgs& a) {
  const MetricsRecord m = read_metrics_json(std::filesystem::path(a.run_dir) / "metrics.json");
  write_or_print(metrics_to_csv(m), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned continual zero-shot classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mczsl::version_string());

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic CZSF dataset");
  s->add_option("--out", synth.out, "Output .czsf path")->required();
  s->add_option("--seen", synth.spec.n_seen, "Seen classes")->capture_default_str();
  s->add_option("--unseen", synth.spec.n_unseen, "Unseen classes")->capture_default_str();
  s->add_option("--feat-dim", synth.spec.feat_dim, "Feature width d")->capture_default_str();
  s->add_option("--attr-dim", synth.spec.attr_dim, "Attribute width z")->capture_default_str();
  s->add_option("--noise", synth.spec.noise_sigma, "Per-coordinate noise sigma")->capture_default_str();
  s->add_option("--per-class", synth.spec.samples_per_class, "Samples per class")->capture_default_str();
  s->add_option("--test-fraction", synth.spec.test_fraction, "Held-out share of seen classes")
      ->capture_default_str();
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train over a protocol's task stream");
  t->add_option("--config", train.config, "key = value config file");
  t->add_option("--data", train.data, "CZSF dataset");
  t->add_flag("--synth", train.synth, "Use the synthetic generator (synth.* keys)");
  t->add_option("--dataset", train.dataset, "Registry name or label");
  t->add_option("--protocol", train.protocol, "gzsl | fixed | dynamic");
  t->add_option("--tasks", train.tasks, "Task count (0 = registry layout)");
  t->add_option("--seed", train.seed, "Run seed");
  t->add_option("--epochs", train.epochs, "Epochs per task");
  t->add_option("--hidden", train.hidden, "Hidden width H");
  t->add_option("--replay-budget", train.replay_budget, "Replay slots or 'auto'");
  t->add_option("--ablate", train.ablate,
                "no-meta | no-self-gating | no-norm | plain-cn | sequential (repeatable)");
  t->add_option("--set", train.sets, "Override any config key (key=value, repeatable)");
  t->add_option("--out", train.out, "Run directory");
  t->add_flag("--quiet", train.quiet, "No per-epoch log on stderr");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Re-score a run from its checkpoints");
  e->add_option("--run-dir", eval.run_dir, "Directory written by train")->required();
  e->add_option("--checkpoint", eval.checkpoint, "Score every task with this checkpoint instead");
  e->add_option("--permute-seed", eval.permute_seed, "Shuffle test samples before scoring");
  e->add_option("--out", eval.out, "Write metrics JSON here instead of stdout");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Per-task CSV from a run's metrics.json");
  r->add_option("--run-dir", report.run_dir, "Directory written by train")->required();
  r->add_option("--out", report.out, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (t->parsed()) return cmd_train(train);
    if (e->parsed()) return cmd_eval(eval);
    if (r->parsed()) return cmd_report(report);
  } catch (const mczsl::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const mczsl::DataError& err) {
    std::cerr << "data error (" << mczsl::to_string(err.kind()) << "): " << err.what() << "\n";
    return kExitData;
  } catch (const mczsl::NumericError& err) {
    std::cerr << "numeric error: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
