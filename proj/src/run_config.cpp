#include "mczsl/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError("config key '" + std::string(key) + "': cannot read '" + std::string(value) +
                    "' as " + std::string(want));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_uint(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  std::string tmp(v);
  char* end = nullptr;
  const double out = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <class Fn>
auto wrap(std::string_view key, std::string_view value, Fn&& fn) {
  try {
    return fn(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

struct KeySpec {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

const std::vector<KeySpec>& key_table() {
  using C = RunConfig;
  static const std::vector<KeySpec> table = {
      {"data.path", [](C& c, std::string_view v) { c.data_path = v; },
       [](const C& c) { return c.data_path; }},
      {"data.name", [](C& c, std::string_view v) { c.data_name = v; },
       [](const C& c) { return c.data_name; }},
      {"synth.seen", [](C& c, std::string_view v) { c.synth.n_seen = parse_uint<Index>("synth.seen", v); },
       [](const C& c) { return std::to_string(c.synth.n_seen); }},
      {"synth.unseen", [](C& c, std::string_view v) { c.synth.n_unseen = parse_uint<Index>("synth.unseen", v); },
       [](const C& c) { return std::to_string(c.synth.n_unseen); }},
      {"synth.feat_dim", [](C& c, std::string_view v) { c.synth.feat_dim = parse_uint<Index>("synth.feat_dim", v); },
       [](const C& c) { return std::to_string(c.synth.feat_dim); }},
      {"synth.attr_dim", [](C& c, std::string_view v) { c.synth.attr_dim = parse_uint<Index>("synth.attr_dim", v); },
       [](const C& c) { return std::to_string(c.synth.attr_dim); }},
      {"synth.noise", [](C& c, std::string_view v) { c.synth.noise_sigma = parse_real("synth.noise", v); },
       [](const C& c) { return fmt_real(c.synth.noise_sigma); }},
      {"synth.per_class", [](C& c, std::string_view v) { c.synth.samples_per_class = parse_uint<Index>("synth.per_class", v); },
       [](const C& c) { return std::to_string(c.synth.samples_per_class); }},
      {"synth.test_fraction", [](C& c, std::string_view v) { c.synth.test_fraction = parse_real("synth.test_fraction", v); },
       [](const C& c) { return fmt_real(c.synth.test_fraction); }},
      {"synth.seed", [](C& c, std::string_view v) { c.synth_seed = parse_uint<std::uint64_t>("synth.seed", v); },
       [](const C& c) { return std::to_string(c.synth_seed); }},
      {"protocol", [](C& c, std::string_view v) { c.protocol = parse_protocol(v); },
       [](const C& c) { return std::string(to_string(c.protocol)); }},
      {"tasks", [](C& c, std::string_view v) { c.num_tasks = parse_uint<Index>("tasks", v); },
       [](const C& c) { return std::to_string(c.num_tasks); }},
      {"seed", [](C& c, std::string_view v) { c.seed = parse_uint<std::uint64_t>("seed", v); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"model.hidden", [](C& c, std::string_view v) { c.model.hidden_width = parse_uint<Index>("model.hidden", v); },
       [](const C& c) { return std::to_string(c.model.hidden_width); }},
      {"model.logit_scale", [](C& c, std::string_view v) { c.model.logit_scale = static_cast<Real>(parse_real("model.logit_scale", v)); },
       [](const C& c) { return fmt_real(c.model.logit_scale); }},
      {"model.self_gating", [](C& c, std::string_view v) { c.model.disable_self_gating = !parse_bool("model.self_gating", v); },
       [](const C& c) { return fmt_bool(!c.model.disable_self_gating); }},
      {"model.norm", [](C& c, std::string_view v) { c.model.normalization = wrap("model.norm", v, parse_normalization); },
       [](const C& c) { return std::string(to_string(c.model.normalization)); }},
      {"meta.lr", [](C& c, std::string_view v) { c.schedule.meta_lr = parse_real("meta.lr", v); },
       [](const C& c) { return fmt_real(c.schedule.meta_lr); }},
      {"meta.inner_lr", [](C& c, std::string_view v) { c.schedule.inner_lr = parse_real("meta.inner_lr", v); },
       [](const C& c) { return fmt_real(c.schedule.inner_lr); }},
      {"meta.inner_steps", [](C& c, std::string_view v) { c.schedule.inner_steps = parse_uint<Index>("meta.inner_steps", v); },
       [](const C& c) { return std::to_string(c.schedule.inner_steps); }},
      {"meta.epochs", [](C& c, std::string_view v) { c.schedule.epochs = parse_uint<Index>("meta.epochs", v); },
       [](const C& c) { return std::to_string(c.schedule.epochs); }},
      {"meta.inner_opt", [](C& c, std::string_view v) { c.schedule.inner_optimizer = wrap("meta.inner_opt", v, parse_inner_optimizer); },
       [](const C& c) { return std::string(to_string(c.schedule.inner_optimizer)); }},
      {"meta.update", [](C& c, std::string_view v) { c.schedule.meta_update = wrap("meta.update", v, parse_meta_update); },
       [](const C& c) { return std::string(to_string(c.schedule.meta_update)); }},
      {"episode.way", [](C& c, std::string_view v) { c.trainer.way = parse_uint<Index>("episode.way", v); },
       [](const C& c) { return std::to_string(c.trainer.way); }},
      {"episode.shot", [](C& c, std::string_view v) { c.trainer.shot = parse_uint<Index>("episode.shot", v); },
       [](const C& c) { return std::to_string(c.trainer.shot); }},
      {"episode.batches", [](C& c, std::string_view v) { c.trainer.batches_per_epoch = parse_uint<Index>("episode.batches", v); },
       [](const C& c) { return std::to_string(c.trainer.batches_per_epoch); }},
      {"replay.policy", [](C& c, std::string_view v) { c.replay_policy = wrap("replay.policy", v, parse_replay_policy); },
       [](const C& c) { return std::string(to_string(c.replay_policy)); }},
      {"replay.budget",
       [](C& c, std::string_view v) {
         if (v == "auto") {
           c.replay_budget.reset();
         } else {
           c.replay_budget = parse_uint<Index>("replay.budget", v);
         }
       },
       [](const C& c) { return c.replay_budget ? std::to_string(*c.replay_budget) : std::string("auto"); }},
      {"split.train_fraction", [](C& c, std::string_view v) { c.train_fraction = parse_real("split.train_fraction", v); },
       [](const C& c) { return fmt_real(c.train_fraction); }},
      {"split.shuffle_classes", [](C& c, std::string_view v) { c.shuffle_classes = parse_bool("split.shuffle_classes", v); },
       [](const C& c) { return fmt_bool(c.shuffle_classes); }},
      {"ablate",
       [](C& c, std::string_view v) {
         auto items = split_list(v);
         for (const auto& a : items) {
           if (std::find(std::begin(kAblations), std::end(kAblations), a) == std::end(kAblations)) {
             throw ConfigError("unknown ablation '" + a +
                               "' (expected no-meta, no-self-gating, no-norm, plain-cn, sequential)");
           }
         }
         std::sort(items.begin(), items.end());
         items.erase(std::unique(items.begin(), items.end()), items.end());
         c.ablations = std::move(items);
       },
       [](const C& c) {
         std::string out;
         for (const auto& a : c.ablations) out += (out.empty() ? "" : ",") + a;
         return out;
       }},
      {"output.dir", [](C& c, std::string_view v) { c.output_dir = v; },
       [](const C& c) { return c.output_dir; }},
  };
  return table;
}

const KeySpec& find_key(std::string_view key) {
  for (const auto& k : key_table()) {
    if (k.key == key) return k;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

bool has(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> out;
  for (const auto& k : key_table()) out.push_back(k.key);
  return out;
}

void set_config_key(RunConfig& cfg, std::string_view key, std::string_view value) {
  find_key(trim(key)).set(cfg, trim(value));
}

std::string get_config_key(const RunConfig& cfg, std::string_view key) {
  return find_key(key).get(cfg);
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_key(base, body.substr(0, eq), body.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) {
    out += std::string(k.key) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

ResolvedRun resolve(const RunConfig& cfg) {
  ResolvedRun r;
  r.model = cfg.model;
  r.model.init_seed = cfg.seed;
  r.schedule = cfg.schedule;
  r.trainer = cfg.trainer;
  r.replay_policy = cfg.replay_policy;
  r.plan.num_tasks = cfg.num_tasks;
  r.plan.reservoir_budget = cfg.replay_budget;
  r.plan.train_fraction = cfg.train_fraction;
  r.plan.shuffle_classes = cfg.shuffle_classes;
  if (has(cfg.ablations, "no-norm") && has(cfg.ablations, "plain-cn")) {
    throw ConfigError("ablations no-norm and plain-cn are mutually exclusive");
  }
  if (has(cfg.ablations, "no-meta")) r.trainer.meta = false;
  if (has(cfg.ablations, "no-self-gating")) r.model.disable_self_gating = true;
  if (has(cfg.ablations, "no-norm")) r.model.normalization = Normalization::none;
  if (has(cfg.ablations, "plain-cn")) r.model.normalization = Normalization::plain_cn;
  if (has(cfg.ablations, "sequential")) {
    r.sequential = true;
    r.plan.reservoir_budget = 0;
  }
  if (r.schedule.epochs == 0) throw ConfigError("meta.epochs must be >= 1");
  if (r.trainer.way == 0 || r.trainer.shot == 0) throw ConfigError("episode.way and episode.shot must be >= 1");
  if (r.model.hidden_width == 0) throw ConfigError("model.hidden must be >= 1");
  return r;
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
