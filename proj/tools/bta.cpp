// Command-line front end: train, compose, eval, experiment, inspect.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bta/evf_io.hpp"
#include "bta/experiments.hpp"

namespace fs = std::filesystem;
using namespace bta;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

/// Flag values keyed by config key, applied over the config file.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;
  std::string config_file;
  bool print_config = false;

  void flag(CLI::App* app, const std::string& name, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(name, [this, key](const std::string& v) { values.emplace_back(key, v); },
                                          help);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (const char* env = std::getenv("BTA_OUTPUT_DIR"); env && *env) cfg.out_dir = env;
    if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
    for (const auto& [k, v] : values) cfg.set(k, v);
    return cfg;
  }
};

void common_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  app->add_flag("--print-config", o.print_config, "print the resolved configuration and exit");
  o.flag(app, "--map", "map", "builtin map name or map file");
  o.flag(app, "--sp", "sp", "slip probability");
  o.flag(app, "--absorbing", "absorbing", "shared | own");
  o.flag(app, "--reward", "reward", "sparse | dense");
  o.flag(app, "--seed", "seed", "random seed");
  o.flag(app, "--out-dir", "out", "output directory (default $BTA_OUTPUT_DIR or ./out)");
}

void learning_flags(CLI::App* app, Overrides& o) {
  o.flag(app, "--episodes", "episodes", "training episode budget");
  o.flag(app, "--alpha", "alpha", "learning rate");
  o.flag(app, "--epsilon", "epsilon", "exploration rate");
  o.flag(app, "--gamma", "gamma", "discount");
  o.flag(app, "--train-max-steps", "train_max_steps", "training episode cap (0 = 4 x open cells)");
}

struct World {
  std::shared_ptr<const TaskFamily> family;
  TaskAlgebra alg;
};

World make_world(const ExperimentConfig& cfg) {
  auto family = TaskFamily::make(resolve_map(cfg.map), cfg.reward_shape);
  return {family, TaskAlgebra(family)};
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& given, const std::string& fallback) {
  if (!given.empty()) {
    const fs::path p = given;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir / fallback;
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

// --- train -----------------------------------------------------------------

int cmd_train(const ExperimentConfig& cfg, const std::string& task_spec, bool oracle, const std::string& out) {
  cfg.validate();
  const World w = make_world(cfg);
  const Task task = parse_task_spec(task_spec, w.alg);
  const fs::path path = output_path(cfg, out, file_safe(task_spec) + ".evf");
  if (oracle) {
    const auto evf = extended_value_iteration(task, cfg.transition);
    save_evf(evf, path);
    std::cout << "task " << task.name << ": oracle EVF written to " << path.string() << " (samples 0)\n";
    return 0;
  }
  const auto r = goal_q_learning(task, cfg.transition, cfg.hp);
  save_evf(r.evf, path);
  std::cout << "task " << task.name << ": " << r.episodes << " episodes, " << r.samples << " samples, "
            << r.goals_discovered.size() << "/" << task.world().num_goals() << " goals discovered\n"
            << "EVF written to " << path.string() << '\n';
  return 0;
}

// --- compose ---------------------------------------------------------------

int cmd_compose(const ExperimentConfig& cfg, const std::string& expr_text, const std::vector<std::string>& binds,
                const std::string& universal, const std::string& empty, const std::string& out) {
  const Expr expr = parse(expr_text);
  EvfBindings<double> bindings;
  for (const auto& b : binds) {
    const auto eq = b.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--bind expects NAME=FILE, got '" + b + "'");
    bindings.insert_or_assign(b.substr(0, eq), load_evf(b.substr(eq + 1)));
  }
  cfg.validate();
  const World w = make_world(cfg);
  const double rbar = bindings.empty() ? default_rbar_min(*w.family, cfg.transition) : bindings.begin()->second.rbar_min();
  SolveOptions opts;
  opts.rbar_min = rbar;
  auto bound = [&](const std::string& file, const Task& t) {
    return file.empty() ? extended_value_iteration(t, cfg.transition, opts) : load_evf(file);
  };
  const EvfAlgebra<double> alg(bound(universal, w.alg.universal()), bound(empty, w.alg.empty()));
  for (const auto& [name, evf] : bindings) require_same_shape(evf, alg.universal());
  const auto composed = compose(expr, bindings, alg);
  const fs::path path = output_path(cfg, out, "composed_" + file_safe(to_string(expr)) + ".evf");
  save_evf(composed, path);
  std::cout << "composed " << to_string(expr) << " -> " << path.string() << '\n';
  return 0;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const ExperimentConfig& cfg, const std::string& evf_file, const std::string& task_spec, bool random,
             const std::string& csv) {
  cfg.validate();
  const World w = make_world(cfg);
  const Task task = parse_task_spec(task_spec, w.alg);
  const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : default_max_steps(task.world());
  Rng rng(cfg.hp.seed);
  ReturnStats stats;
  if (random) {
    const PolicyFn policy = [](int, Rng& r) {
      return static_cast<Action>(std::uniform_int_distribution<int>(0, kNumActions - 1)(r));
    };
    stats = evaluate_policy(policy, task, cfg.transition, cfg.eval_episodes, max_steps, rng);
  } else {
    if (evf_file.empty()) throw ValidationError("eval needs --evf or --random");
    stats = evaluate_policy(load_evf(evf_file), task, cfg.transition, cfg.eval_episodes, max_steps, rng);
  }
  std::cout << std::setprecision(10) << "task " << task.name << ": " << stats.episodes.size() << " episodes, mean "
            << stats.mean << ", sd " << stats.stddev << ", median " << stats.median << ", min " << stats.min
            << ", max " << stats.max << '\n';
  const fs::path path = output_path(cfg, csv, "eval_" + file_safe(task_spec) + ".csv");
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << std::setprecision(12) << "episode,start_row,start_col,return,steps,terminated\n";
  for (std::size_t i = 0; i < stats.episodes.size(); ++i) {
    const auto& e = stats.episodes[i];
    const Cell c = task.world().cell(e.start);
    f << i << ',' << c.row << ',' << c.col << ',' << e.ret << ',' << e.steps << ',' << (e.terminated ? 1 : 0)
      << '\n';
  }
  std::cout << "per-episode returns written to " << path.string() << '\n';
  return 0;
}

// --- inspect ---------------------------------------------------------------

int cmd_inspect(const std::string& file) {
  const auto evf = load_evf(file);
  std::cout << std::setprecision(10) << file << ": " << evf.num_states() << " states, " << evf.num_goals()
            << " goals, " << kNumActions << " actions, r_bar_min " << evf.rbar_min() << '\n'
            << "values in [" << evf.values().minCoeff() << ", " << evf.values().maxCoeff() << "], "
            << (evf.all_finite() ? "all finite" : "NON-FINITE ENTRIES") << '\n';
  for (int g = 0; g < evf.num_goals(); ++g) {
    const auto slice = evf.goal_slice(g);
    std::cout << "  goal " << g << " " << to_string(evf.goals()[static_cast<std::size_t>(g)]) << ": max "
              << slice.maxCoeff() << ", mean " << slice.mean() << '\n';
  }
  return 0;
}

// --- experiment ------------------------------------------------------------

int cmd_experiment(const ExperimentConfig& cfg, const std::string& which) {
  if (which == "four-rooms") {
    std::cout << run_four_rooms(cfg).summary;
  } else if (which == "scaling") {
    std::cout << run_scaling(cfg).summary;
  } else {
    std::cout << run_relaxations(cfg).summary;
  }
  std::cout << "artifacts in " << cfg.out_dir.string() << " (see manifest.csv)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boolean task algebra: learn, compose and evaluate extended value functions"};
  app.require_subcommand(1);

  Overrides train_o, compose_o, eval_o, exp_o;

  auto* train = app.add_subcommand("train", "train one base task and write an EVF1 file");
  std::string train_task, train_out;
  bool train_oracle = false;
  common_flags(train, train_o);
  learning_flags(train, train_o);
  train->add_option("--task", train_task, "task: goals=i,j or an expression over base tasks")->required();
  train->add_option("--out", train_out, "EVF file to write");
  train->add_flag("--oracle", train_oracle, "solve by value iteration instead of learning");

  auto* comp = app.add_subcommand("compose", "compose bound EVFs with a Boolean expression");
  std::string comp_expr, comp_u, comp_e, comp_out;
  std::vector<std::string> comp_binds;
  common_flags(comp, compose_o);
  comp->add_option("--expr", comp_expr, "Boolean expression")->required();
  comp->add_option("--bind", comp_binds, "NAME=FILE bindings")->delimiter(',');
  compose_o.flag(comp, "--alg", "map", "world whose bounds (M_U, M_0) are solved when not given as files");
  comp->add_option("--universal", comp_u, "EVF file for M_U");
  comp->add_option("--empty", comp_e, "EVF file for M_0");
  comp->add_option("--out", comp_out, "EVF file to write");

  auto* eval = app.add_subcommand("eval", "evaluate the greedy policy of an EVF on a task");
  std::string eval_evf, eval_task_spec, eval_csv;
  bool eval_random = false;
  common_flags(eval, eval_o);
  eval->add_option("--evf", eval_evf, "EVF file");
  eval->add_option("--task", eval_task_spec, "task to evaluate on")->required();
  eval->add_flag("--random", eval_random, "uniform random-action baseline instead of an EVF");
  eval->add_option("--csv", eval_csv, "per-episode CSV to write");
  eval_o.flag(eval, "--episodes", "eval_episodes", "evaluation episodes");
  eval_o.flag(eval, "--max-steps", "max_steps", "episode cap (0 = 4 x open cells)");

  auto* exp = app.add_subcommand("experiment", "run an experiment driver");
  std::string exp_which;
  std::vector<std::string> exp_sets;
  common_flags(exp, exp_o);
  learning_flags(exp, exp_o);
  exp->add_option("which", exp_which, "four-rooms | scaling | relaxations")
      ->required()
      ->check(CLI::IsMember({"four-rooms", "scaling", "relaxations"}));
  exp->add_option("--set", exp_sets, "extra KEY=VALUE config settings");
  exp_o.flag(exp, "--seeds", "seeds", "number of seeds");
  exp_o.flag(exp, "--workers", "workers", "worker threads (0 = hardware concurrency)");
  exp_o.flag(exp, "--learned", "learned", "learn base EVFs instead of solving them (true/false)");

  auto* insp = app.add_subcommand("inspect", "print EVF file statistics");
  std::string insp_file;
  insp->add_option("file", insp_file, "EVF file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    auto resolved = [](const Overrides& o) {
      ExperimentConfig cfg = o.resolve();
      if (o.print_config) std::cout << cfg.dump();
      return cfg;
    };
    if (train->parsed()) {
      const auto cfg = resolved(train_o);
      return train_o.print_config ? 0 : cmd_train(cfg, train_task, train_oracle, train_out);
    }
    if (comp->parsed()) {
      const auto cfg = resolved(compose_o);
      return compose_o.print_config ? 0 : cmd_compose(cfg, comp_expr, comp_binds, comp_u, comp_e, comp_out);
    }
    if (eval->parsed()) {
      const auto cfg = resolved(eval_o);
      return eval_o.print_config ? 0 : cmd_eval(cfg, eval_evf, eval_task_spec, eval_random, eval_csv);
    }
    if (exp->parsed()) {
      for (const auto& s : exp_sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects KEY=VALUE, got '" + s + "'");
        exp_o.values.emplace_back(s.substr(0, eq), s.substr(eq + 1));
      }
      auto cfg = resolved(exp_o);
      if (exp_o.print_config) return 0;
      cfg.validate();
      return cmd_experiment(cfg, exp_which);
    }
    return cmd_inspect(insp_file);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
