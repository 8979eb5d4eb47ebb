#include "bta/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace bta {

namespace {

std::string num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::string goals_string(const std::vector<int>& goals) {
  std::string out;
  for (std::size_t i = 0; i < goals.size(); ++i) out += (i ? ";" : "") + std::to_string(goals[i]);
  return out;
}

std::string slug(const std::string& expr) {
  std::string out;
  for (char c : expr) {
    switch (c) {
      case '~': out += "not_"; break;
      case '&': out += "and"; break;
      case '|': out += "or"; break;
      case '^': out += "xor"; break;
      case ' ': out += '_'; break;
      case '(':
      case ')': break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_quote(const std::string& s) { return "\"" + s + "\""; }

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads; results keep index order.
template <typename Fn>
auto parallel_map(int n, int workers, Fn fn) -> std::vector<decltype(fn(0))> {
  using R = decltype(fn(0));
  std::vector<R> out;
  out.reserve(static_cast<std::size_t>(n));
  const int w = std::max(1, workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency()));
  if (w == 1) {
    for (int i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  for (int begin = 0; begin < n; begin += w) {
    std::vector<std::future<R>> batch;
    for (int i = begin; i < std::min(n, begin + w); ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

ExtendedQTable solve_or_learn(const Task& task, const TransitionConfig& cfg, const ExperimentConfig& ec,
                              std::uint64_t seed, double rbar) {
  if (!ec.learned) {
    SolveOptions opts;
    opts.rbar_min = rbar;
    ExtendedQTable evf = extended_value_iteration(task, cfg, opts);
    // The learner never discovers goals the task cannot terminate at, so
    // those slices keep their initial value.
    if (cfg.absorbing == AbsorbingMode::TaskOwnGoalsOnly) {
      for (int g = 0; g < evf.num_goals(); ++g)
        if (!task.desired.contains(g)) evf.goal_slice(g).setZero();
    }
    return evf;
  }
  Hyperparams hp = ec.hp;
  hp.seed = seed;
  return goal_q_learning(task, cfg, hp, rbar).evf;
}

TaskEvaluation evaluate_composed(const ExtendedQTable& evf, const Task& target, const TransitionConfig& cfg,
                                 int episodes, int max_steps, std::uint64_t seed, const std::string& expr) {
  TaskEvaluation ev;
  ev.expr = expr;
  ev.goals = target.desired.indices();
  const Eigen::ArrayXd optimal = optimal_state_values(target, cfg, max_steps);
  Rng rng(seed);
  ev.stats = evaluate_policy(evf, target, cfg, episodes, max_steps, rng);
  double opt_sum = 0.0;
  bool every_episode = true;
  for (const auto& e : ev.stats.episodes) {
    opt_sum += optimal(e.start);
    if (std::abs(e.ret - optimal(e.start)) > 1e-9) every_episode = false;
  }
  ev.optimal_mean = opt_sum / static_cast<double>(ev.stats.episodes.size());
  ev.gap = ev.optimal_mean - ev.stats.mean;
  if (cfg.deterministic()) {
    ev.sweep = sweep_starts(evf, target, cfg, optimal, max_steps);
    ev.optimal = every_episode && ev.sweep.optimal_starts == ev.sweep.starts;
  } else {
    // Stochastic returns: optimal within three standard errors of the mean.
    const double se = ev.stats.stddev / std::sqrt(static_cast<double>(ev.stats.episodes.size()));
    ev.optimal = std::abs(ev.gap) <= 3.0 * se;
  }
  return ev;
}

std::string evaluation_header() {
  return "expr,goals,episodes,mean,sd,min,q1,median,q3,max,optimal_mean,gap,optimal\n";
}

std::string evaluation_row(const TaskEvaluation& ev) {
  const auto& s = ev.stats;
  return csv_quote(ev.expr) + "," + goals_string(ev.goals) + "," + std::to_string(s.episodes.size()) + "," +
         num(s.mean) + "," + num(s.stddev) + "," + num(s.min) + "," + num(s.q1) + "," + num(s.median) + "," +
         num(s.q3) + "," + num(s.max) + "," + num(ev.optimal_mean) + "," + num(ev.gap) + "," +
         (ev.optimal ? "true" : "false") + "\n";
}

void write_panel(ArtifactWriter& out, const GridWorld& world, const ExtendedQTable& evf, const std::string& expr,
                 std::uint64_t seed) {
  const QTable q = recover_q(evf);
  const Eigen::ArrayXd v = q.rowwise().maxCoeff();
  const auto policy = greedy_policy<double>(q);
  std::ostringstream values, arrows, extended;
  values << "row,col,value\n";
  arrows << "row,col,action\n";
  extended << "row,col,goal,value\n";
  for (int s = 0; s < world.num_states(); ++s) {
    const Cell c = world.cell(s);
    values << c.row << ',' << c.col << ',' << num(v(s)) << '\n';
    arrows << c.row << ',' << c.col << ',' << action_name(policy[static_cast<std::size_t>(s)]) << '\n';
    for (int g = 0; g < evf.num_goals(); ++g) {
      extended << c.row << ',' << c.col << ',' << g << ',' << num(evf.goal_slice(g).row(s).maxCoeff()) << '\n';
    }
  }
  const std::string base = "panel_" + slug(expr);
  out.write(base + "_values.csv", values.str(), "recovered values for " + expr, seed);
  out.write(base + "_policy.csv", arrows.str(), "greedy actions for " + expr, seed);
  out.write(base + "_extended.csv", extended.str(), "per-goal values for " + expr, seed);
  out.write(base + ".svg", render_svg(world, v, policy, expr), "heatmap and arrows for " + expr, seed);
}

}  // namespace

// --- maps and task specs ---------------------------------------------------

std::shared_ptr<const GridWorld> resolve_map(const std::string& spec) {
  if (spec == "four_rooms" || spec == "four_rooms_40") {
    return std::make_shared<const GridWorld>(load_grid(builtin_map(spec)));
  }
  return std::make_shared<const GridWorld>(load_grid_file(spec));
}

std::vector<std::string> default_base_names(const GridWorld& world) {
  if (world.num_goals() == 4) return {"T", "L"};
  std::vector<std::string> names;
  for (int j = 0; j < min_label_bits(world.num_goals()); ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Task parse_task_spec(const std::string& spec, const TaskAlgebra& alg) {
  const GridWorld& world = *alg.family()->world;
  if (spec.starts_with("goals=")) {
    std::vector<int> goals;
    std::stringstream ss(spec.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      goals.push_back(to_int("goals", item));
    }
    return alg.task(goals, spec);
  }
  const auto labeling = select_base_tasks(world, std::nullopt, default_base_names(world));
  return eval_task(parse(spec), labeling.bindings(alg), alg);
}

// --- config ----------------------------------------------------------------

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key == "map") map = v;
  else if (key == "forty_map") forty_map = v;
  else if (key == "out") out_dir = v;
  else if (key == "alpha") hp.alpha = to_double(key, v);
  else if (key == "gamma") hp.gamma = to_double(key, v);
  else if (key == "epsilon") hp.epsilon = to_double(key, v);
  else if (key == "episodes") hp.episodes = to_int(key, v);
  else if (key == "train_max_steps") hp.max_steps = to_int(key, v);
  else if (key == "seed") hp.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "sp") transition.slip_probability = to_double(key, v);
  else if (key == "absorbing") {
    if (v == "shared") transition.absorbing = AbsorbingMode::SharedAbsorbingSet;
    else if (v == "own") transition.absorbing = AbsorbingMode::TaskOwnGoalsOnly;
    else throw ValidationError("absorbing must be 'shared' or 'own', got '" + v + "'");
  } else if (key == "reward") {
    if (v == "sparse") reward_shape = RewardShape::Sparse;
    else if (v == "dense") reward_shape = RewardShape::Dense;
    else throw ValidationError("reward must be 'sparse' or 'dense', got '" + v + "'");
  } else if (key == "learned") learned = to_bool(key, v);
  else if (key == "eval_episodes") eval_episodes = to_int(key, v);
  else if (key == "max_steps") max_steps = to_int(key, v);
  else if (key == "seeds") num_seeds = to_int(key, v);
  else if (key == "scaling_tasks") scaling_tasks = to_int(key, v);
  else if (key == "convergence_gap") convergence_gap = to_double(key, v);
  else if (key == "check_every") check_every = to_int(key, v);
  else if (key == "max_episodes") max_episodes = to_int(key, v);
  else if (key == "relax_eval_episodes") relax_eval_episodes = to_int(key, v);
  else if (key == "forty_seeds") forty_seeds = to_int(key, v);
  else if (key == "workers") workers = to_int(key, v);
  else throw ValidationError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::dump() const {
  std::ostringstream ss;
  ss << "map = " << map << '\n'
     << "forty_map = " << forty_map << '\n'
     << "out = " << out_dir.string() << '\n'
     << "alpha = " << num(hp.alpha) << '\n'
     << "gamma = " << num(hp.gamma) << '\n'
     << "epsilon = " << num(hp.epsilon) << '\n'
     << "episodes = " << hp.episodes << '\n'
     << "train_max_steps = " << hp.max_steps << '\n'
     << "seed = " << hp.seed << '\n'
     << "sp = " << num(transition.slip_probability) << '\n'
     << "absorbing = " << to_string(transition.absorbing) << '\n'
     << "reward = " << to_string(reward_shape) << '\n'
     << "learned = " << (learned ? "true" : "false") << '\n'
     << "eval_episodes = " << eval_episodes << '\n'
     << "max_steps = " << max_steps << '\n'
     << "seeds = " << num_seeds << '\n'
     << "scaling_tasks = " << scaling_tasks << '\n'
     << "convergence_gap = " << num(convergence_gap) << '\n'
     << "check_every = " << check_every << '\n'
     << "max_episodes = " << max_episodes << '\n'
     << "relax_eval_episodes = " << relax_eval_episodes << '\n'
     << "forty_seeds = " << forty_seeds << '\n'
     << "workers = " << workers << '\n';
  return ss.str();
}

void ExperimentConfig::validate() const {
  hp.validate();
  transition.validate();
  if (eval_episodes < 1 || relax_eval_episodes < 1) throw ValidationError("evaluation episodes must be at least 1");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
  if (num_seeds < 1) throw ValidationError("seeds must be at least 1");
  if (scaling_tasks < 1) throw ValidationError("scaling_tasks must be at least 1");
  if (!(convergence_gap > 0.0)) throw ValidationError("convergence_gap must be positive");
  if (check_every < 1 || max_episodes < 1) throw ValidationError("check_every and max_episodes must be positive");
  if (forty_seeds < 0 || workers < 0) throw ValidationError("forty_seeds and workers must be non-negative");
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    base.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

// --- artifacts -------------------------------------------------------------

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void ArtifactWriter::write(const std::string& name, const std::string& content, const std::string& description,
                           std::uint64_t seed) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  entries_.push_back({name, description, seed});
}

void ArtifactWriter::finish() {
  std::ostringstream m;
  m << "file,description,seed\n";
  for (const auto& e : entries_) m << e.file.string() << ',' << csv_quote(e.description) << ',' << e.seed << '\n';
  std::ofstream out(dir_ / "manifest.csv", std::ios::binary | std::ios::trunc);
  out << m.str();
}

// --- evaluation helpers ----------------------------------------------------

Eigen::ArrayXd optimal_state_values(const Task& task, const TransitionConfig& cfg) {
  return state_values(standard_value_iteration(task, cfg));
}

Eigen::ArrayXd optimal_state_values(const Task& task, const TransitionConfig& cfg, int horizon) {
  const TransitionModel model(task.family->world, cfg);
  const int n = task.world().num_states();
  const RewardTable r = reward_table(task, cfg);
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(n);
  for (int k = 0; k < horizon; ++k) {
    Eigen::ArrayXd next(n);
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : kActions) {
        double q = r(s, index(a));
        if (!(a == Action::Stay && is_absorbing(task, cfg, s))) {
          for (const Outcome& o : model.outcomes(s, a)) q += o.probability * v(o.next);
        }
        best = std::max(best, q);
      }
      next(s) = best;
    }
    v.swap(next);
  }
  return v;
}

StartSweep sweep_starts(const ExtendedQTable& evf, const Task& task, const TransitionConfig& cfg,
                        const Eigen::ArrayXd& optimal, int max_steps, double tol) {
  const TransitionModel model(task.family->world, cfg);
  const auto policy = greedy_policy(evf);
  const PolicyFn fn = [&](int s, Rng&) { return policy[static_cast<std::size_t>(s)]; };
  StartSweep sweep;
  Rng rng(0);
  for (int s = 0; s < task.world().num_states(); ++s) {
    const auto r = rollout(model, task, s, fn, max_steps, rng);
    const double gap = std::abs(r.ret - optimal(s));
    sweep.max_abs_gap = std::max(sweep.max_abs_gap, gap);
    if (gap <= tol) ++sweep.optimal_starts;
    ++sweep.starts;
  }
  return sweep;
}

// --- four rooms ------------------------------------------------------------

FourRoomsReport run_four_rooms(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto world = resolve_map(cfg.map);
  const auto family = TaskFamily::make(world, cfg.reward_shape);
  const TaskAlgebra alg(family);
  const auto labeling = select_base_tasks(*world, std::nullopt, default_base_names(*world));
  const auto task_bindings = labeling.bindings(alg);
  const TransitionConfig& tr = cfg.transition;
  const double rbar = default_rbar_min(*family, tr);
  const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : default_max_steps(*world);
  const std::uint64_t seed = cfg.hp.seed;

  SolveOptions exact;
  exact.rbar_min = rbar;
  const EvfAlgebra<double> evf_alg(solve_or_learn(alg.universal(), tr, cfg, seed + 11, rbar),
                                   solve_or_learn(alg.empty(), tr, cfg, seed + 12, rbar));
  EvfBindings<double> evfs;
  for (std::size_t j = 0; j < labeling.names.size(); ++j) {
    const auto& name = labeling.names[j];
    evfs.emplace(name, solve_or_learn(task_bindings.at(name), tr, cfg, seed + j, rbar));
  }

  ArtifactWriter out(cfg.out_dir);
  FourRoomsReport report;
  auto run = [&](const Expr& e, std::uint64_t eval_seed) {
    const Task target = eval_task(e, task_bindings, alg);
    const ExtendedQTable composed = compose(e, evfs, evf_alg);
    return std::pair{composed, evaluate_composed(composed, target, tr, cfg.eval_episodes, max_steps, eval_seed,
                                                 to_string(e))};
  };

  const auto enumerated = enumerate_boolean_tasks(labeling.num_bits, labeling);
  std::ostringstream table;
  table << evaluation_header();
  for (std::size_t i = 0; i < enumerated.size(); ++i) {
    auto [composed, ev] = run(enumerated[i].expr, seed + 100 + i);
    table << evaluation_row(ev);
    report.tasks.push_back(std::move(ev));
  }
  out.write("four_rooms_tasks.csv", table.str(), "returns of all Boolean compositions", seed);

  if (labeling.num_bits == 2) {
    std::ostringstream panels;
    panels << evaluation_header();
    const std::vector<std::string> panel_exprs{"L", "T", "L | T", "L & T", "L ^ T", "~(L | T)"};
    for (std::size_t i = 0; i < panel_exprs.size(); ++i) {
      auto [composed, ev] = run(parse(panel_exprs[i]), seed + 200 + i);
      write_panel(out, *world, composed, panel_exprs[i], seed);
      panels << evaluation_row(ev);
      report.panels.push_back(std::move(ev));
    }
    out.write("four_rooms_panels.csv", panels.str(), "returns of the illustrated compositions", seed);
  }

  int optimal = 0;
  for (const auto& t : report.tasks) optimal += t.optimal ? 1 : 0;
  std::ostringstream summary;
  summary << "four-rooms: " << optimal << "/" << report.tasks.size() << " composed tasks optimal ("
          << (cfg.learned ? "learned" : "oracle") << " base EVFs, r_bar_min " << num(rbar) << ")\n";
  for (const auto& t : report.tasks) {
    summary << "  " << std::setw(40) << std::left << t.expr << " goals {" << goals_string(t.goals) << "} mean "
            << num(t.stats.mean) << " optimal " << num(t.optimal_mean) << (t.optimal ? "" : "  SUBOPTIMAL") << '\n';
  }
  report.summary = summary.str();
  out.write("summary.txt", report.summary, "human-readable summary", seed);
  out.finish();
  report.manifest = out.entries();
  return report;
}

// --- scaling ---------------------------------------------------------------

std::string boolean_task_count(int n) {
  if (n < 0 || n > 6) throw ValidationError("2^(2^n) is only tabulated for n <= 6");
  unsigned __int128 v = 1;
  v <<= (1U << n);
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s += static_cast<char>('0' + static_cast<int>(v % 10));
    v /= 10;
  }
  return {s.rbegin(), s.rend()};
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0.0) return 1.0;
  return (sxy * sxy) / (sxx * syy);
}

namespace {

struct LearnCost {
  std::int64_t samples = 0;
  bool converged = false;
};

LearnCost extended_cost(const Task& task, const TransitionConfig& tr, const ExperimentConfig& cfg,
                        const ExtendedQTable& oracle, std::uint64_t seed) {
  Hyperparams hp = cfg.hp;
  hp.seed = seed;
  hp.episodes = cfg.max_episodes;
  const GridWorld& world = task.world();
  StopRule<ExtendedQTable> stop{cfg.check_every, [&](const ExtendedQTable& q) {
                                  return extended_gap(q, oracle, world) <= cfg.convergence_gap;
                                }};
  const auto r = goal_q_learning(task, tr, hp, oracle.rbar_min(), &stop);
  return {r.samples, r.stopped_early};
}

LearnCost standard_cost(const Task& task, const TransitionConfig& tr, const ExperimentConfig& cfg,
                        const QTable& oracle, std::uint64_t seed) {
  Hyperparams hp = cfg.hp;
  hp.seed = seed;
  hp.episodes = cfg.max_episodes;
  StopRule<QTable> stop{cfg.check_every,
                        [&](const QTable& q) { return (q - oracle).abs().maxCoeff() <= cfg.convergence_gap; }};
  const auto r = standard_q_learning(task, tr, hp, &stop);
  return {r.samples, r.stopped_early};
}

std::vector<ScalingRow> cumulative_rows(const std::vector<std::vector<double>>& ext,
                                        const std::vector<std::vector<double>>& std_) {
  // ext[seed][i], std_[seed][i] are per-task costs.
  auto stats = [](const std::vector<std::vector<double>>& runs, std::size_t n) {
    std::vector<double> c;
    for (const auto& r : runs) {
      if (r.size() < n) continue;
      c.push_back(std::accumulate(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(n), 0.0));
    }
    if (c.empty()) return std::pair{0.0, 0.0};
    const double m = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    double ss = 0.0;
    for (double v : c) ss += (v - m) * (v - m);
    return std::pair{m, c.size() > 1 ? std::sqrt(ss / static_cast<double>(c.size() - 1)) : 0.0};
  };
  std::size_t max_n = 0;
  for (const auto& r : ext) max_n = std::max(max_n, r.size());
  for (const auto& r : std_) max_n = std::max(max_n, r.size());
  std::vector<ScalingRow> rows;
  for (std::size_t n = 1; n <= max_n; ++n) {
    ScalingRow row;
    row.n = static_cast<int>(n);
    std::tie(row.extended_mean, row.extended_sd) = stats(ext, n);
    std::tie(row.standard_mean, row.standard_sd) = stats(std_, n);
    rows.push_back(row);
  }
  return rows;
}

std::string samples_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream ss;
  ss << "n,extended_mean,extended_sd,standard_mean,standard_sd\n";
  for (const auto& r : rows) {
    ss << r.n << ',' << num(r.extended_mean) << ',' << num(r.extended_sd) << ',' << num(r.standard_mean) << ','
       << num(r.standard_sd) << '\n';
  }
  return ss.str();
}

}  // namespace

ScalingReport run_scaling(const ExperimentConfig& cfg) {
  cfg.validate();
  ScalingReport report;
  ArtifactWriter out(cfg.out_dir);
  const TransitionConfig& tr = cfg.transition;

  // (a) cumulative samples for n tasks, extended vs standard learner.
  const auto world = resolve_map(cfg.map);
  const auto family = TaskFamily::make(world, cfg.reward_shape);
  const TaskAlgebra alg(family);
  const double rbar = default_rbar_min(*family, tr);
  const int goals = world->num_goals();
  if (goals > 20) throw ValidationError("scaling task pool needs at most 20 goals");
  const std::uint64_t subsets = (std::uint64_t{1} << goals) - 2;  // nonempty, proper
  if (static_cast<std::uint64_t>(cfg.scaling_tasks) > subsets) {
    throw ValidationError("scaling_tasks exceeds the number of distinct nonempty proper goal subsets");
  }

  struct Oracle {
    Task task;
    ExtendedQTable evf;
    QTable q;
  };
  std::map<std::uint64_t, Oracle> oracles;
  SolveOptions exact;
  exact.rbar_min = rbar;
  auto mask_task = [&](std::uint64_t mask) {
    std::vector<int> gs;
    for (int g = 0; g < goals; ++g)
      if ((mask >> g) & 1U) gs.push_back(g);
    return alg.task(gs, "goals=" + goals_string(gs));
  };

  std::vector<std::vector<std::uint64_t>> chosen(static_cast<std::size_t>(cfg.num_seeds));
  for (int i = 0; i < cfg.num_seeds; ++i) {
    Rng rng(cfg.hp.seed + static_cast<std::uint64_t>(i));
    std::uniform_int_distribution<std::uint64_t> pick(1, subsets);
    std::set<std::uint64_t> seen;
    while (static_cast<int>(chosen[i].size()) < cfg.scaling_tasks) {
      const std::uint64_t m = pick(rng);
      if (seen.insert(m).second) chosen[i].push_back(m);
    }
    for (auto m : chosen[i]) {
      if (oracles.count(m)) continue;
      Task t = mask_task(m);
      oracles.emplace(m, Oracle{t, extended_value_iteration(t, tr, exact), standard_value_iteration(t, tr, exact)});
    }
  }

  struct SeedCosts {
    std::vector<double> ext, std_;
    int unconverged = 0;
  };
  const auto costs = parallel_map(cfg.num_seeds, cfg.workers, [&](int i) {
    SeedCosts c;
    const std::uint64_t base = (cfg.hp.seed + static_cast<std::uint64_t>(i)) * 1000;
    for (std::size_t j = 0; j < chosen[i].size(); ++j) {
      const Oracle& o = oracles.at(chosen[i][j]);
      const auto e = extended_cost(o.task, tr, cfg, o.evf, base + j);
      const auto s = standard_cost(o.task, tr, cfg, o.q, base + 500 + j);
      c.ext.push_back(static_cast<double>(e.samples));
      c.std_.push_back(static_cast<double>(s.samples));
      c.unconverged += (e.converged ? 0 : 1) + (s.converged ? 0 : 1);
    }
    return c;
  });
  std::vector<std::vector<double>> ext, std_;
  for (const auto& c : costs) {
    ext.push_back(c.ext);
    std_.push_back(c.std_);
    report.unconverged_runs += c.unconverged;
  }
  report.samples = cumulative_rows(ext, std_);
  std::vector<double> xs, ye, ys;
  report.extended_dominates = true;
  report.monotone = true;
  for (std::size_t k = 0; k < report.samples.size(); ++k) {
    const auto& r = report.samples[k];
    xs.push_back(r.n);
    ye.push_back(r.extended_mean);
    ys.push_back(r.standard_mean);
    if (r.extended_mean < r.standard_mean) report.extended_dominates = false;
    if (k > 0 && (r.extended_mean < report.samples[k - 1].extended_mean ||
                  r.standard_mean < report.samples[k - 1].standard_mean)) {
      report.monotone = false;
    }
  }
  report.extended_r2 = linear_r2(xs, ye);
  report.standard_r2 = linear_r2(xs, ys);
  out.write("scaling_samples.csv", samples_csv(report.samples),
            "cumulative samples to convergence, mean and sd over seeds", cfg.hp.seed);

  // (b) solvable-task counts.
  std::ostringstream counts;
  counts << "n,boolean_tasks,disjunction_tasks\n";
  for (int n = 1; n <= std::min(cfg.scaling_tasks, 6); ++n) {
    CountRow row{n, boolean_task_count(n), (std::uint64_t{1} << n) - 1};
    counts << n << ',' << row.boolean_tasks << ',' << row.disjunction_tasks << '\n';
    report.counts.push_back(row);
  }
  out.write("scaling_counts.csv", counts.str(), "tasks solvable from n base tasks", 0);
  if (goals == 4) {
    const auto labeling = select_base_tasks(*world, std::nullopt, default_base_names(*world));
    const auto bindings = labeling.bindings(alg);
    std::set<std::vector<int>> distinct;
    for (const auto& t : enumerate_boolean_tasks(2, labeling))
      distinct.insert(eval_task(t.expr, bindings, alg).desired.indices());
    report.enumerated_distinct_k2 = static_cast<int>(distinct.size());
  }

  // (c) 40-goal domain.
  {
    const auto world40 = resolve_map(cfg.forty_map);
    const auto family40 = TaskFamily::make(world40, RewardShape::Sparse);
    const TaskAlgebra alg40(family40);
    const TransitionConfig det{};
    const double rbar40 = default_rbar_min(*family40, det);
    SolveOptions exact40;
    exact40.rbar_min = rbar40;
    const auto labeling = select_base_tasks(*world40);
    const auto bindings = labeling.bindings(alg40);
    FortyGoalResult& forty = report.forty;
    forty.num_goals = world40->num_goals();
    forty.base_tasks = labeling.num_bits;

    const EvfAlgebra<double> bounds(extended_value_iteration(alg40.universal(), det, exact40),
                                    extended_value_iteration(alg40.empty(), det, exact40));
    EvfBindings<double> evfs;
    for (const auto& [name, task] : bindings) evfs.emplace(name, extended_value_iteration(task, det, exact40));
    const int max_steps = default_max_steps(*world40);

    std::ostringstream rows;
    rows << "goal,row,col,label,expr,optimal,max_abs_gap\n";
    for (int g = 0; g < forty.num_goals; ++g) {
      const Expr e = minterm(labeling.labels[g], labeling);
      const Task target = eval_task(e, bindings, alg40);
      const bool single = target.desired.count() == 1 && target.desired.contains(g);
      const auto sweep = sweep_starts(compose(e, evfs, bounds), target, det, optimal_state_values(target, det),
                                      max_steps);
      const bool ok = single && sweep.optimal_starts == sweep.starts;
      forty.optimal_minterms += ok ? 1 : 0;
      const Cell c = world40->cell(world40->goal_state(g));
      rows << g << ',' << c.row << ',' << c.col << ',' << labeling.labels[g] << ',' << csv_quote(to_string(e)) << ','
           << (ok ? "true" : "false") << ',' << num(sweep.max_abs_gap) << '\n';
    }
    forty.all_optimal = forty.optimal_minterms == forty.num_goals;
    out.write("forty_goal_minterms.csv", rows.str(), "single-goal minterm compositions on the 40-goal map", 0);

    if (cfg.forty_seeds > 0) {
      const auto base_tasks = labeling.tasks(alg40);
      std::vector<ExtendedQTable> base_oracles;
      for (const auto& t : base_tasks) base_oracles.push_back(extended_value_iteration(t, det, exact40));
      std::vector<QTable> single_oracles;
      std::vector<Task> singles;
      for (int g = 0; g < forty.num_goals; ++g) {
        const int one[] = {g};
        singles.push_back(alg40.task(one, "g" + std::to_string(g)));
        single_oracles.push_back(standard_value_iteration(singles.back(), det, exact40));
      }
      const auto runs = parallel_map(cfg.forty_seeds, cfg.workers, [&](int i) {
        SeedCosts c;
        const std::uint64_t base = (cfg.hp.seed + 7919 + static_cast<std::uint64_t>(i)) * 1000;
        for (std::size_t j = 0; j < base_tasks.size(); ++j) {
          const auto e = extended_cost(base_tasks[j], det, cfg, base_oracles[j], base + j);
          c.ext.push_back(static_cast<double>(e.samples));
          c.unconverged += e.converged ? 0 : 1;
        }
        for (std::size_t j = 0; j < singles.size(); ++j) {
          const auto s = standard_cost(singles[j], det, cfg, single_oracles[j], base + 500 + j);
          c.std_.push_back(static_cast<double>(s.samples));
          c.unconverged += s.converged ? 0 : 1;
        }
        return c;
      });
      std::vector<std::vector<double>> e40, s40;
      for (const auto& c : runs) {
        e40.push_back(c.ext);
        s40.push_back(c.std_);
        report.unconverged_runs += c.unconverged;
      }
      forty.samples = cumulative_rows(e40, s40);
      out.write("forty_goal_samples.csv", samples_csv(forty.samples),
                "cumulative samples on the 40-goal map: n base tasks (extended) vs n single-goal tasks (standard)",
                cfg.hp.seed);
    }
  }

  std::ostringstream summary;
  summary << "scaling: extended R^2 " << num(report.extended_r2) << ", standard R^2 " << num(report.standard_r2)
          << ", extended >= standard at every n: " << (report.extended_dominates ? "yes" : "no")
          << ", unconverged runs " << report.unconverged_runs << '\n';
  for (const auto& r : report.samples) {
    summary << "  n=" << r.n << " extended " << num(r.extended_mean) << " +- " << num(r.extended_sd) << ", standard "
            << num(r.standard_mean) << " +- " << num(r.standard_sd) << '\n';
  }
  for (const auto& c : report.counts) {
    summary << "  n=" << c.n << ": " << c.boolean_tasks << " Boolean vs " << c.disjunction_tasks
            << " disjunction-only tasks\n";
  }
  if (report.enumerated_distinct_k2 > 0) {
    summary << "  K=2 enumeration yields " << report.enumerated_distinct_k2 << " distinct tasks\n";
  }
  summary << "  40-goal map: " << report.forty.num_goals << " goals, " << report.forty.base_tasks
          << " base tasks by minimal distinct labels"
          << " (ceil(log2 40) = 6; a count of 7 for this map is not reproduced), " << report.forty.optimal_minterms << "/"
          << report.forty.num_goals << " single-goal minterms optimal\n";
  report.summary = summary.str();
  out.write("summary.txt", report.summary, "human-readable summary", cfg.hp.seed);
  out.finish();
  report.manifest = out.entries();
  return report;
}

// --- relaxations -----------------------------------------------------------

std::vector<RelaxationVariant> relaxation_variants() {
  using A = AbsorbingMode;
  using R = RewardShape;
  return {
      {"sparse_same", R::Sparse, A::SharedAbsorbingSet, 0.0, "absorbing_reward"},
      {"sparse_different", R::Sparse, A::TaskOwnGoalsOnly, 0.0, "absorbing_reward"},
      {"dense_same", R::Dense, A::SharedAbsorbingSet, 0.0, "absorbing_reward"},
      {"dense_different", R::Dense, A::TaskOwnGoalsOnly, 0.0, "absorbing_reward"},
      {"slip_0.1", R::Dense, A::TaskOwnGoalsOnly, 0.1, "slip"},
      {"slip_0.3", R::Dense, A::TaskOwnGoalsOnly, 0.3, "slip"},
  };
}

RelaxationReport run_relaxations(const ExperimentConfig& cfg) {
  cfg.validate();
  RelaxationReport report;
  ArtifactWriter out(cfg.out_dir);
  const auto world = resolve_map(cfg.map);
  const auto sparse = TaskFamily::make(world, RewardShape::Sparse);
  const TaskAlgebra sparse_alg(sparse);
  const auto labeling = select_base_tasks(*world, std::nullopt, default_base_names(*world));
  const auto sparse_bindings = labeling.bindings(sparse_alg);
  const auto enumerated = enumerate_boolean_tasks(labeling.num_bits, labeling);
  const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : default_max_steps(*world);

  std::map<std::string, std::ostringstream> figures;
  for (const auto& variant : relaxation_variants()) {
    const TransitionConfig tr{variant.slip_probability, variant.absorbing};
    const auto family = TaskFamily::make(world, variant.reward_shape);
    const TaskAlgebra alg(family);
    const auto bindings = labeling.bindings(alg);
    const double rbar = default_rbar_min(*family, tr);
    const std::uint64_t seed = cfg.hp.seed;

    SolveOptions exact;
    exact.rbar_min = rbar;
    const EvfAlgebra<double> bounds(solve_or_learn(alg.universal(), tr, cfg, seed + 11, rbar),
                                    solve_or_learn(alg.empty(), tr, cfg, seed + 12, rbar));
    EvfBindings<double> evfs;
    for (std::size_t j = 0; j < labeling.names.size(); ++j) {
      evfs.emplace(labeling.names[j], solve_or_learn(bindings.at(labeling.names[j]), tr, cfg, seed + j, rbar));
    }

    RelaxationResult result{variant, {}};
    auto& fig = figures[variant.figure];
    if (fig.tellp() == 0) fig << "variant,reward,absorbing,sp,task," << evaluation_header();
    for (std::size_t i = 0; i < enumerated.size(); ++i) {
      const Expr& e = enumerated[i].expr;
      const Task target = eval_task(e, sparse_bindings, sparse_alg);
      auto ev = evaluate_composed(compose(e, evfs, bounds), target, tr, cfg.relax_eval_episodes, max_steps,
                                  seed + 1000 + i, to_string(e));
      fig << variant.name << ',' << to_string(variant.reward_shape) << ',' << to_string(variant.absorbing) << ','
          << num(variant.slip_probability) << ',' << i << ',' << evaluation_row(ev);
      result.tasks.push_back(std::move(ev));
    }
    report.variants.push_back(std::move(result));
  }
  for (auto& [name, content] : figures) {
    out.write("relaxations_" + name + ".csv", content.str(),
              "box-plot data of composed-policy returns (" + name + ")", cfg.hp.seed);
  }

  report.sparse_same_optimal = true;
  std::ostringstream summary;
  summary << "relaxations (" << (cfg.learned ? "learned" : "oracle") << " base EVFs, evaluated on sparse rewards):\n";
  for (const auto& v : report.variants) {
    double worst = 0.0;
    int optimal = 0;
    for (const auto& t : v.tasks) {
      worst = std::max(worst, t.gap);
      optimal += t.optimal ? 1 : 0;
    }
    if (v.variant.name == "sparse_same") {
      for (const auto& t : v.tasks)
        if (std::abs(t.gap) > 1e-9 || !t.optimal) report.sparse_same_optimal = false;
    }
    summary << "  " << std::setw(18) << std::left << v.variant.name << " optimal " << optimal << "/" << v.tasks.size()
            << ", largest mean-return gap " << num(worst) << '\n';
  }
  report.summary = summary.str();
  out.write("summary.txt", report.summary, "human-readable summary", cfg.hp.seed);
  out.finish();
  report.manifest = out.entries();
  return report;
}

}  // namespace bta
