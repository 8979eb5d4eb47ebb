// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace bta;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %d %s  %s: %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

double table_gap(const ExtendedQTable& a, const ExtendedQTable& b) {
  return (a.values() - b.values()).abs().maxCoeff();
}

struct Fixture {
  std::shared_ptr<const TaskFamily> family = test::sparse_family();
  TaskAlgebra alg{family};
  EvfAlgebra<double> bounds{extended_value_iteration(alg.universal(), {}), extended_value_iteration(alg.empty(), {})};
  GoalLabeling labeling = select_base_tasks(*family->world, std::nullopt, {"T", "L"});
  TaskBindings tasks = labeling.bindings(alg);
};

Outcome axioms(const Fixture& f) {
  Rng rng(1001);
  int task_checks = 0, task_failures = 0;
  double evf_worst = 0.0;
  const Task& U = f.alg.universal();
  const Task& E = f.alg.empty();
  const auto& QU = f.bounds.universal();
  const auto& QE = f.bounds.empty();
  auto same = [&](const Task& x, const Task& y) {
    ++task_checks;
    if (!(x.desired == y.desired && (reward_table(x) == reward_table(y)).all())) ++task_failures;
  };
  auto close = [&](const ExtendedQTable& x, const ExtendedQTable& y) { evf_worst = std::max(evf_worst, table_gap(x, y)); };
  for (int i = 0; i < 100; ++i) {
    const Task a = f.alg.task(test::random_goal_set(4, rng));
    const Task b = f.alg.task(test::random_goal_set(4, rng));
    const Task c = f.alg.task(test::random_goal_set(4, rng));
    auto OR = [&](const Task& x, const Task& y) { return f.alg.disjoin(x, y); };
    auto AND = [&](const Task& x, const Task& y) { return f.alg.conjoin(x, y); };
    auto NOT = [&](const Task& x) { return f.alg.negate(x); };
    same(OR(a, a), a), same(AND(a, a), a);
    same(OR(a, b), OR(b, a)), same(AND(a, b), AND(b, a));
    same(OR(a, OR(b, c)), OR(OR(a, b), c)), same(AND(a, AND(b, c)), AND(AND(a, b), c));
    same(OR(a, AND(a, b)), a), same(AND(a, OR(a, b)), a);
    same(OR(a, AND(b, c)), AND(OR(a, b), OR(a, c))), same(AND(a, OR(b, c)), OR(AND(a, b), AND(a, c)));
    same(OR(a, E), a), same(AND(a, U), a);
    same(OR(a, NOT(a)), U), same(AND(a, NOT(a)), E);

    const auto qa = extended_value_iteration(a, {});
    const auto qb = extended_value_iteration(b, {});
    const auto qc = extended_value_iteration(c, {});
    auto VOR = [](const ExtendedQTable& x, const ExtendedQTable& y) { return evf_or(x, y); };
    auto VAND = [](const ExtendedQTable& x, const ExtendedQTable& y) { return evf_and(x, y); };
    auto VNOT = [&](const ExtendedQTable& x) { return f.bounds.negate(x); };
    close(VOR(qa, qa), qa), close(VAND(qa, qa), qa);
    close(VOR(qa, qb), VOR(qb, qa)), close(VAND(qa, qb), VAND(qb, qa));
    close(VOR(qa, VOR(qb, qc)), VOR(VOR(qa, qb), qc)), close(VAND(qa, VAND(qb, qc)), VAND(VAND(qa, qb), qc));
    close(VOR(qa, VAND(qa, qb)), qa), close(VAND(qa, VOR(qa, qb)), qa);
    close(VOR(qa, VAND(qb, qc)), VAND(VOR(qa, qb), VOR(qa, qc)));
    close(VAND(qa, VOR(qb, qc)), VOR(VAND(qa, qb), VAND(qa, qc)));
    close(VOR(qa, QE), qa), close(VAND(qa, QU), qa);
    close(VOR(qa, VNOT(qa)), QU), close(VAND(qa, VNOT(qa)), QE);
  }
  return {task_failures == 0 && evf_worst <= 1e-9,
          std::to_string(task_checks - task_failures) + "/" + std::to_string(task_checks) +
              " task identities exact, EVF max deviation " + fmt(evf_worst)};
}

Outcome homomorphism(const Fixture& f) {
  EvfBindings<double> evfs;
  for (const auto& [name, t] : f.tasks) evfs.emplace(name, extended_value_iteration(t, {}));
  double worst2 = 0.0;
  int count2 = 0;
  for (const auto& e : enumerate_boolean_tasks(2, f.labeling)) {
    worst2 = std::max(worst2, table_gap(compose(e.expr, evfs, f.bounds),
                                        extended_value_iteration(eval_task(e.expr, f.tasks, f.alg), {})));
    ++count2;
  }
  Rng rng(2002);
  TaskBindings t3;
  EvfBindings<double> e3;
  for (const char* name : {"A", "B", "C"}) {
    t3.emplace(name, f.alg.task(test::random_goal_set(4, rng), name));
    e3.emplace(name, extended_value_iteration(t3.at(name), {}));
  }
  double worst3 = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Expr e = test::random_expr({"A", "B", "C"}, 4, rng);
    worst3 = std::max(worst3, table_gap(compose(e, e3, f.bounds), extended_value_iteration(eval_task(e, t3, f.alg), {})));
  }
  return {count2 == 16 && worst2 <= 1e-9 && worst3 <= 1e-9,
          std::to_string(count2) + " K=2 expressions max |d| " + fmt(worst2) + ", 50 K=3 expressions max |d| " +
              fmt(worst3)};
}

Outcome zero_shot(const Fixture& f) {
  const auto& world = *f.family->world;
  const test::TextBfs bfs(std::string(builtin_map("four_rooms")));
  EvfBindings<double> evfs;
  for (const auto& [name, t] : f.tasks) evfs.emplace(name, extended_value_iteration(t, {}));
  const TransitionModel model(f.family->world, {});
  const int max_steps = default_max_steps(world);
  int optimal_tasks = 0, total_starts = 0, optimal_starts = 0;
  double worst = 0.0;
  for (const auto& e : enumerate_boolean_tasks(2, f.labeling)) {
    const Task target = eval_task(e.expr, f.tasks, f.alg);
    const auto policy = greedy_policy(compose(e.expr, evfs, f.bounds));
    std::vector<Cell> desired;
    for (int g : target.desired.indices()) desired.push_back(world.goal_cells()[static_cast<std::size_t>(g)]);
    bool all = true;
    for (int s = 0; s < world.num_states(); ++s) {
      const Cell c = world.cell(s);
      // Empty task: the best a policy can do is stop at the nearest goal.
      const double expected = desired.empty() ? -0.1 * (bfs.nearest(c.row, c.col, world.goal_cells()) + 1)
                                              : 2.0 - 0.1 * bfs.nearest(c.row, c.col, desired);
      Rng rng(0);
      const auto r = rollout(model, target, s,
                             [&](int st, Rng&) { return policy[static_cast<std::size_t>(st)]; }, max_steps, rng);
      const double gap = std::abs(r.ret - expected);
      worst = std::max(worst, gap);
      ++total_starts;
      if (gap <= 1e-9) ++optimal_starts;
      else all = false;
    }
    optimal_tasks += all ? 1 : 0;
  }
  return {optimal_tasks == 16, std::to_string(optimal_tasks) + "/16 tasks, " + std::to_string(optimal_starts) + "/" +
                                   std::to_string(total_starts) + " starts at the BFS return, max |d| " + fmt(worst)};
}

Outcome lemmas(const Fixture& f) {
  const auto& world = *f.family->world;
  Rng rng(4004);
  std::vector<Task> tasks{f.alg.universal(), f.alg.empty()};
  for (int i = 0; i < 8; ++i) tasks.push_back(f.alg.task(test::random_goal_set(4, rng)));
  std::vector<ExtendedQTable> evfs;
  double recover_worst = 0.0;
  for (const auto& t : tasks) {
    evfs.push_back(extended_value_iteration(t, {}));
    recover_worst = std::max(recover_worst, (recover_q(evfs.back()) - standard_value_iteration(t, {})).abs().maxCoeff());
  }
  auto argmax = [](const ExtendedQTable& q, int s, int g) {
    double best = q(s, g, 0);
    for (int a = 1; a < kNumActions; ++a) best = std::max(best, q(s, g, a));
    std::set<int> out;
    for (int a = 0; a < kNumActions; ++a)
      if (q(s, g, a) >= best - 1e-9) out.insert(a);
    return out;
  };
  int pairs = 0, mismatches = 0;
  for (int s = 0; s < world.num_states(); ++s) {
    if (world.goal_index(s) >= 0) continue;
    for (int g = 0; g < world.num_goals(); ++g) {
      if (bfs_distances(world, s)[static_cast<std::size_t>(world.goal_state(g))] < 0) continue;
      const auto ref = argmax(evfs[0], s, g);
      for (std::size_t i = 1; i < evfs.size(); ++i) {
        ++pairs;
        if (argmax(evfs[i], s, g) != ref) ++mismatches;
      }
    }
  }
  double decomposition_worst = 0.0;
  std::uniform_int_distribution<int> ps(0, world.num_states() - 1), pg(0, world.num_goals() - 1),
      pa(0, kNumActions - 1), pt(0, static_cast<int>(tasks.size()) - 1);
  for (int i = 0; i < 100; ++i) {
    const int t = pt(rng);
    const auto w = decomposition_check(evfs[static_cast<std::size_t>(t)], tasks[static_cast<std::size_t>(t)], {},
                                       ps(rng), pg(rng), static_cast<Action>(pa(rng)));
    decomposition_worst = std::max(decomposition_worst, std::abs(w.g_star + w.boundary_reward - w.table_value));
  }
  return {recover_worst <= 1e-9 && mismatches == 0 && decomposition_worst <= 1e-9,
          "recovered Q max |d| " + fmt(recover_worst) + "; argmax sets equal on " +
              std::to_string(pairs - mismatches) + "/" + std::to_string(pairs) + " comparisons; decomposition max |d| " +
              fmt(decomposition_worst)};
}

Outcome counts(const Fixture& f) {
  const std::pair<std::string, std::uint64_t> expected[] = {{"4", 1}, {"16", 3}, {"256", 7}};
  bool ok = true;
  std::string detail;
  for (int n = 1; n <= 3; ++n) {
    const std::string full = boolean_task_count(n);
    const std::uint64_t disj = (std::uint64_t{1} << n) - 1;
    ok = ok && full == expected[n - 1].first && disj == expected[n - 1].second;
    detail += "n=" + std::to_string(n) + " (" + full + " vs " + std::to_string(disj) + ") ";
  }
  std::set<std::vector<int>> distinct;
  for (const auto& e : enumerate_boolean_tasks(2, f.labeling))
    distinct.insert(eval_task(e.expr, f.tasks, f.alg).desired.indices());
  ok = ok && distinct.size() == 16;
  return {ok, detail + "; K=2 enumeration gives " + std::to_string(distinct.size()) + " distinct tasks"};
}

Outcome learned(const Fixture& f, const fs::path& out) {
  const auto& world = *f.family->world;
  ExperimentConfig cfg;
  cfg.learned = true;
  cfg.out_dir = out / "four_rooms_learned";
  std::string detail;
  bool converged = true;
  // Same seeds as the driver below: base task j trains with seed + j.
  for (std::size_t j = 0; j < f.labeling.names.size(); ++j) {
    Hyperparams hp = cfg.hp;
    hp.seed = cfg.hp.seed + j;
    const Task& t = f.tasks.at(f.labeling.names[j]);
    const auto r = goal_q_learning(t, {}, hp);
    const double gap = extended_gap(r.evf, extended_value_iteration(t, {}), world, r.goals_discovered);
    converged = converged && gap <= 0.05 && static_cast<int>(r.goals_discovered.size()) == world.num_goals();
    detail += f.labeling.names[j] + " gap " + fmt(gap) + " after " + std::to_string(r.samples) + " samples; ";
  }
  const auto report = run_four_rooms(cfg);
  int optimal = 0;
  for (const auto& t : report.tasks) optimal += t.optimal ? 1 : 0;
  return {converged && optimal >= 15,
          detail + std::to_string(optimal) + "/16 composed tasks optimal over " + std::to_string(cfg.eval_episodes) +
              " episodes (budget " + std::to_string(cfg.hp.episodes) + " episodes)"};
}

Outcome scaling(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.out_dir = out / "scaling";
  const auto r = run_scaling(cfg);
  const bool ok = r.extended_r2 >= 0.95 && r.standard_r2 >= 0.95 && r.extended_dominates &&
                  r.forty.base_tasks == 6 && r.forty.all_optimal && r.unconverged_runs == 0;
  return {ok, "R^2 extended " + fmt(r.extended_r2) + ", standard " + fmt(r.standard_r2) + ", extended >= standard " +
                  (r.extended_dominates ? "at every n" : "NOT at every n") + " over " + std::to_string(cfg.num_seeds) +
                  " seeds; 40-goal map " + std::to_string(r.forty.optimal_minterms) + "/" +
                  std::to_string(r.forty.num_goals) + " minterms optimal with " + std::to_string(r.forty.base_tasks) +
                  " base tasks"};
}

Outcome relaxations(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.out_dir = out / "relaxations";
  cfg.learned = true;
  const auto r = run_relaxations(cfg);
  auto rows = [&](const std::string& file) {
    std::ifstream in(cfg.out_dir / file);
    int n = -1;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  };
  const int absorbing_rows = rows("relaxations_absorbing_reward.csv");
  const int slip_rows = rows("relaxations_slip.csv");
  std::string gaps;
  for (const auto& v : r.variants) {
    double worst = 0.0;
    for (const auto& t : v.tasks) worst = std::max(worst, t.gap);
    gaps += (gaps.empty() ? "" : "; ") + v.variant.name + " " + fmt(worst);
  }
  return {r.sparse_same_optimal && absorbing_rows == 4 * 16 && slip_rows == 2 * 16,
          std::string("sparse/same ") + (r.sparse_same_optimal ? "optimal on all 16" : "NOT optimal") +
              "; box-plot rows " + std::to_string(absorbing_rows) + " + " + std::to_string(slip_rows) +
              "; largest mean gaps: " + gaps};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "bta_acceptance";
  fs::create_directories(out);
  const Fixture f;
  criterion(1, "Boolean axioms", [&] { return axioms(f); });
  criterion(2, "homomorphism", [&] { return homomorphism(f); });
  criterion(3, "zero-shot optimality", [&] { return zero_shot(f); });
  criterion(4, "recovery, greedy actions, decomposition", [&] { return lemmas(f); });
  criterion(5, "task counts", [&] { return counts(f); });
  criterion(6, "learned EVFs", [&] { return learned(f, out); });
  criterion(7, "scaling", [&] { return scaling(out); });
  criterion(8, "relaxations", [&] { return relaxations(out); });
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
