#include "bta/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bta {

void Hyperparams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
  if (episodes < 1) throw ValidationError("episode budget must be at least 1");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
}

namespace {

Action random_action(Rng& rng) {
  std::uniform_int_distribution<int> pick(0, kNumActions - 1);
  return static_cast<Action>(pick(rng));
}

void check_finite(double v, int state, int g, Action a) {
  if (!std::isfinite(v)) {
    throw NumericalError("non-finite update at state " + std::to_string(state) + ", goal " + std::to_string(g) +
                         ", action " + std::string(action_name(a)));
  }
}

}  // namespace

TrainResult goal_q_learning(const Task& task, const TransitionConfig& cfg, const Hyperparams& hp,
                            std::optional<double> rbar_min, const StopRule<ExtendedQTable>* stop) {
  hp.validate();
  const GridWorld& world = task.world();
  const double rbar = rbar_min.value_or(default_rbar_min(*task.family, cfg));
  const TransitionModel model(task.family->world, cfg);
  const int max_steps = hp.max_steps > 0 ? hp.max_steps : default_max_steps(world);

  TrainResult result{ExtendedQTable(world.num_states(), world.goal_cells(), rbar), 0, 0, {}, false};
  ExtendedQTable& q = result.evf;
  std::vector<int>& known = result.goals_discovered;
  std::vector<bool> is_known(static_cast<std::size_t>(world.num_goals()), false);

  Rng rng(hp.seed);
  std::uniform_int_distribution<int> start_dist(0, world.num_states() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto behaviour = [&](int s) {
    if (known.empty() || unit(rng) < hp.epsilon) return random_action(rng);
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < kNumActions; ++a) {
      for (int g : known) {
        if (q(s, g, a) > best_v) {
          best_v = q(s, g, a);
          best = a;
        }
      }
    }
    return static_cast<Action>(best);
  };

  for (int ep = 0; ep < hp.episodes; ++ep) {
    int s = start_dist(rng);
    bool terminal = false;
    for (int t = 0; t < max_steps && !terminal; ++t) {
      // With no known goal the epsilon draw is skipped, matching a pure
      // uniform-random phase.
      const Action a = behaviour(s);
      const StepResult step_result = step(model, task, s, a, rng);
      ++result.samples;
      terminal = step_result.terminal;
      const int next = step_result.next;
      for (int g : known) {
        double target;
        if (terminal) {
          target = (world.goal_index(next) == g) ? step_result.reward : rbar;
        } else {
          const auto slice = q.goal_slice(g);
          target = step_result.reward + hp.gamma * slice.row(next).maxCoeff();
        }
        double& entry = q(s, g, a);
        entry += hp.alpha * (target - entry);
        check_finite(entry, s, g, a);
      }
      s = next;
    }
    if (terminal) {
      const int g = world.goal_index(s);
      if (g >= 0 && !is_known[static_cast<std::size_t>(g)]) {
        is_known[static_cast<std::size_t>(g)] = true;
        known.push_back(g);
      }
    }
    result.episodes = ep + 1;
    if (stop && stop->done && (ep + 1) % stop->check_every == 0 && stop->done(q)) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

StandardTrainResult standard_q_learning(const Task& task, const TransitionConfig& cfg, const Hyperparams& hp,
                                        const StopRule<QTable>* stop) {
  hp.validate();
  const GridWorld& world = task.world();
  const TransitionModel model(task.family->world, cfg);
  const int max_steps = hp.max_steps > 0 ? hp.max_steps : default_max_steps(world);

  StandardTrainResult result{QTable::Zero(world.num_states(), kNumActions), 0, 0, false};
  QTable& q = result.q;
  Rng rng(hp.seed);
  std::uniform_int_distribution<int> start_dist(0, world.num_states() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int ep = 0; ep < hp.episodes; ++ep) {
    int s = start_dist(rng);
    bool terminal = false;
    for (int t = 0; t < max_steps && !terminal; ++t) {
      const Action a = unit(rng) < hp.epsilon ? random_action(rng) : argmax_action(q.row(s));
      const StepResult step_result = step(model, task, s, a, rng);
      ++result.samples;
      terminal = step_result.terminal;
      const double target =
          terminal ? step_result.reward : step_result.reward + hp.gamma * q.row(step_result.next).maxCoeff();
      double& entry = q(s, index(a));
      entry += hp.alpha * (target - entry);
      check_finite(entry, s, -1, a);
      s = step_result.next;
    }
    result.episodes = ep + 1;
    if (stop && stop->done && (ep + 1) % stop->check_every == 0 && stop->done(q)) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

namespace {

/// Value iteration on one MDP given its reward table and terminal mask.
/// Returns the converged Q table.
QTable solve_mdp(const TransitionModel& model, const QTable& rewards, const std::vector<bool>& terminal_stay,
                 double floor, const SolveOptions& opts) {
  const int n = model.world().num_states();
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(n);
  QTable q(n, kNumActions);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    for (int s = 0; s < n; ++s) {
      for (Action a : kActions) {
        double value = rewards(s, index(a));
        if (!(a == Action::Stay && terminal_stay[static_cast<std::size_t>(s)])) {
          for (const auto& o : model.outcomes(s, a)) value += o.probability * v(o.next);
        }
        q(s, index(a)) = value;
      }
    }
    const Eigen::ArrayXd next = q.rowwise().maxCoeff().max(floor);
    const double change = (next - v).abs().maxCoeff();
    v = next;
    if (change < opts.tol) return q;
  }
  throw NumericalError("value iteration did not converge within " + std::to_string(opts.max_iterations) +
                       " iterations");
}

std::vector<bool> terminal_mask(const Task& task, const TransitionConfig& cfg) {
  std::vector<bool> mask(static_cast<std::size_t>(task.world().num_states()));
  for (int s = 0; s < task.world().num_states(); ++s) mask[static_cast<std::size_t>(s)] = is_absorbing(task, cfg, s);
  return mask;
}

}  // namespace

ExtendedQTable extended_value_iteration(const Task& task, const TransitionConfig& cfg, const SolveOptions& opts) {
  const GridWorld& world = task.world();
  const int d = std::max(1, diameter(world, cfg));
  const double rbar = opts.rbar_min.value_or(compute_rbar_min(*task.family, d));
  const double floor = rbar * d;
  const TransitionModel model(task.family->world, cfg);
  const auto mask = terminal_mask(task, cfg);

  ExtendedQTable evf(world.num_states(), world.goal_cells(), rbar);
  QTable rewards(world.num_states(), kNumActions);
  for (int g = 0; g < world.num_goals(); ++g) {
    for (int s = 0; s < world.num_states(); ++s)
      for (Action a : kActions) rewards(s, index(a)) = extended_reward(task, cfg, s, g, a, rbar);
    evf.goal_slice(g) = solve_mdp(model, rewards, mask, floor, opts);
  }
  return evf;
}

QTable standard_value_iteration(const Task& task, const TransitionConfig& cfg, const SolveOptions& opts) {
  const GridWorld& world = task.world();
  const int d = std::max(1, diameter(world, cfg));
  const double rbar = opts.rbar_min.value_or(compute_rbar_min(*task.family, d));
  const TransitionModel model(task.family->world, cfg);
  QTable rewards(world.num_states(), kNumActions);
  for (int s = 0; s < world.num_states(); ++s)
    for (Action a : kActions) rewards(s, index(a)) = reward(task, cfg, s, a);
  return solve_mdp(model, rewards, terminal_mask(task, cfg), rbar * d, opts);
}

Eigen::ArrayXd state_values(const QTable& q) { return q.rowwise().maxCoeff(); }

double extended_gap(const ExtendedQTable& lhs, const ExtendedQTable& rhs, const GridWorld& world,
                    const std::vector<int>& goals) {
  require_same_shape(lhs, rhs);
  std::vector<int> gs = goals;
  if (gs.empty()) {
    for (int g = 0; g < world.num_goals(); ++g) gs.push_back(g);
  }
  double gap = 0.0;
  for (int g : gs) {
    const auto dist = bfs_distances(world, world.goal_state(g));
    const auto diff = (lhs.goal_slice(g) - rhs.goal_slice(g)).abs().eval();
    for (int s = 0; s < world.num_states(); ++s) {
      if (dist[static_cast<std::size_t>(s)] < 0) continue;
      gap = std::max(gap, diff.row(s).maxCoeff());
    }
  }
  return gap;
}

}  // namespace bta
