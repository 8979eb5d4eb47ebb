#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bta/evf.hpp"

namespace bta {

/// Tabular learning settings. Defaults: alpha 0.5, epsilon 0.1, undiscounted,
/// zero-initialised tables, starts uniform over open cells, episodes capped
/// at 4 * |open cells| steps.
struct Hyperparams {
  double alpha = 0.5;
  double gamma = 1.0;
  double epsilon = 0.1;
  int episodes = 500000;
  int max_steps = 0;  // 0 selects default_max_steps(world)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Optional early stop, polled every `check_every` episodes.
template <typename Table>
struct StopRule {
  int check_every = 10;
  std::function<bool(const Table&)> done;
};

struct TrainResult {
  ExtendedQTable evf;
  std::int64_t samples = 0;
  int episodes = 0;
  std::vector<int> goals_discovered;  // goal indices in discovery order
  bool stopped_early = false;
};

/// Goal-oriented Q-learning. Tracks the goals reached so far and, on every
/// transition, updates Q(s, g, a) for each known goal g with TD target
///   r_bar_min              if s' is absorbing and s' != g,
///   r                      if s' is absorbing and s' == g,
///   r + gamma max_b Q(s', g, b)  otherwise.
/// Actions are uniform while no goal is known, then epsilon-greedy on
/// max_g Q(s, g, .).
TrainResult goal_q_learning(const Task& task, const TransitionConfig& cfg, const Hyperparams& hp,
                            std::optional<double> rbar_min = std::nullopt,
                            const StopRule<ExtendedQTable>* stop = nullptr);

struct StandardTrainResult {
  QTable q;
  std::int64_t samples = 0;
  int episodes = 0;
  bool stopped_early = false;
};

/// Textbook epsilon-greedy tabular Q-learning on the task's own reward.
StandardTrainResult standard_q_learning(const Task& task, const TransitionConfig& cfg, const Hyperparams& hp,
                                        const StopRule<QTable>* stop = nullptr);

struct SolveOptions {
  double tol = 1e-12;
  int max_iterations = 1'000'000;
  std::optional<double> rbar_min;  // default_rbar_min when unset
};

/// Exact EVF by value iteration on each goal's MDP (reward r_bar(., g, .)).
/// Absorbing transitions bootstrap with 0. State values are floored at
/// r_bar_min * D so slices with no reachable absorbing cell stay finite.
ExtendedQTable extended_value_iteration(const Task& task, const TransitionConfig& cfg,
                                        const SolveOptions& opts = {});

/// Optimal Q of the task's standard reward by value iteration; same floor.
QTable standard_value_iteration(const Task& task, const TransitionConfig& cfg, const SolveOptions& opts = {});

/// State values of a Q table: V(s) = max_a Q(s, a).
Eigen::ArrayXd state_values(const QTable& q);

/// Largest |lhs - rhs| over (s, g, a) with g in `goals` and g reachable
/// from s. An empty `goals` means every goal.
double extended_gap(const ExtendedQTable& lhs, const ExtendedQTable& rhs, const GridWorld& world,
                    const std::vector<int>& goals = {});

}  // namespace bta
