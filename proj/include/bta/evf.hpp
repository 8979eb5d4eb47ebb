#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "bta/grid_world.hpp"

namespace bta {

/// Per-state action values, states by rows.
template <typename Scalar>
using ActionTable = Eigen::Array<Scalar, Eigen::Dynamic, kNumActions, Eigen::RowMajor>;
using QTable = ActionTable<double>;

/// Dense extended action-value table Q(s, g, a). Storage is one row per
/// state with goal-major columns, so the underlying buffer is in (s, g, a)
/// row-major order.
template <typename Scalar>
class ExtendedQ {
 public:
  using Table = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ExtendedQ() = default;
  ExtendedQ(int num_states, std::vector<Cell> goals, Scalar rbar_min, Scalar init = Scalar(0))
      : values_(Table::Constant(num_states, static_cast<Eigen::Index>(goals.size()) * kNumActions, init)),
        goals_(std::move(goals)),
        rbar_min_(rbar_min) {}
  ExtendedQ(Table values, std::vector<Cell> goals, Scalar rbar_min)
      : values_(std::move(values)), goals_(std::move(goals)), rbar_min_(rbar_min) {
    if (values_.cols() != static_cast<Eigen::Index>(goals_.size()) * kNumActions) {
      throw ShapeMismatch("value table has " + std::to_string(values_.cols()) + " columns, expected " +
                          std::to_string(goals_.size() * kNumActions));
    }
  }

  int num_states() const { return static_cast<int>(values_.rows()); }
  int num_goals() const { return static_cast<int>(goals_.size()); }
  static constexpr int num_actions() { return kNumActions; }

  Scalar& operator()(int s, int g, int a) { return values_(s, g * kNumActions + a); }
  Scalar operator()(int s, int g, int a) const { return values_(s, g * kNumActions + a); }
  Scalar& operator()(int s, int g, Action a) { return (*this)(s, g, index(a)); }
  Scalar operator()(int s, int g, Action a) const { return (*this)(s, g, index(a)); }

  Table& values() { return values_; }
  const Table& values() const { return values_; }

  /// The (states x actions) block that pursues goal `g`.
  auto goal_slice(int g) { return values_.middleCols(g * kNumActions, kNumActions); }
  auto goal_slice(int g) const { return values_.middleCols(g * kNumActions, kNumActions); }

  const std::vector<Cell>& goals() const { return goals_; }
  Scalar rbar_min() const { return rbar_min_; }

  bool same_shape(const ExtendedQ& o) const {
    return values_.rows() == o.values_.rows() && values_.cols() == o.values_.cols() && goals_ == o.goals_;
  }

  bool all_finite() const { return values_.isFinite().all(); }

 private:
  Table values_;
  std::vector<Cell> goals_;
  Scalar rbar_min_ = Scalar(0);
};

using ExtendedQTable = ExtendedQ<double>;

template <typename Scalar>
void require_same_shape(const ExtendedQ<Scalar>& a, const ExtendedQ<Scalar>& b) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch("extended Q tables differ in shape: " + std::to_string(a.num_states()) + "x" +
                        std::to_string(a.num_goals()) + " vs " + std::to_string(b.num_states()) + "x" +
                        std::to_string(b.num_goals()));
  }
}

/// Extended reward: r_bar_min for absorbing at a goal other than `g`, the task
/// reward otherwise.
double extended_reward(const Task& task, const TransitionConfig& cfg, int state, int g, Action a,
                       double rbar_min);

/// min{r_MIN, (r_MIN - r_MAX) * D}.
double compute_rbar_min(double r_min, double r_max, int diameter);
double compute_rbar_min(const TaskFamily& family, int diameter);
/// Bound for the family's world and dynamics, with D from `diameter`.
double default_rbar_min(const TaskFamily& family, const TransitionConfig& cfg = {});

/// Q(s, a) = max over goals of Q(s, g, a).
template <typename Scalar>
ActionTable<Scalar> recover_q(const ExtendedQ<Scalar>& evf) {
  ActionTable<Scalar> q = evf.goal_slice(0);
  for (int g = 1; g < evf.num_goals(); ++g) q = q.max(evf.goal_slice(g));
  return q;
}

/// Greedy action over a row of action values; ties go to the lowest index.
template <typename Row>
Action argmax_action(const Row& row) {
  int best = 0;
  for (int a = 1; a < kNumActions; ++a)
    if (row(a) > row(best)) best = a;
  return static_cast<Action>(best);
}

template <typename Scalar>
Action greedy_action(const ExtendedQ<Scalar>& evf, int state) {
  Eigen::Array<Scalar, 1, kNumActions> row = evf.values().row(state).head(kNumActions);
  for (int g = 1; g < evf.num_goals(); ++g)
    row = row.max(evf.values().row(state).segment(g * kNumActions, kNumActions));
  return argmax_action(row);
}

template <typename Scalar>
std::vector<Action> greedy_policy(const ActionTable<Scalar>& q) {
  std::vector<Action> policy(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) policy[static_cast<std::size_t>(s)] = argmax_action(q.row(s));
  return policy;
}

template <typename Scalar>
std::vector<Action> greedy_policy(const ExtendedQ<Scalar>& evf) {
  return greedy_policy<Scalar>(recover_q(evf));
}

struct EpisodeResult {
  int start = 0;
  double ret = 0.0;
  int steps = 0;
  bool terminated = false;
};

struct ReturnStats {
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<EpisodeResult> episodes;
};

ReturnStats summarize(std::vector<EpisodeResult> episodes);

using PolicyFn = std::function<Action(int state, Rng& rng)>;

/// Runs one episode from `start`; truncated episodes keep their partial return.
EpisodeResult rollout(const TransitionModel& model, const Task& task, int start, const PolicyFn& policy,
                      int max_steps, Rng& rng);

/// Default episode cap: 4 * |open cells|.
int default_max_steps(const GridWorld& world);

/// Greedy-policy returns from uniformly random starts over all open cells.
ReturnStats evaluate_policy(const ExtendedQTable& evf, const Task& task, const TransitionConfig& cfg,
                            int episodes, int max_steps, Rng& rng);
ReturnStats evaluate_policy(const PolicyFn& policy, const Task& task, const TransitionConfig& cfg,
                            int episodes, int max_steps, Rng& rng);

struct DecompositionWitness {
  bool reachable = false;
  double g_star = 0.0;          // rewards from (s, a) up to, not including, the boundary
  double boundary_reward = 0.0; // extended reward of the absorbing transition
  int boundary_state = -1;
  double table_value = 0.0;
};

/// Rolls the goal-`g` greedy policy from (s, a) to the absorbing boundary on
/// a deterministic world. `reachable` is false when `g` cannot be reached
/// from `s`; the sums are then left unset.
DecompositionWitness decomposition_check(const ExtendedQTable& evf, const Task& task,
                                         const TransitionConfig& cfg, int state, int g, Action a);

}  // namespace bta
