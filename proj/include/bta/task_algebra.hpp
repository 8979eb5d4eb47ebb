#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bta/grid_world.hpp"

namespace bta {

/// Reward table r(s, a) of a task, states by rows.
using RewardTable = Eigen::Array<double, Eigen::Dynamic, kNumActions, Eigen::RowMajor>;

RewardTable reward_table(const Task& task, const TransitionConfig& cfg = {});

/// Boolean algebra over the tasks of one family. Tasks are identified with
/// their desired-goal sets, so the family is closed under every operator.
class TaskAlgebra {
 public:
  explicit TaskAlgebra(std::shared_ptr<const TaskFamily> family);

  const std::shared_ptr<const TaskFamily>& family() const { return family_; }
  /// M_U: every goal desired.
  const Task& universal() const { return universal_; }
  /// M_0: no goal desired.
  const Task& empty() const { return empty_; }

  Task task(const GoalSet& desired, std::string name = {}) const;
  Task task(std::span<const int> goals, std::string name = {}) const;

  /// Complement. Refuses dense families, whose terminal rewards are not
  /// two-valued.
  Task negate(const Task& t) const;
  Task disjoin(const Task& a, const Task& b) const;
  Task conjoin(const Task& a, const Task& b) const;

 private:
  void check_member(const Task& t) const;

  std::shared_ptr<const TaskFamily> family_;
  Task universal_;
  Task empty_;
};

Task task_not(const TaskAlgebra& alg, const Task& t);
Task task_or(const TaskAlgebra& alg, const Task& a, const Task& b);
Task task_and(const TaskAlgebra& alg, const Task& a, const Task& b);

struct Assumption2Violation {
  int goal;
  Action action;
  double reward;
};

struct Assumption2Report {
  bool pass = true;
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::vector<Assumption2Violation> violations;
  std::string message;
};

/// Checks that every listed task's terminal rewards lie in {r_lo, r_hi}
/// (the family's goal rewards) with r_lo <= r_hi.
Assumption2Report check_assumption2(const TaskFamily& family, std::span<const Task> tasks,
                                    const TransitionConfig& cfg = {});
/// Same check over raw reward tables; terminal entries are (goal, STAY) for
/// every goal of the world.
Assumption2Report check_assumption2(const TaskFamily& family, std::span<const RewardTable> tables);
/// Checks the family's canonical members: M_U, M_0 and each single-goal task.
Assumption2Report check_assumption2(const TaskFamily& family);

}  // namespace bta
