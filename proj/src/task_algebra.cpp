#include "bta/task_algebra.hpp"

#include <sstream>

namespace bta {

RewardTable reward_table(const Task& task, const TransitionConfig& cfg) {
  const int n = task.world().num_states();
  RewardTable table(n, kNumActions);
  for (int s = 0; s < n; ++s)
    for (Action a : kActions) table(s, index(a)) = reward(task, cfg, s, a);
  return table;
}

TaskAlgebra::TaskAlgebra(std::shared_ptr<const TaskFamily> family)
    : family_(std::move(family)),
      universal_(Task::make(family_, GoalSet(family_->world->num_goals(), true), "1")),
      empty_(Task::make(family_, GoalSet(family_->world->num_goals(), false), "0")) {}

Task TaskAlgebra::task(const GoalSet& desired, std::string name) const {
  return Task::make(family_, desired, std::move(name));
}

Task TaskAlgebra::task(std::span<const int> goals, std::string name) const {
  return Task::make(family_, GoalSet::of(family_->world->num_goals(), goals), std::move(name));
}

void TaskAlgebra::check_member(const Task& t) const {
  if (t.family != family_) {
    throw FamilyMismatch("task '" + t.name + "' belongs to a different task family");
  }
}

Task TaskAlgebra::negate(const Task& t) const {
  check_member(t);
  if (family_->reward_shape != RewardShape::Sparse) {
    throw ValidationError("negation requires two-valued terminal rewards; dense families are refused");
  }
  return Task::make(family_, ~t.desired, "~" + t.name);
}

Task TaskAlgebra::disjoin(const Task& a, const Task& b) const {
  check_member(a);
  check_member(b);
  return Task::make(family_, a.desired | b.desired, "(" + a.name + " | " + b.name + ")");
}

Task TaskAlgebra::conjoin(const Task& a, const Task& b) const {
  check_member(a);
  check_member(b);
  return Task::make(family_, a.desired & b.desired, "(" + a.name + " & " + b.name + ")");
}

Task task_not(const TaskAlgebra& alg, const Task& t) { return alg.negate(t); }
Task task_or(const TaskAlgebra& alg, const Task& a, const Task& b) { return alg.disjoin(a, b); }
Task task_and(const TaskAlgebra& alg, const Task& a, const Task& b) { return alg.conjoin(a, b); }

namespace {

Assumption2Report check_tables(const TaskFamily& family, std::span<const RewardTable> tables,
                               const std::vector<std::vector<bool>>& terminal_mask) {
  Assumption2Report report;
  report.r_lo = family.goal_reward_lo;
  report.r_hi = family.goal_reward_hi;
  if (report.r_lo > report.r_hi) {
    report.pass = false;
    report.message = "r_lo exceeds r_hi";
    return report;
  }
  const GridWorld& world = *family.world;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    for (int g = 0; g < world.num_goals(); ++g) {
      if (!terminal_mask[t][g]) continue;
      const double r = tables[t](world.goal_state(g), index(Action::Stay));
      if (r != report.r_lo && r != report.r_hi) {
        report.violations.push_back({g, Action::Stay, r});
      }
    }
  }
  if (!report.violations.empty()) {
    report.pass = false;
    const auto& v = report.violations.front();
    std::ostringstream ss;
    ss << "terminal reward " << v.reward << " at goal " << v.goal << " " << to_string(world.cell(world.goal_state(v.goal)))
       << " is neither " << report.r_lo << " nor " << report.r_hi;
    if (report.violations.size() > 1) ss << " (+" << report.violations.size() - 1 << " more)";
    report.message = ss.str();
  }
  return report;
}

}  // namespace

Assumption2Report check_assumption2(const TaskFamily& family, std::span<const Task> tasks,
                                    const TransitionConfig& cfg) {
  std::vector<RewardTable> tables;
  std::vector<std::vector<bool>> mask;
  const GridWorld& world = *family.world;
  for (const auto& task : tasks) {
    tables.push_back(reward_table(task, cfg));
    std::vector<bool> m(static_cast<std::size_t>(world.num_goals()));
    for (int g = 0; g < world.num_goals(); ++g) m[g] = is_absorbing(task, cfg, world.goal_state(g));
    mask.push_back(std::move(m));
  }
  return check_tables(family, tables, mask);
}

Assumption2Report check_assumption2(const TaskFamily& family, std::span<const RewardTable> tables) {
  std::vector<std::vector<bool>> mask(tables.size(),
                                      std::vector<bool>(static_cast<std::size_t>(family.world->num_goals()), true));
  return check_tables(family, tables, mask);
}

Assumption2Report check_assumption2(const TaskFamily& family) {
  // Non-owning alias so the tasks can point back at `family`.
  std::shared_ptr<const TaskFamily> alias(std::shared_ptr<const TaskFamily>{}, &family);
  const int n = family.world->num_goals();
  std::vector<Task> tasks{Task{alias, GoalSet(n, true), "1"}, Task{alias, GoalSet(n, false), "0"}};
  for (int g = 0; g < n; ++g) {
    const int goal[] = {g};
    tasks.push_back(Task{alias, GoalSet::of(n, goal), "g" + std::to_string(g)});
  }
  return check_assumption2(family, tasks);
}

}  // namespace bta
