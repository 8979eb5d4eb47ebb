#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bta/errors.hpp"

namespace bta {

using Rng = std::mt19937_64;

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

std::string to_string(Cell c);

enum class Action : int { North = 0, South = 1, East = 2, West = 3, Stay = 4 };

inline constexpr int kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kActions{
    Action::North, Action::South, Action::East, Action::West, Action::Stay};

inline constexpr int index(Action a) { return static_cast<int>(a); }
inline constexpr bool is_move(Action a) { return a != Action::Stay; }
std::string_view action_name(Action a);

/// Rectangular grid of open cells and walls with an ordered set of goal
/// cells. Open cells are numbered row-major; these numbers are the states.
/// Goals are numbered by row-major order of their cells.
class GridWorld {
 public:
  /// Parses a '#'/'.'/'G' map. Throws LoadError on ragged rows, unknown
  /// characters, missing goals, or cells that cannot reach every goal.
  static GridWorld from_text(std::string_view text);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_states() const { return static_cast<int>(cells_.size()); }
  int num_goals() const { return static_cast<int>(goal_states_.size()); }

  Cell cell(int state) const { return cells_.at(static_cast<std::size_t>(state)); }
  std::optional<int> state_of(Cell c) const;
  bool in_bounds(Cell c) const;
  bool is_wall(Cell c) const;

  std::span<const int> goal_states() const { return goal_states_; }
  std::vector<Cell> goal_cells() const;
  int goal_state(int goal) const { return goal_states_.at(static_cast<std::size_t>(goal)); }
  /// Goal index of a state, or -1 when the state is not a goal cell.
  int goal_index(int state) const { return goal_index_[static_cast<std::size_t>(state)]; }

  /// Deterministic successor: walls and the border leave the agent in place.
  int move(int state, Action a) const {
    return next_[static_cast<std::size_t>(state) * kNumActions + static_cast<std::size_t>(index(a))];
  }

  std::string to_text() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> state_index_;  // per cell, -1 for walls
  std::vector<Cell> cells_;
  std::vector<int> goal_states_;
  std::vector<int> goal_index_;
  std::vector<int> next_;
};

GridWorld load_grid(std::string_view text);
GridWorld load_grid_file(const std::filesystem::path& path);

/// BFS step counts from `source` to every state (deterministic moves).
std::vector<int> bfs_distances(const GridWorld& world, int source);

enum class AbsorbingMode { SharedAbsorbingSet, TaskOwnGoalsOnly };
enum class RewardShape { Sparse, Dense };

std::string_view to_string(AbsorbingMode m);
std::string_view to_string(RewardShape r);

struct TransitionConfig {
  double slip_probability = 0.0;
  AbsorbingMode absorbing = AbsorbingMode::SharedAbsorbingSet;

  bool deterministic() const { return slip_probability == 0.0; }
  void validate() const;
};

/// Tasks that share a world and non-terminal rewards and differ only in
/// which goals pay the high terminal reward.
struct TaskFamily {
  std::shared_ptr<const GridWorld> world;
  double step_reward = -0.1;
  double goal_reward_hi = 2.0;
  double goal_reward_lo = -0.1;
  RewardShape reward_shape = RewardShape::Sparse;

  static std::shared_ptr<const TaskFamily> make(std::shared_ptr<const GridWorld> world,
                                                RewardShape shape = RewardShape::Sparse,
                                                double step_reward = -0.1,
                                                double goal_reward_hi = 2.0,
                                                double goal_reward_lo = -0.1);

  /// Smallest and largest reward any member task can emit.
  double r_min() const;
  double r_max() const;
  void validate() const;
};

/// Dynamic set of goal indices.
class GoalSet {
 public:
  GoalSet() = default;
  explicit GoalSet(int num_goals, bool all = false)
      : bits_(static_cast<std::size_t>(num_goals), all) {}
  static GoalSet of(int num_goals, std::span<const int> goals);

  int size() const { return static_cast<int>(bits_.size()); }
  int count() const;
  bool empty() const { return count() == 0; }
  bool contains(int g) const { return bits_.at(static_cast<std::size_t>(g)); }
  void insert(int g) { bits_.at(static_cast<std::size_t>(g)) = true; }
  std::vector<int> indices() const;

  GoalSet operator|(const GoalSet& o) const;
  GoalSet operator&(const GoalSet& o) const;
  GoalSet operator~() const;
  bool operator==(const GoalSet&) const = default;

 private:
  std::vector<bool> bits_;
};

struct Task {
  std::shared_ptr<const TaskFamily> family;
  GoalSet desired;
  std::string name;

  static Task make(std::shared_ptr<const TaskFamily> family, GoalSet desired, std::string name = {});

  const GridWorld& world() const { return *family->world; }
  /// Terminal reward for absorbing at goal `g` (shaping excluded).
  double terminal_reward(int g) const {
    return desired.contains(g) ? family->goal_reward_hi : family->goal_reward_lo;
  }
};

/// Shaping term (0.1/|G|) * sum_g exp(-|s-g|^2 / 4), squared Euclidean
/// distance in cell coordinates.
double dense_shaping(const GridWorld& world, int state);
/// Shaping term plus a sparse base reward.
double dense_reward(const GridWorld& world, int state, double base);

/// Whether STAY at `state` ends the episode for `task` under `cfg`.
bool is_absorbing(const Task& task, const TransitionConfig& cfg, int state);

/// Reward for taking `a` in `state`. Rewards do not depend on the slip outcome.
double reward(const Task& task, const TransitionConfig& cfg, int state, Action a);

struct Outcome {
  int next;
  double probability;
};

/// Precomputed transition kernel of a world under a slip probability.
class TransitionModel {
 public:
  TransitionModel(std::shared_ptr<const GridWorld> world, TransitionConfig cfg);

  const GridWorld& world() const { return *world_; }
  const TransitionConfig& config() const { return cfg_; }
  std::span<const Outcome> outcomes(int state, Action a) const;
  int sample(int state, Action a, Rng& rng) const;

 private:
  std::shared_ptr<const GridWorld> world_;
  TransitionConfig cfg_;
  std::vector<std::vector<Outcome>> kernel_;
};

struct StepResult {
  int next;
  double reward;
  bool terminal;
};

/// One environment transition from a live (non-absorbed) state.
StepResult step(const TransitionModel& model, const Task& task, int state, Action a, Rng& rng);

/// Stateful episode that refuses to step once absorbed.
class Episode {
 public:
  Episode(const TransitionModel& model, const Task& task, int start);
  StepResult step(Action a, Rng& rng);
  int state() const { return state_; }
  bool done() const { return done_; }
  int steps() const { return steps_; }

 private:
  const TransitionModel* model_;
  const Task* task_;
  int state_;
  bool done_ = false;
  int steps_ = 0;
};

/// Maximum over ordered state pairs of the minimal expected hitting time.
/// Deterministic worlds use BFS; slip worlds solve a hitting-time problem per
/// target and round up.
int diameter(const GridWorld& world, const TransitionConfig& cfg = {});

}  // namespace bta
