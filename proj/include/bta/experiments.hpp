#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bta/evf_algebra.hpp"
#include "bta/expr.hpp"
#include "bta/learner.hpp"

namespace bta {

/// Map text shipped with the library: "four_rooms" or "four_rooms_40".
std::string_view builtin_map(std::string_view name);
/// A builtin map name or a path to a map file.
std::shared_ptr<const GridWorld> resolve_map(const std::string& spec);

/// Base-task names for a world: T and L for four-goal worlds, x1..xK otherwise.
std::vector<std::string> default_base_names(const GridWorld& world);

/// `goals=i,j,...` or a Boolean expression over the world's base-task names.
Task parse_task_spec(const std::string& spec, const TaskAlgebra& alg);

struct ExperimentConfig {
  std::string map = "four_rooms";
  std::string forty_map = "four_rooms_40";
  std::filesystem::path out_dir = "out";
  Hyperparams hp;
  TransitionConfig transition;
  RewardShape reward_shape = RewardShape::Sparse;
  bool learned = false;        // goal-oriented Q-learning instead of the DP oracle
  int eval_episodes = 1000;
  int max_steps = 0;           // evaluation cap; 0 = 4 * |open cells|
  int num_seeds = 20;
  int scaling_tasks = 6;
  double convergence_gap = 0.05;
  int check_every = 100;
  int max_episodes = 2000000;
  int relax_eval_episodes = 10000;
  int forty_seeds = 0;         // learning runs on the 40-goal map; 0 skips them
  int workers = 0;             // 0 = hardware concurrency

  /// Applies one `key = value` setting. Throws ValidationError on unknown
  /// keys or malformed values.
  void set(const std::string& key, const std::string& value);
  /// Every setting as `key = value` lines, in a fixed order.
  std::string dump() const;
  void validate() const;
};

/// Reads a flat `key = value` file ('#' starts a comment) onto `base`.
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

struct ManifestEntry {
  std::filesystem::path file;
  std::string description;
  std::uint64_t seed = 0;
};

/// Writes CSV/SVG artifacts and remembers them for the manifest.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  void write(const std::string& name, const std::string& content, const std::string& description,
             std::uint64_t seed = 0);
  /// Writes manifest.csv listing every artifact written so far.
  void finish();
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> entries_;
};

/// Optimal return from every start of `task` (DP on the standard reward).
Eigen::ArrayXd optimal_state_values(const Task& task, const TransitionConfig& cfg);
/// Optimal return when episodes are cut off after `horizon` steps.
Eigen::ArrayXd optimal_state_values(const Task& task, const TransitionConfig& cfg, int horizon);

struct StartSweep {
  double max_abs_gap = 0.0;  // max over starts of |return - optimal|
  int optimal_starts = 0;
  int starts = 0;
};

/// Deterministic greedy rollout from every open cell, compared with `optimal`.
StartSweep sweep_starts(const ExtendedQTable& evf, const Task& task, const TransitionConfig& cfg,
                        const Eigen::ArrayXd& optimal, int max_steps, double tol = 1e-9);

struct TaskEvaluation {
  std::string expr;
  std::vector<int> goals;
  ReturnStats stats;
  double optimal_mean = 0.0;  // mean optimal return over the same starts
  double gap = 0.0;           // optimal_mean - stats.mean
  StartSweep sweep;           // deterministic worlds only
  bool optimal = false;
};

struct FourRoomsReport {
  std::vector<TaskEvaluation> tasks;   // the 16 enumerated tasks
  std::vector<TaskEvaluation> panels;  // L, T, L|T, L&T, L^T, ~(L|T)
  std::vector<ManifestEntry> manifest;
  std::string summary;
};

/// Solves or learns the two base tasks, composes every K=2 expression and
/// evaluates each composed policy; emits value/policy CSVs and SVGs per panel.
FourRoomsReport run_four_rooms(const ExperimentConfig& cfg);

struct ScalingRow {
  int n = 0;
  double extended_mean = 0.0;
  double extended_sd = 0.0;
  double standard_mean = 0.0;
  double standard_sd = 0.0;
};

struct CountRow {
  int n = 0;
  std::string boolean_tasks;     // 2^(2^n), exact decimal
  std::uint64_t disjunction_tasks = 0;  // 2^n - 1
};

struct FortyGoalResult {
  int num_goals = 0;
  int base_tasks = 0;
  int optimal_minterms = 0;
  bool all_optimal = false;
  std::vector<ScalingRow> samples;  // extended (n base tasks) vs standard (n single-goal tasks)
};

struct ScalingReport {
  std::vector<ScalingRow> samples;
  double extended_r2 = 0.0;
  double standard_r2 = 0.0;
  bool extended_dominates = false;
  bool monotone = false;
  int unconverged_runs = 0;
  std::vector<CountRow> counts;
  int enumerated_distinct_k2 = 0;
  FortyGoalResult forty;
  std::vector<ManifestEntry> manifest;
  std::string summary;
};

/// Exact decimal of 2^(2^n) for n <= 6.
std::string boolean_task_count(int n);
/// Coefficient of determination of the least-squares line through (x, y).
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);

ScalingReport run_scaling(const ExperimentConfig& cfg);

struct RelaxationVariant {
  std::string name;
  RewardShape reward_shape;
  AbsorbingMode absorbing;
  double slip_probability;
  std::string figure;  // "absorbing_reward" or "slip"
};

std::vector<RelaxationVariant> relaxation_variants();

struct RelaxationResult {
  RelaxationVariant variant;
  std::vector<TaskEvaluation> tasks;
};

struct RelaxationReport {
  std::vector<RelaxationResult> variants;
  bool sparse_same_optimal = false;
  std::vector<ManifestEntry> manifest;
  std::string summary;
};

RelaxationReport run_relaxations(const ExperimentConfig& cfg);

/// Heatmap of per-state values with per-state action arrows.
std::string render_svg(const GridWorld& world, const Eigen::ArrayXd& values, const std::vector<Action>& policy,
                       const std::string& title);

}  // namespace bta
