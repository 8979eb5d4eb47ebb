#include "bta/evf.hpp"

#include <cmath>
#include <numeric>

namespace bta {

double extended_reward(const Task& task, const TransitionConfig& cfg, int state, int g, Action a,
                       double rbar_min) {
  if (a == Action::Stay && is_absorbing(task, cfg, state) && task.world().goal_index(state) != g) {
    return rbar_min;
  }
  return reward(task, cfg, state, a);
}

double compute_rbar_min(double r_min, double r_max, int diameter) {
  if (diameter < 1) throw ValidationError("diameter must be at least 1");
  return std::min(r_min, (r_min - r_max) * diameter);
}

double compute_rbar_min(const TaskFamily& family, int diameter) {
  return compute_rbar_min(family.r_min(), family.r_max(), diameter);
}

double default_rbar_min(const TaskFamily& family, const TransitionConfig& cfg) {
  return compute_rbar_min(family, std::max(1, diameter(*family.world, cfg)));
}

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ReturnStats summarize(std::vector<EpisodeResult> episodes) {
  ReturnStats stats;
  if (!episodes.empty()) {
    std::vector<double> r;
    r.reserve(episodes.size());
    for (const auto& e : episodes) r.push_back(e.ret);
    const double n = static_cast<double>(r.size());
    stats.mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : r) ss += (x - stats.mean) * (x - stats.mean);
    stats.stddev = r.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(r.begin(), r.end());
    stats.min = r.front();
    stats.max = r.back();
    stats.median = quantile(r, 0.5);
    stats.q1 = quantile(r, 0.25);
    stats.q3 = quantile(r, 0.75);
  }
  stats.episodes = std::move(episodes);
  return stats;
}

EpisodeResult rollout(const TransitionModel& model, const Task& task, int start, const PolicyFn& policy,
                      int max_steps, Rng& rng) {
  Episode episode(model, task, start);
  EpisodeResult result{start, 0.0, 0, false};
  while (!episode.done() && episode.steps() < max_steps) {
    result.ret += episode.step(policy(episode.state(), rng), rng).reward;
  }
  result.steps = episode.steps();
  result.terminated = episode.done();
  return result;
}

int default_max_steps(const GridWorld& world) { return 4 * world.num_states(); }

ReturnStats evaluate_policy(const PolicyFn& policy, const Task& task, const TransitionConfig& cfg,
                            int episodes, int max_steps, Rng& rng) {
  if (episodes < 1) throw ValidationError("episodes must be at least 1");
  const TransitionModel model(task.family->world, cfg);
  std::uniform_int_distribution<int> start(0, task.world().num_states() - 1);
  std::vector<EpisodeResult> results;
  results.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) {
    const int s = start(rng);
    results.push_back(rollout(model, task, s, policy, max_steps, rng));
  }
  return summarize(std::move(results));
}

ReturnStats evaluate_policy(const ExtendedQTable& evf, const Task& task, const TransitionConfig& cfg,
                            int episodes, int max_steps, Rng& rng) {
  if (evf.num_states() != task.world().num_states()) {
    throw ShapeMismatch("EVF has " + std::to_string(evf.num_states()) + " states, world has " +
                        std::to_string(task.world().num_states()));
  }
  const auto policy = greedy_policy(evf);
  return evaluate_policy([&](int s, Rng&) { return policy[static_cast<std::size_t>(s)]; }, task, cfg, episodes,
                         max_steps, rng);
}

DecompositionWitness decomposition_check(const ExtendedQTable& evf, const Task& task,
                                         const TransitionConfig& cfg, int state, int g, Action a) {
  if (!cfg.deterministic()) throw ContractViolation("decomposition_check needs deterministic dynamics");
  const GridWorld& world = task.world();
  DecompositionWitness w;
  w.table_value = evf(state, g, a);
  const auto dist = bfs_distances(world, world.goal_state(g));
  if (dist[static_cast<std::size_t>(state)] < 0) return w;
  w.reachable = true;

  const double rbar = evf.rbar_min();
  int s = state;
  Action act = a;
  const int cap = default_max_steps(world) + 1;
  for (int t = 0; t < cap; ++t) {
    if (act == Action::Stay && is_absorbing(task, cfg, s)) {
      w.boundary_state = s;
      w.boundary_reward = extended_reward(task, cfg, s, g, act, rbar);
      return w;
    }
    w.g_star += extended_reward(task, cfg, s, g, act, rbar);
    s = world.move(s, act);
    act = argmax_action(evf.goal_slice(g).row(s));
  }
  // The goal policy never reached the boundary.
  w.reachable = false;
  return w;
}

}  // namespace bta
