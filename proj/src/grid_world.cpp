#include "bta/grid_world.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace bta {

std::string to_string(Cell c) {
  return "(" + std::to_string(c.row) + ", " + std::to_string(c.col) + ")";
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::North: return "N";
    case Action::South: return "S";
    case Action::East: return "E";
    case Action::West: return "W";
    case Action::Stay: return "STAY";
  }
  return "?";
}

std::string_view to_string(AbsorbingMode m) {
  return m == AbsorbingMode::SharedAbsorbingSet ? "shared" : "own";
}

std::string_view to_string(RewardShape r) {
  return r == RewardShape::Sparse ? "sparse" : "dense";
}

namespace {

constexpr std::array<int, kNumActions> kRowDelta{-1, 1, 0, 0, 0};
constexpr std::array<int, kNumActions> kColDelta{0, 0, 1, -1, 0};

std::vector<std::string_view> split_rows(std::string_view text) {
  std::vector<std::string_view> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto row = text.substr(pos, nl - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    rows.push_back(row);
    pos = nl + 1;
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  return rows;
}

}  // namespace

GridWorld GridWorld::from_text(std::string_view text) {
  auto rows = split_rows(text);
  if (rows.empty()) throw LoadError("map is empty");
  GridWorld w;
  w.height_ = static_cast<int>(rows.size());
  w.width_ = static_cast<int>(rows.front().size());
  if (w.width_ == 0) throw LoadError("map row 0 is empty");
  w.state_index_.assign(static_cast<std::size_t>(w.width_ * w.height_), -1);

  for (int r = 0; r < w.height_; ++r) {
    const auto row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != w.width_) {
      throw LoadError("ragged map: row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                      " cells, expected " + std::to_string(w.width_));
    }
    for (int c = 0; c < w.width_; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      if (ch == '#') continue;
      if (ch != '.' && ch != 'G') {
        throw LoadError("unexpected character '" + std::string(1, ch) + "' at " + to_string(Cell{r, c}));
      }
      const int s = static_cast<int>(w.cells_.size());
      w.state_index_[static_cast<std::size_t>(r * w.width_ + c)] = s;
      w.cells_.push_back({r, c});
      if (ch == 'G') w.goal_states_.push_back(s);
    }
  }
  if (w.goal_states_.empty()) throw LoadError("map has no goal cells");

  w.goal_index_.assign(w.cells_.size(), -1);
  for (int g = 0; g < w.num_goals(); ++g) w.goal_index_[static_cast<std::size_t>(w.goal_states_[static_cast<std::size_t>(g)])] = g;

  w.next_.resize(w.cells_.size() * kNumActions);
  for (int s = 0; s < w.num_states(); ++s) {
    const Cell c = w.cell(s);
    for (Action a : kActions) {
      const Cell to{c.row + kRowDelta[static_cast<std::size_t>(index(a))], c.col + kColDelta[static_cast<std::size_t>(index(a))]};
      const auto target = w.state_of(to);
      w.next_[static_cast<std::size_t>(s) * kNumActions + static_cast<std::size_t>(index(a))] = target ? *target : s;
    }
  }

  // Moves are symmetric, so every cell reaches every goal iff the open cells
  // form one component.
  const auto dist = bfs_distances(w, w.goal_states_.front());
  for (int g : w.goal_states_) {
    if (dist[static_cast<std::size_t>(g)] < 0) {
      throw LoadError("unreachable goal at " + to_string(w.cell(g)));
    }
  }
  for (int s = 0; s < w.num_states(); ++s) {
    if (dist[static_cast<std::size_t>(s)] < 0) {
      throw LoadError("open cell " + to_string(w.cell(s)) + " cannot reach goal " +
                      to_string(w.cell(w.goal_states_.front())));
    }
  }
  return w;
}

std::optional<int> GridWorld::state_of(Cell c) const {
  if (!in_bounds(c)) return std::nullopt;
  const int s = state_index_[static_cast<std::size_t>(c.row * width_ + c.col)];
  if (s < 0) return std::nullopt;
  return s;
}

bool GridWorld::in_bounds(Cell c) const {
  return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
}

bool GridWorld::is_wall(Cell c) const { return in_bounds(c) && !state_of(c); }

std::vector<Cell> GridWorld::goal_cells() const {
  std::vector<Cell> out;
  out.reserve(goal_states_.size());
  for (int s : goal_states_) out.push_back(cell(s));
  return out;
}

std::string GridWorld::to_text() const {
  std::string out;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      const auto s = state_of({r, c});
      out += !s ? '#' : (goal_index(*s) >= 0 ? 'G' : '.');
    }
    out += '\n';
  }
  return out;
}

GridWorld load_grid(std::string_view text) { return GridWorld::from_text(text); }

GridWorld load_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open map file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return GridWorld::from_text(ss.str());
}

std::vector<int> bfs_distances(const GridWorld& world, int source) {
  std::vector<int> dist(static_cast<std::size_t>(world.num_states()), -1);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (Action a : kActions) {
      const int v = world.move(u, a);
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

void TransitionConfig::validate() const {
  if (!(slip_probability >= 0.0 && slip_probability < 1.0)) {
    throw ValidationError("slip probability must lie in [0, 1), got " + std::to_string(slip_probability));
  }
}

std::shared_ptr<const TaskFamily> TaskFamily::make(std::shared_ptr<const GridWorld> world, RewardShape shape,
                                                   double step_reward, double goal_reward_hi,
                                                   double goal_reward_lo) {
  auto family = std::make_shared<TaskFamily>();
  family->world = std::move(world);
  family->reward_shape = shape;
  family->step_reward = step_reward;
  family->goal_reward_hi = goal_reward_hi;
  family->goal_reward_lo = goal_reward_lo;
  family->validate();
  return family;
}

double TaskFamily::r_min() const {
  double lo = std::min(step_reward, goal_reward_lo);
  if (reward_shape == RewardShape::Dense) {
    double shaping = std::numeric_limits<double>::infinity();
    for (int s = 0; s < world->num_states(); ++s) shaping = std::min(shaping, dense_shaping(*world, s));
    lo += shaping;
  }
  return lo;
}

double TaskFamily::r_max() const {
  double hi = std::max(step_reward, goal_reward_hi);
  if (reward_shape == RewardShape::Dense) {
    double shaping = 0.0;
    for (int s = 0; s < world->num_states(); ++s) shaping = std::max(shaping, dense_shaping(*world, s));
    hi += shaping;
  }
  return hi;
}

void TaskFamily::validate() const {
  if (!world) throw ValidationError("task family has no world");
  for (double v : {step_reward, goal_reward_hi, goal_reward_lo}) {
    if (!std::isfinite(v)) throw ValidationError("task family rewards must be finite");
  }
  if (goal_reward_lo > goal_reward_hi) {
    throw ValidationError("goal_reward_lo must not exceed goal_reward_hi");
  }
}

GoalSet GoalSet::of(int num_goals, std::span<const int> goals) {
  GoalSet set(num_goals);
  for (int g : goals) {
    if (g < 0 || g >= num_goals) {
      throw ValidationError("goal index " + std::to_string(g) + " out of range [0, " + std::to_string(num_goals) + ")");
    }
    set.insert(g);
  }
  return set;
}

int GoalSet::count() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), true)); }

std::vector<int> GoalSet::indices() const {
  std::vector<int> out;
  for (int g = 0; g < size(); ++g)
    if (bits_[static_cast<std::size_t>(g)]) out.push_back(g);
  return out;
}

GoalSet GoalSet::operator|(const GoalSet& o) const {
  GoalSet out(*this);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] || o.bits_.at(i);
  return out;
}

GoalSet GoalSet::operator&(const GoalSet& o) const {
  GoalSet out(*this);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] && o.bits_.at(i);
  return out;
}

GoalSet GoalSet::operator~() const {
  GoalSet out(*this);
  out.bits_.flip();
  return out;
}

Task Task::make(std::shared_ptr<const TaskFamily> family, GoalSet desired, std::string name) {
  if (!family) throw ValidationError("task has no family");
  if (desired.size() != family->world->num_goals()) {
    throw ValidationError("desired goal set has " + std::to_string(desired.size()) + " entries, world has " +
                          std::to_string(family->world->num_goals()) + " goals");
  }
  return Task{std::move(family), std::move(desired), std::move(name)};
}

double dense_shaping(const GridWorld& world, int state) {
  const Cell c = world.cell(state);
  double sum = 0.0;
  for (int g : world.goal_states()) {
    const Cell gc = world.cell(g);
    const double dr = c.row - gc.row;
    const double dc = c.col - gc.col;
    sum += std::exp(-(dr * dr + dc * dc) / 4.0);
  }
  return 0.1 / world.num_goals() * sum;
}

double dense_reward(const GridWorld& world, int state, double base) { return dense_shaping(world, state) + base; }

bool is_absorbing(const Task& task, const TransitionConfig& cfg, int state) {
  const int g = task.world().goal_index(state);
  if (g < 0) return false;
  return cfg.absorbing == AbsorbingMode::SharedAbsorbingSet || task.desired.contains(g);
}

double reward(const Task& task, const TransitionConfig& cfg, int state, Action a) {
  const TaskFamily& family = *task.family;
  const double sparse = (a == Action::Stay && is_absorbing(task, cfg, state))
                            ? task.terminal_reward(task.world().goal_index(state))
                            : family.step_reward;
  return family.reward_shape == RewardShape::Dense ? dense_reward(task.world(), state, sparse) : sparse;
}

TransitionModel::TransitionModel(std::shared_ptr<const GridWorld> world, TransitionConfig cfg)
    : world_(std::move(world)), cfg_(cfg) {
  cfg_.validate();
  kernel_.resize(static_cast<std::size_t>(world_->num_states()) * kNumActions);
  const double sp = cfg_.slip_probability;
  for (int s = 0; s < world_->num_states(); ++s) {
    for (Action a : kActions) {
      auto& out = kernel_[static_cast<std::size_t>(s) * kNumActions + static_cast<std::size_t>(index(a))];
      if (!is_move(a) || sp == 0.0) {
        out.push_back({world_->move(s, a), 1.0});
        continue;
      }
      for (Action b : kActions) {
        if (!is_move(b)) continue;
        const double p = (b == a) ? 1.0 - sp : sp / 3.0;
        const int next = world_->move(s, b);
        auto it = std::find_if(out.begin(), out.end(), [&](const Outcome& o) { return o.next == next; });
        if (it == out.end()) {
          out.push_back({next, p});
        } else {
          it->probability += p;
        }
      }
    }
  }
}

std::span<const Outcome> TransitionModel::outcomes(int state, Action a) const {
  return kernel_[static_cast<std::size_t>(state) * kNumActions + static_cast<std::size_t>(index(a))];
}

int TransitionModel::sample(int state, Action a, Rng& rng) const {
  if (!is_move(a) || cfg_.slip_probability == 0.0) return world_->move(state, a);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= cfg_.slip_probability) return world_->move(state, a);
  // one of the other three cardinal directions, uniformly
  std::uniform_int_distribution<int> pick(0, 2);
  int k = pick(rng);
  for (Action b : kActions) {
    if (!is_move(b) || b == a) continue;
    if (k-- == 0) return world_->move(state, b);
  }
  return state;
}

StepResult step(const TransitionModel& model, const Task& task, int state, Action a, Rng& rng) {
  if (state < 0 || state >= model.world().num_states()) {
    throw ContractViolation("step from invalid state " + std::to_string(state));
  }
  const double r = reward(task, model.config(), state, a);
  if (a == Action::Stay && is_absorbing(task, model.config(), state)) return {state, r, true};
  return {model.sample(state, a, rng), r, false};
}

Episode::Episode(const TransitionModel& model, const Task& task, int start)
    : model_(&model), task_(&task), state_(start) {
  if (start < 0 || start >= model.world().num_states()) {
    throw ContractViolation("episode start " + std::to_string(start) + " is not an open cell");
  }
}

StepResult Episode::step(Action a, Rng& rng) {
  if (done_) throw ContractViolation("step called on an absorbed episode");
  auto result = bta::step(*model_, *task_, state_, a, rng);
  ++steps_;
  state_ = result.next;
  done_ = result.terminal;
  return result;
}

int diameter(const GridWorld& world, const TransitionConfig& cfg) {
  cfg.validate();
  const int n = world.num_states();
  if (n < 2) return 0;
  int best = 0;
  if (cfg.deterministic()) {
    for (int s = 0; s < n; ++s) {
      const auto dist = bfs_distances(world, s);
      for (int d : dist) {
        if (d < 0) throw ValidationError("world is disconnected");
        best = std::max(best, d);
      }
    }
    return best;
  }
  // Minimal expected hitting time of each target under slip dynamics.
  TransitionModel model(std::make_shared<GridWorld>(world), cfg);
  double worst = 0.0;
  std::vector<double> t(static_cast<std::size_t>(n)), next(static_cast<std::size_t>(n));
  for (int target = 0; target < n; ++target) {
    std::fill(t.begin(), t.end(), 0.0);
    for (int iter = 0; iter < 1'000'000; ++iter) {
      double change = 0.0;
      for (int s = 0; s < n; ++s) {
        if (s == target) {
          next[static_cast<std::size_t>(s)] = 0.0;
          continue;
        }
        double best_a = std::numeric_limits<double>::infinity();
        for (Action a : kActions) {
          if (!is_move(a)) continue;
          double v = 1.0;
          for (const auto& o : model.outcomes(s, a)) v += o.probability * t[static_cast<std::size_t>(o.next)];
          best_a = std::min(best_a, v);
        }
        change = std::max(change, std::abs(best_a - t[static_cast<std::size_t>(s)]));
        next[static_cast<std::size_t>(s)] = best_a;
      }
      t.swap(next);
      if (change < 1e-9) break;
    }
    worst = std::max(worst, *std::max_element(t.begin(), t.end()));
  }
  return static_cast<int>(std::ceil(worst - 1e-9));
}

}  // namespace bta
