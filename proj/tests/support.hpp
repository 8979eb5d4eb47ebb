#pragma once

#include <deque>
#include <random>
#include <string>
#include <vector>

#include "bta/experiments.hpp"

namespace bta::test {

inline std::shared_ptr<const GridWorld> four_rooms() {
  static const auto world = resolve_map("four_rooms");
  return world;
}

inline std::shared_ptr<const TaskFamily> sparse_family() {
  static const auto family = TaskFamily::make(four_rooms());
  return family;
}

/// BFS over the raw map text, independent of GridWorld. Returns distances
/// between (row, col) pairs, -1 when unreachable.
class TextBfs {
 public:
  explicit TextBfs(const std::string& text) {
    std::string line;
    for (char c : text) {
      if (c == '\n') {
        if (!line.empty()) rows_.push_back(line);
        line.clear();
      } else {
        line += c;
      }
    }
    if (!line.empty()) rows_.push_back(line);
  }

  int distance(int r0, int c0, int r1, int c1) const {
    const int h = static_cast<int>(rows_.size());
    const int w = static_cast<int>(rows_[0].size());
    std::vector<int> d(static_cast<std::size_t>(h * w), -1);
    std::deque<std::pair<int, int>> q{{r0, c0}};
    d[static_cast<std::size_t>(r0 * w + c0)] = 0;
    const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, 1, -1};
    while (!q.empty()) {
      auto [r, c] = q.front();
      q.pop_front();
      if (r == r1 && c == c1) return d[static_cast<std::size_t>(r * w + c)];
      for (int k = 0; k < 4; ++k) {
        const int nr = r + dr[k], nc = c + dc[k];
        if (nr < 0 || nc < 0 || nr >= h || nc >= w || rows_[nr][nc] == '#') continue;
        auto& slot = d[static_cast<std::size_t>(nr * w + nc)];
        if (slot >= 0) continue;
        slot = d[static_cast<std::size_t>(r * w + c)] + 1;
        q.emplace_back(nr, nc);
      }
    }
    return -1;
  }

  /// Nearest distance from (r, c) to any of `targets`.
  int nearest(int r, int c, const std::vector<Cell>& targets) const {
    int best = -1;
    for (const Cell& t : targets) {
      const int d = distance(r, c, t.row, t.col);
      if (d >= 0 && (best < 0 || d < best)) best = d;
    }
    return best;
  }

 private:
  std::vector<std::string> rows_;
};

inline GoalSet random_goal_set(int num_goals, Rng& rng) {
  GoalSet g(num_goals);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < num_goals; ++i)
    if (coin(rng)) g.insert(i);
  return g;
}

/// Random expression over `names` with at most `depth` levels of operators.
inline Expr random_expr(const std::vector<std::string>& names, int depth, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 7 : 1);
  std::uniform_int_distribution<std::size_t> var(0, names.size() - 1);
  switch (pick(rng)) {
    case 0:
    case 1: return Expr::var(names[var(rng)]);
    case 2: return Expr::negate(random_expr(names, depth - 1, rng));
    case 3: return Expr::binary(Expr::Kind::And, random_expr(names, depth - 1, rng), random_expr(names, depth - 1, rng));
    case 4: return Expr::binary(Expr::Kind::Or, random_expr(names, depth - 1, rng), random_expr(names, depth - 1, rng));
    case 5: return Expr::binary(Expr::Kind::Xor, random_expr(names, depth - 1, rng), random_expr(names, depth - 1, rng));
    case 6: return Expr::binary(Expr::Kind::Nor, random_expr(names, depth - 1, rng), random_expr(names, depth - 1, rng));
    default: return std::uniform_int_distribution<int>(0, 1)(rng) ? Expr::one() : Expr::zero();
  }
}

}  // namespace bta::test
