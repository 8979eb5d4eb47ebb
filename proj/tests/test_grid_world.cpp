#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace bta;
using bta::test::four_rooms;

TEST_CASE("four rooms layout") {
  const auto& w = *four_rooms();
  CHECK(w.width() == 13);
  CHECK(w.height() == 13);
  CHECK(w.num_states() == 104);
  REQUIRE(w.num_goals() == 4);
  const std::vector<Cell> expected{{3, 3}, {3, 9}, {9, 3}, {9, 9}};
  CHECK(w.goal_cells() == expected);
  for (int g = 0; g < 4; ++g) CHECK(w.goal_index(w.goal_state(g)) == g);
  CHECK(load_grid(w.to_text()).num_states() == 104);
}

TEST_CASE("bfs distances agree with an independent text bfs") {
  const auto& w = *four_rooms();
  const test::TextBfs oracle(std::string(builtin_map("four_rooms")));
  int diam = 0;
  for (int s = 0; s < w.num_states(); ++s) {
    const auto d = bfs_distances(w, s);
    const Cell a = w.cell(s);
    for (int t = 0; t < w.num_states(); ++t) {
      const Cell b = w.cell(t);
      REQUIRE(d[static_cast<std::size_t>(t)] == oracle.distance(a.row, a.col, b.row, b.col));
      diam = std::max(diam, d[static_cast<std::size_t>(t)]);
    }
  }
  CHECK(diameter(w) == diam);
  CHECK(diam == 20);
}

TEST_CASE("map validation") {
  CHECK_THROWS_AS(load_grid("###\n#G\n###\n"), LoadError);
  CHECK_THROWS_AS(load_grid("###\n#Gx\n###\n"), LoadError);
  CHECK_THROWS_AS(load_grid("###\n#.#\n###\n"), LoadError);
  CHECK_THROWS_WITH_AS(load_grid("#####\n#G#G#\n#####\n"), doctest::Contains("unreachable goal at (1, 3)"), LoadError);
  CHECK_THROWS_AS(load_grid_file("/nonexistent/map.txt"), LoadError);
}

TEST_CASE("moves stop at walls") {
  const auto w = load_grid("#####\n#..G#\n#####\n");
  const int s = *w.state_of({1, 1});
  CHECK(w.move(s, Action::North) == s);
  CHECK(w.move(s, Action::West) == s);
  CHECK(w.move(s, Action::Stay) == s);
  CHECK(w.move(s, Action::East) == *w.state_of({1, 2}));
}

TEST_CASE("sparse rewards and termination") {
  const auto family = test::sparse_family();
  const TaskAlgebra alg(family);
  const int tl[] = {0};
  const Task task = alg.task(tl);
  const auto& w = task.world();
  const int goal0 = w.goal_state(0), goal1 = w.goal_state(1);
  const int open = *w.state_of({1, 1});

  TransitionConfig shared;
  CHECK(reward(task, shared, open, Action::East) == doctest::Approx(-0.1));
  CHECK(reward(task, shared, goal0, Action::Stay) == 2.0);
  CHECK(reward(task, shared, goal1, Action::Stay) == doctest::Approx(-0.1));
  CHECK(reward(task, shared, goal0, Action::North) == doctest::Approx(-0.1));
  CHECK(is_absorbing(task, shared, goal1));

  TransitionConfig own{0.0, AbsorbingMode::TaskOwnGoalsOnly};
  CHECK(is_absorbing(task, own, goal0));
  CHECK_FALSE(is_absorbing(task, own, goal1));

  const TransitionModel model(family->world, shared);
  Rng rng(1);
  CHECK(step(model, task, goal0, Action::Stay, rng).terminal);
  CHECK_FALSE(step(model, task, goal0, Action::South, rng).terminal);
  const TransitionModel own_model(family->world, own);
  CHECK_FALSE(step(own_model, task, goal1, Action::Stay, rng).terminal);
}

TEST_CASE("dense rewards follow the shaping formula") {
  const auto family = TaskFamily::make(four_rooms(), RewardShape::Dense);
  const TaskAlgebra alg(family);
  const int tl[] = {0};
  const Task task = alg.task(tl);
  const auto& w = task.world();
  const TransitionConfig cfg;
  auto formula = [&](int s, double base) {
    const Cell c = w.cell(s);
    double sum = 0.0;
    for (const Cell& g : w.goal_cells()) {
      const double d2 = (c.row - g.row) * (c.row - g.row) + (c.col - g.col) * (c.col - g.col);
      sum += std::exp(-d2 / 4.0);
    }
    return 0.1 / 4.0 * sum + base;
  };
  for (int s = 0; s < w.num_states(); ++s)
    CHECK(reward(task, cfg, s, Action::East) == doctest::Approx(formula(s, -0.1)).epsilon(1e-14));
  CHECK(reward(task, cfg, w.goal_state(0), Action::Stay) == doctest::Approx(formula(w.goal_state(0), 2.0)));

  // Values computed offline with numpy.
  CHECK(reward(task, cfg, *w.state_of({3, 6}), Action::East) == doctest::Approx(-0.09472938840702408).epsilon(1e-13));
  CHECK(reward(task, cfg, *w.state_of({3, 3}), Action::East) == doctest::Approx(-0.07499382912904617).epsilon(1e-13));

  const auto single = TaskFamily::make(std::make_shared<const GridWorld>(load_grid("####\n#.G#\n####\n")),
                                       RewardShape::Dense);
  const Task one = TaskAlgebra(single).universal();
  CHECK(reward(one, cfg, one.world().goal_state(0), Action::West) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(reward(one, cfg, *one.world().state_of({1, 1}), Action::East) ==
        doctest::Approx(0.1 * std::exp(-0.25) - 0.1));
}

TEST_CASE("slip frequencies match the configured probability") {
  const auto world = four_rooms();
  const double sp = 0.3;
  const TransitionModel model(world, {sp, AbsorbingMode::SharedAbsorbingSet});
  const int s = *world->state_of({2, 2});  // interior: every move lands somewhere new
  double total = 0.0;
  for (const auto& o : model.outcomes(s, Action::North)) total += o.probability;
  CHECK(total == doctest::Approx(1.0));

  const int n = 200000;
  std::map<int, int> counts;
  Rng rng(42);
  for (int i = 0; i < n; ++i) ++counts[model.sample(s, Action::North, rng)];
  auto within = [&](Cell c, double p) {
    const double freq = counts[*world->state_of(c)] / static_cast<double>(n);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(freq - p) <= 3 * se);
  };
  within({1, 2}, 1 - sp);
  within({3, 2}, sp / 3);
  within({2, 3}, sp / 3);
  within({2, 1}, sp / 3);

  // STAY never slips.
  CHECK(model.outcomes(s, Action::Stay).size() == 1);
}

TEST_CASE("episodes refuse to step after absorbing") {
  const auto family = test::sparse_family();
  const Task task = TaskAlgebra(family).universal();
  const TransitionModel model(family->world, {});
  Episode ep(model, task, task.world().goal_state(2));
  Rng rng(0);
  const auto r = ep.step(Action::Stay, rng);
  CHECK(r.terminal);
  CHECK(r.reward == 2.0);
  CHECK(ep.done());
  CHECK_THROWS_AS(ep.step(Action::Stay, rng), ContractViolation);
}

TEST_CASE("transition and family validation") {
  CHECK_THROWS_AS((TransitionConfig{-0.1, AbsorbingMode::SharedAbsorbingSet}.validate()), ValidationError);
  CHECK_THROWS_AS((TransitionConfig{1.5, AbsorbingMode::SharedAbsorbingSet}.validate()), ValidationError);
  CHECK_THROWS_AS(TaskFamily::make(four_rooms(), RewardShape::Sparse, -0.1, -1.0, 2.0), ValidationError);
  CHECK(diameter(*four_rooms(), {0.3, AbsorbingMode::SharedAbsorbingSet}) > 20);
}
