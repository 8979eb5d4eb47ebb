#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace bta;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bta_experiments_test" / name;
  fs::remove_all(dir);
  return dir;
}

/// Every manifest entry exists; every CSV has a consistent column count
/// outside quoted fields.
void check_manifest(const fs::path& dir, const std::vector<ManifestEntry>& entries) {
  REQUIRE(fs::exists(dir / "manifest.csv"));
  for (const auto& e : entries) {
    const auto path = dir / e.file;
    REQUIRE(fs::exists(path));
    if (path.extension() == ".svg") {
      const auto text = slurp(path);
      CHECK(text.starts_with("<svg"));
      CHECK(text.find("</svg>") != std::string::npos);
    }
    if (path.extension() != ".csv") continue;
    std::ifstream in(path);
    std::string line;
    int columns = -1;
    while (std::getline(in, line)) {
      int c = 1;
      bool quoted = false;
      for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        if (ch == ',' && !quoted) ++c;
      }
      if (columns < 0) columns = c;
      CHECK(c == columns);
    }
  }
}

}  // namespace

TEST_CASE("config keys, dump and file loading") {
  ExperimentConfig cfg;
  cfg.set("alpha", "0.25");
  cfg.set(" sp ", " 0.1 ");
  cfg.set("absorbing", "own");
  cfg.set("learned", "true");
  CHECK(cfg.hp.alpha == 0.25);
  CHECK(cfg.transition.slip_probability == 0.1);
  CHECK(cfg.transition.absorbing == AbsorbingMode::TaskOwnGoalsOnly);
  CHECK(cfg.learned);
  CHECK_THROWS_AS(cfg.set("nonsense", "1"), ValidationError);
  CHECK_THROWS_AS(cfg.set("episodes", "ten"), ValidationError);
  CHECK_THROWS_AS(cfg.set("reward", "lumpy"), ValidationError);

  const auto path = fs::temp_directory_path() / "bta_config_test.txt";
  {
    std::ofstream out(path);
    out << cfg.dump() << "# trailing comment\n\nseeds = 3  # inline\n";
  }
  const auto loaded = load_config_file(path);
  CHECK(loaded.dump() == [&] {
    auto c = cfg;
    c.num_seeds = 3;
    return c.dump();
  }());

  ExperimentConfig bad;
  bad.hp.episodes = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.num_seeds = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(load_config_file("/nonexistent.cfg"), ValidationError);
}

TEST_CASE("task specs") {
  const TaskAlgebra alg(test::sparse_family());
  CHECK(parse_task_spec("goals=3,1", alg).desired.indices() == std::vector<int>{1, 3});
  CHECK(parse_task_spec("L", alg).desired.indices() == std::vector<int>{0, 2});
  CHECK(parse_task_spec("T", alg).desired.indices() == std::vector<int>{0, 1});
  CHECK_THROWS_AS(parse_task_spec("goals=9", alg), ValidationError);
  CHECK_THROWS_AS(parse_task_spec("L &", alg), ParseError);
  CHECK(default_base_names(*resolve_map("four_rooms_40")).size() == 6);
}

TEST_CASE("solvable task counts") {
  CHECK(boolean_task_count(1) == "4");
  CHECK(boolean_task_count(2) == "16");
  CHECK(boolean_task_count(3) == "256");
  CHECK(boolean_task_count(5) == "4294967296");
  CHECK(boolean_task_count(6) == "18446744073709551616");
  CHECK_THROWS_AS(boolean_task_count(7), ValidationError);
}

TEST_CASE("linear fit quality") {
  CHECK(linear_r2({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(linear_r2({1, 2, 3, 4}, {1, 4, 9, 16}) == doctest::Approx(625.0 / (5.0 * 129.0)));
  CHECK(linear_r2({1, 2, 3}, {5, 5, 5}) == 1.0);
}

TEST_CASE("finite-horizon optimum matches truncated returns") {
  const TaskAlgebra alg(test::sparse_family());
  const auto v = optimal_state_values(alg.empty(), {0.0, AbsorbingMode::TaskOwnGoalsOnly}, 416);
  CHECK((v - (-41.6)).abs().maxCoeff() <= 1e-9);
  const int tl[] = {0};
  const auto a = optimal_state_values(alg.task(tl), {}, 416);
  const auto b = optimal_state_values(alg.task(tl), {});
  CHECK((a - b).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("four rooms driver is deterministic and complete") {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("fr_a");
  cfg.eval_episodes = 200;
  const auto a = run_four_rooms(cfg);
  REQUIRE(a.tasks.size() == 16);
  REQUIRE(a.panels.size() == 6);
  for (const auto& t : a.tasks) CHECK(t.optimal);
  CHECK(a.panels[5].goals == std::vector<int>{3});
  check_manifest(cfg.out_dir, a.manifest);

  ExperimentConfig again = cfg;
  again.out_dir = scratch("fr_b");
  const auto b = run_four_rooms(again);
  REQUIRE(a.manifest.size() == b.manifest.size());
  for (const auto& e : a.manifest) CHECK(slurp(cfg.out_dir / e.file) == slurp(again.out_dir / e.file));
}

TEST_CASE("scaling driver on a small budget") {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("scaling");
  cfg.num_seeds = 2;
  cfg.scaling_tasks = 3;
  const auto r = run_scaling(cfg);
  REQUIRE(r.samples.size() == 3);
  CHECK(r.monotone);
  CHECK(r.unconverged_runs == 0);
  REQUIRE(r.counts.size() == 3);
  CHECK(r.counts[1].boolean_tasks == "16");
  CHECK(r.counts[1].disjunction_tasks == 3);
  CHECK(r.enumerated_distinct_k2 == 16);
  CHECK(r.forty.base_tasks == 6);
  CHECK(r.forty.all_optimal);
  check_manifest(cfg.out_dir, r.manifest);
}

TEST_CASE("relaxation driver emits both figures") {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("relax");
  cfg.relax_eval_episodes = 300;
  const auto r = run_relaxations(cfg);
  REQUIRE(r.variants.size() == 6);
  CHECK(r.sparse_same_optimal);
  CHECK(fs::exists(cfg.out_dir / "relaxations_absorbing_reward.csv"));
  CHECK(fs::exists(cfg.out_dir / "relaxations_slip.csv"));
  check_manifest(cfg.out_dir, r.manifest);
}
