#include <algorithm>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sad/evaluation.hpp"

using namespace sad;
namespace fs = std::filesystem;

TEST_SUITE("evaluation") {

namespace {

using R = TerminationReason;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TestSet make_set(const std::string& name, ScenarioKind kind, int n, bool easy = false) {
  TestSet s{name, {}};
  for (int i = 0; i < n; ++i) {
    GenParams p;
    p.seed = static_cast<std::uint64_t>(100 + i);
    p.easy = easy;
    s.scenarios.push_back(std::make_shared<const Scenario>(generate(kind, p)));
  }
  return s;
}

EvalOptions unshielded() {
  EvalOptions o;
  o.env.shield.enabled = false;
  return o;
}

}  // namespace

TEST_CASE("termination distribution") {
  const std::vector<R> r{R::GoalReached, R::Collision, R::GoalReached, R::GoalReached};
  const auto d = termination_distribution(r);
  CHECK(d[static_cast<std::size_t>(R::GoalReached)] == 75.0);
  CHECK(d[static_cast<std::size_t>(R::Collision)] == 25.0);
  CHECK(d[static_cast<std::size_t>(R::Offroad)] == 0.0);
  CHECK_THROWS_AS(termination_distribution(std::vector<R>{}), std::invalid_argument);
  CHECK_THROWS_AS(termination_distribution(std::vector<EpisodeRecord>{}), std::invalid_argument);

  std::mt19937_64 rng(1);
  for (int n = 0; n < 1000; ++n) {
    std::vector<R> m(1 + rng() % 300);
    std::array<int, kTerminationReasonCount> count{};
    for (auto& x : m) {
      x = static_cast<R>(rng() % kTerminationReasonCount);
      ++count[static_cast<std::size_t>(x)];
    }
    const auto p = termination_distribution(m);
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += p[i];
      CHECK(p[i] == doctest::Approx(100.0 * count[i] / static_cast<double>(m.size())));
    }
    CHECK(std::abs(sum - 100.0) < 1e-9);
    // Order does not matter.
    std::shuffle(m.begin(), m.end(), rng);
    CHECK(termination_distribution(m) == p);
  }
}

TEST_CASE("moving average") {
  const std::vector<double> x{0, 0, 1, 1};
  CHECK(moving_average(x, 2) == std::vector<double>{0, 0, 0.5, 1});
  CHECK(moving_average(x, 100) == std::vector<double>{0, 0, 1.0 / 3, 0.5});
  CHECK(moving_average(x, 1) == x);
  CHECK(moving_average(std::vector<double>{}, 3).empty());
  CHECK_THROWS_AS(moving_average(x, 0), std::invalid_argument);

  std::mt19937_64 rng(2);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> s(rng() % 400);
    for (double& v : s) v = static_cast<double>(rng() % 2);
    const std::size_t w = 1 + rng() % 120;
    const auto ma = moving_average(s, w);
    REQUIRE(ma.size() == s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::size_t lo = k + 1 >= w ? k + 1 - w : 0;
      double sum = 0;
      for (std::size_t j = lo; j <= k; ++j) sum += s[j];
      CHECK(ma[k] == sum / static_cast<double>(k - lo + 1));
      CHECK(ma[k] >= 0.0);
      CHECK(ma[k] <= 1.0);
    }
  }
}

TEST_CASE("indicator and plot data") {
  const std::vector<R> r{R::Collision, R::GoalReached, R::Collision};
  CHECK(indicator(r, R::Collision) == std::vector<double>{1, 0, 1});
  const std::vector<double> ma{0.0, 0.5, 2.0 / 3};
  CHECK(plot_data(ma) == "0 0\n1 50\n2 66.66666666666666\n");
}

TEST_CASE("format_number is shortest round-trip") {
  CHECK(format_number(75.0) == "75");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.5) == "-0.5");
  CHECK(std::stod(format_number(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("episode seeds differ across scenarios and reps") {
  CHECK(episode_seed(0, 0, 0) != episode_seed(0, 1, 0));
  CHECK(episode_seed(0, 0, 0) != episode_seed(0, 0, 1));
  CHECK(episode_seed(0, 0, 0) != episode_seed(1, 0, 0));
  CHECK(episode_seed(5, 3, 2) == episode_seed(5, 3, 2));
}

TEST_CASE("maintain reaches no goal on critical sets and all on easy ones") {
  const MaintainPolicy maintain;
  const std::vector<NamedPolicy> pols{{"maintain", &maintain}};
  const std::vector<TestSet> sets{make_set("A", ScenarioKind::TypeA, 6), make_set("B", ScenarioKind::TypeB, 6),
                                  make_set("Cutout", ScenarioKind::Cutout, 6),
                                  make_set("Easy", ScenarioKind::TypeA, 6, true)};
  const auto rep = goal_matrix(pols, sets, unshielded());
  REQUIRE(rep.cells.size() == 4);
  for (const char* s : {"A", "B", "Cutout"}) {
    const auto* c = rep.find("maintain", s);
    REQUIRE(c);
    CHECK(c->goal_rate == 0.0);
    CHECK(c->distribution[static_cast<std::size_t>(R::Collision)] == 100.0);
    CHECK(c->episodes == 6);
  }
  CHECK(rep.find("maintain", "Easy")->goal_rate == 100.0);
  CHECK(rep.find("random", "A") == nullptr);
}

TEST_CASE("parallel and serial goal matrices are identical") {
  const MaintainPolicy maintain;
  const RandomPolicy random;
  const std::vector<NamedPolicy> pols{{"maintain", &maintain}, {"random", &random}};
  const std::vector<TestSet> sets{make_set("A", ScenarioKind::TypeA, 5), make_set("Cutout", ScenarioKind::Cutout, 4)};
  EvalOptions opt;
  opt.seed = 9;
  opt.stochastic_seeds = 3;
  const auto a = goal_matrix_serial(pols, sets, opt);
  const auto b = goal_matrix(pols, sets, opt);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].records == b.cells[i].records);
    CHECK(a.cells[i].distribution == b.cells[i].distribution);
  }
  CHECK(episodes_csv(a) == episodes_csv(b));
  CHECK(a.find("random", "A")->episodes == 15);
  CHECK(a.find("maintain", "A")->episodes == 5);
}

TEST_CASE("input validation") {
  const MaintainPolicy maintain;
  const std::vector<NamedPolicy> pols{{"maintain", &maintain}};
  CHECK_THROWS_AS(goal_matrix(pols, {TestSet{"empty", {}}}, EvalOptions{}), std::invalid_argument);
  CHECK_THROWS_AS(goal_matrix({{"null", nullptr}}, {make_set("A", ScenarioKind::TypeA, 1)}, EvalOptions{}),
                  std::invalid_argument);
  EvalOptions bad;
  bad.stochastic_seeds = 0;
  CHECK_THROWS_AS(goal_matrix(pols, {make_set("A", ScenarioKind::TypeA, 1)}, bad), std::invalid_argument);
}

TEST_CASE("goal rate is invariant under scenario permutation") {
  const RandomPolicy random;
  const MaintainPolicy maintain;
  TestSet s = make_set("A", ScenarioKind::TypeA, 6);
  s.scenarios.push_back(make_set("E", ScenarioKind::TypeA, 1, true).scenarios[0]);
  // Maintain is deterministic, so reordering only permutes the episodes.
  const auto base = goal_matrix({{"m", &maintain}}, {s}, unshielded());
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    TestSet p = s;
    std::shuffle(p.scenarios.begin(), p.scenarios.end(), rng);
    const auto r = goal_matrix({{"m", &maintain}}, {p}, unshielded());
    CHECK(r.cells[0].goal_rate == base.cells[0].goal_rate);
    CHECK(r.cells[0].distribution == base.cells[0].distribution);
  }
  CHECK(base.cells[0].goal_rate == doctest::Approx(100.0 / 7));
  (void)random;
}

TEST_CASE("report files are deterministic and round trip") {
  const MaintainPolicy maintain;
  const RandomPolicy random;
  const std::vector<NamedPolicy> pols{{"maintain", &maintain}, {"random", &random}};
  const std::vector<TestSet> sets{make_set("A", ScenarioKind::TypeA, 3)};
  EvalOptions opt = unshielded();
  opt.ma_window = 2;
  const auto d1 = test::scratch("report1"), d2 = test::scratch("report2");
  emit_report(goal_matrix(pols, sets, opt), d1);
  emit_report(goal_matrix_serial(pols, sets, opt), d2);
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(d1))
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), d1).string());
  std::sort(names.begin(), names.end());
  CHECK(names.size() == 3 + 2 * kTerminationReasonCount);
  for (const auto& n : names) CHECK_MESSAGE(slurp(d1 / n) == slurp(d2 / n), n);
  CHECK(fs::exists(d1 / "plots" / "maintain_A_Collision.dat"));
  CHECK(slurp(d1 / "plots" / "maintain_A_Collision.dat") == "0 100\n1 100\n2 100\n");

  const std::string gm = slurp(d1 / "goal_matrix.csv");
  CHECK(gm.rfind("policy,set,episodes,goal_rate\n", 0) == 0);
  const auto rows = parse_goal_matrix_csv(gm);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == GoalMatrixRow{"maintain", "A", 3, 0.0});
  CHECK(slurp(d1 / "termination.csv").rfind("policy,set,GoalReached,Collision,Timeout,Standstill,Offroad\n", 0) == 0);
}

TEST_CASE("training curves") {
  std::vector<TrainLogRow> log(4);
  log[2].reason = R::GoalReached;
  log[3].reason = R::GoalReached;
  const auto d = test::scratch("curves");
  emit_training_curves(log, 2, d);
  CHECK(slurp(d / "train_GoalReached.dat") == "0 0\n1 0\n2 50\n3 100\n");
  CHECK(slurp(d / "train_Timeout.dat") == "0 100\n1 100\n2 50\n3 0\n");
}

TEST_CASE("train log CSV round trip") {
  TrainConfig cfg;
  cfg.policy = PolicyTag::Random;
  cfg.budget = 2000;
  std::vector<std::shared_ptr<const Scenario>> set = make_set("A", ScenarioKind::TypeA, 2).scenarios;
  const auto r = train(set, cfg);
  const auto csv = train_log_csv(r.log);
  CHECK(train_log_csv(parse_train_log_csv(csv)) == csv);
  CHECK(timing_csv(r.log).rfind("episode,wall_time\n", 0) == 0);
}

}
