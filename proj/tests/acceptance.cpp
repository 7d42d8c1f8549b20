// Acceptance gate. Every criterion prints one PASS/FAIL line with the
// measured numbers; `acceptance <name>` runs a single one.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sad/a2c.hpp"
#include "sad/evaluation.hpp"
#include "sad/factory.hpp"
#include "sad/policy.hpp"
#include "sad/road.hpp"
#include "sad/scenario_io.hpp"
#include "sad/train.hpp"

using namespace sad;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sad_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SAD_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TestSet load_set(const std::string& name, const fs::path& manifest) {
  return {name, load_scenarios(evaluation_paths(manifest))};
}

double pct(std::size_t n, std::size_t m) { return m ? 100.0 * static_cast<double>(n) / static_cast<double>(m) : 0.0; }

// ---- criteria ----

Verdict maintain_criticality() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = work_dir("criticality");
  std::vector<TestSet> sets;
  std::string detail;
  for (auto [kind, name] : {std::pair{ScenarioKind::TypeA, "A"}, std::pair{ScenarioKind::TypeB, "B"},
                            std::pair{ScenarioKind::Cutout, "Cutout"}}) {
    const auto r = build_dataset({{kind, false, 0, 200}}, 2024, dir / name);
    if (!r.failures.empty()) return {false, fmt("%zu generation failures for %s", r.failures.size(), name)};
    sets.push_back(load_set(name, dir / name / "manifest.json"));
  }
  const MaintainPolicy maintain;
  const auto rep = goal_matrix({{"maintain", &maintain}}, sets, EvalOptions{});
  bool ok = true;
  for (const auto& c : rep.cells) {
    ok &= c.episodes == 200 && c.goal_rate == 0.0;
    detail += fmt("G(%s)=%g%% ", c.set.c_str(), c.goal_rate);
  }
  const double secs = seconds_since(t0);
  ok &= secs < 120.0;
  return {ok, detail + fmt("in %.1f s", secs)};
}

Verdict easy_solvability() {
  const auto dir = work_dir("easy");
  const auto r = build_dataset({{ScenarioKind::TypeA, true, 0, 67},
                                {ScenarioKind::TypeB, true, 0, 67},
                                {ScenarioKind::Cutout, true, 0, 66}},
                               2024, dir);
  if (!r.failures.empty()) return {false, fmt("%zu generation failures", r.failures.size())};
  const MaintainPolicy maintain;
  const auto rep = goal_matrix({{"maintain", &maintain}}, {load_set("easy", dir / "manifest.json")}, EvalOptions{});
  const auto& c = rep.cells[0];
  return {c.episodes == 200 && c.goal_rate == 100.0, fmt("G(maintain, easy)=%g%% over %zu", c.goal_rate, c.episodes)};
}

struct WindowStats {
  double goal, collision, offroad;
  std::size_t episodes;
};

WindowStats final_window(const std::vector<TrainLogRow>& log, std::size_t window = 100) {
  const std::size_t n = std::min(window, log.size());
  std::size_t g = 0, c = 0, o = 0;
  for (std::size_t k = log.size() - n; k < log.size(); ++k) {
    g += log[k].reason == TerminationReason::GoalReached;
    c += log[k].reason == TerminationReason::Collision;
    o += log[k].reason == TerminationReason::Offroad;
  }
  return {pct(g, n), pct(c, n), pct(o, n), log.size()};
}

std::vector<std::shared_ptr<const Scenario>> single_type_a() {
  GenParams p;
  p.seed = 1;
  return {std::make_shared<const Scenario>(generate_type_a(p))};
}

Verdict hrl_overfit() {
  const auto set = single_type_a();
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    TrainConfig cfg;
    cfg.budget = 200000;
    cfg.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto w = final_window(train(set, cfg).log);
    const bool ok = w.goal >= 80.0 && w.collision <= 20.0;
    passed += ok;
    detail += fmt("seed %llu: goal %g%% coll %g%% (%.1f s); ", static_cast<unsigned long long>(seed), w.goal,
                  w.collision, seconds_since(t0));
  }
  return {passed >= 3, detail + fmt("%d/4 seeds pass", passed)};
}

Verdict no_hrl_ablation() {
  const auto set = single_type_a();
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    TrainConfig cfg;
    cfg.policy = PolicyTag::A2cContinuous;
    cfg.budget = 200000;
    cfg.seed = seed;
    const auto w = final_window(train(set, cfg).log);
    ok &= w.goal < 5.0 && w.offroad + w.collision >= 90.0;
    detail += fmt("seed %llu: goal %g%% offroad+coll %g%%; ", static_cast<unsigned long long>(seed), w.goal,
                  w.offroad + w.collision);
  }
  return {ok, detail};
}

Verdict shield_offroad() {
  const auto dir = work_dir("shield");
  const auto r = build_dataset({{ScenarioKind::TypeA, false, 0, 34},
                                {ScenarioKind::TypeB, false, 0, 33},
                                {ScenarioKind::Cutout, false, 0, 33}},
                               77, dir);
  if (!r.failures.empty()) return {false, "generation failures"};
  const std::vector<TestSet> sets{load_set("mixed", dir / "manifest.json")};
  const RandomPolicy random;
  EvalOptions opt;
  opt.stochastic_seeds = 5;  // 100 scenarios x 5 = 500 episodes
  const auto count_offroad = [&](bool shield) {
    opt.env.shield.enabled = shield;
    const auto rep = goal_matrix({{"random", &random}}, sets, opt);
    std::size_t n = 0;
    for (const auto& e : rep.cells[0].records) n += e.reason == TerminationReason::Offroad;
    return std::pair{n, rep.cells[0].episodes};
  };
  const auto [with, m1] = count_offroad(true);
  const auto [without, m2] = count_offroad(false);
  return {m1 == 500 && with == 0 && without >= 1,
          fmt("offroad with shield %zu/%zu, without %zu/%zu", with, m1, without, m2)};
}

Verdict metrics_formulas() {
  std::mt19937_64 rng(2024);
  double worst_sum = 0.0;
  bool exact = true;
  for (int n = 0; n < 1000; ++n) {
    std::vector<TerminationReason> m(1 + rng() % 500);
    std::array<std::size_t, kTerminationReasonCount> count{};
    for (auto& r : m) {
      r = static_cast<TerminationReason>(rng() % kTerminationReasonCount);
      ++count[static_cast<std::size_t>(r)];
    }
    const auto p = termination_distribution(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      exact &= p[i] == static_cast<double>(count[i]) / static_cast<double>(m.size()) * 100.0;
      sum += p[i];
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 100.0));
  }
  bool ma_exact = true;
  for (int n = 0; n < 200; ++n) {
    std::vector<double> s(rng() % 600);
    for (double& v : s) v = static_cast<double>(rng() % 2);
    const std::size_t w = 1 + rng() % 150;
    const auto ma = moving_average(s, w);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::size_t lo = k + 1 >= w ? k + 1 - w : 0;
      double sum = 0.0;
      for (std::size_t j = lo; j <= k; ++j) sum += s[j];
      ma_exact &= ma[k] == sum / static_cast<double>(k - lo + 1);
    }
  }
  return {exact && ma_exact && worst_sum <= 1e-9,
          fmt("distribution exact=%d, moving average exact=%d, max |sum-100|=%.3g", exact, ma_exact, worst_sum)};
}

Verdict gradient_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> g(0, 0.5);
  A2cConfig cfg;
  cfg.entropy_coef = 0.05;
  double worst = 0.0;
  int draws = 0;
  for (HeadKind head : {HeadKind::Discrete, HeadKind::Gaussian}) {
    const ActorCritic net(head, 6, {8, 8});
    for (int d = 0; d < 20; ++d, ++draws) {
      auto p = net.init_params(rng(), 0.0);
      for (double& x : p) x += g(rng);
      if (head == HeadKind::Gaussian) {
        p[net.log_std_offset()] = -1.0 + u(rng) * 0.5;
        p[net.log_std_offset() + 1] = u(rng) * 0.5;
      }
      std::vector<Sample> batch(8);
      for (auto& s : batch) {
        for (int k = 0; k < 6; ++k) s.obs.push_back(u(rng));
        s.discrete = {static_cast<int>(rng() % 3), static_cast<int>(rng() % 4)};
        s.u = {2 * u(rng), 2 * u(rng)};
        s.ret = 2 * u(rng);
        s.advantage = u(rng);
      }
      std::vector<double> grad(p.size(), 0.0);
      loss_and_grad(net, p, batch, cfg, grad);
      const double h = 1e-6;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double keep = p[k];
        p[k] = keep + h;
        const double up = loss_and_grad(net, p, batch, cfg, {}).total;
        p[k] = keep - h;
        const double down = loss_and_grad(net, p, batch, cfg, {}).total;
        p[k] = keep;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-4}));
      }
    }
  }
  return {worst < 1e-4, fmt("%d draws, worst relative error %.3g", draws, worst)};
}

// Same ODE, independent code, controls held per 0.1 s.
VehicleState reference_rollout(VehicleState s, const std::vector<std::pair<double, double>>& ctrl, double h,
                               const VehicleParams& p) {
  const int sub = static_cast<int>(std::lround(0.1 / h));
  for (const auto& [a, sr] : ctrl)
    for (int k = 0; k < sub; ++k) {
      const double x = s.s_x + s.v * std::cos(s.psi) * h;
      const double y = s.s_y + s.v * std::sin(s.psi) * h;
      const double psi = wrap_angle(s.psi + s.v / p.wheelbase * std::tan(s.delta) * h);
      s = {x, y, std::clamp(s.v + a * h, 0.0, p.v_max), std::clamp(s.delta + sr * h, -p.delta_max, p.delta_max),
           psi};
    }
  return s;
}

struct IntegratorRun {
  VehicleState s0, ref, coarse, half;
};

std::vector<IntegratorRun> integrator_runs() {
  const VehicleParams p;
  std::mt19937_64 rng(7);
  // one decision tick of 10 steps, as the pilot sees it
  std::uniform_real_distribution<double> acc(p.a_min, p.a_max), rate(-p.vdelta_max, p.vdelta_max), v0(10, 30),
      d0(-0.1, 0.1);
  std::vector<IntegratorRun> out;
  for (int n = 0; n < 20; ++n) {
    const VehicleState s0{0, 0, v0(rng), d0(rng), 0};
    std::vector<std::pair<double, double>> ctrl(10);
    for (auto& c : ctrl) c = {acc(rng), rate(rng)};
    IntegratorRun r{s0, reference_rollout(s0, ctrl, 1e-4, p), s0, s0};
    for (const auto& [a, sr] : ctrl) {
      r.coarse = bicycle_step(r.coarse, a, sr, 0.1, p);
      r.half = bicycle_step(bicycle_step(r.half, a, sr, 0.05, p), a, sr, 0.05, p);
    }
    out.push_back(r);
  }
  return out;
}

// Component-wise relative error of the final (s_x, s_y, psi), relative to
// the reference excursion of each component.
Verdict integrator_accuracy() {
  double wx = 0, wy = 0, wpsi = 0;
  int within = 0;
  for (const auto& r : integrator_runs()) {
    const double ex = std::abs(r.coarse.s_x - r.ref.s_x) / std::abs(r.ref.s_x - r.s0.s_x);
    const double ey = std::abs(r.coarse.s_y - r.ref.s_y) / std::abs(r.ref.s_y - r.s0.s_y);
    const double ep = std::abs(wrap_angle(r.coarse.psi - r.ref.psi)) / std::abs(wrap_angle(r.ref.psi - r.s0.psi));
    wx = std::max(wx, ex);
    wy = std::max(wy, ey);
    wpsi = std::max(wpsi, ep);
    within += ex < 0.01 && ey < 0.01 && ep < 0.01;
  }
  // the fixed example: v=10, delta=0.1, no input, one second
  const VehicleParams p;
  const VehicleState s0{0, 0, 10, 0.1, 0};
  const auto ref = reference_rollout(s0, std::vector<std::pair<double, double>>(10, {0.0, 0.0}), 1e-4, p);
  VehicleState c = s0;
  for (int k = 0; k < 10; ++k) c = bicycle_step(c, 0, 0, 0.1, p);
  return {within == 20,
          fmt("%d/20 within 1%%; worst relative error s_x %.3g, s_y %.3g, psi %.3g; fixed example errors s_x %.3g "
              "s_y %.3g psi %.3g",
              within, wx, wy, wpsi, std::abs(c.s_x - ref.s_x) / ref.s_x, std::abs(c.s_y - ref.s_y) / ref.s_y,
              std::abs(c.psi - ref.psi) / ref.psi)};
}

Verdict integrator_order() {
  double lo = 1e9, hi = 0;
  for (const auto& r : integrator_runs()) {
    const double e1 = std::hypot(r.coarse.s_x - r.ref.s_x, r.coarse.s_y - r.ref.s_y);
    const double e2 = std::hypot(r.half.s_x - r.ref.s_x, r.half.s_y - r.ref.s_y);
    lo = std::min(lo, e1 / e2);
    hi = std::max(hi, e1 / e2);
  }
  return {lo >= 1.6 && hi <= 2.4, fmt("error ratio dt=0.1 : dt=0.05 in [%.3f, %.3f]", lo, hi)};
}

Verdict cli_determinism() {
  const auto dir = work_dir("determinism");
  std::string detail;
  bool ok = true;
  auto both = [&](const std::string& args_a, const std::string& args_b) {
    ok &= run_cli(args_a) == 0;
    ok &= run_cli(args_b) == 0;
  };
  const auto d = [&](const std::string& s) { return "'" + (dir / s).string() + "'"; };
  both("generate --kind A --kind B --kind cutout --count 4 --test-count 3 --seed 9 --out " + d("g1"),
       "generate --kind A --kind B --kind cutout --count 4 --test-count 3 --seed 9 --out " + d("g2"));
  both("train --manifest " + d("g1/manifest.json") + " --budget 5000 --seed 2 --checkpoint-every 2000 --out " + d("t1"),
       "train --manifest " + d("g1/manifest.json") + " --budget 5000 --seed 2 --checkpoint-every 2000 --out " + d("t2"));
  both("eval --policy maintain --policy random --checkpoint " + d("t1/checkpoint.json") + " --manifest " +
           d("g1/manifest.json") + " --seed 3 --out " + d("e1"),
       "eval --policy maintain --policy random --checkpoint " + d("t1/checkpoint.json") + " --manifest " +
           d("g1/manifest.json") + " --seed 3 --out " + d("e2"));
  if (!ok) return {false, "a CLI run failed"};

  std::size_t files = 0, differ = 0;
  for (auto [a, b] : {std::pair{"g1", "g2"}, std::pair{"t1", "t2"}, std::pair{"e1", "e2"}}) {
    for (const auto& e : fs::recursive_directory_iterator(dir / a)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), dir / a);
      if (rel == "timing.csv") continue;  // wall-clock by design
      ++files;
      if (slurp(e.path()) != slurp(dir / b / rel)) {
        ++differ;
        detail += rel.string() + " differs; ";
      }
    }
  }
  return {differ == 0 && files > 20, detail + fmt("%zu files compared, %zu differ", files, differ)};
}

Verdict table_ordering() {
  const auto dir = work_dir("ordering");
  const auto train_set = build_dataset({{ScenarioKind::TypeA, false, 100, 0},
                                        {ScenarioKind::TypeB, false, 100, 0},
                                        {ScenarioKind::Cutout, false, 100, 0},
                                        {ScenarioKind::TypeA, true, 10, 0},
                                        {ScenarioKind::TypeB, true, 10, 0},
                                        {ScenarioKind::Cutout, true, 10, 0}},
                                       11, dir / "train");
  if (!train_set.failures.empty()) return {false, "generation failures"};
  std::vector<TestSet> sets;
  for (auto [kind, name] : {std::pair{ScenarioKind::TypeA, "A"}, std::pair{ScenarioKind::TypeB, "B"},
                            std::pair{ScenarioKind::Cutout, "Cutout"}}) {
    const auto r = build_dataset({{kind, false, 0, 100}}, 99, dir / name);
    if (!r.failures.empty()) return {false, "generation failures"};
    sets.push_back(load_set(name, dir / name / "manifest.json"));
  }

  TrainConfig cfg;
  cfg.budget = 300000;
  cfg.seed = 1;
  const auto res = train(load_scenarios(split_paths(dir / "train" / "manifest.json", false)), cfg);
  const auto agent = make_policy(*res.checkpoint, cfg.env, cfg.a2c);
  const MaintainPolicy maintain;
  const RandomPolicy random;
  const auto rep = goal_matrix({{"maintain", &maintain}, {"random", &random}, {"a2c", agent.get()}}, sets,
                               EvalOptions{});
  bool ok = true;
  std::string detail;
  for (const auto& s : sets) {
    const double a = rep.find("a2c", s.name)->goal_rate;
    const double m = rep.find("maintain", s.name)->goal_rate;
    const double r = rep.find("random", s.name)->goal_rate;
    ok &= a > m && a > r;
    detail += fmt("%s: a2c %g%% maintain %g%% random %g%%; ", s.name.c_str(), a, m, r);
  }
  return {ok, detail + fmt("%llu sub-steps", static_cast<unsigned long long>(res.substeps))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"maintain_criticality", maintain_criticality},
      {"easy_solvability", easy_solvability},
      {"hrl_overfit", hrl_overfit},
      {"no_hrl_ablation", no_hrl_ablation},
      {"shield_offroad", shield_offroad},
      {"metrics_formulas", metrics_formulas},
      {"gradient_oracle", gradient_oracle},
      {"integrator_accuracy", integrator_accuracy},
      {"integrator_order", integrator_order},
      {"cli_determinism", cli_determinism},
      {"table_ordering", table_ordering},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.size() == 1 && wanted[0] == "--list") {
    for (const auto& [name, fn] : criteria) std::printf("%s\n", name.c_str());
    return 0;
  }
  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    ++ran;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion; use --list\n");
    return 2;
  }
  return failed ? 1 : 0;
}
