#include "sad/evaluation.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

#include "sad/error.hpp"
#include "sad/scenario_io.hpp"

namespace sad {

namespace {

constexpr std::array<TerminationReason, kTerminationReasonCount> kReasons{
    TerminationReason::GoalReached, TerminationReason::Collision, TerminationReason::Timeout,
    TerminationReason::Standstill, TerminationReason::Offroad};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ls(line);
  std::string cell;
  while (std::getline(ls, cell, ',')) f.push_back(cell);
  return f;
}

EvalCell aggregate(std::string policy, std::string set, std::vector<EpisodeRecord> records) {
  EvalCell c;
  c.policy = std::move(policy);
  c.set = std::move(set);
  c.episodes = records.size();
  if (!records.empty()) {
    c.distribution = termination_distribution(records);
    c.goal_rate = c.distribution[static_cast<std::size_t>(TerminationReason::GoalReached)];
  }
  c.records = std::move(records);
  return c;
}

struct Job {
  std::size_t policy, set, scenario;
  int rep;
};

std::vector<Job> jobs_of(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                         const EvalOptions& opt) {
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    const int reps = policies[p].policy->stochastic() ? opt.stochastic_seeds : 1;
    for (std::size_t s = 0; s < sets.size(); ++s)
      for (int r = 0; r < reps; ++r)
        for (std::size_t k = 0; k < sets[s].scenarios.size(); ++k) jobs.push_back({p, s, k, r});
  }
  return jobs;
}

EvalReport assemble(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                    const std::vector<Job>& jobs, std::vector<EpisodeRecord>& results, std::size_t window) {
  EvalReport rep;
  rep.ma_window = window;
  std::size_t at = 0;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (std::size_t s = 0; s < sets.size(); ++s) {
      std::vector<EpisodeRecord> cell;
      while (at < jobs.size() && jobs[at].policy == p && jobs[at].set == s) cell.push_back(std::move(results[at++]));
      rep.cells.push_back(aggregate(policies[p].name, sets[s].name, std::move(cell)));
    }
  }
  return rep;
}

void check_inputs(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                  const EvalOptions& opt) {
  for (const auto& s : sets)
    if (s.scenarios.empty()) throw std::invalid_argument("test set '" + s.name + "' is empty");
  for (const auto& p : policies)
    if (!p.policy) throw std::invalid_argument("policy '" + p.name + "' is null");
  if (opt.stochastic_seeds < 1) throw std::invalid_argument("stochastic_seeds must be >= 1");
  if (opt.ma_window < 1) throw std::invalid_argument("moving-average window must be >= 1");
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

ReasonPercent termination_distribution(std::span<const TerminationReason> reasons) {
  if (reasons.empty()) throw std::invalid_argument("termination_distribution: no episodes");
  std::array<std::size_t, kTerminationReasonCount> n{};
  for (auto r : reasons) ++n[static_cast<std::size_t>(r)];
  ReasonPercent out{};
  const double m = static_cast<double>(reasons.size());
  for (std::size_t i = 0; i < n.size(); ++i) out[i] = static_cast<double>(n[i]) / m * 100.0;
  return out;
}

ReasonPercent termination_distribution(std::span<const EpisodeRecord> records) {
  std::vector<TerminationReason> r;
  r.reserve(records.size());
  for (const auto& e : records) r.push_back(e.reason);
  return termination_distribution(r);
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  // Direct window sums: O(n W), but free of running-sum drift.
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::size_t from = k + 1 > window ? k + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t j = from; j <= k; ++j) sum += series[j];
    out[k] = sum / static_cast<double>(k + 1 - from);
  }
  return out;
}

std::vector<double> indicator(std::span<const TerminationReason> reasons, TerminationReason r) {
  std::vector<double> out;
  out.reserve(reasons.size());
  for (auto x : reasons) out.push_back(x == r ? 1.0 : 0.0);
  return out;
}

EpisodeRecord run_episode(const Policy& policy, const std::string& name, std::shared_ptr<const Scenario> sc,
                          const EnvConfig& env_cfg, std::uint64_t seed) {
  EnvConfig cfg = env_cfg;
  cfg.mode = mode_of(policy.tag());
  cfg.record_trace = false;
  Env env(cfg);
  Observation obs = env.reset(sc, seed);
  std::mt19937_64 rng(seed);
  EpisodeRecord rec;
  rec.scenario = sc->id;
  rec.kind = sc->kind;
  rec.policy = name;
  rec.seed = seed;
  for (;;) {
    const AgentAction a = policy.act(obs, rng);
    StepOutcome res;
    if (const auto* h = std::get_if<HighLevelAction>(&a))
      res = env.step(*h);
    else {
      const auto& c = std::get<ContinuousAction>(a);
      res = env.step_continuous(c.accel, c.steer_rate);
    }
    rec.ret += res.reward;
    obs = res.obs;
    if (res.terminated) {
      rec.reason = *res.reason;
      break;
    }
  }
  rec.length = static_cast<std::uint64_t>(env.state().step);
  return rec;
}

const EvalCell* EvalReport::find(std::string_view policy, std::string_view set) const {
  for (const auto& c : cells)
    if (c.policy == policy && c.set == set) return &c;
  return nullptr;
}

std::uint64_t episode_seed(std::uint64_t base, std::size_t scenario_index, int rep) {
  std::uint64_t z = base ^ (0x9e3779b97f4a7c15ULL * (scenario_index + 1)) ^ (0xd1b54a32d192ed03ULL * (rep + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EvalReport goal_matrix_serial(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                              const EvalOptions& opt) {
  check_inputs(policies, sets, opt);
  const auto jobs = jobs_of(policies, sets, opt);
  std::vector<EpisodeRecord> results;
  results.reserve(jobs.size());
  for (const auto& j : jobs)
    results.push_back(run_episode(*policies[j.policy].policy, policies[j.policy].name,
                                  sets[j.set].scenarios[j.scenario], opt.env,
                                  episode_seed(opt.seed, j.scenario, j.rep)));
  return assemble(policies, sets, jobs, results, opt.ma_window);
}

EvalReport goal_matrix(const std::vector<NamedPolicy>& policies, const std::vector<TestSet>& sets,
                       const EvalOptions& opt) {
  check_inputs(policies, sets, opt);
  const auto jobs = jobs_of(policies, sets, opt);
  std::vector<EpisodeRecord> results(jobs.size());
  std::string error;
  const auto n = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const auto& j = jobs[static_cast<std::size_t>(i)];
    try {
      results[static_cast<std::size_t>(i)] =
          run_episode(*policies[j.policy].policy, policies[j.policy].name, sets[j.set].scenarios[j.scenario],
                      opt.env, episode_seed(opt.seed, j.scenario, j.rep));
    } catch (const std::exception& e) {
#pragma omp critical(sad_eval_error)
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error(error);
  return assemble(policies, sets, jobs, results, opt.ma_window);
}

std::string goal_matrix_csv(const EvalReport& report) {
  std::string s = "policy,set,episodes,goal_rate\n";
  for (const auto& c : report.cells)
    s += c.policy + ',' + c.set + ',' + std::to_string(c.episodes) + ',' + format_number(c.goal_rate) + '\n';
  return s;
}

std::string termination_csv(const EvalReport& report) {
  std::string s = "policy,set";
  for (auto r : kReasons) s += ',' + std::string(to_string(r));
  s += '\n';
  for (const auto& c : report.cells) {
    s += c.policy + ',' + c.set;
    for (auto r : kReasons) s += ',' + format_number(c.distribution[static_cast<std::size_t>(r)]);
    s += '\n';
  }
  return s;
}

std::string episodes_csv(const EvalReport& report) {
  std::string s = "policy,set,scenario,kind,seed,reason,return,length\n";
  for (const auto& c : report.cells)
    for (const auto& e : c.records)
      s += c.policy + ',' + c.set + ',' + e.scenario + ',' + std::string(to_string(e.kind)) + ',' +
           std::to_string(e.seed) + ',' + std::string(to_string(e.reason)) + ',' + format_number(e.ret) + ',' +
           std::to_string(e.length) + '\n';
  return s;
}

std::string plot_data(std::span<const double> ma) {
  std::string s;
  for (std::size_t k = 0; k < ma.size(); ++k) s += std::to_string(k) + ' ' + format_number(100.0 * ma[k]) + '\n';
  return s;
}

namespace {

void emit_curves(const std::vector<TerminationReason>& reasons, std::size_t window, const std::filesystem::path& dir,
                 const std::string& stem) {
  for (auto r : kReasons) {
    const auto ind = indicator(reasons, r);
    write_text_file(dir / (stem + std::string(to_string(r)) + ".dat"), plot_data(moving_average(ind, window)));
  }
}

}  // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
  write_text_file(dir / "goal_matrix.csv", goal_matrix_csv(report));
  write_text_file(dir / "termination.csv", termination_csv(report));
  write_text_file(dir / "episodes.csv", episodes_csv(report));
  for (const auto& c : report.cells) {
    std::vector<TerminationReason> reasons;
    for (const auto& e : c.records) reasons.push_back(e.reason);
    emit_curves(reasons, report.ma_window, dir / "plots", c.policy + "_" + c.set + "_");
  }
}

void emit_training_curves(const std::vector<TrainLogRow>& log, std::size_t window,
                          const std::filesystem::path& dir) {
  std::vector<TerminationReason> reasons;
  for (const auto& r : log) reasons.push_back(r.reason);
  emit_curves(reasons, window, dir, "train_");
}

std::vector<GoalMatrixRow> parse_goal_matrix_csv(std::string_view text) {
  std::vector<GoalMatrixRow> rows;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "policy,set,episodes,goal_rate") throw SchemaError("goal_matrix.csv", "unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw SchemaError("goal_matrix.csv line " + std::to_string(lineno), "expected 4 columns");
    GoalMatrixRow r{f[0], f[1], 0, 0.0};
    const auto e1 = std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.episodes);
    const auto e2 = std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.goal_rate);
    if (e1.ec != std::errc{} || e2.ec != std::errc{})
      throw SchemaError("goal_matrix.csv line " + std::to_string(lineno), "malformed number");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sad
