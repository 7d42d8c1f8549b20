// sad-sim: scenario generation, training, evaluation and an env server.
//
// Exit codes: 0 ok, 1 usage, 2 data error (malformed/infeasible input),
// 3 runtime error.

#include <CLI11.hpp>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sad/config.hpp"
#include "sad/drivability.hpp"
#include "sad/error.hpp"
#include "sad/evaluation.hpp"
#include "sad/factory.hpp"
#include "sad/policy.hpp"
#include "sad/protocol.hpp"
#include "sad/scenario_io.hpp"
#include "sad/train.hpp"

namespace fs = std::filesystem;
using namespace sad;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kRuntime = 3;

RunConfig run_config(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

// "name=path" or just "path" (name derived by `fallback`).
std::pair<std::string, std::string> named(const std::string& arg, const std::string& fallback) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fallback, arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::string set_name(const fs::path& manifest) {
  const auto dir = manifest.parent_path().filename().string();
  return dir.empty() ? manifest.stem().string() : dir;
}

// ---- generate ----

struct GenerateArgs {
  std::vector<std::string> kinds;
  int count = 0;
  int test_count = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool easy = false;
  bool serial = false;
  std::string config;
};

int cmd_generate(const GenerateArgs& a) {
  const RunConfig cfg = run_config(a.config);
  std::vector<DatasetRequest> reqs;
  for (const auto& k : a.kinds) {
    const auto kind = parse_kind(k);
    if (!kind || (*kind != ScenarioKind::TypeA && *kind != ScenarioKind::TypeB && *kind != ScenarioKind::Cutout)) {
      std::cerr << "generate: unknown scenario kind '" << k << "' (A, B or cutout)\n";
      return kUsage;
    }
    reqs.push_back({*kind, a.easy, a.count, a.test_count});
  }
  const auto res = build_dataset(reqs, a.seed, a.out, cfg.gen, !a.serial);
  for (const auto& f : res.failures)
    std::cerr << "generate: " << f.split << ' ' << to_string(f.kind) << " #" << f.index << " (seed " << f.seed
              << "): " << f.message << '\n';
  std::cout << (fs::path(a.out) / "manifest.json").string() << '\n';
  return res.failures.empty() ? 0 : kRuntime;
}

// ---- validate / filter ----

std::vector<fs::path> expand_inputs(const std::vector<std::string>& paths, const std::vector<std::string>& manifests) {
  std::vector<fs::path> out(paths.begin(), paths.end());
  for (const auto& m : manifests) {
    for (bool test : {false, true})
      for (auto& p : split_paths(m, test)) out.push_back(std::move(p));
  }
  return out;
}

int cmd_validate(const std::vector<fs::path>& paths) {
  int status = 0;
  for (const auto& p : paths) {
    try {
      const Scenario sc = load_scenario_file(p);
      sc.validate();
      const auto rep = check_drivability(sc);
      if (rep.feasible) {
        std::cout << p.string() << ": feasible\n";
      } else {
        std::cout << p.string() << ": infeasible";
        for (const auto& v : rep.violations) std::cout << "; " << describe(v);
        std::cout << '\n';
        status = kData;
      }
    } catch (const std::exception& e) {
      std::cout << p.string() << ": error: " << e.what() << '\n';
      status = kData;
    }
  }
  return status;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ManifestEntry entry_for(const fs::path& file, const fs::path& manifest_dir, const Scenario& sc) {
  ManifestEntry e;
  e.path = fs::proximate(fs::absolute(file), fs::absolute(manifest_dir)).generic_string();
  e.id = sc.id;
  e.kind = sc.kind;
  if (auto it = sc.meta.find("seed"); it != sc.meta.end()) e.seed = static_cast<std::uint64_t>(it->second);
  if (auto it = sc.meta.find("easy"); it != sc.meta.end()) e.easy = it->second != 0.0;
  return e;
}

int cmd_filter(const std::vector<fs::path>& paths, const std::string& out, const std::string& config) {
  const RunConfig cfg = run_config(config);
  Manifest kept, rejected;
  int status = 0;
  for (const auto& p : paths) {
    try {
      const Scenario sc = load_scenario_file(p);
      sc.validate();
      const double t = decision_time(sc, cfg.env.sim);
      const bool pass = passes_decision_filter(t);
      std::cout << p.string() << ": " << (pass ? "kept" : "rejected") << " (decision time "
                << (std::isinf(t) ? std::string("inf") : fixed2(t)) << " s)\n";
      if (!out.empty()) (pass ? kept : rejected).train.push_back(entry_for(p, out, sc));
    } catch (const std::exception& e) {
      std::cout << p.string() << ": error: " << e.what() << '\n';
      status = kData;
    }
  }
  if (!out.empty()) {
    write_text_file(fs::path(out) / "kept.json", manifest_to_json(kept));
    write_text_file(fs::path(out) / "rejected.json", manifest_to_json(rejected));
  }
  return status;
}

// ---- train ----

struct TrainArgs {
  std::string manifest;
  std::string config;
  std::string policy;
  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> checkpoint_every;
  std::string resume;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = run_config(a.config);
  if (!a.policy.empty()) {
    const auto t = parse_policy_tag(a.policy);
    if (!t) {
      std::cerr << "train: unknown policy '" << a.policy << "'\n";
      return kUsage;
    }
    cfg.policy = *t;
  }
  if (a.budget) cfg.budget = *a.budget;
  if (a.seed) cfg.seed = *a.seed;
  if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;

  auto paths = split_paths(a.manifest, false);
  if (paths.empty()) paths = split_paths(a.manifest, true);
  const auto scenarios = load_scenarios(paths);

  TrainConfig tc;
  tc.policy = cfg.policy;
  tc.a2c = cfg.a2c;
  tc.env = cfg.env;
  tc.budget = cfg.budget;
  tc.seed = cfg.seed;
  tc.checkpoint_every = cfg.checkpoint_every;

  std::optional<Checkpoint> resume;
  std::vector<TrainLogRow> prior;
  const fs::path out = a.out;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    tc.seed = resume->seed;
    if (fs::exists(out / "train_log.csv")) {
      for (auto& r : parse_train_log_csv(read_text_file(out / "train_log.csv")))
        if (r.episode < resume->progress.episodes) prior.push_back(std::move(r));
    }
  }

  const auto sink = [&](const Checkpoint& c) {
    save_checkpoint(c, out / "checkpoints" / ("ckpt_" + std::to_string(c.progress.substeps) + ".json"));
  };
  const TrainResult res = train(scenarios, tc, resume, sink);

  std::vector<TrainLogRow> log = prior;
  log.insert(log.end(), res.log.begin(), res.log.end());
  write_text_file(out / "train_log.csv", train_log_csv(log));
  // Wall time lives apart from the log so the log stays reproducible.
  write_text_file(out / "timing.csv", timing_csv(res.log));
  RunConfig snap = cfg;
  snap.seed = tc.seed;
  write_text_file(out / "config.ini", config_to_ini(snap));
  if (res.checkpoint) save_checkpoint(*res.checkpoint, out / "checkpoint.json");
  emit_training_curves(log, cfg.ma_window, out / "plots");

  std::size_t goals = 0;
  const std::size_t tail = std::min<std::size_t>(log.size(), cfg.ma_window);
  for (std::size_t k = log.size() - tail; k < log.size(); ++k) goals += log[k].reason == TerminationReason::GoalReached;
  std::cout << "episodes " << log.size() << ", sub-steps " << res.substeps << ", goal rate (last " << tail
            << ") " << (tail ? format_number(100.0 * static_cast<double>(goals) / static_cast<double>(tail)) : "n/a")
            << "%\n";
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::vector<std::string> policies;
  std::vector<std::string> checkpoints;
  std::vector<std::string> manifests;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool serial = false;
  bool sample = false;
};

int cmd_eval(const EvalArgs& a) {
  const RunConfig cfg = run_config(a.config);
  std::vector<std::unique_ptr<Policy>> owned;
  std::vector<NamedPolicy> policies;
  for (const auto& p : a.policies) {
    const auto tag = parse_policy_tag(p);
    if (!tag || (*tag != PolicyTag::Maintain && *tag != PolicyTag::Random)) {
      std::cerr << "eval: unknown baseline '" << p << "' (maintain or random; use --checkpoint for a2c)\n";
      return kUsage;
    }
    owned.push_back(make_baseline(*tag));
    policies.push_back({std::string(to_string(*tag)), owned.back().get()});
  }
  for (const auto& c : a.checkpoints) {
    const auto [name, path] = named(c, fs::path(c).parent_path().filename().string());
    owned.push_back(make_policy(load_checkpoint(path), cfg.env, cfg.a2c, VehicleParams{}, !a.sample));
    policies.push_back({name.empty() ? fs::path(path).stem().string() : name, owned.back().get()});
  }
  if (policies.empty()) {
    std::cerr << "eval: give at least one --policy or --checkpoint\n";
    return kUsage;
  }
  std::vector<TestSet> sets;
  for (const auto& m : a.manifests) {
    const auto [name, path] = named(m, set_name(m));
    sets.push_back({name, load_scenarios(evaluation_paths(path))});
  }

  EvalOptions opt;
  opt.env = cfg.env;
  opt.seed = a.seed.value_or(cfg.seed);
  opt.stochastic_seeds = cfg.stochastic_seeds;
  opt.ma_window = cfg.ma_window;
  const EvalReport rep = a.serial ? goal_matrix_serial(policies, sets, opt) : goal_matrix(policies, sets, opt);
  if (!a.out.empty()) emit_report(rep, a.out);
  std::cout << goal_matrix_csv(rep);
  return 0;
}

// ---- simulate / replay ----

struct SimulateArgs {
  std::string scenario;
  std::string policy = "maintain";
  std::string checkpoint;
  std::string config;
  std::uint64_t seed = 0;
  std::string trace;
};

int cmd_simulate(const SimulateArgs& a) {
  RunConfig cfg = run_config(a.config);
  std::unique_ptr<Policy> policy;
  if (!a.checkpoint.empty()) {
    policy = make_policy(load_checkpoint(a.checkpoint), cfg.env, cfg.a2c);
  } else {
    const auto tag = parse_policy_tag(a.policy);
    if (!tag || (*tag != PolicyTag::Maintain && *tag != PolicyTag::Random)) {
      std::cerr << "simulate: unknown baseline '" << a.policy << "'\n";
      return kUsage;
    }
    policy = make_baseline(*tag);
  }
  const auto sc = std::make_shared<const Scenario>(load_scenario_file(a.scenario));
  EnvConfig env = cfg.env;
  env.mode = mode_of(policy->tag());
  env.record_trace = true;
  Env e(env);
  Observation obs = e.reset(sc, a.seed);
  std::mt19937_64 rng(a.seed);
  StepOutcome res;
  double ret = 0.0;
  do {
    const AgentAction act = policy->act(obs, rng);
    if (const auto* h = std::get_if<HighLevelAction>(&act))
      res = e.step(*h);
    else
      res = e.step_continuous(std::get<ContinuousAction>(act).accel, std::get<ContinuousAction>(act).steer_rate);
    obs = res.obs;
    ret += res.reward;
  } while (!res.terminated);
  if (!a.trace.empty()) write_text_file(a.trace, trace_to_jsonl(e.trace()));
  std::cout << sc->id << ": " << to_string(*res.reason) << " at t=" << format_number(res.info.t)
            << " return=" << format_number(ret) << '\n';
  return 0;
}

std::string text_frame(std::size_t k, const TraceRecord& r) {
  std::string s = "frame " + std::to_string(k) + " t=" + format_number(r.t) + " ego x=" + format_number(r.ego.s_x) +
                  " y=" + format_number(r.ego.s_y) + " psi=" + format_number(r.ego.psi) +
                  " v=" + format_number(r.ego.v);
  for (const auto& c : r.challengers)
    s += " | " + c.id + " x=" + format_number(c.s_x) + " y=" + format_number(c.s_y) + " psi=" + format_number(c.psi);
  if (r.reason) s += " | " + std::string(to_string(*r.reason));
  return s + '\n';
}

std::string svg_rect(double x, double y, double psi, double length, double width, const char* fill) {
  return "  <rect x=\"" + format_number(-length / 2) + "\" y=\"" + format_number(-width / 2) + "\" width=\"" +
         format_number(length) + "\" height=\"" + format_number(width) + "\" fill=\"" + fill +
         "\" transform=\"translate(" + format_number(x) + " " + format_number(y) + ") rotate(" +
         format_number(psi * 180.0 / std::numbers::pi) + ")\"/>\n";
}

// World coordinates inside a y-flipped group; a 120 m window follows the ego.
std::string svg_frame(const TraceRecord& r, const VehicleParams& ego) {
  const double x0 = r.ego.s_x - 40.0;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + format_number(x0) + " -20 120 30\">\n";
  s += "<g transform=\"scale(1 -1)\">\n";
  s += svg_rect(r.ego.s_x, r.ego.s_y, r.ego.psi, ego.length, ego.width, "#c03030");
  for (const auto& c : r.challengers) s += svg_rect(c.s_x, c.s_y, c.psi, c.length, c.width, "#3050c0");
  s += "</g>\n</svg>\n";
  return s;
}

int cmd_replay(const std::string& trace_path, const std::string& format, const std::string& out) {
  const auto trace = trace_from_jsonl(read_text_file(trace_path));
  if (format == "svg") {
    if (out.empty()) {
      std::cerr << "replay: --out is required for svg frames\n";
      return kUsage;
    }
    for (std::size_t k = 0; k < trace.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05zu.svg", k);
      write_text_file(fs::path(out) / name, svg_frame(trace[k], VehicleParams{}));
    }
    return 0;
  }
  std::string text;
  for (std::size_t k = 0; k < trace.size(); ++k) text += text_frame(k, trace[k]);
  if (out.empty())
    std::cout << text;
  else
    write_text_file(out, text);
  return 0;
}

// ---- serve ----

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const std::vector<std::string>& manifests, const std::string& config, const std::string& mode,
              std::optional<int> port) {
  EnvConfig env = run_config(config).env;
  if (mode == "continuous")
    env.mode = ActionMode::Continuous;
  else if (mode == "hierarchical")
    env.mode = ActionMode::Hierarchical;
  else {
    std::cerr << "serve: unknown mode '" << mode << "'\n";
    return kUsage;
  }
  auto catalog = std::make_shared<ScenarioCatalog>();
  for (const auto& m : manifests)
    for (bool test : {false, true})
      for (auto& sc : load_scenarios(split_paths(m, test))) catalog->add(std::move(sc));

  if (!port) {
    serve_stream(std::cin, std::cout, catalog, env);
    return 0;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  serve_tcp(static_cast<std::uint16_t>(*port), catalog, env, g_stop, [](std::uint16_t p) {
    std::cerr << "listening on 127.0.0.1:" << p << '\n';
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Highway scenario workbench: generate, train, evaluate, serve."};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a scenario dataset and its manifest");
  g->add_option("--kind", gen.kinds, "Scenario kind: A, B or cutout (repeatable)")->required();
  g->add_option("--count", gen.count, "Training scenarios per kind")->check(CLI::NonNegativeNumber);
  g->add_option("--test-count", gen.test_count, "Test scenarios per kind")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed, "Dataset seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_flag("--easy", gen.easy, "Easy variant (solvable by the maintain policy)");
  g->add_flag("--serial", gen.serial, "Disable parallel generation");
  g->add_option("--config", gen.config, "Run configuration (INI)");

  std::vector<std::string> v_paths, v_manifests;
  auto* v = app.add_subcommand("validate", "Check scenario files for drivability");
  v->add_option("paths", v_paths, "Scenario files (.json or .xml)");
  v->add_option("--manifest", v_manifests, "Validate every scenario of a manifest");

  std::vector<std::string> f_paths, f_manifests;
  std::string f_out, f_config;
  auto* f = app.add_subcommand("filter", "Apply the decision-time filter");
  f->add_option("paths", f_paths, "Scenario files");
  f->add_option("--manifest", f_manifests, "Filter every scenario of a manifest");
  f->add_option("--out", f_out, "Write kept.json / rejected.json manifests here");
  f->add_option("--config", f_config, "Run configuration (INI)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train (or roll out a baseline) on a manifest's training split");
  t->add_option("--manifest", tr.manifest, "Scenario manifest")->required();
  t->add_option("--config", tr.config, "Run configuration (INI)");
  t->add_option("--policy", tr.policy, "maintain, random, a2c_discrete or a2c_continuous");
  t->add_option("--budget", tr.budget, "Simulation sub-steps");
  t->add_option("--seed", tr.seed, "Run seed");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Checkpoint cadence in sub-steps (0 = off)");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_option("--out", tr.out, "Output directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Goal-reaching matrix over test manifests");
  e->add_option("--policy", ev.policies, "Baseline: maintain or random (repeatable)");
  e->add_option("--checkpoint", ev.checkpoints, "[name=]checkpoint.json (repeatable)");
  e->add_option("--manifest", ev.manifests, "[name=]manifest.json (repeatable)")->required();
  e->add_option("--config", ev.config, "Run configuration (INI)");
  e->add_option("--seed", ev.seed, "Evaluation seed");
  e->add_option("--out", ev.out, "Report directory");
  e->add_flag("--serial", ev.serial, "Disable parallel rollouts");
  e->add_flag("--sample", ev.sample, "Sample from trained policies instead of acting greedily");

  SimulateArgs si;
  auto* s = app.add_subcommand("simulate", "Run one episode and optionally write its trace");
  s->add_option("--scenario", si.scenario, "Scenario file")->required();
  s->add_option("--policy", si.policy, "Baseline: maintain or random");
  s->add_option("--checkpoint", si.checkpoint, "Trained policy");
  s->add_option("--config", si.config, "Run configuration (INI)");
  s->add_option("--seed", si.seed, "Episode seed");
  s->add_option("--trace", si.trace, "Write the JSONL trace here");

  std::string r_trace, r_format = "text", r_out;
  auto* r = app.add_subcommand("replay", "Render a trace as text or SVG frames");
  r->add_option("trace", r_trace, "Trace file (JSONL)")->required();
  r->add_option("--format", r_format, "text or svg")->check(CLI::IsMember({"text", "svg"}));
  r->add_option("--out", r_out, "Output file (text) or directory (svg)");

  std::vector<std::string> sv_manifests;
  std::string sv_config, sv_mode = "hierarchical";
  std::optional<int> sv_port;
  bool sv_stdio = false;
  auto* sv = app.add_subcommand("serve", "Serve env sessions over newline-delimited JSON");
  sv->add_option("--manifest", sv_manifests, "Scenario manifest(s)")->required();
  sv->add_option("--config", sv_config, "Run configuration (INI)");
  sv->add_option("--mode", sv_mode, "hierarchical or continuous");
  auto* port_opt = sv->add_option("--port", sv_port, "TCP port on 127.0.0.1 (0 = any)")->check(CLI::Range(0, 65535));
  sv->add_flag("--stdio", sv_stdio, "Serve one session on stdin/stdout")->excludes(port_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*v) return cmd_validate(expand_inputs(v_paths, v_manifests));
    if (*f) return cmd_filter(expand_inputs(f_paths, f_manifests), f_out, f_config);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_simulate(si);
    if (*r) return cmd_replay(r_trace, r_format, r_out);
    if (*sv) return cmd_serve(sv_manifests, sv_config, sv_mode, sv_stdio ? std::nullopt : sv_port);
  } catch (const SchemaError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kData;
  } catch (const InvariantError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kData;
  } catch (const UnsupportedFeature& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kData;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
