#include "sad/train.hpp"

#include <charconv>
#include <chrono>
#include <sstream>
#include <stdexcept>

#include "sad/error.hpp"
#include "sad/factory.hpp"

namespace sad {

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

TrainResult train(const std::vector<std::shared_ptr<const Scenario>>& scenarios, const TrainConfig& cfg,
                  const std::optional<Checkpoint>& resume, const CheckpointSink& sink) {
  cfg.a2c.validate();
  const bool learner = cfg.policy == PolicyTag::A2cDiscrete || cfg.policy == PolicyTag::A2cContinuous;
  const bool continuous = cfg.policy == PolicyTag::A2cContinuous;
  if (scenarios.empty() && cfg.budget > 0) throw std::invalid_argument("train: no scenarios");
  if (resume && !learner) throw std::invalid_argument("train: only a2c runs can resume");

  EnvConfig env_cfg = cfg.env;
  env_cfg.mode = mode_of(cfg.policy);
  env_cfg.record_trace = false;
  Env env(env_cfg);

  const ActorCritic net(continuous ? HeadKind::Gaussian : HeadKind::Discrete, Observation::kDim, cfg.a2c.hidden);
  Checkpoint state;
  state.tag = cfg.policy;
  state.hidden = cfg.a2c.hidden;
  state.seed = cfg.seed;
  std::mt19937_64 scenario_rng(mix(cfg.seed, 1));
  std::mt19937_64 action_rng(mix(cfg.seed, 2));
  RmsProp opt;
  if (resume) {
    if (resume->tag != cfg.policy || resume->hidden != cfg.a2c.hidden || resume->obs_dim != Observation::kDim)
      throw InvariantError("checkpoint does not match the training configuration");
    state = *resume;
    scenario_rng = rng_from_state(state.scenario_rng);
    action_rng = rng_from_state(state.action_rng);
    opt.square_avg = state.optimizer;
  } else if (learner) {
    state.params = net.init_params(mix(cfg.seed, 3), cfg.a2c.log_std_init);
  }

  TrainResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const MaintainPolicy maintain;
  const RandomPolicy random;
  std::vector<Transition>& rollout = state.pending;
  std::uint64_t next_ckpt =
      cfg.checkpoint_every ? (state.progress.substeps / cfg.checkpoint_every + 1) * cfg.checkpoint_every : 0;

  auto snapshot = [&] {
    state.optimizer = opt.square_avg;
    state.scenario_rng = rng_state(scenario_rng);
    state.action_rng = rng_state(action_rng);
    return state;
  };

  Observation obs;
  const Scenario* current = nullptr;
  double ep_return = 0.0;
  std::uint64_t ep_len = 0;

  while (state.progress.substeps < cfg.budget) {
    if (!env.has_episode() || env.terminated()) {
      std::uniform_int_distribution<std::size_t> pick(0, scenarios.size() - 1);
      const auto& sc = scenarios[pick(scenario_rng)];
      obs = env.reset(sc, state.progress.episodes);
      current = sc.get();
      ep_return = 0.0;
      ep_len = 0;
    }

    const auto x = obs.scaled(env_cfg.scaling);
    Transition tr;
    StepOutcome res;
    const int before = env.state().step;
    if (cfg.policy == PolicyTag::Maintain) {
      res = env.step(std::get<HighLevelAction>(maintain.act(obs, action_rng)));
    } else if (cfg.policy == PolicyTag::Random) {
      res = env.step(std::get<HighLevelAction>(random.act(obs, action_rng)));
    } else {
      const auto mu = net.actor().forward(state.params, x);
      tr.obs = x;
      if (!continuous) {
        tr.discrete = sample_discrete(mu, action_rng);
        res = env.step(HighLevelAction::from_indices(tr.discrete[0], tr.discrete[1]));
      } else {
        tr.u = sample_gaussian(mu, gaussian_log_std(state.params, net, cfg.a2c.log_std_min), action_rng);
        const auto c = squash_to_actuators(tr.u, current->ego_params);
        res = env.step_continuous(c[0], c[1]);
      }
    }
    const auto taken = static_cast<std::uint64_t>(env.state().step - before);
    state.progress.substeps += taken;
    ep_return += res.reward;
    ep_len += taken;
    obs = res.obs;

    if (learner) {
      tr.reward = res.reward;
      tr.done = res.terminated;
      rollout.push_back(std::move(tr));
      if (static_cast<int>(rollout.size()) >= cfg.a2c.n_steps) {
        const auto next = obs.scaled(env_cfg.scaling);
        a2c_update(net, state.params, opt, rollout, next, cfg.a2c);
        ++state.progress.updates;
        rollout.clear();
      }
    }

    if (res.terminated) {
      TrainLogRow row;
      row.episode = state.progress.episodes++;
      row.scenario = current->id;
      row.kind = current->kind;
      row.reason = *res.reason;
      row.ret = ep_return;
      row.length = ep_len;
      row.substeps = state.progress.substeps;
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.log.push_back(std::move(row));
      if (learner && next_ckpt && state.progress.substeps >= next_ckpt) {
        if (sink) sink(snapshot());
        next_ckpt = (state.progress.substeps / cfg.checkpoint_every + 1) * cfg.checkpoint_every;
      }
    }
  }

  out.substeps = state.progress.substeps;
  if (learner) {
    // A cut episode leaves no learner state behind.
    if (env.has_episode() && !env.terminated()) rollout.clear();
    out.checkpoint = snapshot();
  }
  return out;
}

std::string train_log_csv(const std::vector<TrainLogRow>& log, bool header) {
  std::string s;
  if (header) s += "episode,scenario,kind,reason,return,length,substeps\n";
  for (const auto& r : log) {
    s += std::to_string(r.episode) + ',' + r.scenario + ',' + std::string(to_string(r.kind)) + ',' +
         std::string(to_string(r.reason)) + ',' + fmt(r.ret) + ',' + std::to_string(r.length) + ',' +
         std::to_string(r.substeps) + '\n';
  }
  return s;
}

std::string timing_csv(const std::vector<TrainLogRow>& log, bool header) {
  std::string s;
  if (header) s += "episode,wall_time\n";
  for (const auto& r : log) s += std::to_string(r.episode) + ',' + fmt(r.wall_time) + '\n';
  return s;
}

std::vector<TrainLogRow> parse_train_log_csv(std::string_view text) {
  std::vector<TrainLogRow> rows;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.rfind("episode,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    const std::string where = "log line " + std::to_string(lineno);
    if (f.size() != 7) throw SchemaError(where, "expected 7 columns");
    TrainLogRow r;
    try {
      r.episode = std::stoull(f[0]);
      r.scenario = f[1];
      const auto kind = parse_kind(f[2]);
      if (!kind) throw SchemaError(where, "unknown kind " + f[2]);
      r.kind = *kind;
      const auto reason = parse_reason(f[3]);
      if (!reason) throw SchemaError(where, "unknown reason " + f[3]);
      r.reason = *reason;
      r.ret = std::stod(f[4]);
      r.length = std::stoull(f[5]);
      r.substeps = std::stoull(f[6]);
    } catch (const std::logic_error&) {
      throw SchemaError(where, "malformed number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sad
