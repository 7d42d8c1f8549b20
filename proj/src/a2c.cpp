#include "sad/a2c.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sad {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

template <std::size_t N>
std::array<double, N> log_softmax(const double* z) {
  double m = z[0];
  for (std::size_t k = 1; k < N; ++k) m = std::max(m, z[k]);
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) s += std::exp(z[k] - m);
  const double lse = m + std::log(s);
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) out[k] = z[k] - lse;
  return out;
}

template <std::size_t N>
double entropy_of(const std::array<double, N>& lp) {
  double h = 0.0;
  for (double l : lp) h -= std::exp(l) * l;
  return h;
}

// d(coef_a * logp[a] + coef_h * H)/dz for one softmax head.
template <std::size_t N>
void head_grad(const std::array<double, N>& lp, int a, double coef_a, double coef_h, double* out) {
  const double h = entropy_of(lp);
  for (std::size_t k = 0; k < N; ++k) {
    const double p = std::exp(lp[k]);
    const double onehot = static_cast<int>(k) == a ? 1.0 : 0.0;
    out[k] += coef_a * (onehot - p) - coef_h * p * (lp[k] + h);
  }
}

template <std::size_t N>
int sample_from(const std::array<double, N>& lp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double c = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    c += std::exp(lp[k]);
    if (r < c) return static_cast<int>(k);
  }
  return static_cast<int>(N) - 1;
}

template <std::size_t N>
int argmax(const double* z) {
  return static_cast<int>(std::max_element(z, z + N) - z);
}

}  // namespace

void A2cConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("a2c: gamma must be in (0, 1]");
  if (n_steps < 1) throw std::invalid_argument("a2c: n_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("a2c: learning_rate must be positive");
  if (entropy_coef < 0.0 || value_coef < 0.0) throw std::invalid_argument("a2c: coefficients must be >= 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("a2c: max_grad_norm must be positive");
  if (!(rms_alpha >= 0.0 && rms_alpha < 1.0) || !(rms_eps > 0.0))
    throw std::invalid_argument("a2c: bad RMSProp settings");
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h < 1; }))
    throw std::invalid_argument("a2c: hidden sizes must be positive");
  if (!std::isfinite(log_std_init) || !std::isfinite(log_std_min))
    throw std::invalid_argument("a2c: log-std settings must be finite");
}

ActorCritic::ActorCritic(HeadKind head, int obs_dim, const std::vector<int>& hidden)
    : head_(head), obs_dim_(obs_dim) {
  std::vector<int> a{obs_dim};
  a.insert(a.end(), hidden.begin(), hidden.end());
  std::vector<int> c = a;
  a.push_back(head == HeadKind::Discrete ? kLateralCount + kLongitudinalCount : kGaussianDim);
  c.push_back(1);
  actor_ = Mlp(a, 0);
  critic_ = Mlp(c, actor_.param_count());
  log_std_at_ = actor_.param_count() + critic_.param_count();
  count_ = log_std_at_ + (head == HeadKind::Gaussian ? kGaussianDim : 0);
}

std::vector<double> ActorCritic::init_params(std::uint64_t seed, double log_std_init) const {
  std::vector<double> p(count_, 0.0);
  std::mt19937_64 rng(seed);
  actor_.init(p, rng, 0.01);
  critic_.init(p, rng, 1.0);
  for (std::size_t k = log_std_at_; k < count_; ++k) p[k] = log_std_init;
  return p;
}

ActorCritic::Output ActorCritic::forward(std::span<const double> params, std::span<const double> obs) const {
  Output out;
  out.actor = actor_.forward(params, obs);
  out.value = critic_.forward(params, obs)[0];
  return out;
}

std::array<double, 3> log_softmax_lateral(std::span<const double> logits) {
  return log_softmax<3>(logits.data());
}
std::array<double, 4> log_softmax_longitudinal(std::span<const double> logits) {
  return log_softmax<4>(logits.data() + 3);
}

double discrete_log_prob(std::span<const double> logits, std::array<int, 2> action) {
  return log_softmax_lateral(logits)[static_cast<std::size_t>(action[0])] +
         log_softmax_longitudinal(logits)[static_cast<std::size_t>(action[1])];
}

double discrete_entropy(std::span<const double> logits) {
  return entropy_of(log_softmax_lateral(logits)) + entropy_of(log_softmax_longitudinal(logits));
}

std::array<int, 2> sample_discrete(std::span<const double> logits, std::mt19937_64& rng) {
  const int lat = sample_from(log_softmax_lateral(logits), rng);
  const int lon = sample_from(log_softmax_longitudinal(logits), rng);
  return {lat, lon};
}

std::array<int, 2> greedy_discrete(std::span<const double> logits) {
  return {argmax<3>(logits.data()), argmax<4>(logits.data() + 3)};
}

std::array<double, kGaussianDim> gaussian_log_std(std::span<const double> params, const ActorCritic& net,
                                                  double floor) {
  std::array<double, kGaussianDim> s{};
  for (int d = 0; d < kGaussianDim; ++d) s[d] = std::max(params[net.log_std_offset() + d], floor);
  return s;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> u) {
  double lp = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double z = (u[d] - mean[d]) * std::exp(-log_std[d]);
    lp += -0.5 * z * z - log_std[d] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double s : log_std) h += s + 0.5 * (1.0 + kLog2Pi);
  return h;
}

std::array<double, kGaussianDim> sample_gaussian(std::span<const double> mean, std::span<const double> log_std,
                                                 std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::array<double, kGaussianDim> u{};
  for (int d = 0; d < kGaussianDim; ++d) u[d] = mean[d] + std::exp(log_std[d]) * n(rng);
  return u;
}

std::array<double, kGaussianDim> squash_to_actuators(std::span<const double> u, const VehicleParams& p) {
  const double mid = 0.5 * (p.a_max + p.a_min);
  const double half = 0.5 * (p.a_max - p.a_min);
  return {mid + half * std::tanh(u[0]), p.vdelta_max * std::tanh(u[1])};
}

LossTerms loss_and_grad(const ActorCritic& net, std::span<const double> params, const std::vector<Sample>& batch,
                        const A2cConfig& cfg, std::span<double> grad) {
  LossTerms t;
  if (batch.empty()) return t;
  const bool want_grad = !grad.empty();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const bool gaussian = net.head() == HeadKind::Gaussian;

  std::array<double, kGaussianDim> log_std{};
  std::array<bool, kGaussianDim> floored{};
  if (gaussian) {
    for (int d = 0; d < kGaussianDim; ++d) {
      const double raw = params[net.log_std_offset() + d];
      floored[d] = raw < cfg.log_std_min;
      log_std[d] = floored[d] ? cfg.log_std_min : raw;
    }
  }

  Mlp::Cache ac, cc;
  std::array<double, kGaussianDim> g_log_std{};
  for (const Sample& s : batch) {
    const auto mu = net.actor().forward(params, s.obs, want_grad ? &ac : nullptr);
    const double v = net.critic().forward(params, s.obs, want_grad ? &cc : nullptr)[0];

    double logp = 0.0;
    double h = 0.0;
    std::vector<double> g_actor(mu.size(), 0.0);
    if (!gaussian) {
      const auto lat = log_softmax<3>(mu.data());
      const auto lon = log_softmax<4>(mu.data() + 3);
      logp = lat[static_cast<std::size_t>(s.discrete[0])] + lon[static_cast<std::size_t>(s.discrete[1])];
      h = entropy_of(lat) + entropy_of(lon);
      if (want_grad) {
        // loss_i = -A logp - c_e H
        head_grad(lat, s.discrete[0], -s.advantage * inv_n, -cfg.entropy_coef * inv_n, g_actor.data());
        head_grad(lon, s.discrete[1], -s.advantage * inv_n, -cfg.entropy_coef * inv_n, g_actor.data() + 3);
      }
    } else {
      logp = gaussian_log_prob(mu, log_std, s.u);
      h = gaussian_entropy(log_std);
      if (want_grad) {
        for (int d = 0; d < kGaussianDim; ++d) {
          const double inv_var = std::exp(-2.0 * log_std[d]);
          const double diff = s.u[d] - mu[static_cast<std::size_t>(d)];
          g_actor[static_cast<std::size_t>(d)] = -s.advantage * inv_n * diff * inv_var;
          if (!floored[d])
            g_log_std[d] += -s.advantage * inv_n * (diff * diff * inv_var - 1.0) - cfg.entropy_coef * inv_n;
        }
      }
    }
    t.policy += -s.advantage * logp * inv_n;
    t.value += (s.ret - v) * (s.ret - v) * inv_n;
    t.entropy += h * inv_n;

    if (want_grad) {
      net.actor().backward(params, ac, g_actor, grad);
      const double gv = -2.0 * cfg.value_coef * (s.ret - v) * inv_n;
      net.critic().backward(params, cc, std::span<const double>(&gv, 1), grad);
    }
  }
  if (gaussian && want_grad)
    for (int d = 0; d < kGaussianDim; ++d) grad[net.log_std_offset() + d] += g_log_std[d];
  t.total = t.policy + cfg.value_coef * t.value - cfg.entropy_coef * t.entropy;
  return t;
}

void RmsProp::step(std::vector<double>& params, std::span<const double> grad, const A2cConfig& cfg) {
  if (square_avg.size() != params.size()) square_avg.assign(params.size(), 0.0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    square_avg[k] = cfg.rms_alpha * square_avg[k] + (1.0 - cfg.rms_alpha) * grad[k] * grad[k];
    params[k] -= cfg.learning_rate * grad[k] / (std::sqrt(square_avg[k]) + cfg.rms_eps);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (double& g : grad) g *= scale;
  }
  return norm;
}

std::vector<double> nstep_returns(const std::vector<Transition>& rollout, double bootstrap_value, double gamma) {
  std::vector<double> ret(rollout.size());
  double r = rollout.empty() || rollout.back().done ? 0.0 : bootstrap_value;
  for (std::size_t k = rollout.size(); k-- > 0;) {
    if (rollout[k].done) r = 0.0;
    r = rollout[k].reward + gamma * r;
    ret[k] = r;
  }
  return ret;
}

UpdateDiagnostics a2c_update(const ActorCritic& net, std::vector<double>& params, RmsProp& opt,
                             const std::vector<Transition>& rollout, std::span<const double> bootstrap_obs,
                             const A2cConfig& cfg) {
  UpdateDiagnostics d;
  if (rollout.empty()) return d;
  const double boot = rollout.back().done ? 0.0 : net.critic().forward(params, bootstrap_obs)[0];
  const auto ret = nstep_returns(rollout, boot, cfg.gamma);

  std::vector<Sample> batch;
  batch.reserve(rollout.size());
  for (std::size_t k = 0; k < rollout.size(); ++k) {
    const double v = net.critic().forward(params, rollout[k].obs)[0];
    batch.push_back(Sample{rollout[k].obs, rollout[k].discrete, rollout[k].u, ret[k], ret[k] - v});
  }

  std::vector<double> grad(params.size(), 0.0);
  d.loss = loss_and_grad(net, params, batch, cfg, grad);
  d.samples = static_cast<int>(batch.size());
  d.grad_norm = clip_grad_norm(grad, cfg.max_grad_norm);
  if (!std::isfinite(d.loss.total) || !std::isfinite(d.grad_norm)) {
    double pn = 0.0;
    for (double p : params) pn += p * p;
    std::ostringstream os;
    os << "non-finite A2C loss: policy=" << d.loss.policy << " value=" << d.loss.value
       << " entropy=" << d.loss.entropy << " total=" << d.loss.total << " grad_norm=" << d.grad_norm
       << " param_norm=" << std::sqrt(pn) << " samples=" << d.samples;
    for (std::size_t k = 0; k < batch.size(); ++k)
      os << "\n  [" << k << "] return=" << batch[k].ret << " advantage=" << batch[k].advantage;
    throw NonFiniteLoss(os.str());
  }
  opt.step(params, grad, cfg);
  return d;
}

}  // namespace sad
