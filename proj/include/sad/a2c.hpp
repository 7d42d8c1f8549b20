#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sad/nn.hpp"
#include "sad/pilot.hpp"
#include "sad/road.hpp"

namespace sad {

struct A2cConfig {
  double gamma = 0.99;
  int n_steps = 5;
  double learning_rate = 7e-4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double rms_alpha = 0.99;
  double rms_eps = 1e-5;
  std::vector<int> hidden{64, 64};
  double log_std_init = 0.0;
  double log_std_min = -5.0;

  void validate() const;
};

enum class HeadKind { Discrete, Gaussian };

inline constexpr int kGaussianDim = 2;  // accel, steer_rate

// Separate actor and critic trunks. Discrete: 3 lateral + 4 longitudinal
// logits. Gaussian: 2 means plus a state-independent log-std vector stored
// after both networks.
class ActorCritic {
 public:
  ActorCritic(HeadKind head, int obs_dim, const std::vector<int>& hidden);

  HeadKind head() const { return head_; }
  int obs_dim() const { return obs_dim_; }
  std::size_t param_count() const { return count_; }
  std::size_t log_std_offset() const { return log_std_at_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }

  std::vector<double> init_params(std::uint64_t seed, double log_std_init = 0.0) const;

  struct Output {
    std::vector<double> actor;  // logits or means
    double value = 0.0;
  };
  Output forward(std::span<const double> params, std::span<const double> obs) const;

 private:
  HeadKind head_;
  int obs_dim_;
  Mlp actor_;
  Mlp critic_;
  std::size_t log_std_at_ = 0;
  std::size_t count_ = 0;
};

// ---- head math ----

// Log-softmax of the lateral (first 3) and longitudinal (last 4) logits.
std::array<double, 3> log_softmax_lateral(std::span<const double> logits);
std::array<double, 4> log_softmax_longitudinal(std::span<const double> logits);
double discrete_log_prob(std::span<const double> logits, std::array<int, 2> action);
double discrete_entropy(std::span<const double> logits);
std::array<int, 2> sample_discrete(std::span<const double> logits, std::mt19937_64& rng);
std::array<int, 2> greedy_discrete(std::span<const double> logits);

// Effective log-std after the floor.
std::array<double, kGaussianDim> gaussian_log_std(std::span<const double> params, const ActorCritic& net,
                                                  double floor);
// Log-density of the pre-squash sample u.
double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> u);
double gaussian_entropy(std::span<const double> log_std);
std::array<double, kGaussianDim> sample_gaussian(std::span<const double> mean, std::span<const double> log_std,
                                                 std::mt19937_64& rng);
// tanh squash of u onto [a_min, a_max] x [-vdelta_max, vdelta_max].
std::array<double, kGaussianDim> squash_to_actuators(std::span<const double> u, const VehicleParams& p);

// ---- loss ----

struct Sample {
  std::vector<double> obs;
  std::array<int, 2> discrete{};     // used by discrete heads
  std::array<double, 2> u{};         // pre-squash action for Gaussian heads
  double ret = 0.0;                  // n-step return target
  double advantage = 0.0;            // treated as a constant
};

struct LossTerms {
  double policy = 0.0;   // -mean(A * log pi)
  double value = 0.0;    // mean((R - V)^2)
  double entropy = 0.0;  // mean(H)
  double total = 0.0;    // policy + c_v * value - c_e * entropy
};

// Loss over the batch; accumulates its gradient into grad when non-empty.
LossTerms loss_and_grad(const ActorCritic& net, std::span<const double> params, const std::vector<Sample>& batch,
                        const A2cConfig& cfg, std::span<double> grad);

// ---- optimisation ----

struct RmsProp {
  std::vector<double> square_avg;
  void step(std::vector<double>& params, std::span<const double> grad, const A2cConfig& cfg);
};

// Rescales grad in place when its L2 norm exceeds max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

struct Transition {
  std::vector<double> obs;
  std::array<int, 2> discrete{};
  std::array<double, 2> u{};
  double reward = 0.0;
  bool done = false;  // episode terminated after this transition
};

struct UpdateDiagnostics {
  LossTerms loss{};
  double grad_norm = 0.0;
  int samples = 0;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const std::string& dump) : std::runtime_error(dump) {}
};

// n-step bootstrapped returns for a contiguous rollout; bootstrap_value is
// V(s_n) and is ignored when the last transition is terminal.
std::vector<double> nstep_returns(const std::vector<Transition>& rollout, double bootstrap_value, double gamma);

// One optimiser step on a contiguous rollout. bootstrap_obs is the state after
// the last transition (unused when it was terminal).
UpdateDiagnostics a2c_update(const ActorCritic& net, std::vector<double>& params, RmsProp& opt,
                             const std::vector<Transition>& rollout, std::span<const double> bootstrap_obs,
                             const A2cConfig& cfg);

}  // namespace sad
