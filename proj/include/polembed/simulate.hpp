#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polembed/lattice.hpp"
#include "polembed/quantize.hpp"
#include "polembed/rng.hpp"

// Built-in environments, synthetic ground-truth controllers standing in for
// trained agents, the rollout harness, and acting with embedded policies.

namespace polembed {

using State = std::vector<double>;

inline double wrap_angle(double x) {
  x = std::fmod(x + M_PI, 2.0 * M_PI);
  if (x < 0.0) x += 2.0 * M_PI;
  return x - M_PI;
}

struct StepOutcome {
  State state;
  double reward = 0.0;
  bool done = false;
};

// Value-semantic stepper: environments hold no mutable episode state, the
// caller threads the state through. step is deterministic given the rng draw.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string name() const = 0;
  virtual State reset(RandomEngine& rng) const = 0;
  virtual StepOutcome step(const State& s, double action, RandomEngine& rng) const = 0;
  virtual double action_low() const = 0;
  virtual double action_high() const = 0;
  virtual int max_episode_steps() const = 0;
  virtual double reward_bound() const = 0;  // r_M
  // The scalar state coordinate that the lattice bins.
  virtual double feature(const State& s) const { return s[0]; }
  virtual std::pair<double, double> feature_range() const = 0;
  virtual bool stateless() const { return false; }
};

// Swing-up pendulum. State is (theta, thetadot) with theta wrapped to
// [-pi, pi), theta = 0 upright. Semi-implicit Euler at dt = 0.05 with
//   thetadot += (3g/(2l) sin(theta) + 3u/(m l^2)) dt.
class PendulumEnv final : public Environment {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;

  std::string name() const override { return "pendulum"; }

  State reset(RandomEngine& rng) const override {
    return {rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0)};
  }

  StepOutcome step(const State& s, double action, RandomEngine&) const override {
    const double th = s[0], thdot = s[1];
    const double u = std::clamp(action, -kMaxTorque, kMaxTorque);
    const double cost = wrap_angle(th) * wrap_angle(th) + 0.1 * thdot * thdot + 0.001 * u * u;
    double new_thdot = thdot + (3.0 * kGravity / (2.0 * kLength) * std::sin(th) +
                                3.0 * u / (kMass * kLength * kLength)) *
                                   kDt;
    new_thdot = std::clamp(new_thdot, -kMaxSpeed, kMaxSpeed);
    const double new_th = wrap_angle(th + new_thdot * kDt);
    return {{new_th, new_thdot}, -cost, false};
  }

  double action_low() const override { return -kMaxTorque; }
  double action_high() const override { return kMaxTorque; }
  int max_episode_steps() const override { return 200; }
  double reward_bound() const override {
    return M_PI * M_PI + 0.1 * kMaxSpeed * kMaxSpeed + 0.001 * kMaxTorque * kMaxTorque;
  }
  std::pair<double, double> feature_range() const override { return {-M_PI, M_PI}; }
};

inline PendulumEnv make_pendulum() { return PendulumEnv{}; }

// Continuous mountain car. State is (position, velocity); the binned feature
// is the velocity, which is what the energy-pumping controller reads.
class MountainCarEnv final : public Environment {
 public:
  static constexpr double kMinPos = -1.2;
  static constexpr double kMaxPos = 0.6;
  static constexpr double kMaxSpeed = 0.07;
  static constexpr double kGoal = 0.45;
  static constexpr double kPower = 0.0015;
  static constexpr double kGravity = 0.0025;

  std::string name() const override { return "cmc"; }

  State reset(RandomEngine& rng) const override { return {rng.uniform(-0.6, -0.4), 0.0}; }

  StepOutcome step(const State& s, double action, RandomEngine&) const override {
    const double u = std::clamp(action, -1.0, 1.0);
    double v = s[1] + kPower * u - kGravity * std::cos(3.0 * s[0]);
    v = std::clamp(v, -kMaxSpeed, kMaxSpeed);
    double x = std::clamp(s[0] + v, kMinPos, kMaxPos);
    if (x <= kMinPos && v < 0.0) v = 0.0;
    const bool done = x >= kGoal;
    const double reward = (done ? 100.0 : 0.0) - 0.1 * u * u;
    return {{x, v}, reward, done};
  }

  double action_low() const override { return -1.0; }
  double action_high() const override { return 1.0; }
  int max_episode_steps() const override { return 999; }
  double reward_bound() const override { return 100.0; }
  double feature(const State& s) const override { return s[1]; }
  std::pair<double, double> feature_range() const override { return {-kMaxSpeed, kMaxSpeed}; }
};

inline MountainCarEnv make_mountain_car() { return MountainCarEnv{}; }

// ---------------------------------------------------------------------------
// Synthetic policies

// Truncated Gaussian policy around a hand-coded controller mean. The mean and
// scale read the full environment state; the lift maps the scalar binned
// coordinate back to a representative full state so the policy can also act
// as a PolicyOracle for discretization.
class SyntheticPolicy final : public PolicyOracle {
 public:
  using MeanFn = std::function<double(const State&)>;
  using ScaleFn = std::function<double(const State&)>;
  using LiftFn = std::function<State(double)>;

  SyntheticPolicy(MeanFn mean, ScaleFn scale, double a_lo, double a_hi, LiftFn lift)
      : mean_(std::move(mean)),
        scale_(std::move(scale)),
        a_lo_(a_lo),
        a_hi_(a_hi),
        lift_(std::move(lift)) {
    if (!(a_lo_ < a_hi_)) throw std::invalid_argument("SyntheticPolicy: empty action range");
  }

  double act(const State& s, RandomEngine& rng) const {
    const double mu = mean_(s), sd = scale_(s);
    const double alpha = norm_cdf((a_lo_ - mu) / sd);
    const double beta = norm_cdf((a_hi_ - mu) / sd);
    const double z = std::max(beta - alpha, 1e-300);
    const double p = std::min(std::max(alpha + rng.uniform() * z, 1e-16), 1.0 - 1e-16);
    return std::clamp(mu + sd * norm_ppf(p), a_lo_, a_hi_);
  }

  // renormalized truncated-Gaussian density on [a_lo, a_hi]
  double density_full(const State& s, double a) const {
    if (a < a_lo_ || a > a_hi_) return 0.0;
    const double mu = mean_(s), sd = scale_(s);
    const double z = std::max(norm_cdf((a_hi_ - mu) / sd) - norm_cdf((a_lo_ - mu) / sd), 1e-300);
    return gaussian_pdf(a, mu, sd * sd) / z;
  }

  double density(double state, double action) const override {
    return density_full(lift_(state), action);
  }
  double sample(double state, RandomEngine& rng) const override { return act(lift_(state), rng); }

  double action_lo() const { return a_lo_; }
  double action_hi() const { return a_hi_; }

 private:
  MeanFn mean_;
  ScaleFn scale_;
  double a_lo_, a_hi_;
  LiftFn lift_;
};

// Energy-based swing-up with a PD catch near the top. Reads angle and
// angular velocity, so it only exists as a rollout controller.
inline SyntheticPolicy pendulum_energy_policy(double sigma) {
  auto mean = [](const State& s) {
    const double th = s[0], thdot = s[1];
    const double energy = thdot * thdot / 6.0 + 5.0 * std::cos(th);  // E* = 5 upright
    if (std::cos(th) > 0.95 && std::abs(thdot) < 2.0)
      return std::clamp(-12.0 * wrap_angle(th) - 3.0 * thdot, -2.0, 2.0);
    if (std::abs(thdot) < 1e-3) return 2.0;  // kick off the hanging rest point
    return std::clamp(0.6 * thdot * (5.0 - energy), -2.0, 2.0);
  };
  auto scale = [sigma](const State&) { return sigma; };
  return SyntheticPolicy(mean, scale, -PendulumEnv::kMaxTorque, PendulumEnv::kMaxTorque,
                         [](double th) { return State{th, 0.0}; });
}

// Torque from the wrapped angle alone; discretizes exactly through the lift.
inline SyntheticPolicy pendulum_angle_policy(double sigma) {
  auto mean = [](const State& s) { return std::clamp(-1.5 * wrap_angle(s[0]), -2.0, 2.0); };
  auto scale = [sigma](const State&) { return sigma; };
  return SyntheticPolicy(mean, scale, -PendulumEnv::kMaxTorque, PendulumEnv::kMaxTorque,
                         [](double th) { return State{th, 0.0}; });
}

// Bang-bang energy pumping on the velocity sign.
inline SyntheticPolicy mountain_car_energy_policy(double sigma) {
  auto mean = [](const State& s) { return s[1] >= 0.0 ? 1.0 : -1.0; };
  auto scale = [sigma](const State&) { return sigma; };
  return SyntheticPolicy(mean, scale, -1.0, 1.0,
                         [](double v) { return State{-0.5236, v}; });
}

// Very wide truncated Gaussian, close to uniform over the action range.
inline SyntheticPolicy uniform_random_policy(double a_lo, double a_hi) {
  const double mid = 0.5 * (a_lo + a_hi);
  auto mean = [mid](const State&) { return mid; };
  auto scale = [a_lo, a_hi](const State&) { return 20.0 * (a_hi - a_lo); };
  return SyntheticPolicy(mean, scale, a_lo, a_hi, [mid](double) { return State{mid}; });
}

// ---------------------------------------------------------------------------
// Bandit turntable

// Reward field over the circle: von-Mises-shaped bumps at equally spaced
// centers with increasing weights, plus a frozen seeded noise draw. The
// discrete-arm variant samples the field at n_arms equally spaced angles.
struct BanditTurntable {
  int n_modes = 1;
  double lambda_noise = 0.0;
  double temperature = 1.0;
  double kappa = 8.0;
  double amplitude = 1.0;
  int n_arms = 0;  // 0: continuous angle mode
  std::vector<double> mode_centers;
  std::vector<double> mode_weights;
  std::vector<double> noise;  // per grid cell, or per arm in arm mode

  static constexpr int kNoiseGrid = 2048;

  double clean_signal(double a) const {
    double r = 0.0;
    for (int m = 0; m < n_modes; ++m)
      r += mode_weights[m] * std::exp(kappa * (std::cos(a - mode_centers[m]) - 1.0));
    return r;
  }

  double noisy_signal(double a) const {
    if (n_arms > 0) throw std::logic_error("noisy_signal: arm mode uses noisy_arm_reward");
    const int cell = std::clamp(
        static_cast<int>((a + M_PI) / (2.0 * M_PI) * kNoiseGrid), 0, kNoiseGrid - 1);
    return clean_signal(a) + noise[cell];
  }

  double arm_angle(int i) const {
    return -M_PI + 2.0 * M_PI * (static_cast<double>(i) + 0.5) / n_arms;
  }
  double clean_arm_reward(int i) const { return clean_signal(arm_angle(i)); }
  double noisy_arm_reward(int i) const { return clean_signal(arm_angle(i)) + noise[i]; }

  // signal-to-noise ratio of the discrete-arm variant
  double snr() const {
    if (n_arms < 1) throw std::logic_error("snr: defined for the discrete-arm variant");
    return static_cast<double>(n_arms) / (2.0 * lambda_noise);
  }
};

namespace detail {

inline BanditTurntable build_turntable_field(int n_modes, double lambda_noise,
                                             double temperature, double kappa,
                                             double amplitude, int noise_len,
                                             std::uint64_t seed) {
  if (n_modes < 1) throw std::invalid_argument("turntable: need at least one mode");
  if (lambda_noise < 0.0) throw std::invalid_argument("turntable: negative noise scale");
  if (!(temperature > 0.0)) throw std::invalid_argument("turntable: temperature must be positive");
  BanditTurntable t;
  t.n_modes = n_modes;
  t.lambda_noise = lambda_noise;
  t.temperature = temperature;
  t.kappa = kappa;
  t.amplitude = amplitude;
  t.mode_centers.resize(n_modes);
  t.mode_weights.resize(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    t.mode_centers[m] = -M_PI + 2.0 * M_PI * (m + 0.5) / n_modes;
    t.mode_weights[m] = amplitude * (m + 1.0) / n_modes;
  }
  RandomEngine rng(mix_seed(seed, 0x7ab1e));
  t.noise.resize(noise_len);
  for (auto& u : t.noise) u = lambda_noise > 0.0 ? rng.normal(0.0, lambda_noise) : 0.0;
  return t;
}

}  // namespace detail

// Boltzmann policy over the noisy reward field, pi(a) ~ exp(r(a)/T),
// normalized by trapezoid quadrature at 2048 points over [-pi, pi].
class BoltzmannOracle final : public PolicyOracle {
 public:
  static constexpr int kQuadPoints = 2048;

  explicit BoltzmannOracle(BanditTurntable table) : table_(std::move(table)) {
    const double h = 2.0 * M_PI / (kQuadPoints - 1);
    shift_ = -std::numeric_limits<double>::infinity();
    std::vector<double> r(kQuadPoints);
    for (int i = 0; i < kQuadPoints; ++i) {
      r[i] = table_.noisy_signal(-M_PI + i * h) / table_.temperature;
      shift_ = std::max(shift_, r[i]);
    }
    z_ = 0.0;
    knots_.resize(kQuadPoints);
    for (int i = 0; i < kQuadPoints; ++i) {
      knots_[i] = std::exp(r[i] - shift_);
      z_ += (i == 0 || i == kQuadPoints - 1) ? 0.5 * knots_[i] : knots_[i];
    }
    z_ *= h;
    // cumulative trapezoid for inverse-cdf sampling
    cdf_.assign(kQuadPoints, 0.0);
    for (int i = 1; i < kQuadPoints; ++i)
      cdf_[i] = cdf_[i - 1] + 0.5 * (knots_[i - 1] + knots_[i]) * h / z_;
    cdf_.back() = 1.0;
  }

  double density(double, double action) const override {
    if (action < -M_PI || action > M_PI) return 0.0;
    return std::exp(table_.noisy_signal(action) / table_.temperature - shift_) / z_;
  }

  double sample(double, RandomEngine& rng) const override {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const int hi = std::clamp(static_cast<int>(it - cdf_.begin()), 1, kQuadPoints - 1);
    const double h = 2.0 * M_PI / (kQuadPoints - 1);
    const double seg = cdf_[hi] - cdf_[hi - 1];
    const double frac = seg > 0.0 ? (u - cdf_[hi - 1]) / seg : 0.5;
    return -M_PI + (hi - 1 + frac) * h;
  }

  const BanditTurntable& table() const { return table_; }

 private:
  BanditTurntable table_;
  double shift_ = 0.0;
  double z_ = 1.0;
  std::vector<double> knots_;
  std::vector<double> cdf_;
};

struct TurntableBundle {
  BanditTurntable table;
  std::shared_ptr<BoltzmannOracle> oracle;
};

inline TurntableBundle make_turntable(int n_modes, double lambda_noise, double temperature,
                                      std::uint64_t seed, double kappa = 8.0,
                                      double amplitude = 1.0) {
  BanditTurntable t = detail::build_turntable_field(n_modes, lambda_noise, temperature, kappa,
                                                    amplitude, BanditTurntable::kNoiseGrid, seed);
  auto oracle = std::make_shared<BoltzmannOracle>(t);
  return {std::move(t), std::move(oracle)};
}

// Discrete-arm variant: the same field sampled at n_arms angles, one frozen
// noise draw per arm.
inline BanditTurntable make_turntable_arms(int n_arms, int n_modes, double lambda_noise,
                                           double amplitude, std::uint64_t seed,
                                           double kappa = 8.0, double temperature = 1.0) {
  if (n_arms < 1) throw std::invalid_argument("make_turntable_arms: need at least one arm");
  BanditTurntable t = detail::build_turntable_field(n_modes, lambda_noise, temperature, kappa,
                                                    amplitude, n_arms, seed);
  t.n_arms = n_arms;
  return t;
}

// Boltzmann arm probabilities over the noisy arm rewards (log-sum-exp).
inline std::vector<double> boltzmann_arm_pmf(const BanditTurntable& t, double temperature) {
  if (t.n_arms < 1) throw std::invalid_argument("boltzmann_arm_pmf: needs the arm variant");
  std::vector<double> logits(t.n_arms);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < t.n_arms; ++i) {
    logits[i] = t.noisy_arm_reward(i) / temperature;
    mx = std::max(mx, logits[i]);
  }
  double z = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - mx);
    z += v;
  }
  for (auto& v : logits) v /= z;
  return logits;
}

// One-step environment around the continuous turntable; rewards come from the
// clean signal (the frozen noise lives in the learned policy, not the payout).
class TurntableEnv final : public Environment {
 public:
  explicit TurntableEnv(BanditTurntable table) : table_(std::move(table)) {
    double mx = 0.0;
    for (int i = 0; i < 4096; ++i)
      mx = std::max(mx, std::abs(table_.clean_signal(-M_PI + 2.0 * M_PI * i / 4096.0)));
    r_bound_ = mx;
  }

  std::string name() const override { return "turntable"; }
  State reset(RandomEngine&) const override { return {0.0}; }
  StepOutcome step(const State&, double action, RandomEngine&) const override {
    return {{0.0}, table_.clean_signal(action), true};
  }
  double action_low() const override { return -M_PI; }
  double action_high() const override { return M_PI; }
  int max_episode_steps() const override { return 1; }
  double reward_bound() const override { return r_bound_; }
  std::pair<double, double> feature_range() const override { return {-0.5, 0.5}; }
  bool stateless() const override { return true; }

  const BanditTurntable& table() const { return table_; }

 private:
  BanditTurntable table_;
  double r_bound_ = 1.0;
};

// ---------------------------------------------------------------------------
// Acting and rollouts

// Bin the state feature (clamping out-of-range values to the end bins),
// sample an action bin from the row pmf and return its midpoint; with jitter,
// add uniform noise inside the bin.
inline double act_embedded(const LatticePolicy& lat, double state_feature, RandomEngine& rng,
                           bool jitter) {
  const int s = lat.state_bins.locate(state_feature);
  const double u = rng.uniform();
  int j = lat.b_A - 1;
  double acc = 0.0;
  for (int a = 0; a < lat.b_A; ++a) {
    acc += lat.at(s, a);
    if (u < acc) {
      j = a;
      break;
    }
  }
  double action = lat.action_bins.midpoint(j);
  if (jitter) {
    const double half = 0.5 * lat.action_bins.width(j);
    action = std::clamp(action + rng.uniform(-half, half), lat.action_bins.edges[j],
                        lat.action_bins.edges[j + 1]);
  }
  return action;
}

// Adapter so a lattice policy can drive rollouts.
struct EmbeddedActor {
  const LatticePolicy* lattice;
  const Environment* env;
  bool jitter = false;

  double operator()(const State& s, RandomEngine& rng) const {
    return act_embedded(*lattice, env->feature(s), rng, jitter);
  }
};

struct RolloutResult {
  std::vector<Trajectory> trajectories;
  std::vector<double> returns;  // undiscounted per-trajectory sums
  VisitationStats visitation;
  bool has_visitation = false;
};

// Rolls n_traj episodes. Trajectory i draws from its own engine seeded with
// mix_seed(seed, i), so results do not depend on scheduling order. Sampled
// actions outside the declared action range are an error.
template <typename ActFn>
  requires std::is_invocable_r_v<double, ActFn&, const State&, RandomEngine&>
RolloutResult rollout(const Environment& env, ActFn&& act, int n_traj, int max_steps,
                      std::uint64_t seed, const BinEdges* state_bins = nullptr,
                      const BinEdges* action_bins = nullptr) {
  if (n_traj < 1 || max_steps < 1) throw std::invalid_argument("rollout: empty request");
  RolloutResult out;
  out.trajectories.resize(n_traj);
  out.returns.resize(n_traj);
  const bool track = state_bins != nullptr && action_bins != nullptr;
  if (track) {
    out.visitation.b_S = state_bins->bins();
    out.visitation.b_A = action_bins->bins();
    out.visitation.counts.assign(
        static_cast<std::size_t>(out.visitation.b_S) * out.visitation.b_A, 0);
    out.visitation.n_trajectories = n_traj;
  }
  const double lo = env.action_low() - 1e-9, hi = env.action_high() + 1e-9;
  for (int i = 0; i < n_traj; ++i) {
    RandomEngine rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    State s = env.reset(rng);
    Trajectory& traj = out.trajectories[i];
    double ret = 0.0;
    for (int t = 0; t < max_steps; ++t) {
      const double a = act(s, rng);
      if (a < lo || a > hi)
        throw std::runtime_error("rollout: policy sampled action " + std::to_string(a) +
                                 " outside the action range");
      StepOutcome outcome = env.step(s, a, rng);
      traj.states.push_back(s);
      traj.actions.push_back(a);
      traj.rewards.push_back(outcome.reward);
      ret += outcome.reward;
      if (track)
        ++out.visitation.count(state_bins->locate(env.feature(s)), action_bins->locate(a));
      s = std::move(outcome.state);
      if (outcome.done) break;
    }
    out.returns[i] = ret;
  }
  if (track) {
    out.has_visitation = true;
    const double total = static_cast<double>(out.visitation.total_steps());
    out.visitation.rho.assign(out.visitation.b_S, 0.0);
    for (int s = 0; s < out.visitation.b_S; ++s)
      out.visitation.rho[s] = static_cast<double>(out.visitation.state_count(s)) / total;
    out.visitation.validate();
  }
  return out;
}

inline RolloutResult rollout(const Environment& env, const SyntheticPolicy& policy, int n_traj,
                             int max_steps, std::uint64_t seed,
                             const BinEdges* state_bins = nullptr,
                             const BinEdges* action_bins = nullptr) {
  return rollout(
      env, [&policy](const State& s, RandomEngine& rng) { return policy.act(s, rng); }, n_traj,
      max_steps, seed, state_bins, action_bins);
}

}  // namespace polembed
