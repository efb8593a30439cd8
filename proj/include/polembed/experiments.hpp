#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "polembed/lattice.hpp"
#include "polembed/markov.hpp"
#include "polembed/metrics.hpp"
#include "polembed/prune.hpp"
#include "polembed/quantize.hpp"
#include "polembed/simulate.hpp"
#include "polembed/spectral.hpp"

// Desk-scale experiment drivers shared by the CLI and the acceptance suite.
// Everything here is a pure function of its seed.

namespace polembed::experiments {

// ---------------------------------------------------------------------------
// Random tabular instances

inline TabularMDP random_mdp(int n_states, int n_actions, double gamma, RandomEngine& rng) {
  TabularMDP m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.T.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double v = 0.05 + rng.uniform();  // strictly positive: irreducible
        m.p(s, a, s2) = v;
        sum += v;
      }
      for (int s2 = 0; s2 < n_states; ++s2) m.p(s, a, s2) /= sum;
    }
  m.R.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) m.R(s, a) = rng.uniform(-1.0, 1.0);
  m.beta = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
  m.validate();
  return m;
}

inline PolicyMatrix random_policy(int n_states, int n_actions, RandomEngine& rng) {
  PolicyMatrix pm;
  pm.Pi.resize(n_actions, n_states);
  for (int s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double v = 0.05 + rng.uniform();
      pm.Pi(a, s) = v;
      sum += v;
    }
    for (int a = 0; a < n_actions; ++a) pm.Pi(a, s) /= sum;
  }
  pm.validate();
  return pm;
}

namespace detail {

inline LatticePolicy lattice_from_policy_matrix(const PolicyMatrix& pm) {
  LatticePolicy lat;
  lat.b_S = pm.n_states();
  lat.b_A = pm.n_actions();
  std::vector<double> se(lat.b_S + 1), ae(lat.b_A + 1);
  for (int i = 0; i <= lat.b_S; ++i) se[i] = i - 0.5;
  for (int j = 0; j <= lat.b_A; ++j) ae[j] = j - 0.5;
  lat.state_bins = BinEdges(se);
  lat.action_bins = BinEdges(ae);
  lat.probs.resize(static_cast<std::size_t>(lat.b_S) * lat.b_A);
  for (int s = 0; s < lat.b_S; ++s)
    for (int a = 0; a < lat.b_A; ++a) lat.at(s, a) = pm.Pi(a, s);
  lat.validate();
  return lat;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pruning-bound certification: exact return gap vs the high-probability bound
// over random tabular MDPs, with visitation counted from sampled rollouts.

struct CertificationRow {
  double measured = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct CertificationResult {
  std::vector<CertificationRow> rows;
  int held = 0;
  int total = 0;
  double coverage() const { return total ? static_cast<double>(held) / total : 0.0; }
};

inline CertificationResult certify_pruning_bound(int n_mdps, int max_states, int max_actions,
                                                 double gamma, double delta, int n_traj,
                                                 int horizon, std::uint64_t seed) {
  CertificationResult out;
  RandomEngine rng(mix_seed(seed, 0x97));
  for (int trial = 0; trial < n_mdps; ++trial) {
    const int S = 2 + rng.uniform_int(max_states - 1);
    const int A = 2 + rng.uniform_int(max_actions - 1);
    const TabularMDP mdp = random_mdp(S, A, gamma, rng);
    const PolicyMatrix pi = random_policy(S, A, rng);
    std::vector<TabularRollout> rollouts;
    for (int i = 0; i < n_traj; ++i) rollouts.push_back(sample_tabular(mdp, pi, horizon, rng));
    const VisitationStats visits = count_visits(rollouts, S, A);
    const PrunedPolicy pruned = prune_policy(visits, A, 0.0);
    const PolicyMatrix pi_pruned = PolicyMatrix::from_lattice(pruned.base);
    const double eta = policy_evaluation(mdp, pi).eta;
    const double eta_pruned = policy_evaluation(mdp, pi_pruned).eta;
    CertificationRow row;
    row.measured = std::abs(eta - eta_pruned);
    row.bound = pruning_bound(n_traj, mdp.r_max(), gamma, S, A, delta);
    row.holds = row.measured <= row.bound;
    out.rows.push_back(row);
    out.held += row.holds ? 1 : 0;
    ++out.total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coverage-bound certification: stationary-distribution gap vs the
// perturbation bound, with the perturbed policy obtained by truncation.

inline CertificationResult certify_coverage_bound(int n_mdps, int max_states, int max_actions,
                                                  double gamma, std::uint64_t seed) {
  CertificationResult out;
  RandomEngine rng(mix_seed(seed, 0x2f));
  for (int trial = 0; trial < n_mdps; ++trial) {
    const int S = 2 + rng.uniform_int(max_states - 1);
    const int A = 2 + rng.uniform_int(max_actions - 1);
    const TabularMDP mdp = random_mdp(S, A, gamma, rng);
    const PolicyMatrix pi = random_policy(S, A, rng);
    const LatticePolicy lat = detail::lattice_from_policy_matrix(pi);
    const int K = 1 + rng.uniform_int(S * A);
    const PolicyMatrix pi_alt = PolicyMatrix::from_lattice(reconstruct(project_dft(lat, K)));
    const Eigen::VectorXd rho = stationary_distribution(expected_transition(mdp, pi));
    const Eigen::VectorXd rho_alt = stationary_distribution(expected_transition(mdp, pi_alt));
    CertificationRow row;
    row.measured = (rho - rho_alt).cwiseAbs().sum();
    row.bound = coverage_bound(mdp, pi, pi_alt);
    row.holds = row.measured <= row.bound + 1e-12;
    out.rows.push_back(row);
    out.held += row.holds ? 1 : 0;
    ++out.total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chain-MDP bound surface over (number of states, components kept)

struct ChainBoundRow {
  int n_states = 0;
  int K = 0;
  double bound = 0.0;
  double measured = 0.0;
};

inline std::vector<ChainBoundRow> chain_bound_surface(const std::vector<int>& state_counts,
                                                      double alpha,
                                                      const std::vector<int>& components) {
  std::vector<ChainBoundRow> rows;
  for (int N : state_counts) {
    const ChainMdp chain = make_chain_mdp(N, alpha);
    const LatticePolicy lat = detail::lattice_from_policy_matrix(chain.policy);
    const Eigen::VectorXd rho = stationary_distribution(expected_transition(chain.mdp, chain.policy));
    for (int K : components) {
      if (K > N * 2) continue;
      const PolicyMatrix alt = PolicyMatrix::from_lattice(reconstruct(project_dft(lat, K)));
      ChainBoundRow row;
      row.n_states = N;
      row.K = K;
      row.bound = coverage_bound(chain.mdp, chain.policy, alt);
      row.measured =
          (rho - stationary_distribution(expected_transition(chain.mdp, alt))).cwiseAbs().sum();
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Turntable W1 sweep: ground-truth (clean-signal) lattice against truncations
// of the noisy learned policy, plus the fixed-basis mixture baseline.

struct TurntableW1Result {
  std::vector<int> Ks;
  std::vector<double> w1_dft;
  double w1_gmm_20 = 0.0;
  LatticePolicy clean_lattice;
  LatticePolicy noisy_lattice;
};

struct TurntableSetup {
  int n_modes = 5;
  double kappa = 3.0;
  double temperature = 1.0;
  double amplitude = 1.0;
  double lambda_noise = 2e-4;
  int b_A = 100;
  int n_bin_samples = 20000;
};

inline TurntableW1Result turntable_w1_sweep(std::uint64_t seed,
                                            const TurntableSetup& cfg = TurntableSetup{}) {
  const TurntableBundle noisy =
      make_turntable(cfg.n_modes, cfg.lambda_noise, cfg.temperature, seed, cfg.kappa,
                     cfg.amplitude);
  const TurntableBundle clean =
      make_turntable(cfg.n_modes, 0.0, cfg.temperature, seed, cfg.kappa, cfg.amplitude);

  // Action bins from samples of the learned (noisy) policy, as in the
  // discretization step; both policies share the binning.
  RandomEngine rng(mix_seed(seed, 0xb1));
  std::vector<double> draws(cfg.n_bin_samples);
  for (auto& a : draws) a = noisy.oracle->sample(0.0, rng);
  const BinEdges action_bins = fit_quantile_bins(draws, cfg.b_A);
  const BinEdges state_bins({-0.5, 0.5});

  TurntableW1Result out;
  out.clean_lattice = discretize_policy(*clean.oracle, state_bins, action_bins).policy;
  out.noisy_lattice = discretize_policy(*noisy.oracle, state_bins, action_bins).policy;
  const std::vector<double> w = {1.0};
  for (int K = 1; K <= cfg.b_A; ++K) {
    const LatticePolicy rec = reconstruct(project_dft(out.noisy_lattice, K));
    out.Ks.push_back(K);
    out.w1_dft.push_back(avg_policy_w1(out.clean_lattice, rec, w));
  }
  std::vector<double> target(cfg.b_A);
  for (int j = 0; j < cfg.b_A; ++j)
    target[j] = out.noisy_lattice.at(0, j) / action_bins.width(j);
  RandomEngine gmm_rng(mix_seed(seed, 0x6a));
  const SpectralEmbedding gmm = fit_fixed_basis_gmm(target, action_bins, 20, gmm_rng);
  out.w1_gmm_20 = avg_policy_w1(out.clean_lattice, reconstruct(gmm), w);
  return out;
}

// ---------------------------------------------------------------------------
// Bandit denoising: expected (clean) reward of the greedy action, truncated
// policy vs the full noisy policy, across independent noise seeds.

struct DenoisingResult {
  int wins = 0;
  int seeds = 0;
  std::vector<double> clean_at_truncated;
  std::vector<double> clean_at_full;
};

struct DenoisingSetup {
  int n_arms = 64;
  int n_modes = 1;
  double kappa = 6.0;
  double amplitude_over_lambda = 3.5;
  double temperature_over_lambda = 1.2;
};

inline DenoisingResult bandit_denoising(double snr, int K, int n_seeds, std::uint64_t seed0,
                                        const DenoisingSetup& cfg = DenoisingSetup{}) {
  DenoisingResult out;
  const double lambda = cfg.n_arms / (2.0 * snr);
  const double amplitude = cfg.amplitude_over_lambda * lambda;
  const double temperature = cfg.temperature_over_lambda * lambda;
  for (int sdx = 0; sdx < n_seeds; ++sdx) {
    const BanditTurntable table = make_turntable_arms(
        cfg.n_arms, cfg.n_modes, lambda, amplitude, seed0 + sdx, cfg.kappa, temperature);
    const std::vector<double> pmf = boltzmann_arm_pmf(table, temperature);
    LatticePolicy lat;
    lat.b_S = 1;
    lat.b_A = cfg.n_arms;
    std::vector<double> ae(cfg.n_arms + 1);
    for (int j = 0; j <= cfg.n_arms; ++j) ae[j] = -M_PI + 2.0 * M_PI * j / cfg.n_arms;
    lat.action_bins = BinEdges(ae);
    lat.state_bins = BinEdges({-0.5, 0.5});
    lat.probs = pmf;
    lat.validate();
    const LatticePolicy rec = reconstruct(project_dft(lat, K));
    const auto greedy = [&](const LatticePolicy& p) {
      int best = 0;
      for (int j = 1; j < p.b_A; ++j)
        if (p.at(0, j) > p.at(0, best)) best = j;
      return best;
    };
    const double clean_trunc = table.clean_arm_reward(greedy(rec));
    const double clean_full = table.clean_arm_reward(greedy(lat));
    out.clean_at_truncated.push_back(clean_trunc);
    out.clean_at_full.push_back(clean_full);
    out.wins += clean_trunc >= clean_full - 1e-12 ? 1 : 0;
    ++out.seeds;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variance direction on the pendulum-like setting: returns of the true
// synthetic policy vs the half-budget truncation rolled out as a lattice.

struct VarianceDirectionResult {
  ReturnStats pi_stats;
  ReturnStats hat_stats;
  VarianceConditionReport conditions;
  int K = 0;
};

inline VarianceDirectionResult pendulum_variance_direction(int trials, std::uint64_t seed,
                                                           double sigma = 0.5, int b_S = 35,
                                                           int b_A = 15) {
  const PendulumEnv env = make_pendulum();
  const SyntheticPolicy pi = pendulum_angle_policy(sigma);
  const RolloutResult bin_roll = rollout(env, pi, 100, env.max_episode_steps(), mix_seed(seed, 1));
  std::vector<double> feats, acts;
  for (const auto& tr : bin_roll.trajectories)
    for (std::size_t t = 0; t < tr.size(); ++t) {
      feats.push_back(env.feature(tr.states[t]));
      acts.push_back(tr.actions[t]);
    }
  const BinEdges sb = fit_quantile_bins(feats, b_S);
  const BinEdges ab = fit_quantile_bins(acts, b_A);
  const LatticePolicy lat = discretize_policy(pi, sb, ab).policy;

  VarianceDirectionResult out;
  out.K = b_S * b_A / 2;
  const LatticePolicy hat = reconstruct(project_dft(lat, out.K));
  const RolloutResult rr_pi = rollout(env, pi, trials, env.max_episode_steps(), mix_seed(seed, 2));
  const EmbeddedActor actor{&hat, &env, true};
  const RolloutResult rr_hat =
      rollout(env, actor, trials, env.max_episode_steps(), mix_seed(seed, 3));
  out.pi_stats = return_stats(rr_pi.returns);
  out.hat_stats = return_stats(rr_hat.returns);

  // residual pi - pi_hat at initial state-action pairs drawn under beta
  RandomEngine rng(mix_seed(seed, 4));
  std::vector<double> eps;
  for (int i = 0; i < 2000; ++i) {
    const State s = env.reset(rng);
    const double a = pi.act(s, rng);
    const int sbin = hat.state_bins.locate(env.feature(s));
    eps.push_back(pi.density_full(s, a) - hat.action_density(sbin, a));
  }
  out.conditions = check_variance_conditions(eps, out.pi_stats.mean, out.hat_stats.mean);
  return out;
}

// ---------------------------------------------------------------------------
// Mountain-car MLE anchoring: every embedded method at its largest parameter
// budget should land inside the MLE baseline's return band.

struct MleAnchorResult {
  double mle_mean = 0.0;
  double mle_se = 0.0;
  std::vector<std::string> methods;
  std::vector<double> method_means;
  std::vector<std::vector<double>> per_seed;  // [method][seed]
  std::vector<double> mle_per_seed;
};

inline MleAnchorResult cmc_mle_anchor(int n_seeds, std::uint64_t seed0, double sigma = 0.25,
                                      int b_S = 35, int b_A = 10, int n_traj = 20) {
  const MountainCarEnv env = make_mountain_car();
  const SyntheticPolicy pi = mountain_car_energy_policy(sigma);
  const RolloutResult bin_roll =
      rollout(env, pi, 100, env.max_episode_steps(), mix_seed(seed0, 1));
  std::vector<double> feats, acts;
  for (const auto& tr : bin_roll.trajectories)
    for (std::size_t t = 0; t < tr.size(); ++t) {
      feats.push_back(env.feature(tr.states[t]));
      acts.push_back(tr.actions[t]);
    }
  const BinEdges sb = fit_quantile_bins(feats, b_S);
  const BinEdges ab = fit_quantile_bins(acts, b_A);
  const LatticePolicy lat = discretize_policy(pi, sb, ab).policy;

  MleAnchorResult out;
  std::vector<LatticePolicy> reconstructions;
  out.methods = {"dft", "haar", "db4", "svd", "mle"};
  reconstructions.push_back(reconstruct(project_dft(lat, b_S * b_A)));
  {
    const int pad_full_haar = static_cast<int>(polembed::detail::next_pow2(b_S)) *
                              static_cast<int>(polembed::detail::next_pow2(b_A));
    reconstructions.push_back(reconstruct(project_dwt(lat, pad_full_haar, WaveletKind::kHaar)));
    reconstructions.push_back(reconstruct(project_dwt(lat, pad_full_haar, WaveletKind::kDb4)));
  }
  reconstructions.push_back(reconstruct(project_svd(lat, std::min(b_S, b_A))));
  {
    RandomEngine mle_rng(mix_seed(seed0, 2));
    reconstructions.push_back(mle_baseline(pi, sb, ab, 2000, mle_rng));
  }

  out.per_seed.assign(out.methods.size(), {});
  for (std::size_t m = 0; m < reconstructions.size(); ++m) {
    for (int s = 0; s < n_seeds; ++s) {
      const EmbeddedActor actor{&reconstructions[m], &env, true};
      const RolloutResult rr = rollout(env, actor, n_traj, env.max_episode_steps(),
                                       mix_seed(seed0, 100 + 17 * s + m));
      out.per_seed[m].push_back(return_stats(rr.returns).mean);
    }
  }
  out.mle_per_seed = out.per_seed.back();
  const ReturnStats mle_stats = return_stats(out.mle_per_seed);
  out.mle_mean = mle_stats.mean;
  out.mle_se = mle_stats.std / std::sqrt(static_cast<double>(n_seeds));
  for (std::size_t m = 0; m < reconstructions.size(); ++m)
    out.method_means.push_back(return_stats(out.per_seed[m]).mean);
  return out;
}

// ---------------------------------------------------------------------------
// Fourier rate diagnostic: log-log slope of the L1 truncation error on a
// smooth periodic density.

inline double fourier_l1_slope(const std::vector<int>& Ks = {4, 8, 16, 32, 64}, int b_A = 256,
                               double kappa = 4.0) {
  std::vector<double> ae(b_A + 1);
  for (int j = 0; j <= b_A; ++j) ae[j] = -M_PI + 2.0 * M_PI * j / b_A;
  const BinEdges action_bins(ae);
  const BinEdges state_bins({-0.5, 0.5});
  LatticePolicy lat;
  lat.b_S = 1;
  lat.b_A = b_A;
  lat.state_bins = state_bins;
  lat.action_bins = action_bins;
  lat.probs.resize(b_A);
  double sum = 0.0;
  for (int j = 0; j < b_A; ++j) {
    lat.probs[j] = std::exp(kappa * (std::cos(action_bins.midpoint(j) - 0.3) - 1.0));
    sum += lat.probs[j];
  }
  for (auto& v : lat.probs) v /= sum;
  lat.validate();
  std::vector<double> lx, ly;
  for (int K : Ks) {
    const LatticePolicy rec = reconstruct(project_dft(lat, K));
    double l1 = 0.0;
    for (int j = 0; j < b_A; ++j) l1 += std::abs(lat.at(0, j) - rec.at(0, j));
    lx.push_back(std::log(static_cast<double>(K)));
    ly.push_back(std::log(std::max(l1, 1e-16)));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace polembed::experiments
