#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "polembed/lattice.hpp"
#include "polembed/rng.hpp"

// Exact computations on tabular MDPs: expected transition model, stationary
// distribution, fundamental matrix, Schatten norms, the coverage perturbation
// bound and policy evaluation.

namespace polembed {

constexpr double kMdpTol = 1e-12;

struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> T;  // (s * n_actions + a) * n_states + s2
  Eigen::MatrixXd R;      // n_states x n_actions
  double gamma = 0.0;
  Eigen::VectorXd beta;   // initial state distribution

  double p(int s, int a, int s2) const {
    return T[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return T[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }

  double r_max() const { return R.cwiseAbs().maxCoeff(); }

  void validate() const {
    if (n_states < 1 || n_actions < 1) throw std::invalid_argument("TabularMDP: empty shape");
    if (T.size() != static_cast<std::size_t>(n_states) * n_actions * n_states ||
        R.rows() != n_states || R.cols() != n_actions ||
        beta.size() != n_states)
      throw std::invalid_argument("TabularMDP: shape mismatch");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("TabularMDP: gamma must lie in [0, 1)");
    for (int s = 0; s < n_states; ++s)
      for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) {
          const double v = p(s, a, s2);
          if (!(v >= 0.0)) throw std::invalid_argument("TabularMDP: negative transition");
          sum += v;
        }
        if (std::abs(sum - 1.0) > kMdpTol)
          throw std::invalid_argument("TabularMDP: T[" + std::to_string(s) + "," +
                                      std::to_string(a) + ",:] does not sum to 1");
      }
    if (std::abs(beta.sum() - 1.0) > kMdpTol)
      throw std::invalid_argument("TabularMDP: beta must sum to 1");
    if (!R.allFinite()) throw std::invalid_argument("TabularMDP: rewards must be finite");
  }
};

// Pi(a, s) = pi(a | s); every column is a distribution over actions.
struct PolicyMatrix {
  Eigen::MatrixXd Pi;

  int n_actions() const { return static_cast<int>(Pi.rows()); }
  int n_states() const { return static_cast<int>(Pi.cols()); }

  void validate() const {
    if (Pi.rows() < 1 || Pi.cols() < 1) throw std::invalid_argument("PolicyMatrix: empty");
    for (int s = 0; s < Pi.cols(); ++s) {
      double sum = 0.0;
      for (int a = 0; a < Pi.rows(); ++a) {
        if (!(Pi(a, s) >= 0.0)) throw std::invalid_argument("PolicyMatrix: negative entry");
        sum += Pi(a, s);
      }
      if (std::abs(sum - 1.0) > kMdpTol)
        throw std::invalid_argument("PolicyMatrix: column " + std::to_string(s) +
                                    " does not sum to 1");
    }
  }

  // Lattice rows are pi(a|s); the policy matrix is its transpose.
  static PolicyMatrix from_lattice(const LatticePolicy& lat) {
    PolicyMatrix pm;
    pm.Pi.resize(lat.b_A, lat.b_S);
    for (int s = 0; s < lat.b_S; ++s)
      for (int a = 0; a < lat.b_A; ++a) pm.Pi(a, s) = lat.at(s, a);
    pm.validate();
    return pm;
  }
};

// (P_pi)_{s s'} = sum_a pi(a|s) P(s'|s, a)
inline Eigen::MatrixXd expected_transition(const TabularMDP& mdp, const PolicyMatrix& pi) {
  if (pi.n_states() != mdp.n_states || pi.n_actions() != mdp.n_actions)
    throw std::invalid_argument("expected_transition: shape mismatch");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double w = pi.Pi(a, s);
      if (w == 0.0) continue;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) P(s, s2) += w * mdp.p(s, a, s2);
    }
  return P;
}

// Both reachability directions on the positive-entry adjacency graph.
inline bool is_irreducible(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int found = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const double w = forward ? P(u, v) : P(v, u);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          ++found;
          stack.push_back(v);
        }
      }
    }
    return found == n;
  };
  return reach_all(true) && reach_all(false);
}

// Left principal eigenvector by power iteration: rho^T P = rho^T with l1
// residual below kMdpTol. Starts undamped; a period-2 oscillation is broken
// by averaging consecutive iterates, then by retrying on the damped chain
// (1-c) P + c uniform with c = 1e-10.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  if (P.cols() != n || n < 1) throw std::invalid_argument("stationary_distribution: not square");
  constexpr long kMaxIter = 1000000;
  auto run = [&](double damping) -> std::pair<Eigen::VectorXd, double> {
    Eigen::MatrixXd Pd = P;
    if (damping > 0.0) {
      Pd = (1.0 - damping) * P +
           damping * Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    }
    const Eigen::MatrixXd Pt = Pd.transpose();
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
    Eigen::VectorXd prev = x, prev2 = x;
    double resid = std::numeric_limits<double>::infinity();
    for (long it = 0; it < kMaxIter; ++it) {
      Eigen::VectorXd y = Pt * x;
      const double s = y.sum();
      if (s <= 0.0) throw std::runtime_error("stationary_distribution: degenerate iterate");
      y /= s;
      resid = (P.transpose() * y - y).cwiseAbs().sum();
      if (resid < kMdpTol) return {y, resid};
      if (it >= 2) {
        const double osc = (y - prev2).cwiseAbs().sum();
        const double step = (y - prev).cwiseAbs().sum();
        if (osc < 1e-13 && step > 1e-9) {
          // period-2 cycle: the average of consecutive iterates kills it
          y = 0.5 * (y + prev);
          y /= y.sum();
        }
      }
      prev2 = prev;
      prev = y;
      x = y;
    }
    return {x, resid};
  };
  auto [rho, resid] = run(0.0);
  if (resid < kMdpTol) return rho;
  auto [rho2, resid2] = run(1e-10);
  if (resid2 < kMdpTol) return rho2;
  throw std::runtime_error("stationary_distribution: no convergence, residual " +
                           std::to_string(std::min(resid, resid2)));
}

// Z = (I - P + 1 rho^T)^{-1}
inline Eigen::MatrixXd fundamental_matrix(const Eigen::MatrixXd& P, const Eigen::VectorXd& rho) {
  const int n = static_cast<int>(P.rows());
  if (P.cols() != n || rho.size() != n)
    throw std::invalid_argument("fundamental_matrix: shape mismatch");
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - P +
                            Eigen::VectorXd::Ones(n) * rho.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw std::runtime_error("fundamental_matrix: singular system");
  return lu.inverse();
}

enum class SchattenOrder { kS1, kS2, kSInf };

// lp norm of the singular values: S1 nuclear, S2 Frobenius, SInf spectral.
inline double schatten_norm(const Eigen::MatrixXd& M, SchattenOrder p) {
  if (!M.allFinite()) throw std::invalid_argument("schatten_norm: non-finite matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const Eigen::VectorXd& sv = svd.singularValues();
  switch (p) {
    case SchattenOrder::kS1: return sv.sum();
    case SchattenOrder::kS2: return sv.norm();
    case SchattenOrder::kSInf: return sv.size() ? sv[0] : 0.0;
  }
  return 0.0;
}

// Mode-k unfolding of the transition tensor T[s, a, s']. Mode 1 puts s on the
// rows, mode 2 puts a, mode 3 puts the next state s' (the form used in the
// coverage bound).
inline Eigen::MatrixXd matricize(const TabularMDP& mdp, int mode) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Eigen::MatrixXd M;
  if (mode == 1) {
    M.resize(S, A * S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int s2 = 0; s2 < S; ++s2) M(s, a * S + s2) = mdp.p(s, a, s2);
  } else if (mode == 2) {
    M.resize(A, S * S);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int s2 = 0; s2 < S; ++s2) M(a, s * S + s2) = mdp.p(s, a, s2);
  } else if (mode == 3) {
    M.resize(S, S * A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        for (int s2 = 0; s2 < S; ++s2) M(s2, s * A + a) = mdp.p(s, a, s2);
  } else {
    throw std::invalid_argument("matricize: mode must be 1, 2 or 3");
  }
  return M;
}

// Stationary-distribution perturbation bound
//   ||rho_pi - rho_alt||_1 <= ||Z||_SInf ||Pi - Pi_alt||_S1 ||T_(3)||_S2
// with Z the fundamental matrix of the chain induced by pi.
inline double coverage_bound(const TabularMDP& mdp, const PolicyMatrix& pi,
                             const PolicyMatrix& pi_alt) {
  mdp.validate();
  pi.validate();
  pi_alt.validate();
  if (pi.Pi.rows() != pi_alt.Pi.rows() || pi.Pi.cols() != pi_alt.Pi.cols())
    throw std::invalid_argument("coverage_bound: policy shapes differ");
  const Eigen::MatrixXd P = expected_transition(mdp, pi);
  const Eigen::MatrixXd P_alt = expected_transition(mdp, pi_alt);
  if (!is_irreducible(P) || !is_irreducible(P_alt))
    throw std::runtime_error("coverage_bound: induced chain is reducible");
  const Eigen::VectorXd rho = stationary_distribution(P);
  const Eigen::MatrixXd Z = fundamental_matrix(P, rho);
  return schatten_norm(Z, SchattenOrder::kSInf) *
         schatten_norm(pi.Pi - pi_alt.Pi, SchattenOrder::kS1) *
         schatten_norm(matricize(mdp, 3), SchattenOrder::kS2);
}

struct PolicyEvaluation {
  Eigen::VectorXd V;
  Eigen::MatrixXd Q;
  double eta = 0.0;      // beta^T V
  double eps_bar = 0.0;  // max_{s,a} |Q(s,a) - V(s)|, the advantage magnitude
};

// Exact solve of the Bellman equations, with iterative refinement until the
// residual drops below kMdpTol.
inline PolicyEvaluation policy_evaluation(const TabularMDP& mdp, const PolicyMatrix& pi) {
  mdp.validate();
  pi.validate();
  if (pi.n_states() != mdp.n_states || pi.n_actions() != mdp.n_actions)
    throw std::invalid_argument("policy_evaluation: shape mismatch");
  const int S = mdp.n_states, A = mdp.n_actions;
  const Eigen::MatrixXd P = expected_transition(mdp, pi);
  Eigen::VectorXd r_pi(S);
  for (int s = 0; s < S; ++s) {
    double acc = 0.0;
    for (int a = 0; a < A; ++a) acc += pi.Pi(a, s) * mdp.R(s, a);
    r_pi[s] = acc;
  }
  const Eigen::MatrixXd Asys = Eigen::MatrixXd::Identity(S, S) - mdp.gamma * P;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Asys);
  Eigen::VectorXd V = lu.solve(r_pi);
  for (int refine = 0; refine < 4; ++refine) {
    const Eigen::VectorXd resid = r_pi - Asys * V;
    if (resid.cwiseAbs().maxCoeff() < kMdpTol) break;
    V += lu.solve(resid);
  }
  PolicyEvaluation out;
  out.V = V;
  out.Q.resize(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double next = 0.0;
      for (int s2 = 0; s2 < S; ++s2) next += mdp.p(s, a, s2) * V[s2];
      out.Q(s, a) = mdp.R(s, a) + mdp.gamma * next;
    }
  out.eta = mdp.beta.dot(V);
  out.eps_bar = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      out.eps_bar = std::max(out.eps_bar, std::abs(out.Q(s, a) - V[s]));
  return out;
}

struct ChainMdp {
  TabularMDP mdp;
  PolicyMatrix policy;
};

// Deterministic birth-death chain: action 1 moves right, action 0 moves left,
// end states stay put instead. The fixed policy moves right with probability
// alpha everywhere.
inline ChainMdp make_chain_mdp(int n_states, double alpha, double gamma = 0.9) {
  if (n_states < 2) throw std::invalid_argument("make_chain_mdp: need at least 2 states");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("make_chain_mdp: alpha must lie in (0, 1)");
  ChainMdp out;
  TabularMDP& m = out.mdp;
  m.n_states = n_states;
  m.n_actions = 2;
  m.T.assign(static_cast<std::size_t>(n_states) * 2 * n_states, 0.0);
  for (int s = 0; s < n_states; ++s) {
    m.p(s, 0, std::max(s - 1, 0)) = 1.0;
    m.p(s, 1, std::min(s + 1, n_states - 1)) = 1.0;
  }
  m.R = Eigen::MatrixXd::Zero(n_states, 2);
  m.gamma = gamma;
  m.beta = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
  m.validate();
  out.policy.Pi.resize(2, n_states);
  for (int s = 0; s < n_states; ++s) {
    out.policy.Pi(0, s) = 1.0 - alpha;
    out.policy.Pi(1, s) = alpha;
  }
  out.policy.validate();
  return out;
}

// One finite-horizon trajectory sampled from the tabular dynamics.
struct TabularRollout {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
};

inline TabularRollout sample_tabular(const TabularMDP& mdp, const PolicyMatrix& pi, int horizon,
                                     RandomEngine& rng) {
  TabularRollout out;
  std::vector<double> beta(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) beta[s] = mdp.beta[s];
  int s = rng.categorical(beta);
  std::vector<double> row(mdp.n_actions), next(mdp.n_states);
  for (int t = 0; t < horizon; ++t) {
    for (int a = 0; a < mdp.n_actions; ++a) row[a] = pi.Pi(a, s);
    const int a = rng.categorical(row);
    for (int s2 = 0; s2 < mdp.n_states; ++s2) next[s2] = mdp.p(s, a, s2);
    const int s2 = rng.categorical(next);
    out.states.push_back(s);
    out.actions.push_back(a);
    out.rewards.push_back(mdp.R(s, a));
    s = s2;
  }
  return out;
}

// Visit counts over tabular states, in the shape the pruning step consumes.
inline VisitationStats count_visits(const std::vector<TabularRollout>& rollouts, int n_states,
                                    int n_actions) {
  VisitationStats v;
  v.b_S = n_states;
  v.b_A = n_actions;
  v.counts.assign(static_cast<std::size_t>(n_states) * n_actions, 0);
  v.n_trajectories = static_cast<std::int64_t>(rollouts.size());
  for (const auto& r : rollouts)
    for (std::size_t t = 0; t < r.states.size(); ++t) ++v.count(r.states[t], r.actions[t]);
  v.rho.assign(n_states, 0.0);
  const double total = static_cast<double>(v.total_steps());
  for (int s = 0; s < n_states; ++s)
    v.rho[s] = total > 0 ? static_cast<double>(v.state_count(s)) / total : 0.0;
  v.validate();
  return v;
}

}  // namespace polembed
