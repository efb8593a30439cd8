#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "polembed/lattice.hpp"

// Visitation-based pruning: visited state bins answer with their empirical
// action frequencies, unvisited ones answer uniformly.

namespace polembed {

struct PrunedPolicy {
  LatticePolicy base;                      // frequency rows, uniform where unvisited
  std::vector<std::uint8_t> visited_mask;  // length b_S
  double pruned_fraction = 0.0;            // (#unvisited rows) / b_S
};

namespace detail {

inline BinEdges integer_grid_edges(int n) {
  std::vector<double> e(n + 1);
  for (int i = 0; i <= n; ++i) e[i] = static_cast<double>(i) - 0.5;
  return BinEdges(std::move(e));
}

}  // namespace detail

// A state bin counts as visited when its coverage exceeds the threshold
// (the experiments use threshold 0, so any visited state survives). The
// normalizer is the state's own visit count, so rows normalize exactly.
// Bin edges default to an integer grid for tabular use; pass the lattice's
// edges when pruning a discretized policy.
inline PrunedPolicy prune_policy(const VisitationStats& counts, int b_A,
                                 double threshold = 0.0,
                                 const BinEdges* state_bins = nullptr,
                                 const BinEdges* action_bins = nullptr) {
  counts.validate();
  if (b_A != counts.b_A)
    throw std::invalid_argument("prune_policy: b_A does not match the visitation table");
  if (threshold < 0.0) throw std::invalid_argument("prune_policy: threshold must be >= 0");
  PrunedPolicy out;
  LatticePolicy& p = out.base;
  p.b_S = counts.b_S;
  p.b_A = b_A;
  p.state_bins = state_bins ? *state_bins : detail::integer_grid_edges(p.b_S);
  p.action_bins = action_bins ? *action_bins : detail::integer_grid_edges(p.b_A);
  p.probs.assign(static_cast<std::size_t>(p.b_S) * p.b_A, 0.0);
  out.visited_mask.assign(p.b_S, 0);
  int unvisited = 0;
  for (int s = 0; s < p.b_S; ++s) {
    const bool visited = counts.rho[s] > threshold;
    out.visited_mask[s] = visited ? 1 : 0;
    if (visited) {
      const double n_s = static_cast<double>(counts.state_count(s));
      for (int a = 0; a < b_A; ++a)
        p.at(s, a) = static_cast<double>(counts.count(s, a)) / n_s;
    } else {
      ++unvisited;
      for (int a = 0; a < b_A; ++a) p.at(s, a) = 1.0 / b_A;
    }
  }
  out.pruned_fraction = static_cast<double>(unvisited) / p.b_S;
  p.validate();
  return out;
}

// High-probability bound on the return gap caused by pruning, as a function
// of the number of rollout trajectories:
//   (2 r_max / (1 - gamma)) * sqrt((3|S||A| + 4 ln(1/delta)) / (2N)).
inline double pruning_bound(std::int64_t n_trajectories, double r_max, double gamma,
                            int n_states, int n_actions, double delta) {
  if (n_trajectories < 1) throw std::invalid_argument("pruning_bound: N must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("pruning_bound: gamma must lie in [0, 1)");
  if (!(delta > 0.0 && delta < 0.5))
    throw std::invalid_argument("pruning_bound: delta must lie in (0, 0.5)");
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("pruning_bound: state and action counts must be positive");
  if (!(r_max >= 0.0) || !std::isfinite(r_max))
    throw std::invalid_argument("pruning_bound: r_max must be finite and nonnegative");
  const double sa = static_cast<double>(n_states) * n_actions;
  return (2.0 * r_max / (1.0 - gamma)) *
         std::sqrt((3.0 * sa + 4.0 * std::log(1.0 / delta)) /
                   (2.0 * static_cast<double>(n_trajectories)));
}

inline double pruned_fraction_report(const PrunedPolicy& p) { return p.pruned_fraction; }

}  // namespace polembed
