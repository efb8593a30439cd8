#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "polembed/lattice.hpp"
#include "polembed/rng.hpp"

// Quantile discretization: bin rollout samples at empirical quantiles and
// project a continuous policy onto the resulting lattice by evaluating its
// density at bin midpoints.

namespace polembed {

// A continuous stochastic policy, seen through the scalar state coordinate
// that gets binned. density must be finite and nonnegative wherever queried;
// sample must return actions inside the declared action range.
class PolicyOracle {
 public:
  virtual ~PolicyOracle() = default;
  virtual double density(double state, double action) const = 0;
  virtual double sample(double state, RandomEngine& rng) const = 0;
};

// Empirical distribution of a sample set. cdf is the usual right-continuous
// step function; quantile(p) = inf{x : p <= cdf(x)}, with no interpolation.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw std::invalid_argument("EmpiricalCdf: no samples");
    for (double v : sorted_)
      if (!std::isfinite(v)) throw std::invalid_argument("EmpiricalCdf: non-finite sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double cdf(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  double quantile(double p) const {
    const auto n = static_cast<double>(sorted_.size());
    if (p <= 0.0) return sorted_.front();
    if (p >= 1.0) return sorted_.back();
    // smallest k with (k+1)/n >= p; ties are handled because every copy of a
    // value shares the same cdf level
    const auto k = static_cast<std::size_t>(std::ceil(p * n)) - 1;
    return sorted_[std::min(k, sorted_.size() - 1)];
  }

  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// Edges at the empirical quantiles l/b, outer edges at the sample extremes.
// Requires at least b distinct values; edge collisions caused by heavy ties
// are an error rather than a silent merge.
inline BinEdges fit_quantile_bins(const std::vector<double>& samples, int b) {
  if (b < 1) throw std::invalid_argument("fit_quantile_bins: b must be >= 1");
  const EmpiricalCdf cdf(samples);
  const std::set<double> distinct(samples.begin(), samples.end());
  if (static_cast<int>(distinct.size()) < b)
    throw std::invalid_argument(
        "fit_quantile_bins: only " + std::to_string(distinct.size()) +
        " distinct values after duplicate collapse, need at least " + std::to_string(b));
  std::vector<double> edges(b + 1);
  edges[0] = cdf.min();
  edges[b] = cdf.max();
  for (int l = 1; l < b; ++l)
    edges[l] = cdf.quantile(static_cast<double>(l) / static_cast<double>(b));
  for (int l = 0; l < b; ++l) {
    if (!(edges[l] < edges[l + 1]))
      throw std::invalid_argument(
          "fit_quantile_bins: duplicate samples collapse edge " + std::to_string(l) +
          " and " + std::to_string(l + 1) + " onto the same value");
  }
  return BinEdges(std::move(edges));
}

struct DiscretizedPolicy {
  LatticePolicy policy;
  std::vector<int> uniform_rows;  // rows whose densities were all zero
};

// probs[l][l'] proportional to density at the (state midpoint, action
// midpoint) pair, each row renormalized. Zero-density rows fall back to
// uniform and are flagged.
inline DiscretizedPolicy discretize_policy(const PolicyOracle& oracle,
                                           const BinEdges& state_bins,
                                           const BinEdges& action_bins) {
  state_bins.validate();
  action_bins.validate();
  DiscretizedPolicy out;
  LatticePolicy& p = out.policy;
  p.b_S = state_bins.bins();
  p.b_A = action_bins.bins();
  p.state_bins = state_bins;
  p.action_bins = action_bins;
  p.probs.assign(static_cast<std::size_t>(p.b_S) * p.b_A, 0.0);
  for (int l = 0; l < p.b_S; ++l) {
    const double s_mid = state_bins.midpoint(l);
    double sum = 0.0;
    for (int lp = 0; lp < p.b_A; ++lp) {
      const double d = oracle.density(s_mid, action_bins.midpoint(lp));
      if (!std::isfinite(d) || d < 0.0)
        throw std::runtime_error("discretize_policy: invalid density at cell (" +
                                 std::to_string(l) + ", " + std::to_string(lp) + ")");
      p.at(l, lp) = d;
      sum += d;
    }
    if (sum == 0.0) {
      for (int lp = 0; lp < p.b_A; ++lp) p.at(l, lp) = 1.0 / p.b_A;
      out.uniform_rows.push_back(l);
    } else {
      for (int lp = 0; lp < p.b_A; ++lp) p.at(l, lp) /= sum;
    }
  }
  p.validate();
  return out;
}

namespace detail {

// composite trapezoid over [lo, hi]
template <typename F>
double trapezoid(F&& f, double lo, double hi, int points) {
  const int n = std::max(points - 1, 1);  // intervals
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

}  // namespace detail

// Volume of the discretization error: the product, over state bin i and
// action bin j, of |integral of the empirical cdf over the bin minus the
// step level (i/b_S resp. j/b_A) times the bin width|. The action cdf and its
// bins are conditional on the state bin. Integrals use a fixed-resolution
// composite trapezoid rule with 1024 intervals per bin.
inline double discretization_error_volume(const EmpiricalCdf& state_cdf,
                                          const std::vector<EmpiricalCdf>& conditional_action_cdfs,
                                          const BinEdges& state_bins,
                                          const std::vector<BinEdges>& action_bins_per_state_bin) {
  constexpr int kPointsPerBin = 1025;
  const int b_S = state_bins.bins();
  if (static_cast<int>(conditional_action_cdfs.size()) != b_S ||
      static_cast<int>(action_bins_per_state_bin.size()) != b_S)
    throw std::invalid_argument(
        "discretization_error_volume: need one conditional action cdf and one "
        "action binning per state bin");
  double volume = 0.0;
  for (int i = 0; i < b_S; ++i) {
    const double qs_lo = state_bins.edges[i];
    const double qs_hi = state_bins.edges[i + 1];
    const double level_s = static_cast<double>(i + 1) / b_S;
    const double int_s = detail::trapezoid([&](double x) { return state_cdf.cdf(x); },
                                           qs_lo, qs_hi, kPointsPerBin);
    const double err_s = std::abs(int_s - level_s * (qs_hi - qs_lo));

    const EmpiricalCdf& acdf = conditional_action_cdfs[i];
    const BinEdges& abins = action_bins_per_state_bin[i];
    const int b_A = abins.bins();
    if (static_cast<int>(action_bins_per_state_bin[i].bins()) < 1)
      throw std::invalid_argument("discretization_error_volume: empty action binning");
    for (int j = 0; j < b_A; ++j) {
      const double qa_lo = abins.edges[j];
      const double qa_hi = abins.edges[j + 1];
      const double level_a = static_cast<double>(j + 1) / b_A;
      const double int_a = detail::trapezoid([&](double x) { return acdf.cdf(x); },
                                             qa_lo, qa_hi, kPointsPerBin);
      const double err_a = std::abs(int_a - level_a * (qa_hi - qa_lo));
      volume += err_s * err_a;
    }
  }
  return volume;
}

// Convenience builder for the conditional quantities of the error volume:
// groups action samples by the state bin of the paired state sample and fits
// per-group action bins.
struct ConditionalCdfs {
  EmpiricalCdf state_cdf;
  std::vector<EmpiricalCdf> action_cdfs;
  std::vector<BinEdges> action_bins;
};

inline ConditionalCdfs build_conditional_cdfs(const std::vector<double>& state_samples,
                                              const std::vector<double>& action_samples,
                                              const BinEdges& state_bins, int b_A) {
  if (state_samples.size() != action_samples.size())
    throw std::invalid_argument("build_conditional_cdfs: sample lists must pair up");
  const int b_S = state_bins.bins();
  std::vector<std::vector<double>> grouped(b_S);
  for (std::size_t t = 0; t < state_samples.size(); ++t)
    grouped[state_bins.locate(state_samples[t])].push_back(action_samples[t]);
  ConditionalCdfs out{EmpiricalCdf(state_samples), {}, {}};
  for (int i = 0; i < b_S; ++i) {
    if (grouped[i].empty())
      throw std::invalid_argument("build_conditional_cdfs: state bin " + std::to_string(i) +
                                  " received no samples");
    out.action_cdfs.emplace_back(grouped[i]);
    out.action_bins.push_back(fit_quantile_bins(grouped[i], b_A));
  }
  return out;
}

}  // namespace polembed
