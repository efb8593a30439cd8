#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types for discretized policies. All types here are plain value
// types, immutable by convention after construction, and safe to share across
// concurrent readers.

namespace polembed {

constexpr double kRowSumTol = 1e-9;       // invariant tolerance
constexpr double kRowSumRepairTol = 1e-6; // loader renormalizes up to this

// Quantile bin edges for one dimension. edges has b+1 entries, strictly
// increasing; bin i covers [edges[i], edges[i+1]].
struct BinEdges {
  std::vector<double> edges;

  BinEdges() = default;
  explicit BinEdges(std::vector<double> e) : edges(std::move(e)) { validate(); }

  int bins() const { return static_cast<int>(edges.size()) - 1; }
  double lo() const { return edges.front(); }
  double hi() const { return edges.back(); }
  double midpoint(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  double width(int i) const { return edges[i + 1] - edges[i]; }

  // Bin index for x; values outside the covered range clamp to the end bins.
  int locate(double x) const {
    if (x <= edges.front()) return 0;
    if (x >= edges.back()) return bins() - 1;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    return static_cast<int>(it - edges.begin()) - 1;
  }

  void validate() const {
    if (edges.size() < 2) throw std::invalid_argument("BinEdges: need at least one bin");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      if (!std::isfinite(edges[i]) || !(edges[i] < edges[i + 1]))
        throw std::invalid_argument("BinEdges: edges must be finite and strictly increasing");
    }
    if (!std::isfinite(edges.back()))
      throw std::invalid_argument("BinEdges: edges must be finite");
  }
};

// The discretized policy: a row-stochastic b_S x b_A table over state and
// action bins. Rows must sum to 1 within kRowSumTol.
struct LatticePolicy {
  int b_S = 0;
  int b_A = 0;
  std::vector<double> probs;  // row-major, b_S * b_A
  BinEdges state_bins;
  BinEdges action_bins;
  bool renormalized_on_load = false;  // set when the loader repaired row sums

  double at(int s, int a) const { return probs[static_cast<std::size_t>(s) * b_A + a]; }
  double& at(int s, int a) { return probs[static_cast<std::size_t>(s) * b_A + a]; }

  void validate() const {
    if (b_S < 1 || b_A < 1) throw std::invalid_argument("LatticePolicy: empty shape");
    if (probs.size() != static_cast<std::size_t>(b_S) * b_A)
      throw std::invalid_argument("LatticePolicy: probs shape mismatch");
    if (state_bins.bins() != b_S || action_bins.bins() != b_A)
      throw std::invalid_argument("LatticePolicy: bin edges do not match shape");
    state_bins.validate();
    action_bins.validate();
    for (int s = 0; s < b_S; ++s) {
      double sum = 0.0;
      for (int a = 0; a < b_A; ++a) {
        const double p = at(s, a);
        if (!std::isfinite(p) || p < 0.0)
          throw std::invalid_argument("LatticePolicy: entries must be finite and nonnegative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTol)
        throw std::invalid_argument("LatticePolicy: row " + std::to_string(s) +
                                    " sums to " + std::to_string(sum));
    }
  }

  // Conditional action density at action a given state bin s: bin mass over
  // bin width. Used when comparing against continuous densities.
  double action_density(int s, double a) const {
    const int j = action_bins.locate(a);
    return at(s, j) / action_bins.width(j);
  }
};

// Empirical state coverage and (state, action) visit counts from rollouts.
struct VisitationStats {
  int b_S = 0;
  int b_A = 0;
  std::vector<double> rho;          // length b_S, sums to 1
  std::vector<std::int64_t> counts; // row-major b_S * b_A
  std::int64_t n_trajectories = 0;

  std::int64_t count(int s, int a) const {
    return counts[static_cast<std::size_t>(s) * b_A + a];
  }
  std::int64_t& count(int s, int a) {
    return counts[static_cast<std::size_t>(s) * b_A + a];
  }
  std::int64_t state_count(int s) const {
    std::int64_t n = 0;
    for (int a = 0; a < b_A; ++a) n += count(s, a);
    return n;
  }
  std::int64_t total_steps() const {
    std::int64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  void validate() const {
    if (b_S < 1 || b_A < 1) throw std::invalid_argument("VisitationStats: empty shape");
    if (rho.size() != static_cast<std::size_t>(b_S) ||
        counts.size() != static_cast<std::size_t>(b_S) * b_A)
      throw std::invalid_argument("VisitationStats: shape mismatch");
    if (n_trajectories < 1) throw std::invalid_argument("VisitationStats: n_trajectories < 1");
    double sum = 0.0;
    for (int s = 0; s < b_S; ++s) {
      if (rho[s] < 0.0) throw std::invalid_argument("VisitationStats: negative rho");
      sum += rho[s];
      const bool empty_row = state_count(s) == 0;
      if ((rho[s] == 0.0) != empty_row)
        throw std::invalid_argument("VisitationStats: rho[s]=0 must coincide with an empty count row");
    }
    for (auto c : counts)
      if (c < 0) throw std::invalid_argument("VisitationStats: negative count");
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::invalid_argument("VisitationStats: rho must sum to 1");
  }
};

// Raw rollout carrier. states[i] is the full environment state vector.
struct Trajectory {
  std::vector<std::vector<double>> states;
  std::vector<double> actions;
  std::vector<double> rewards;

  std::size_t size() const { return actions.size(); }

  void validate() const {
    if (states.size() != actions.size() || actions.size() != rewards.size())
      throw std::invalid_argument("Trajectory: lists must have equal length");
    for (const auto& s : states)
      for (double v : s)
        if (!std::isfinite(v)) throw std::invalid_argument("Trajectory: non-finite state");
    for (double a : actions)
      if (!std::isfinite(a)) throw std::invalid_argument("Trajectory: non-finite action");
    for (double r : rewards)
      if (!std::isfinite(r)) throw std::invalid_argument("Trajectory: non-finite reward");
  }
};

namespace detail {

inline void write_real(std::ostream& os, double v) {
  os << std::setprecision(17) << v;
}

// Token stream over a text file; '#' starts a comment that runs to newline.
inline std::vector<std::string> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  return tokens;
}

class TokenCursor {
 public:
  TokenCursor(std::vector<std::string> tokens, std::string path)
      : tokens_(std::move(tokens)), path_(std::move(path)) {}

  double next_real() {
    const std::string& t = next();
    try {
      std::size_t pos = 0;
      const double v = std::stod(t, &pos);
      if (pos != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error(path_ + ": expected a number, got '" + t + "'");
    }
  }

  std::int64_t next_int() {
    const double v = next_real();
    if (v != std::floor(v)) throw std::runtime_error(path_ + ": expected an integer");
    return static_cast<std::int64_t>(v);
  }

  const std::string& next() {
    if (pos_ >= tokens_.size()) throw std::runtime_error(path_ + ": truncated file");
    return tokens_[pos_++];
  }

  bool done() const { return pos_ >= tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Text format: line 1 "b_S b_A"; line 2 state edges (b_S + 1 reals); line 3
// action edges; then b_S lines of b_A probabilities. '#' starts a comment.
// Reals are written with 17 significant digits so save/load round-trips
// bit-exactly.
inline void save_lattice(const LatticePolicy& policy, const std::string& path) {
  policy.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << policy.b_S << ' ' << policy.b_A << '\n';
  for (int i = 0; i <= policy.b_S; ++i) {
    if (i) out << ' ';
    detail::write_real(out, policy.state_bins.edges[i]);
  }
  out << '\n';
  for (int j = 0; j <= policy.b_A; ++j) {
    if (j) out << ' ';
    detail::write_real(out, policy.action_bins.edges[j]);
  }
  out << '\n';
  for (int s = 0; s < policy.b_S; ++s) {
    for (int a = 0; a < policy.b_A; ++a) {
      if (a) out << ' ';
      detail::write_real(out, policy.at(s, a));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

// Rows are re-checked, never silently renormalized: a row-sum defect within
// kRowSumTol is accepted as-is, between kRowSumTol and kRowSumRepairTol it is
// renormalized and flagged, beyond kRowSumRepairTol it is an error.
inline LatticePolicy load_lattice(const std::string& path) {
  detail::TokenCursor cur(detail::read_tokens(path), path);
  LatticePolicy p;
  p.b_S = static_cast<int>(cur.next_int());
  p.b_A = static_cast<int>(cur.next_int());
  if (p.b_S < 1 || p.b_A < 1) throw std::runtime_error(path + ": invalid shape");
  std::vector<double> se(p.b_S + 1), ae(p.b_A + 1);
  for (auto& v : se) v = cur.next_real();
  for (auto& v : ae) v = cur.next_real();
  p.state_bins = BinEdges(std::move(se));
  p.action_bins = BinEdges(std::move(ae));
  p.probs.resize(static_cast<std::size_t>(p.b_S) * p.b_A);
  for (auto& v : p.probs) v = cur.next_real();
  for (int s = 0; s < p.b_S; ++s) {
    double sum = 0.0;
    for (int a = 0; a < p.b_A; ++a) {
      const double v = p.at(s, a);
      if (!std::isfinite(v) || v < 0.0)
        throw std::runtime_error(path + ": invalid probability in row " + std::to_string(s));
      sum += v;
    }
    const double defect = std::abs(sum - 1.0);
    if (defect > kRowSumRepairTol)
      throw std::runtime_error(path + ": row " + std::to_string(s) + " sums to " +
                               std::to_string(sum));
    if (defect > kRowSumTol) {
      for (int a = 0; a < p.b_A; ++a) p.at(s, a) /= sum;
      p.renormalized_on_load = true;
    }
  }
  p.validate();
  return p;
}

// Visitation format: "b_S b_A n_trajectories", the rho line, then b_S count
// rows of b_A integers.
inline void save_visitation(const VisitationStats& v, const std::string& path) {
  v.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << v.b_S << ' ' << v.b_A << ' ' << v.n_trajectories << '\n';
  for (int s = 0; s < v.b_S; ++s) {
    if (s) out << ' ';
    detail::write_real(out, v.rho[s]);
  }
  out << '\n';
  for (int s = 0; s < v.b_S; ++s) {
    for (int a = 0; a < v.b_A; ++a) {
      if (a) out << ' ';
      out << v.count(s, a);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline VisitationStats load_visitation(const std::string& path) {
  detail::TokenCursor cur(detail::read_tokens(path), path);
  VisitationStats v;
  v.b_S = static_cast<int>(cur.next_int());
  v.b_A = static_cast<int>(cur.next_int());
  v.n_trajectories = cur.next_int();
  if (v.b_S < 1 || v.b_A < 1) throw std::runtime_error(path + ": invalid shape");
  v.rho.resize(v.b_S);
  for (auto& r : v.rho) r = cur.next_real();
  v.counts.resize(static_cast<std::size_t>(v.b_S) * v.b_A);
  for (auto& c : v.counts) c = cur.next_int();
  v.validate();
  return v;
}

}  // namespace polembed
