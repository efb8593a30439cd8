#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polembed/fft.hpp"
#include "polembed/lattice.hpp"
#include "polembed/rng.hpp"
#include "polembed/wavelet.hpp"

// Projection of a lattice policy onto truncated orthonormal bases, plus the
// RKHS-side distance and bound calculators.

namespace polembed {

enum class Basis { kDft, kHaar, kDb4, kSvd, kGmm };

inline const char* basis_name(Basis b) {
  switch (b) {
    case Basis::kDft: return "dft";
    case Basis::kHaar: return "haar";
    case Basis::kDb4: return "db4";
    case Basis::kSvd: return "svd";
    case Basis::kGmm: return "gmm";
  }
  return "?";
}

inline Basis basis_from_name(const std::string& s) {
  if (s == "dft") return Basis::kDft;
  if (s == "haar") return Basis::kHaar;
  if (s == "db4") return Basis::kDb4;
  if (s == "svd") return Basis::kSvd;
  if (s == "gmm") return Basis::kGmm;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;
  double var = 1.0;
};

// Retained coefficient set of one truncation. For the Fourier basis a
// conjugate-symmetric coefficient pair counts as one retained component and
// only the canonical (lexicographically smaller) index is stored.
struct SpectralEmbedding {
  Basis basis = Basis::kDft;
  int K = 0;  // retained component count
  int b_S = 0;
  int b_A = 0;

  std::vector<int> dft_indices;  // flat i*b_A + j, canonical representatives
  std::vector<Complex> dft_values;

  int pad_S = 0;  // wavelet transforms run on the padded shape
  int pad_A = 0;
  std::vector<int> dwt_indices;  // flat in pad_S x pad_A
  std::vector<double> dwt_values;

  Eigen::MatrixXd svd_u;      // b_S x K
  Eigen::VectorXd svd_sigma;  // K
  Eigen::MatrixXd svd_v;      // b_A x K

  std::vector<GmmComponent> mixture;

  // carried in memory so reconstruct() can rebuild a policy; not serialized
  BinEdges state_bins, action_bins;
  bool has_bins = false;
};

// Space cost of the stored representation: K for the fixed orthonormal bases,
// b_S*K + K^2 + b_A*K for the truncated SVD, 4K for a mixture.
inline int parameter_count(const SpectralEmbedding& e) {
  switch (e.basis) {
    case Basis::kDft:
    case Basis::kHaar:
    case Basis::kDb4:
      return e.K;
    case Basis::kSvd:
      return e.b_S * e.K + e.K * e.K + e.b_A * e.K;
    case Basis::kGmm:
      return 4 * e.K;
  }
  return 0;
}

namespace detail {

struct RankedCoeff {
  double mag;
  int flat;
};

inline void rank_coefficients(std::vector<RankedCoeff>& refs) {
  std::stable_sort(refs.begin(), refs.end(), [](const RankedCoeff& a, const RankedCoeff& b) {
    if (a.mag != b.mag) return a.mag > b.mag;
    return a.flat < b.flat;  // deterministic tie-break: lexicographic index order
  });
}

}  // namespace detail

// 2-D DFT, coefficients ranked by complex magnitude, top K conjugate classes
// retained. K is a component budget in [1, b_S*b_A]; once every class is
// retained the embedding is exact.
inline SpectralEmbedding project_dft(const LatticePolicy& lattice, int K) {
  lattice.validate();
  const int m = lattice.b_S, n = lattice.b_A;
  if (K < 1 || K > m * n) throw std::invalid_argument("project_dft: K out of range");
  std::vector<Complex> spec(lattice.probs.begin(), lattice.probs.end());
  fft2(spec, m, n, false);
  std::vector<detail::RankedCoeff> classes;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const int pi = (m - i) % m, pj = (n - j) % n;
      if (std::make_pair(pi, pj) < std::make_pair(i, j)) continue;  // partner is canonical
      classes.push_back({std::abs(spec[static_cast<std::size_t>(i) * n + j]),
                         i * n + j});
    }
  }
  detail::rank_coefficients(classes);
  const int keep = std::min(K, static_cast<int>(classes.size()));
  std::vector<int> idx(keep);
  for (int k = 0; k < keep; ++k) idx[k] = classes[k].flat;
  std::sort(idx.begin(), idx.end());
  SpectralEmbedding e;
  e.basis = Basis::kDft;
  e.K = keep;
  e.b_S = m;
  e.b_A = n;
  e.dft_indices = idx;
  e.dft_values.reserve(keep);
  for (int flat : idx) e.dft_values.push_back(spec[flat]);
  e.state_bins = lattice.state_bins;
  e.action_bins = lattice.action_bins;
  e.has_bins = true;
  return e;
}

// Separable 2-D DWT on the lattice padded to powers of two by symmetric
// extension; top K coefficients by magnitude retained.
inline SpectralEmbedding project_dwt(const LatticePolicy& lattice, int K, WaveletKind wavelet) {
  lattice.validate();
  const int m = lattice.b_S, n = lattice.b_A;
  const int pm = static_cast<int>(detail::next_pow2(static_cast<std::size_t>(m)));
  const int pn = static_cast<int>(detail::next_pow2(static_cast<std::size_t>(n)));
  if (K < 1 || K > pm * pn) throw std::invalid_argument("project_dwt: K out of range");
  std::vector<double> padded(static_cast<std::size_t>(pm) * pn);
  for (int i = 0; i < pm; ++i) {
    const std::size_t si = symmetric_index(i, m);
    for (int j = 0; j < pn; ++j)
      padded[static_cast<std::size_t>(i) * pn + j] =
          lattice.probs[si * n + symmetric_index(j, n)];
  }
  dwt2d(padded, pm, pn, wavelet, false);
  std::vector<detail::RankedCoeff> refs;
  refs.reserve(padded.size());
  for (int f = 0; f < pm * pn; ++f) refs.push_back({std::abs(padded[f]), f});
  detail::rank_coefficients(refs);
  SpectralEmbedding e;
  e.basis = wavelet == WaveletKind::kHaar ? Basis::kHaar : Basis::kDb4;
  e.K = K;
  e.b_S = m;
  e.b_A = n;
  e.pad_S = pm;
  e.pad_A = pn;
  std::vector<int> idx(K);
  for (int k = 0; k < K; ++k) idx[k] = refs[k].flat;
  std::sort(idx.begin(), idx.end());
  e.dwt_indices = idx;
  e.dwt_values.reserve(K);
  for (int flat : idx) e.dwt_values.push_back(padded[flat]);
  e.state_bins = lattice.state_bins;
  e.action_bins = lattice.action_bins;
  e.has_bins = true;
  return e;
}

// Rank-K truncated SVD; the K largest singular triplets are kept.
inline SpectralEmbedding project_svd(const LatticePolicy& lattice, int K) {
  lattice.validate();
  const int m = lattice.b_S, n = lattice.b_A;
  if (K < 1 || K > std::min(m, n)) throw std::invalid_argument("project_svd: K out of range");
  Eigen::MatrixXd M(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = lattice.at(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SpectralEmbedding e;
  e.basis = Basis::kSvd;
  e.K = K;
  e.b_S = m;
  e.b_A = n;
  e.svd_u = svd.matrixU().leftCols(K);
  e.svd_sigma = svd.singularValues().head(K);
  e.svd_v = svd.matrixV().leftCols(K);
  e.state_bins = lattice.state_bins;
  e.action_bins = lattice.action_bins;
  e.has_bins = true;
  return e;
}

// Inverse transform without the policy repair step: the raw b_S x b_A matrix.
inline std::vector<double> reconstruct_raw(const SpectralEmbedding& e) {
  const int m = e.b_S, n = e.b_A;
  switch (e.basis) {
    case Basis::kDft: {
      std::vector<Complex> spec(static_cast<std::size_t>(m) * n, Complex(0.0, 0.0));
      for (std::size_t k = 0; k < e.dft_indices.size(); ++k) {
        const int flat = e.dft_indices[k];
        const int i = flat / n, j = flat % n;
        spec[flat] = e.dft_values[k];
        const int pi = (m - i) % m, pj = (n - j) % n;
        const int pflat = pi * n + pj;
        if (pflat != flat) spec[pflat] = std::conj(e.dft_values[k]);
      }
      fft2(spec, m, n, true);
      std::vector<double> out(spec.size());
      for (std::size_t t = 0; t < spec.size(); ++t) out[t] = spec[t].real();
      return out;
    }
    case Basis::kHaar:
    case Basis::kDb4: {
      std::vector<double> padded(static_cast<std::size_t>(e.pad_S) * e.pad_A, 0.0);
      for (std::size_t k = 0; k < e.dwt_indices.size(); ++k)
        padded[e.dwt_indices[k]] = e.dwt_values[k];
      dwt2d(padded, e.pad_S, e.pad_A,
            e.basis == Basis::kHaar ? WaveletKind::kHaar : WaveletKind::kDb4, true);
      std::vector<double> out(static_cast<std::size_t>(m) * n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          out[static_cast<std::size_t>(i) * n + j] =
              padded[static_cast<std::size_t>(i) * e.pad_A + j];
      return out;
    }
    case Basis::kSvd: {
      const Eigen::MatrixXd M = e.svd_u * e.svd_sigma.asDiagonal() * e.svd_v.transpose();
      std::vector<double> out(static_cast<std::size_t>(m) * n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] = M(i, j);
      return out;
    }
    case Basis::kGmm: {
      if (!e.has_bins)
        throw std::invalid_argument("reconstruct_raw: mixture embedding needs action bins");
      const int rows = std::max(m, 1);
      const int cols = e.action_bins.bins();
      std::vector<double> out(static_cast<std::size_t>(rows) * cols, 0.0);
      for (int j = 0; j < cols; ++j) {
        double d = 0.0;
        for (const auto& c : e.mixture)
          d += c.weight * gaussian_pdf(e.action_bins.midpoint(j), c.mean, c.var);
        for (int i = 0; i < rows; ++i) out[static_cast<std::size_t>(i) * cols + j] = d;
      }
      return out;
    }
  }
  throw std::logic_error("reconstruct_raw: unreachable");
}

namespace detail {

inline LatticePolicy repair_to_policy(std::vector<double> raw, int b_S, int b_A,
                                      const BinEdges& sb, const BinEdges& ab) {
  LatticePolicy p;
  p.b_S = b_S;
  p.b_A = b_A;
  p.state_bins = sb;
  p.action_bins = ab;
  p.probs = std::move(raw);
  for (int s = 0; s < b_S; ++s) {
    double sum = 0.0;
    for (int a = 0; a < b_A; ++a) {
      double& v = p.at(s, a);
      if (v < 0.0) v = 0.0;  // clip, then renormalize
      sum += v;
    }
    if (sum <= 0.0) {
      for (int a = 0; a < b_A; ++a) p.at(s, a) = 1.0 / b_A;
    } else {
      for (int a = 0; a < b_A; ++a) p.at(s, a) /= sum;
    }
  }
  p.validate();
  return p;
}

}  // namespace detail

// Inverse transform followed by the policy repair: negatives clipped, rows
// renormalized, all-zero rows set uniform.
inline LatticePolicy reconstruct(const SpectralEmbedding& e, const BinEdges& state_bins,
                                 const BinEdges& action_bins) {
  std::vector<double> raw = reconstruct_raw(
      [&] {
        if (e.basis == Basis::kGmm && !e.has_bins) {
          SpectralEmbedding with_bins = e;
          with_bins.state_bins = state_bins;
          with_bins.action_bins = action_bins;
          with_bins.has_bins = true;
          with_bins.b_S = state_bins.bins();
          with_bins.b_A = action_bins.bins();
          return with_bins;
        }
        return e;
      }());
  const int b_S = e.basis == Basis::kGmm ? state_bins.bins() : e.b_S;
  const int b_A = e.basis == Basis::kGmm ? action_bins.bins() : e.b_A;
  return detail::repair_to_policy(std::move(raw), b_S, b_A, state_bins, action_bins);
}

inline LatticePolicy reconstruct(const SpectralEmbedding& e) {
  if (!e.has_bins)
    throw std::invalid_argument(
        "reconstruct: embedding carries no bin edges (loaded from file?); pass them explicitly");
  return reconstruct(e, e.state_bins, e.action_bins);
}

// ---------------------------------------------------------------------------
// Gaussian mixtures

namespace detail {

struct GmmFit {
  std::vector<GmmComponent> components;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

constexpr double kGmmVarFloor = 1e-6;
constexpr int kGmmMaxIter = 500;
constexpr double kGmmTol = 1e-8;

inline GmmFit run_em(const std::vector<double>& x, std::vector<GmmComponent> comp,
                     RandomEngine& rng) {
  const std::size_t n = x.size();
  const std::size_t K = comp.size();
  std::vector<double> resp(n * K);
  GmmFit fit;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kGmmMaxIter; ++iter) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double norm = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double v = comp[k].weight * gaussian_pdf(x[i], comp[k].mean, comp[k].var);
        resp[i * K + k] = v;
        norm += v;
      }
      if (norm <= 0.0) norm = 1e-300;
      for (std::size_t k = 0; k < K; ++k) resp[i * K + k] /= norm;
      ll += std::log(norm);
    }
    for (std::size_t k = 0; k < K; ++k) {
      double nk = 0.0, mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * K + k];
        mu += resp[i * K + k] * x[i];
      }
      if (nk < 1e-12) {
        // dead component: reseat on a random sample
        comp[k].mean = x[rng.uniform_int(static_cast<int>(n))];
        comp[k].var = std::max(kGmmVarFloor, 1.0);
        comp[k].weight = 1.0 / static_cast<double>(K);
        continue;
      }
      mu /= nk;
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mu;
        var += resp[i * K + k] * d * d;
      }
      comp[k].weight = nk / static_cast<double>(n);
      comp[k].mean = mu;
      comp[k].var = std::max(var / nk, kGmmVarFloor);
    }
    double wsum = 0.0;
    for (auto& c : comp) wsum += c.weight;
    for (auto& c : comp) c.weight /= wsum;
    if (ll - prev_ll < kGmmTol && iter > 0) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }
  fit.components = std::move(comp);
  fit.log_likelihood = prev_ll;
  return fit;
}

}  // namespace detail

// Expectation-maximization with seeded restarts; the best log-likelihood run
// is kept. Component variances are floored at 1e-6.
inline SpectralEmbedding fit_gmm(const std::vector<double>& samples, int K, int restarts,
                                 RandomEngine& rng) {
  if (K < 1) throw std::invalid_argument("fit_gmm: K must be >= 1");
  if (restarts < 1) throw std::invalid_argument("fit_gmm: restarts must be >= 1");
  for (double v : samples)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_gmm: non-finite sample");
  std::vector<double> distinct(samples.begin(), samples.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (static_cast<int>(distinct.size()) < K)
    throw std::invalid_argument("fit_gmm: K exceeds the number of distinct samples");
  const double n = static_cast<double>(samples.size());
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var = std::max(var / n, detail::kGmmVarFloor);

  detail::GmmFit best;
  for (int r = 0; r < restarts; ++r) {
    std::vector<GmmComponent> init(K);
    // means drawn from distinct sample values without replacement
    std::vector<int> order(distinct.size());
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < K; ++k) {
      const int pick = k + rng.uniform_int(static_cast<int>(order.size()) - k);
      std::swap(order[k], order[pick]);
      init[k] = {1.0 / K, distinct[order[k]], var};
    }
    detail::GmmFit fit = detail::run_em(samples, std::move(init), rng);
    if (fit.log_likelihood > best.log_likelihood) best = std::move(fit);
  }
  SpectralEmbedding e;
  e.basis = Basis::kGmm;
  e.K = K;
  e.b_S = 1;
  e.b_A = 0;
  e.mixture = std::move(best.components);
  return e;
}

// Fixed random Gaussian atoms for the fixed-basis mixture baseline: means
// uniform over [-pi, pi], variances drawn from {0.1, 0.5, 1, 2}.
inline std::vector<GmmComponent> sample_fixed_gmm_atoms(int K, RandomEngine& rng) {
  if (K < 1) throw std::invalid_argument("sample_fixed_gmm_atoms: K must be >= 1");
  static const double kVarChoices[] = {0.1, 0.5, 1.0, 2.0};
  std::vector<GmmComponent> atoms(K);
  for (int k = 0; k < K; ++k) {
    atoms[k].mean = rng.uniform(-M_PI, M_PI);
    atoms[k].var = kVarChoices[rng.uniform_int(4)];
    atoms[k].weight = 0.0;
  }
  return atoms;
}

namespace detail {

// Lawson-Hanson nonnegative least squares: min ||A w - b||, w >= 0.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int ncols = static_cast<int>(A.cols());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(ncols);
  std::vector<bool> passive(ncols, false);
  const double tol = 1e-12 * A.norm() * std::max(1.0, b.norm());
  for (int outer = 0; outer < 3 * ncols + 10; ++outer) {
    const Eigen::VectorXd grad = A.transpose() * (b - A * w);
    int j_best = -1;
    double g_best = tol;
    for (int j = 0; j < ncols; ++j)
      if (!passive[j] && grad[j] > g_best) {
        g_best = grad[j];
        j_best = j;
      }
    if (j_best < 0) break;
    passive[j_best] = true;
    for (int inner = 0; inner < 3 * ncols + 10; ++inner) {
      std::vector<int> pidx;
      for (int j = 0; j < ncols; ++j)
        if (passive[j]) pidx.push_back(j);
      Eigen::MatrixXd Ap(A.rows(), pidx.size());
      for (std::size_t c = 0; c < pidx.size(); ++c) Ap.col(c) = A.col(pidx[c]);
      const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
      bool all_positive = true;
      for (int c = 0; c < zp.size(); ++c)
        if (zp[c] <= 0.0) all_positive = false;
      if (all_positive) {
        w.setZero();
        for (std::size_t c = 0; c < pidx.size(); ++c) w[pidx[c]] = zp[c];
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < pidx.size(); ++c)
        if (zp[c] <= 0.0)
          alpha = std::min(alpha, w[pidx[c]] / (w[pidx[c]] - zp[c]));
      for (std::size_t c = 0; c < pidx.size(); ++c)
        w[pidx[c]] += alpha * (zp[c] - w[pidx[c]]);
      for (std::size_t c = 0; c < pidx.size(); ++c)
        if (w[pidx[c]] <= 1e-14) {
          passive[pidx[c]] = false;
          w[pidx[c]] = 0.0;
        }
    }
  }
  return w;
}

}  // namespace detail

// Mixing weights for K fixed sampled atoms, fitted to a tabulated target
// density on the action grid by nonnegative least squares, then renormalized
// to sum to one.
inline SpectralEmbedding fit_fixed_basis_gmm(const std::vector<double>& target_density,
                                             const BinEdges& action_bins, int K,
                                             RandomEngine& rng) {
  if (K < 1) throw std::invalid_argument("fit_fixed_basis_gmm: K must be >= 1");
  const int n = action_bins.bins();
  if (static_cast<int>(target_density.size()) != n)
    throw std::invalid_argument("fit_fixed_basis_gmm: target size must match the grid");
  std::vector<GmmComponent> atoms = sample_fixed_gmm_atoms(K, rng);
  Eigen::MatrixXd Phi(n, K);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    t[i] = target_density[i];
    for (int k = 0; k < K; ++k)
      Phi(i, k) = gaussian_pdf(action_bins.midpoint(i), atoms[k].mean, atoms[k].var);
  }
  Eigen::VectorXd w = detail::nnls(Phi, t);
  const double wsum = w.sum();
  if (wsum > 0.0) w /= wsum;
  for (int k = 0; k < K; ++k) atoms[k].weight = w[k];
  SpectralEmbedding e;
  e.basis = Basis::kGmm;
  e.K = K;
  e.b_S = 1;
  e.b_A = n;
  e.mixture = std::move(atoms);
  e.action_bins = action_bins;
  e.state_bins = BinEdges({-0.5, 0.5});
  e.has_bins = true;
  return e;
}

// ---------------------------------------------------------------------------
// RKHS quantities

// Eigenvalues of the kernel integral operator paired with the projection
// weights of two policies. The lambdas are inputs: the experimental bases
// never pin them, so callers choose the spectrum.
struct RkhsSpectrum {
  std::vector<double> lambda;
  std::vector<double> xi1;
  std::vector<double> xi2;

  void validate() const {
    if (lambda.size() != xi1.size() || xi1.size() != xi2.size())
      throw std::invalid_argument("RkhsSpectrum: sequences must have equal length");
    double prev = std::numeric_limits<double>::infinity();
    for (double l : lambda) {
      if (!(l > 0.0)) throw std::invalid_argument("RkhsSpectrum: eigenvalues must be positive");
      if (l > prev + 1e-15) throw std::invalid_argument("RkhsSpectrum: eigenvalues must be nonincreasing");
      prev = l;
    }
  }
};

// ||pi_1 - pi_2||^2_H = sum_k (xi_k^1 - xi_k^2)^2 / lambda_k over the given
// finite index range.
inline double rkhs_distance_sq(const RkhsSpectrum& s) {
  s.validate();
  double acc = 0.0;
  for (std::size_t k = 0; k < s.lambda.size(); ++k) {
    const double d = s.xi1[k] - s.xi2[k];
    acc += d * d / s.lambda[k];
  }
  return acc;
}

// Geometric tail bound on the truncated mass: eps^(2(K+1)) / (1 - eps^2).
inline double tail_bound(double epsilon, int K) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("tail_bound: epsilon must lie in (0, 1)");
  if (K < 0) throw std::invalid_argument("tail_bound: K must be >= 0");
  return std::pow(epsilon, 2.0 * (K + 1)) / (1.0 - epsilon * epsilon);
}

// Return-gap bound for truncating at K components:
//   (4|A|^2 eps_bar gamma / (1-gamma)^2) {(M delta)^2 + 2 E_K (M delta)
//    + E_K^2 M^2} + eps_bar_max,      E_K = tail_bound(epsilon, K).
inline double truncation_return_bound(double delta_K, double M_max, double eps_bar,
                                      double eps_bar_max, double gamma, int n_actions,
                                      double epsilon, int K) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("truncation_return_bound: gamma must lie in [0, 1)");
  if (delta_K < 0.0 || M_max <= 0.0 || eps_bar <= 0.0 || eps_bar_max <= 0.0 || n_actions < 1)
    throw std::invalid_argument("truncation_return_bound: argument out of range");
  const double E = tail_bound(epsilon, K);
  const double md = M_max * delta_K;
  const double A = static_cast<double>(n_actions);
  const double lead = 4.0 * A * A * eps_bar * gamma / ((1.0 - gamma) * (1.0 - gamma));
  return lead * (md * md + 2.0 * E * md + E * E * M_max * M_max) + eps_bar_max;
}

// Bandit return gap: |A|^(1/q) * M * ||r||_p * sum_k (xi gap)^2 / lambda_k.
inline double bandit_return_bound(const std::vector<double>& coeff_gap_terms, double M,
                                  double reward_p_norm, int n_actions, double q) {
  if (!(q > 1.0)) throw std::invalid_argument("bandit_return_bound: q must exceed 1");
  if (M <= 0.0 || reward_p_norm < 0.0 || n_actions < 1)
    throw std::invalid_argument("bandit_return_bound: argument out of range");
  double acc = 0.0;
  for (double term : coeff_gap_terms) {
    if (!(term >= 0.0) || !std::isfinite(term))
      throw std::invalid_argument("bandit_return_bound: gap terms must be finite and nonnegative");
    acc += term;
  }
  return std::pow(static_cast<double>(n_actions), 1.0 / q) * M * reward_p_norm * acc;
}

// ---------------------------------------------------------------------------
// Embedding files. Header "basis K b_S b_A parameter_count", then one line
// per retained coefficient; SVD stores U columns, singular values, V columns.

inline void save_embedding(const SpectralEmbedding& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << basis_name(e.basis) << ' ' << e.K << ' ' << e.b_S << ' ' << e.b_A << ' '
      << parameter_count(e) << '\n';
  out << std::setprecision(17);
  switch (e.basis) {
    case Basis::kDft:
      for (std::size_t k = 0; k < e.dft_indices.size(); ++k)
        out << e.dft_indices[k] << ' ' << e.dft_values[k].real() << ' '
            << e.dft_values[k].imag() << '\n';
      break;
    case Basis::kHaar:
    case Basis::kDb4:
      for (std::size_t k = 0; k < e.dwt_indices.size(); ++k)
        out << e.dwt_indices[k] << ' ' << e.dwt_values[k] << '\n';
      break;
    case Basis::kSvd:
      for (int k = 0; k < e.K; ++k) {
        for (int i = 0; i < e.b_S; ++i) out << (i ? " " : "") << e.svd_u(i, k);
        out << '\n';
      }
      for (int k = 0; k < e.K; ++k) out << (k ? " " : "") << e.svd_sigma[k];
      out << '\n';
      for (int k = 0; k < e.K; ++k) {
        for (int j = 0; j < e.b_A; ++j) out << (j ? " " : "") << e.svd_v(j, k);
        out << '\n';
      }
      break;
    case Basis::kGmm:
      for (int k = 0; k < e.K; ++k)
        out << k << ' ' << e.mixture[k].weight << ' ' << e.mixture[k].mean << ' '
            << e.mixture[k].var << '\n';
      break;
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

// Loaded embeddings carry no bin edges; reconstruct them with the explicit
// overload or against the companion lattice file.
inline SpectralEmbedding load_embedding(const std::string& path) {
  detail::TokenCursor cur(detail::read_tokens(path), path);
  SpectralEmbedding e;
  e.basis = basis_from_name(cur.next());
  e.K = static_cast<int>(cur.next_int());
  e.b_S = static_cast<int>(cur.next_int());
  e.b_A = static_cast<int>(cur.next_int());
  const int declared_params = static_cast<int>(cur.next_int());
  if (e.K < 1) throw std::runtime_error(path + ": invalid component count");
  switch (e.basis) {
    case Basis::kDft:
      for (int k = 0; k < e.K; ++k) {
        e.dft_indices.push_back(static_cast<int>(cur.next_int()));
        const double re = cur.next_real();
        const double im = cur.next_real();
        e.dft_values.emplace_back(re, im);
      }
      break;
    case Basis::kHaar:
    case Basis::kDb4:
      e.pad_S = static_cast<int>(detail::next_pow2(static_cast<std::size_t>(e.b_S)));
      e.pad_A = static_cast<int>(detail::next_pow2(static_cast<std::size_t>(e.b_A)));
      for (int k = 0; k < e.K; ++k) {
        e.dwt_indices.push_back(static_cast<int>(cur.next_int()));
        e.dwt_values.push_back(cur.next_real());
      }
      break;
    case Basis::kSvd:
      e.svd_u.resize(e.b_S, e.K);
      e.svd_sigma.resize(e.K);
      e.svd_v.resize(e.b_A, e.K);
      for (int k = 0; k < e.K; ++k)
        for (int i = 0; i < e.b_S; ++i) e.svd_u(i, k) = cur.next_real();
      for (int k = 0; k < e.K; ++k) e.svd_sigma[k] = cur.next_real();
      for (int k = 0; k < e.K; ++k)
        for (int j = 0; j < e.b_A; ++j) e.svd_v(j, k) = cur.next_real();
      break;
    case Basis::kGmm:
      for (int k = 0; k < e.K; ++k) {
        cur.next_int();  // component index
        GmmComponent c;
        c.weight = cur.next_real();
        c.mean = cur.next_real();
        c.var = cur.next_real();
        e.mixture.push_back(c);
      }
      break;
  }
  if (declared_params != parameter_count(e))
    throw std::runtime_error(path + ": parameter count does not match payload");
  return e;
}

}  // namespace polembed
