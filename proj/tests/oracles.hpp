#pragma once

// Test-only oracles, kept independent of the implementation paths they check:
// the DFT oracle sums the defining series directly, the wavelet oracle builds
// the orthonormal basis matrix explicitly, singular values come from an
// eigen-solve of the Gram matrix, and value functions from long value
// iteration.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "polembed/lattice.hpp"
#include "polembed/rng.hpp"

namespace oracles {

using Complex = std::complex<double>;

// 2-D DFT by direct O(n^2) summation per output coefficient.
inline std::vector<Complex> dft2_direct(const std::vector<double>& x, int m, int n) {
  std::vector<Complex> out(static_cast<std::size_t>(m) * n);
  for (int u = 0; u < m; ++u)
    for (int v = 0; v < n; ++v) {
      Complex acc(0.0, 0.0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double ang = -2.0 * M_PI * (static_cast<double>(u) * i / m +
                                            static_cast<double>(v) * j / n);
          acc += x[static_cast<std::size_t>(i) * n + j] * Complex(std::cos(ang), std::sin(ang));
        }
      out[static_cast<std::size_t>(u) * n + v] = acc;
    }
  return out;
}

inline std::vector<double> idft2_direct(const std::vector<Complex>& X, int m, int n) {
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      Complex acc(0.0, 0.0);
      for (int u = 0; u < m; ++u)
        for (int v = 0; v < n; ++v) {
          const double ang = 2.0 * M_PI * (static_cast<double>(u) * i / m +
                                           static_cast<double>(v) * j / n);
          acc += X[static_cast<std::size_t>(u) * n + v] * Complex(std::cos(ang), std::sin(ang));
        }
      out[static_cast<std::size_t>(i) * n + j] = acc.real() / (m * n);
    }
  return out;
}

// Explicit n x n orthonormal matrix of the full-depth periodized 1-D DWT:
// the product of per-level analysis matrices. Row k of the result maps the
// signal to coefficient k.
inline Eigen::MatrixXd dwt_matrix_1d(int n, const std::vector<double>& h) {
  const int L = static_cast<int>(h.size());
  std::vector<double> g(L);
  for (int k = 0; k < L; ++k) g[k] = ((k % 2) ? -1.0 : 1.0) * h[L - 1 - k];
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n, n);
  for (int len = n; len >= 2; len /= 2) {
    Eigen::MatrixXd level = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(len, len);
    for (int i = 0; i < len / 2; ++i)
      for (int k = 0; k < L; ++k) {
        block(i, (2 * i + k) % len) += h[k];
        block(len / 2 + i, (2 * i + k) % len) += g[k];
      }
    level.topLeftCorner(len, len) = block;
    W = level * W;
  }
  return W;
}

// Kronecker product, used to assemble the separable 2-D transform matrix.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// Singular values via the eigenvalues of the Gram matrix M^T M.
inline std::vector<double> singular_values_gram(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd G = M.transpose() * M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  std::vector<double> sv;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    sv.push_back(std::sqrt(std::max(es.eigenvalues()[i], 0.0)));
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

// Random row-stochastic lattice over unit bins.
inline polembed::LatticePolicy random_lattice(int b_S, int b_A, polembed::RandomEngine& rng) {
  polembed::LatticePolicy p;
  p.b_S = b_S;
  p.b_A = b_A;
  std::vector<double> se(b_S + 1), ae(b_A + 1);
  for (int i = 0; i <= b_S; ++i) se[i] = static_cast<double>(i);
  for (int j = 0; j <= b_A; ++j) ae[j] = static_cast<double>(j);
  p.state_bins = polembed::BinEdges(se);
  p.action_bins = polembed::BinEdges(ae);
  p.probs.resize(static_cast<std::size_t>(b_S) * b_A);
  for (int s = 0; s < b_S; ++s) {
    double sum = 0.0;
    for (int a = 0; a < b_A; ++a) {
      const double v = 0.05 + rng.uniform();
      p.at(s, a) = v;
      sum += v;
    }
    for (int a = 0; a < b_A; ++a) p.at(s, a) /= sum;
  }
  p.validate();
  return p;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double frobenius_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// Long-horizon value iteration, the independent route to V_pi.
inline Eigen::VectorXd value_iteration(const Eigen::MatrixXd& P_pi, const Eigen::VectorXd& r_pi,
                                       double gamma, int iters) {
  Eigen::VectorXd V = Eigen::VectorXd::Zero(r_pi.size());
  for (int t = 0; t < iters; ++t) V = r_pi + gamma * P_pi * V;
  return V;
}

// Composite Simpson rule, an independent quadrature for cross-checks.
template <typename F>
double simpson(F&& f, double lo, double hi, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (hi - lo) / intervals;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) acc += f(lo + i * h) * ((i % 2) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace oracles
