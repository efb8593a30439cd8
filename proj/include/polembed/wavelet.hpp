#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

// Orthonormal periodized discrete wavelet transform. The 2-D transform is
// fully separable: a complete multi-level 1-D transform over every row, then
// over every column, so the whole operation is one orthonormal matrix (the
// Kronecker product of the two 1-D transforms).

namespace polembed {

enum class WaveletKind { kHaar, kDb4 };

namespace detail {

inline const std::vector<double>& scaling_filter(WaveletKind w) {
  static const std::vector<double> haar = {M_SQRT1_2, M_SQRT1_2};
  // Daubechies-4 (8 taps, 4 vanishing moments), normalized to sum sqrt(2)
  static const std::vector<double> db4 = {
      0.23037781330885523,   0.7148465705525415,   0.6308807679295904,
      -0.027983769416983849, -0.18703481171888114, 0.030841381835986965,
      0.032883011666982945,  -0.010597401784997278};
  return w == WaveletKind::kHaar ? haar : db4;
}

inline std::vector<double> detail_filter(const std::vector<double>& h) {
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t k = 0; k < L; ++k)
    g[k] = ((k % 2) ? -1.0 : 1.0) * h[L - 1 - k];
  return g;
}

// one periodized analysis level on x[0..n); approx lands in [0, n/2),
// detail in [n/2, n)
inline void dwt_step(std::vector<double>& x, std::size_t n, const std::vector<double>& h,
                     const std::vector<double>& g) {
  const std::size_t half = n / 2;
  const std::size_t L = h.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
      const double v = x[(2 * i + k) % n];
      a += h[k] * v;
      d += g[k] * v;
    }
    out[i] = a;
    out[half + i] = d;
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = out[i];
}

// transpose of dwt_step
inline void idwt_step(std::vector<double>& x, std::size_t n, const std::vector<double>& h,
                      const std::vector<double>& g) {
  const std::size_t half = n / 2;
  const std::size_t L = h.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double a = x[i];
    const double d = x[half + i];
    for (std::size_t k = 0; k < L; ++k) {
      out[(2 * i + k) % n] += h[k] * a + g[k] * d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = out[i];
}

}  // namespace detail

// full-depth 1-D transform in place; n must be a power of two
inline void dwt1d(std::vector<double>& x, WaveletKind w) {
  const auto& h = detail::scaling_filter(w);
  const auto g = detail::detail_filter(h);
  for (std::size_t n = x.size(); n >= 2; n /= 2) detail::dwt_step(x, n, h, g);
}

inline void idwt1d(std::vector<double>& x, WaveletKind w) {
  const auto& h = detail::scaling_filter(w);
  const auto g = detail::detail_filter(h);
  for (std::size_t n = 2; n <= x.size(); n *= 2) detail::idwt_step(x, n, h, g);
}

// row-major 2-D transform; rows and cols must be powers of two
inline void dwt2d(std::vector<double>& m, int rows, int cols, WaveletKind w, bool inverse) {
  if (rows < 1 || cols < 1 || m.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("dwt2d: shape mismatch");
  std::vector<double> buf;
  if (!inverse) {
    for (int r = 0; r < rows; ++r) {
      buf.assign(m.begin() + static_cast<std::size_t>(r) * cols,
                 m.begin() + static_cast<std::size_t>(r + 1) * cols);
      dwt1d(buf, w);
      std::copy(buf.begin(), buf.end(), m.begin() + static_cast<std::size_t>(r) * cols);
    }
    for (int c = 0; c < cols; ++c) {
      buf.resize(rows);
      for (int r = 0; r < rows; ++r) buf[r] = m[static_cast<std::size_t>(r) * cols + c];
      dwt1d(buf, w);
      for (int r = 0; r < rows; ++r) m[static_cast<std::size_t>(r) * cols + c] = buf[r];
    }
  } else {
    for (int c = 0; c < cols; ++c) {
      buf.resize(rows);
      for (int r = 0; r < rows; ++r) buf[r] = m[static_cast<std::size_t>(r) * cols + c];
      idwt1d(buf, w);
      for (int r = 0; r < rows; ++r) m[static_cast<std::size_t>(r) * cols + c] = buf[r];
    }
    for (int r = 0; r < rows; ++r) {
      buf.assign(m.begin() + static_cast<std::size_t>(r) * cols,
                 m.begin() + static_cast<std::size_t>(r + 1) * cols);
      idwt1d(buf, w);
      std::copy(buf.begin(), buf.end(), m.begin() + static_cast<std::size_t>(r) * cols);
    }
  }
}

// index into a length-n signal extended by half-sample symmetric reflection
// (… c b a | a b c … | c b a …)
inline std::size_t symmetric_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * n;
  const std::size_t t = i % period;
  return t < n ? t : period - 1 - t;
}

}  // namespace polembed
