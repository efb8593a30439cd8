#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

// Complex FFT for arbitrary lengths: iterative radix-2 for powers of two,
// Bluestein's chirp-z transform otherwise. Forward convention
//   X_k = sum_j x_j exp(-2*pi*i*j*k/n),
// inverse carries the 1/n factor.

namespace polembed {

using Complex = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline void fft_radix2(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n < 2) return;
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const Complex wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline void fft_bluestein(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  // chirp exponents are periodic in j^2 mod 2n
  const std::size_t two_n = 2 * n;
  std::vector<Complex> chirp(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint64_t j2 = (static_cast<std::uint64_t>(j) * j) % two_n;
    const double ang = (inverse ? 1.0 : -1.0) * M_PI * static_cast<double>(j2) /
                       static_cast<double>(n);
    chirp[j] = std::polar(1.0, ang);
  }
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<Complex> fa(m, Complex(0.0, 0.0)), fb(m, Complex(0.0, 0.0));
  for (std::size_t j = 0; j < n; ++j) fa[j] = a[j] * chirp[j];
  fb[0] = std::conj(chirp[0]);
  for (std::size_t j = 1; j < n; ++j) fb[j] = fb[m - j] = std::conj(chirp[j]);
  fft_radix2(fa, false);
  fft_radix2(fb, false);
  for (std::size_t j = 0; j < m; ++j) fa[j] *= fb[j];
  fft_radix2(fa, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * scale * chirp[k];
}

}  // namespace detail

// In-place transform of any length; the inverse applies the 1/n factor.
inline void fft(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("fft: empty input");
  if (detail::is_pow2(n)) {
    detail::fft_radix2(a, inverse);
  } else {
    detail::fft_bluestein(a, inverse);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= scale;
  }
}

// Row-major 2-D transform: 1-D transforms over every row, then every column.
inline void fft2(std::vector<Complex>& m, int rows, int cols, bool inverse) {
  if (rows < 1 || cols < 1 || m.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("fft2: shape mismatch");
  std::vector<Complex> buf;
  for (int r = 0; r < rows; ++r) {
    buf.assign(m.begin() + static_cast<std::size_t>(r) * cols,
               m.begin() + static_cast<std::size_t>(r + 1) * cols);
    fft(buf, inverse);
    std::copy(buf.begin(), buf.end(), m.begin() + static_cast<std::size_t>(r) * cols);
  }
  for (int c = 0; c < cols; ++c) {
    buf.resize(rows);
    for (int r = 0; r < rows; ++r) buf[r] = m[static_cast<std::size_t>(r) * cols + c];
    fft(buf, inverse);
    for (int r = 0; r < rows; ++r) m[static_cast<std::size_t>(r) * cols + c] = buf[r];
  }
}

}  // namespace polembed
