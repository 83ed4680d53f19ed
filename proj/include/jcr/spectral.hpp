#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "jcr/complex_grid.hpp"
#include "jcr/errors.hpp"

namespace jcr {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 transform, unnormalized.
// forward kernel exp(-j*2*pi*k*n/L); inverse flips the sign, no 1/L scale.
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Arbitrary-length transform via Bluestein's chirp-z reduction to a
// power-of-two cyclic convolution. Unnormalized, same kernel as fft_pow2.
inline void fft_bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  const std::size_t two_n = 2 * n;
  // chirp[k] = exp(-j*pi*k^2/n); k^2 taken mod 2n keeps the argument small.
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % two_n;
    const double ang = (inverse ? 1.0 : -1.0) * std::numbers::pi * static_cast<double>(k2) /
                       static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<cplx> f(m, cplx(0.0, 0.0)), g(m, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) f[k] = a[k] * chirp[k];
  g[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) g[k] = g[m - k] = std::conj(chirp[k]);
  fft_pow2(f, false);
  fft_pow2(g, false);
  for (std::size_t k = 0; k < m; ++k) f[k] *= g[k];
  fft_pow2(f, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = f[k] * scale * chirp[k];
}

inline void fft_any(std::vector<cplx>& a, bool inverse) {
  if (a.size() <= 1) return;
  if (is_pow2(a.size())) {
    fft_pow2(a, inverse);
  } else {
    fft_bluestein(a, inverse);
  }
}

}  // namespace detail

/**
 * Unitary discrete Fourier transform of a complex vector.
 *
 * Forward kernel exp(-j*2*pi*k*n/L)/sqrt(L); the inverse conjugates the
 * kernel and carries the same 1/sqrt(L) factor, so the transform preserves
 * the Euclidean norm in both directions and round-trips exactly.
 */
inline std::vector<cplx> unitary_dft(const std::vector<cplx>& v, bool inverse = false) {
  if (v.empty()) throw invalid_input("unitary_dft: empty input");
  std::vector<cplx> out(v);
  detail::fft_any(out, inverse);
  const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (cplx& x : out) x *= scale;
  return out;
}

/**
 * Two-dimensional unitary DFT: out = U_M * G * U_N (rows length-M transform
 * down each column, then length-N transform across each row). inverse=true
 * applies the conjugate-transpose factors instead.
 */
inline ComplexGrid dft2d(const ComplexGrid& g, bool inverse = false) {
  const std::size_t rows = g.rows(), cols = g.cols();
  ComplexGrid out(rows, cols);
  std::vector<cplx> buf(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) buf[r] = g.at(r, c);
    detail::fft_any(buf, inverse);
    for (std::size_t r = 0; r < rows; ++r) out.at(r, c) = buf[r];
  }
  std::vector<cplx> row(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) row[c] = out.at(r, c);
    detail::fft_any(row, inverse);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = row[c];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) *= scale;
  return out;
}

/**
 * Cyclic shift: out[i] = v[(i + shift) mod len]. Negative shifts are
 * normalized into [0, len).
 */
inline std::vector<cplx> circulant_shift(const std::vector<cplx>& v, std::int64_t shift) {
  if (v.empty()) throw invalid_input("circulant_shift: empty input");
  const std::int64_t len = static_cast<std::int64_t>(v.size());
  const std::size_t s = static_cast<std::size_t>(((shift % len) + len) % len);
  std::vector<cplx> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[(i + s) % v.size()];
  return out;
}

/**
 * Constant-modulus polyphase training sequence of the given length and root.
 * Odd length:  x[m] = exp(-j*pi*u*m*(m+1)/M); even: exp(-j*pi*u*m^2/M).
 * The root must satisfy gcd(u, M) = 1, which makes the unitary DFT of the
 * sequence constant-magnitude (value 1 in every bin).
 */
inline std::vector<cplx> zadoff_chu(std::size_t length, std::uint64_t root) {
  if (length == 0) throw invalid_input("zadoff_chu: length must be >= 1");
  if (root == 0 || std::gcd(root, static_cast<std::uint64_t>(length)) != 1)
    throw invalid_input("zadoff_chu: root must be coprime with the length");
  const std::uint64_t two_m = 2 * static_cast<std::uint64_t>(length);
  const std::uint64_t u = root % two_m;
  std::vector<cplx> out(length);
  const bool odd = (length % 2 == 1);
  for (std::size_t m = 0; m < length; ++m) {
    const std::uint64_t mm = static_cast<std::uint64_t>(m);
    const std::uint64_t quad = odd ? (mm * (mm + 1)) % two_m : (mm * mm) % two_m;
    const std::uint64_t t = (u * quad) % two_m;
    const double ang = -std::numbers::pi * static_cast<double>(t) / static_cast<double>(length);
    out[m] = cplx(std::cos(ang), std::sin(ang));
  }
  return out;
}

}  // namespace jcr
