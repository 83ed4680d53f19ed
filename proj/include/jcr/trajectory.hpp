#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "jcr/complex_grid.hpp"
#include "jcr/errors.hpp"
#include "jcr/rng.hpp"
#include "jcr/spectral.hpp"

namespace jcr {

enum class TrajectoryKind { optimized, random, rs_baseline };

/**
 * Frame-indexed sampling trajectory on the Doppler-angle grid: frame m takes
 * the measurement at grid coordinate (m, shifts[m]). shifts[m] is also the
 * cyclic shift applied to the base beamformer on frame m.
 */
struct Trajectory {
  std::vector<std::uint32_t> shifts;  // length = frames, entries in [0, antennas)
  std::uint32_t frames = 0;           // M
  std::uint32_t antennas = 0;         // N
  TrajectoryKind kind = TrajectoryKind::optimized;
};

/// Point spread function and incoherence summary of a trajectory.
struct SamplingAnalysis {
  ComplexGrid binary_matrix;  // M x N, one unit entry per row
  ComplexGrid psf;            // 2D unitary DFT of binary_matrix
  double coherence = 0.0;     // sqrt(M*N)/M * max off-origin |psf|
};

namespace detail {

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

}  // namespace detail

/**
 * Deterministic minimum-coherence trajectory c[m] = m*(m+1)/2 mod M for a
 * square grid with prime side. Achieves point-spread magnitude 1/sqrt(N) in
 * every off-origin column, hence coherence exactly 1/sqrt(M).
 */
inline Trajectory optimized_trajectory(std::uint32_t frames) {
  if (!detail::is_prime(frames))
    throw invalid_input("optimized_trajectory: frame count must be prime (grid is square)");
  Trajectory t;
  t.frames = frames;
  t.antennas = frames;
  t.kind = TrajectoryKind::optimized;
  t.shifts.resize(frames);
  for (std::uint64_t m = 0; m < frames; ++m)
    t.shifts[m] = static_cast<std::uint32_t>((m * (m + 1) / 2) % frames);
  return t;
}

/// Uniform independent shifts; the randomized baseline trajectory.
inline Trajectory random_trajectory(std::uint32_t frames, std::uint32_t antennas,
                                    std::uint64_t seed) {
  if (frames == 0 || antennas == 0)
    throw invalid_input("random_trajectory: dimensions must be >= 1");
  Trajectory t;
  t.frames = frames;
  t.antennas = antennas;
  t.kind = TrajectoryKind::random;
  t.shifts.resize(frames);
  Rng rng(seed);
  for (auto& s : t.shifts) s = static_cast<std::uint32_t>(rng.uniform_below(antennas));
  return t;
}

/**
 * Build the binary sampling matrix, its point spread function, and the
 * resulting mutual coherence sqrt(M*N)/M * max_{(p,q) != (0,0)} |psf(p,q)|.
 */
inline SamplingAnalysis analyze(const Trajectory& t) {
  if (t.shifts.size() != t.frames)
    throw invalid_input("analyze: trajectory length does not match frame count");
  SamplingAnalysis out{ComplexGrid(t.frames, t.antennas), ComplexGrid(1, 1), 0.0};
  for (std::uint32_t m = 0; m < t.frames; ++m) {
    if (t.shifts[m] >= t.antennas) throw invalid_input("analyze: shift out of range");
    out.binary_matrix.at(m, t.shifts[m]) = cplx(1.0, 0.0);
  }
  out.psf = dft2d(out.binary_matrix);
  double peak = 0.0;
  for (std::size_t p = 0; p < t.frames; ++p)
    for (std::size_t q = 0; q < t.antennas; ++q) {
      if (p == 0 && q == 0) continue;
      peak = std::max(peak, std::abs(out.psf.at(p, q)));
    }
  out.coherence = std::sqrt(static_cast<double>(t.frames) * t.antennas) / t.frames * peak;
  const double dc_expected = std::sqrt(static_cast<double>(t.frames) / t.antennas);
  if (std::abs(std::abs(out.psf.at(0, 0)) - dc_expected) > 1e-9)
    throw degenerate_error("analyze: point-spread DC magnitude check failed");
  return out;
}

/**
 * Mutual coherence from first principles: builds the explicit sensing matrix
 * row by row (row m = kron of DFT-row shifts[m] and DFT-row m), normalizes
 * every column, and scans all column pairs. Guarded to small grids.
 */
inline double coherence_direct(const Trajectory& t) {
  const std::size_t mn = static_cast<std::size_t>(t.frames) * t.antennas;
  if (mn > 4096) throw invalid_input("coherence_direct: grid too large (M*N must be <= 4096)");
  const std::size_t rows = t.frames, n = t.antennas;
  // column (p, q) entry at row m: U_N(c[m], q) * U_M(m, p)
  std::vector<std::vector<cplx>> cols(mn, std::vector<cplx>(rows));
  for (std::size_t m = 0; m < rows; ++m) {
    for (std::size_t q = 0; q < n; ++q) {
      const double aq = -2.0 * std::numbers::pi *
                        static_cast<double>((static_cast<std::uint64_t>(t.shifts[m]) * q) % n) /
                        static_cast<double>(n);
      const cplx un = cplx(std::cos(aq), std::sin(aq)) / std::sqrt(static_cast<double>(n));
      for (std::size_t p = 0; p < rows; ++p) {
        const double ap = -2.0 * std::numbers::pi *
                          static_cast<double>((m * p) % rows) / static_cast<double>(rows);
        const cplx um = cplx(std::cos(ap), std::sin(ap)) / std::sqrt(static_cast<double>(rows));
        cols[q * rows + p][m] = un * um;
      }
    }
  }
  std::vector<double> norms(mn);
  for (std::size_t j = 0; j < mn; ++j) {
    double s = 0.0;
    for (const cplx& v : cols[j]) s += std::norm(v);
    norms[j] = std::sqrt(s);
  }
  double mu = 0.0;
  for (std::size_t i = 0; i < mn; ++i)
    for (std::size_t j = i + 1; j < mn; ++j) {
      cplx dot(0, 0);
      for (std::size_t m = 0; m < rows; ++m) dot += std::conj(cols[i][m]) * cols[j][m];
      mu = std::max(mu, std::abs(dot) / (norms[i] * norms[j]));
    }
  return mu;
}

/// Largest sparsity with a worst-case recovery guarantee at coherence
/// 1/sqrt(N): the largest K with (2K-1)^2 < N. Zero when none exists.
inline std::uint32_t max_recoverable_targets(std::uint32_t antennas) {
  std::uint32_t k = 0;
  while (true) {
    const std::uint64_t odd = 2ull * (k + 1) - 1;
    if (odd * odd < antennas)
      ++k;
    else
      break;
  }
  return k;
}

/**
 * Antenna-subset switching baseline: every frame activates ceil(fraction*N)
 * antennas chosen uniformly at random, each at weight 1/sqrt(N) steered to
 * the communication direction; inactive antennas are off. Keeping the
 * per-antenna weight fixed models the transmit-power loss of switching.
 */
inline std::vector<std::vector<cplx>> rs_baseline_precoders(std::uint32_t frames,
                                                            std::uint32_t antennas,
                                                            double active_fraction,
                                                            std::uint64_t seed,
                                                            double comm_theta = 0.0) {
  if (frames == 0 || antennas == 0)
    throw invalid_input("rs_baseline_precoders: dimensions must be >= 1");
  if (!(active_fraction > 0.0) || active_fraction > 1.0)
    throw invalid_input("rs_baseline_precoders: active_fraction must be in (0, 1]");
  const auto active =
      static_cast<std::uint32_t>(std::ceil(active_fraction * static_cast<double>(antennas)));
  const double amp = 1.0 / std::sqrt(static_cast<double>(antennas));
  const double s = std::sin(comm_theta);
  std::vector<std::vector<cplx>> out(frames, std::vector<cplx>(antennas, cplx(0, 0)));
  Rng rng(seed);
  for (std::uint32_t m = 0; m < frames; ++m) {
    const auto subset = rng.sample_without_replacement(antennas, active);
    for (const std::uint32_t n : subset) {
      const double ang = std::numbers::pi * static_cast<double>(n) * s;
      out[m][n] = cplx(amp * std::cos(ang), amp * std::sin(ang));
    }
  }
  return out;
}

/// Shifts as a single CSV line of integers ("0,1,3,...").
inline std::string to_csv_line(const Trajectory& t) {
  std::string line;
  for (std::size_t m = 0; m < t.shifts.size(); ++m) {
    if (m) line += ',';
    line += std::to_string(t.shifts[m]);
  }
  return line;
}

}  // namespace jcr
