#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "jcr/complex_grid.hpp"
#include "jcr/errors.hpp"
#include "jcr/spectral.hpp"
#include "jcr/trajectory.hpp"

namespace jcr {

/// The 2^bits unit-circle phases available to each antenna weight.
struct PhaseAlphabet {
  int bits = 4;

  std::size_t count() const { return std::size_t(1) << bits; }

  double phase(std::size_t index) const {
    return 2.0 * std::numbers::pi * static_cast<double>(index) / static_cast<double>(count());
  }
};

inline PhaseAlphabet make_phase_alphabet(int bits) {
  if (bits < 1 || bits > 16) throw invalid_input("phase alphabet: bits must be in [1, 16]");
  return PhaseAlphabet{bits};
}

/**
 * Constant-modulus analog beamformer. Every weight has magnitude
 * 1/sqrt(antennas) and a phase drawn from the b-bit alphabet; phase_index
 * records the alphabet index per antenna so closure is checkable exactly.
 */
struct Beamformer {
  std::vector<cplx> weights;
  std::vector<std::uint32_t> phase_index;
  int bits = 4;
  double split = 1.0;          // fraction of beam energy on the communication bin
  std::uint32_t comm_bin = 0;  // DFT bin carrying the communication beam
};

/// Diagonal beam-domain gains: sqrt(N) * unitary DFT of the weights.
struct GainMask {
  std::vector<cplx> diagonal;
  double split = 1.0;
};

/// Output of the alternating-projection design loop.
struct GsDesign {
  Beamformer beamformer;
  double profile_error = 0.0;        // || |DFT(weights)| - profile ||_2 at the last iterate
  std::vector<double> error_trace;   // same metric after each iteration
};

/**
 * Target beam-domain magnitude profile for an energy split delta: the
 * communication bin carries delta of the beam energy and the remaining
 * 1 - delta is spread evenly over the other N - 1 bins, so the profile is
 * [sqrt(delta), sqrt(delta_r), ..., sqrt(delta_r)] with
 * delta_r = (1 - delta)/(N - 1). Unit norm by construction.
 */
inline std::vector<double> target_magnitude_profile(double delta, std::size_t antennas) {
  if (antennas == 0) throw invalid_input("target_magnitude_profile: antennas must be >= 1");
  if (antennas == 1) {
    if (delta != 1.0) throw invalid_input("target_magnitude_profile: single antenna needs delta=1");
    return {1.0};
  }
  const double lo = 1.0 / static_cast<double>(antennas);
  if (delta < lo - 1e-12 || delta > 1.0 + 1e-12)
    throw invalid_input("target_magnitude_profile: delta must lie in [1/N, 1]");
  const double delta_r = (1.0 - delta) / static_cast<double>(antennas - 1);
  std::vector<double> profile(antennas, std::sqrt(std::max(0.0, delta_r)));
  profile[0] = std::sqrt(std::min(1.0, std::max(0.0, delta)));
  return profile;
}

namespace detail {

/// Nearest alphabet index for an angle; exact midpoints round to the smaller index.
inline std::uint32_t quantize_phase_index(double angle, int bits) {
  const double count = static_cast<double>(std::size_t(1) << bits);
  double steps = angle * count / (2.0 * std::numbers::pi);
  steps = std::fmod(steps, count);
  if (steps < 0.0) steps += count;
  const auto idx = static_cast<std::int64_t>(std::ceil(steps - 0.5));
  return static_cast<std::uint32_t>(idx % static_cast<std::int64_t>(count));
}

inline cplx weight_from_index(std::uint32_t index, int bits, std::size_t antennas) {
  const PhaseAlphabet alphabet{bits};
  return std::polar(1.0 / std::sqrt(static_cast<double>(antennas)), alphabet.phase(index));
}

inline double profile_gap(const std::vector<cplx>& weights, const std::vector<double>& profile) {
  const auto spectrum = unitary_dft(weights);
  double err = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double d = std::abs(spectrum[k]) - profile[k];
    err += d * d;
  }
  return std::sqrt(err);
}

}  // namespace detail

/// Quantize a complex vector onto the constant-modulus b-bit weight set.
inline Beamformer quantize_to_beamformer(const std::vector<cplx>& v, int bits, double split) {
  if (v.empty()) throw invalid_input("quantize_to_beamformer: empty input");
  make_phase_alphabet(bits);
  Beamformer f;
  f.bits = bits;
  f.split = split;
  f.weights.resize(v.size());
  f.phase_index.resize(v.size());
  for (std::size_t n = 0; n < v.size(); ++n) {
    f.phase_index[n] = detail::quantize_phase_index(std::arg(v[n]), bits);
    f.weights[n] = detail::weight_from_index(f.phase_index[n], bits, v.size());
  }
  return f;
}

/**
 * Alternating-projection beamformer design. Starting from the length-N
 * constant-modulus training sequence, each pass keeps the beam-domain phases,
 * imposes the target magnitude profile, returns to the antenna domain, and
 * re-quantizes onto the b-bit constant-modulus weight set. Runs exactly
 * `iterations` passes and returns the last iterate together with the
 * achieved-profile error after every pass. Deterministic; the seed parameter
 * is reserved for randomized restarts and is currently unused.
 */
inline GsDesign gs_design(const std::vector<double>& profile, int bits, int iterations,
                          [[maybe_unused]] std::uint64_t seed = 0) {
  const std::size_t n = profile.size();
  if (n == 0) throw invalid_input("gs_design: empty profile");
  if (iterations < 1) throw invalid_input("gs_design: iterations must be >= 1");
  make_phase_alphabet(bits);
  for (const double p : profile)
    if (!(p >= 0.0)) throw invalid_input("gs_design: profile entries must be >= 0");

  const double amp = 1.0 / std::sqrt(static_cast<double>(n));
  const auto train = zadoff_chu(n, 1);
  std::vector<cplx> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = train[i] * amp;

  GsDesign out;
  out.error_trace.reserve(iterations);
  std::vector<std::uint32_t> indices(n, 0);
  auto spectrum = unitary_dft(f);
  for (int it = 0; it < iterations; ++it) {
    std::vector<cplx> shaped(n);
    for (std::size_t k = 0; k < n; ++k) shaped[k] = std::polar(profile[k], std::arg(spectrum[k]));
    const auto antenna = unitary_dft(shaped, true);
    for (std::size_t i = 0; i < n; ++i) {
      indices[i] = detail::quantize_phase_index(std::arg(antenna[i]), bits);
      f[i] = detail::weight_from_index(indices[i], bits, n);
    }
    spectrum = unitary_dft(f);
    double err = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = std::abs(spectrum[k]) - profile[k];
      err += d * d;
    }
    out.error_trace.push_back(std::sqrt(err));
  }
  out.profile_error = out.error_trace.back();
  out.beamformer.weights = std::move(f);
  out.beamformer.phase_index = std::move(indices);
  out.beamformer.bits = bits;
  out.beamformer.split = profile[0] * profile[0];
  out.beamformer.comm_bin = 0;
  return out;
}

/// One-shot baseline: quantize the antenna-domain image of the profile itself.
inline Beamformer quantized_profile_design(const std::vector<double>& profile, int bits) {
  if (profile.empty()) throw invalid_input("quantized_profile_design: empty profile");
  std::vector<cplx> shaped(profile.size());
  for (std::size_t k = 0; k < profile.size(); ++k) shaped[k] = cplx(profile[k], 0.0);
  const auto antenna = unitary_dft(shaped, true);
  return quantize_to_beamformer(antenna, bits, profile[0] * profile[0]);
}

/**
 * Steer a beamformer toward broadside angle theta (radians) on a
 * half-wavelength uniform linear array: element n is multiplied by
 * exp(j*pi*n*sin(theta)). Returns plain weights; steering leaves the
 * quantized alphabet in general.
 */
inline std::vector<cplx> steer(const Beamformer& f, double theta) {
  const double s = std::sin(theta);
  std::vector<cplx> out(f.weights.size());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = f.weights[n] * std::polar(1.0, std::numbers::pi * static_cast<double>(n) * s);
  return out;
}

/**
 * Per-frame beamformer family for a sampling trajectory: frame m transmits
 * the base weights cyclically delayed by shifts[m] (element i of frame m is
 * w[(i - shifts[m]) mod N]). The delay realization is what makes the
 * beam-domain identity DFT(f_m) = diag(mask) * DFT-column(shifts[m]) hold, so
 * sampling the transformed grid at (m, shifts[m]) reproduces the exact
 * beamformed measurement.
 */
inline std::vector<Beamformer> shifted_family(const Beamformer& f, const Trajectory& trajectory) {
  if (f.weights.size() != trajectory.antennas)
    throw invalid_input("shifted_family: beamformer length must equal antenna count");
  std::vector<Beamformer> family;
  family.reserve(trajectory.shifts.size());
  for (const std::uint32_t c : trajectory.shifts) {
    Beamformer g = f;
    g.weights = circulant_shift(f.weights, -static_cast<std::int64_t>(c));
    const std::size_t n = f.phase_index.size();
    if (n) {
      for (std::size_t i = 0; i < n; ++i)
        g.phase_index[i] = f.phase_index[(i + n - (c % n)) % n];
    }
    family.push_back(std::move(g));
  }
  return family;
}

/**
 * Beam-domain gain diagonal sqrt(N) * DFT(weights). Every entry must be
 * nonzero for the mask to be invertible during channel recovery; a
 * (near-)zero bin raises degenerate_error.
 */
inline GainMask gain_mask(const Beamformer& f) {
  if (f.weights.empty()) throw invalid_input("gain_mask: empty beamformer");
  GainMask mask;
  mask.split = f.split;
  mask.diagonal = unitary_dft(f.weights);
  const double scale = std::sqrt(static_cast<double>(f.weights.size()));
  for (auto& d : mask.diagonal) d *= scale;
  for (std::size_t k = 0; k < mask.diagonal.size(); ++k)
    if (std::abs(mask.diagonal[k]) < 1e-12)
      throw degenerate_error("gain_mask: zero beam-domain gain at bin " + std::to_string(k));
  return mask;
}

}  // namespace jcr
