#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "jcr/beamformer.hpp"
#include "jcr/complex_grid.hpp"
#include "jcr/errors.hpp"
#include "jcr/rng.hpp"
#include "jcr/spectral.hpp"
#include "jcr/trajectory.hpp"

namespace jcr {

/// One point scatterer on the Doppler-angle grid.
struct Target {
  std::uint32_t doppler_bin = 0;  // p in [0, frames)
  std::uint32_t angle_bin = 0;    // q in [0, antennas)
  cplx gain{0.0, 0.0};            // h_k
};

struct TargetScene {
  std::vector<Target> targets;
  std::uint32_t frames = 0;
  std::uint32_t antennas = 0;
};

/**
 * Signal-to-noise bookkeeping for one operating point.
 *
 * zeta is the raw pre-processing SNR. Coherent integration over a length
 * rho*block_len preamble gives the processed SNR zeta_p = zeta*rho*block_len;
 * the array adds beam-domain gain N*delta_r toward each sensing bin, giving
 * the net sensing SNR zeta_net = N*delta_r*zeta_p. Per-measurement noise
 * variance at unit average target power is 1/zeta_p = N*delta_r/zeta_net.
 */
struct SnrModel {
  double zeta = 1.0;
  std::uint32_t rho = 1;
  std::uint32_t block_len = 1;
  double split = 0.5;
  std::uint32_t antennas = 2;

  double delta_r() const { return (1.0 - split) / static_cast<double>(antennas - 1); }
  double processing_gain() const {
    return static_cast<double>(antennas) * rho * block_len;
  }
  double zeta_p() const { return zeta * static_cast<double>(rho) * block_len; }
  double zeta_net() const { return static_cast<double>(antennas) * delta_r() * zeta_p(); }
  double noise_variance() const {
    return std::isinf(zeta) ? 0.0 : 1.0 / zeta_p();
  }
};

inline SnrModel make_snr_model(double zeta, std::uint32_t rho, std::uint32_t block_len,
                               double split, std::uint32_t antennas) {
  if (!(zeta > 0.0)) throw invalid_input("snr model: zeta must be positive");
  if (rho < 1 || block_len < 1) throw invalid_input("snr model: rho and block_len must be >= 1");
  if (antennas < 2) throw invalid_input("snr model: antennas must be >= 2");
  if (split < 1.0 / static_cast<double>(antennas) - 1e-12 || split > 1.0 + 1e-12)
    throw invalid_input("snr model: split must lie in [1/N, 1]");
  return SnrModel{zeta, rho, block_len, split, antennas};
}

/// Operating point specified by its net sensing SNR instead of the raw zeta.
inline SnrModel snr_model_from_net(double zeta_net, std::uint32_t rho, std::uint32_t block_len,
                                   double split, std::uint32_t antennas) {
  if (!(zeta_net > 0.0)) throw invalid_input("snr model: zeta_net must be positive");
  SnrModel probe = make_snr_model(1.0, rho, block_len, split, antennas);
  const double gain = probe.zeta_net();  // zeta_net at zeta = 1
  if (!(gain > 0.0))
    throw degenerate_error("snr model: net SNR unreachable at split=1 (no sensing energy)");
  return make_snr_model(zeta_net / gain, rho, block_len, split, antennas);
}

/// Frame-domain phase ramp for Doppler bin p: d[m] = exp(-j*2*pi*p*m/M).
inline std::vector<cplx> doppler_vector(std::uint32_t p, std::uint32_t frames) {
  if (frames == 0) throw invalid_input("doppler_vector: frames must be >= 1");
  if (p >= frames) throw invalid_input("doppler_vector: bin out of range");
  std::vector<cplx> d(frames);
  for (std::uint64_t m = 0; m < frames; ++m) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>((p * m) % frames) /
                       static_cast<double>(frames);
    d[m] = cplx(std::cos(ang), std::sin(ang));
  }
  return d;
}

/**
 * Doppler-angle domain channel matrix: sqrt(M*N) * gain_k at each occupied
 * bin, zero elsewhere. The antenna-time domain channel is its 2D unitary DFT.
 */
inline ComplexGrid assemble_channel(const TargetScene& scene) {
  if (scene.frames == 0 || scene.antennas == 0)
    throw invalid_input("assemble_channel: empty grid");
  ComplexGrid h(scene.frames, scene.antennas);
  const double scale = std::sqrt(static_cast<double>(scene.frames) * scene.antennas);
  for (const Target& t : scene.targets) {
    if (t.doppler_bin >= scene.frames || t.angle_bin >= scene.antennas)
      throw invalid_input("assemble_channel: target bin out of range");
    if (h.at(t.doppler_bin, t.angle_bin) != cplx(0.0, 0.0))
      throw invalid_input("assemble_channel: duplicate target bin");
    h.at(t.doppler_bin, t.angle_bin) = scale * t.gain;
  }
  return h;
}

/// Column-scale the channel by the beam-domain gains: out(:,q) = in(:,q)*diag[q].
inline ComplexGrid masked_matrix(const ComplexGrid& channel, const GainMask& mask) {
  if (mask.diagonal.size() != channel.cols())
    throw invalid_input("masked_matrix: mask length must equal channel columns");
  ComplexGrid out(channel.rows(), channel.cols());
  for (std::size_t r = 0; r < channel.rows(); ++r)
    for (std::size_t c = 0; c < channel.cols(); ++c)
      out.at(r, c) = channel.at(r, c) * mask.diagonal[c];
  return out;
}

/**
 * One sensing snapshot: measurement m lives at grid coordinate
 * (m, trajectory.shifts[m]) of the transformed masked channel.
 */
struct MeasurementSet {
  std::vector<cplx> values;
  Trajectory trajectory;
  GainMask mask;
  double noise_variance = 0.0;
};

namespace detail {

inline std::vector<cplx> draw_noise(std::size_t count, double variance, std::uint64_t seed) {
  std::vector<cplx> w(count, cplx(0.0, 0.0));
  if (variance > 0.0) {
    Rng rng(seed);
    for (auto& x : w) x = rng.complex_gaussian(variance);
  }
  return w;
}

}  // namespace detail

/**
 * Synthesize the frame-by-frame sensing measurements through the fast grid
 * route: transform the masked channel once and read one sample per frame at
 * (m, shifts[m]), then add circular complex Gaussian noise of variance
 * snr.noise_variance().
 */
inline MeasurementSet synthesize(const TargetScene& scene, const Beamformer& beam,
                                 const Trajectory& trajectory, const SnrModel& snr,
                                 std::uint64_t seed) {
  if (scene.frames != trajectory.frames || scene.antennas != trajectory.antennas)
    throw invalid_input("synthesize: scene and trajectory dimensions differ");
  if (beam.weights.size() != scene.antennas)
    throw invalid_input("synthesize: beamformer length must equal antenna count");
  MeasurementSet out;
  out.trajectory = trajectory;
  out.mask = gain_mask(beam);
  out.noise_variance = snr.noise_variance();
  const ComplexGrid z = dft2d(masked_matrix(assemble_channel(scene), out.mask));
  const auto noise = detail::draw_noise(trajectory.frames, out.noise_variance, seed);
  out.values.resize(trajectory.frames);
  for (std::size_t m = 0; m < trajectory.frames; ++m)
    out.values[m] = z.at(m, trajectory.shifts[m]) + noise[m];
  return out;
}

/**
 * Reference synthesis that never forms the sampled grid: frame m applies the
 * delay-shifted beamformer directly, y_m = row m of U_M * (Htilde * (U_N f_m)).
 * Same noise stream as synthesize() for a given seed; the two routes agree
 * to numerical precision.
 */
inline MeasurementSet synthesize_direct(const TargetScene& scene, const Beamformer& beam,
                                        const Trajectory& trajectory, const SnrModel& snr,
                                        std::uint64_t seed) {
  if (scene.frames != trajectory.frames || scene.antennas != trajectory.antennas)
    throw invalid_input("synthesize: scene and trajectory dimensions differ");
  if (beam.weights.size() != scene.antennas)
    throw invalid_input("synthesize: beamformer length must equal antenna count");
  MeasurementSet out;
  out.trajectory = trajectory;
  out.mask = gain_mask(beam);
  out.noise_variance = snr.noise_variance();
  const ComplexGrid htilde = assemble_channel(scene);
  const auto family = shifted_family(beam, trajectory);
  const auto noise = detail::draw_noise(trajectory.frames, out.noise_variance, seed);
  out.values.resize(trajectory.frames);
  const std::size_t m_count = trajectory.frames, n_count = trajectory.antennas;
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto beam_domain = unitary_dft(family[m].weights);
    std::vector<cplx> mixed(m_count, cplx(0.0, 0.0));
    for (std::size_t p = 0; p < m_count; ++p)
      for (std::size_t q = 0; q < n_count; ++q) mixed[p] += htilde.at(p, q) * beam_domain[q];
    const auto frame_domain = unitary_dft(mixed);
    out.values[m] = frame_domain[m] + noise[m];
  }
  return out;
}

/**
 * Uniformly random K-target scene: K distinct grid bins; complex Gaussian
 * gains rescaled so the average target power (1/K) * sum |h_k|^2 is exactly
 * one. min_separation > 0 additionally enforces a pairwise wrap-around
 * Chebyshev distance on the grid (rejection with a deterministic cap).
 */
inline TargetScene random_scene(std::uint32_t targets, std::uint32_t frames,
                                std::uint32_t antennas, std::uint64_t seed,
                                std::uint32_t min_separation = 0) {
  if (frames == 0 || antennas == 0) throw invalid_input("random_scene: empty grid");
  const std::uint64_t bins = static_cast<std::uint64_t>(frames) * antennas;
  if (targets < 1 || targets > bins)
    throw invalid_input("random_scene: target count must be in [1, M*N]");
  Rng rng(seed);
  TargetScene scene;
  scene.frames = frames;
  scene.antennas = antennas;

  const auto chebyshev_ok = [&](const std::vector<std::uint32_t>& picked) {
    if (min_separation == 0) return true;
    for (std::size_t i = 0; i < picked.size(); ++i)
      for (std::size_t j = i + 1; j < picked.size(); ++j) {
        const std::int64_t pi = picked[i] % frames, qi = picked[i] / frames;
        const std::int64_t pj = picked[j] % frames, qj = picked[j] / frames;
        const std::int64_t dp = std::abs(pi - pj), dq = std::abs(qi - qj);
        const std::int64_t wp = std::min<std::int64_t>(dp, frames - dp);
        const std::int64_t wq = std::min<std::int64_t>(dq, antennas - dq);
        if (std::max(wp, wq) < static_cast<std::int64_t>(min_separation)) return false;
      }
    return true;
  };

  std::vector<std::uint32_t> picked;
  int attempts = 0;
  do {
    if (++attempts > 10000)
      throw degenerate_error("random_scene: min_separation constraint unsatisfiable");
    picked = rng.sample_without_replacement(static_cast<std::uint32_t>(bins), targets);
  } while (!chebyshev_ok(picked));

  scene.targets.resize(targets);
  double power = 0.0;
  for (std::uint32_t k = 0; k < targets; ++k) {
    scene.targets[k].doppler_bin = picked[k] % frames;
    scene.targets[k].angle_bin = picked[k] / frames;
    scene.targets[k].gain = rng.complex_gaussian(1.0);
    power += std::norm(scene.targets[k].gain);
  }
  const double rescale = std::sqrt(static_cast<double>(targets) / power);
  for (auto& t : scene.targets) t.gain *= rescale;
  return scene;
}

/// Scene fixture serialization: header + one "doppler_bin,angle_bin,re,im" row per target.
inline std::string scene_to_csv(const TargetScene& scene) {
  std::string out = "doppler_bin,angle_bin,re,im\n";
  char buf[96];
  for (const Target& t : scene.targets) {
    std::snprintf(buf, sizeof buf, "%u,%u,%.17g,%.17g\n", t.doppler_bin, t.angle_bin,
                  t.gain.real(), t.gain.imag());
    out += buf;
  }
  return out;
}

inline TargetScene scene_from_csv(const std::string& text, std::uint32_t frames,
                                  std::uint32_t antennas) {
  TargetScene scene;
  scene.frames = frames;
  scene.antennas = antennas;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("doppler_bin,angle_bin,re,im", 0) != 0)
    throw invalid_input("scene_from_csv: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Target t;
    double re = 0, im = 0;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%u,%u,%lg,%lg%c", &t.doppler_bin, &t.angle_bin, &re, &im,
                    &extra) != 4)
      throw invalid_input("scene_from_csv: malformed row: " + line);
    t.gain = cplx(re, im);
    scene.targets.push_back(t);
  }
  return scene;
}

}  // namespace jcr
