#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "jcr/errors.hpp"

namespace jcr {

inline double decibel_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_decibel(double x) {
  if (!(x > 0.0)) throw invalid_input("linear_to_decibel: value must be positive");
  return 10.0 * std::log10(x);
}

/**
 * Frame timing budget over one coherent processing interval of length cpi_s:
 * the interval is divided into `frames` equal slots, and each slot spends
 * rho * block_len symbol periods on the sensing preamble plus a fixed
 * inter-frame spacing before data transmission resumes.
 */
struct WaveformBudget {
  std::uint32_t frames = 1;     // slots per interval
  std::uint32_t block_len = 1;  // symbols per preamble block
  double symbol_s = 1.0;        // symbol period in seconds
  double ifs_s = 0.0;           // inter-frame spacing in seconds
  double cpi_s = 1.0;           // interval length in seconds
  std::uint32_t p_max = 1;      // largest usable preamble repetition factor
};

inline WaveformBudget make_waveform_budget(std::uint32_t frames, std::uint32_t block_len,
                                           double symbol_s, double ifs_s, double cpi_s,
                                           std::uint32_t p_max) {
  if (frames < 1 || block_len < 1 || p_max < 1)
    throw invalid_input("waveform budget: frames, block_len, p_max must be >= 1");
  if (!(symbol_s > 0.0) || !(cpi_s > 0.0) || ifs_s < 0.0)
    throw invalid_input("waveform budget: timing parameters must be positive (ifs >= 0)");
  const double busiest = static_cast<double>(frames) *
                         (static_cast<double>(p_max) * block_len * symbol_s + ifs_s);
  if (busiest > cpi_s * (1.0 + 1e-12))
    throw invalid_input("waveform budget: preamble plus spacing exceeds the slot length");
  return WaveformBudget{frames, block_len, symbol_s, ifs_s, cpi_s, p_max};
}

/// Fraction of the interval left for data at repetition factor rho:
/// 1 - frames*(rho*block_len*symbol_s + ifs_s)/cpi_s, clamped against rounding.
inline double data_fraction(const WaveformBudget& b, std::uint32_t rho) {
  if (rho > b.p_max) throw invalid_input("data_fraction: rho exceeds the budget's p_max");
  const double spent = static_cast<double>(b.frames) *
                       (static_cast<double>(rho) * b.block_len * b.symbol_s + b.ifs_s) /
                       b.cpi_s;
  return std::clamp(1.0 - spent, 0.0, 1.0);
}

namespace detail {

inline void check_comm_args(double delta, double zeta_c) {
  if (!(delta >= -1e-12) || delta > 1.0 + 1e-12)
    throw invalid_input("comm metrics: delta must lie in [0, 1]");
  if (!(zeta_c >= 0.0)) throw invalid_input("comm metrics: zeta_c must be >= 0");
}

}  // namespace detail

/// Post-equalization distortion of the data stream at beam split delta.
inline double mmse(double delta, double zeta_c) {
  detail::check_comm_args(delta, zeta_c);
  return 1.0 / (1.0 + delta * zeta_c);
}

/// Effective rate in bits/s/Hz after the duty-cycle discount.
inline double spectral_efficiency(double alpha, double delta, double zeta_c) {
  detail::check_comm_args(delta, zeta_c);
  if (!(alpha >= -1e-12) || alpha > 1.0 + 1e-12)
    throw invalid_input("spectral_efficiency: alpha must lie in [0, 1]");
  return alpha * std::log2(1.0 + delta * zeta_c);
}

/// Duty-cycle-weighted distortion mmse^alpha; equals exactly
/// 2^(-spectral_efficiency) by construction.
inline double dmse_eff(double alpha, double delta, double zeta_c) {
  if (!(alpha >= -1e-12) || alpha > 1.0 + 1e-12)
    throw invalid_input("dmse_eff: alpha must lie in [0, 1]");
  return std::pow(mmse(delta, zeta_c), alpha);
}

/// One (rho, delta) operating point with both objectives on log scales
/// (both are minimized).
struct OperatingPoint {
  std::uint32_t rho = 1;
  double delta = 0.5;
  double log_nmse = 0.0;  // log10 of the sensing error level
  double log_dmse = 0.0;  // log2 of the effective comm distortion (= -rate)
};

/**
 * Evaluate the full (rho, delta) lattice: the sensing objective comes from the
 * supplied callback, the communication objective from the timing budget and
 * the link SNR. Lattice order is rho-major.
 */
inline std::vector<OperatingPoint> build_region(
    const WaveformBudget& budget, double zeta_c, const std::vector<std::uint32_t>& rhos,
    const std::vector<double>& deltas,
    const std::function<double(std::uint32_t, double)>& sensing_nmse) {
  if (rhos.empty() || deltas.empty()) throw invalid_input("build_region: empty lattice");
  if (!sensing_nmse) throw invalid_input("build_region: missing sensing objective");
  std::vector<OperatingPoint> pts;
  pts.reserve(rhos.size() * deltas.size());
  for (const std::uint32_t rho : rhos)
    for (const double delta : deltas) {
      const double err = sensing_nmse(rho, delta);
      if (!(err > 0.0) || !std::isfinite(err))
        throw invalid_input("build_region: sensing objective must be finite and positive");
      const double alpha = data_fraction(budget, rho);
      OperatingPoint p;
      p.rho = rho;
      p.delta = delta;
      p.log_nmse = std::log10(err);
      p.log_dmse = alpha * std::log2(mmse(delta, zeta_c));
      if (!std::isfinite(p.log_dmse))
        throw invalid_input("build_region: comm objective must be finite");
      pts.push_back(p);
    }
  return pts;
}

/// Frontier membership: index into the evaluated lattice plus whether the
/// point is a corner of the lower convex envelope (not merely collinear).
struct FrontierEntry {
  std::size_t index = 0;
  bool vertex = false;
};

/**
 * Non-dominated frontier plus its lower convex envelope, x = log_nmse,
 * y = log_dmse, both minimized. Returns the envelope points in ascending x;
 * collinear boundary points are kept with vertex=false. Deterministic under
 * exact ties: smaller rho, then larger delta wins a coordinate tie.
 */
inline std::vector<FrontierEntry> pareto_frontier(const std::vector<OperatingPoint>& pts) {
  if (pts.empty()) throw invalid_input("pareto_frontier: no points");
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].log_nmse != pts[b].log_nmse) return pts[a].log_nmse < pts[b].log_nmse;
    if (pts[a].log_dmse != pts[b].log_dmse) return pts[a].log_dmse < pts[b].log_dmse;
    if (pts[a].rho != pts[b].rho) return pts[a].rho < pts[b].rho;
    return pts[a].delta > pts[b].delta;
  });

  // non-dominated staircase: strictly decreasing y along ascending x
  std::vector<std::size_t> stair;
  for (const std::size_t i : order) {
    if (!stair.empty()) {
      const auto& last = pts[stair.back()];
      if (pts[i].log_nmse == last.log_nmse || pts[i].log_dmse >= last.log_dmse) continue;
    }
    stair.push_back(i);
  }

  // lower convex envelope by monotone chain; collinear points stay
  const auto cross = [&](std::size_t a, std::size_t b, std::size_t c) {
    return (pts[b].log_nmse - pts[a].log_nmse) * (pts[c].log_dmse - pts[a].log_dmse) -
           (pts[b].log_dmse - pts[a].log_dmse) * (pts[c].log_nmse - pts[a].log_nmse);
  };
  std::vector<std::size_t> hull;
  for (const std::size_t i : stair) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) < 0.0)
      hull.pop_back();
    hull.push_back(i);
  }

  std::vector<FrontierEntry> out(hull.size());
  for (std::size_t k = 0; k < hull.size(); ++k) {
    out[k].index = hull[k];
    out[k].vertex = k == 0 || k + 1 == hull.size() ||
                    cross(hull[k - 1], hull[k], hull[k + 1]) != 0.0;
  }
  return out;
}

/**
 * Scalarized selection along the envelope: both objectives are min-max
 * normalized over the FULL lattice (so the weighting is scale-free), the cost
 * w_c * comm + (1 - w_c) * sensing is evaluated at envelope corners only, and
 * exact cost ties go to the smaller rho, then the larger delta.
 */
inline std::size_t weighted_optimum(const std::vector<OperatingPoint>& pts,
                                    const std::vector<FrontierEntry>& frontier, double w_c) {
  if (pts.empty() || frontier.empty()) throw invalid_input("weighted_optimum: empty inputs");
  if (!(w_c >= -1e-12) || w_c > 1.0 + 1e-12)
    throw invalid_input("weighted_optimum: weight must lie in [0, 1]");
  double x_lo = pts[0].log_nmse, x_hi = pts[0].log_nmse;
  double y_lo = pts[0].log_dmse, y_hi = pts[0].log_dmse;
  for (const auto& p : pts) {
    x_lo = std::min(x_lo, p.log_nmse);
    x_hi = std::max(x_hi, p.log_nmse);
    y_lo = std::min(y_lo, p.log_dmse);
    y_hi = std::max(y_hi, p.log_dmse);
  }
  const auto norm = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
  };

  std::size_t best = frontier[0].index;
  double best_cost = std::numeric_limits<double>::infinity();
  bool have = false;
  for (const auto& entry : frontier) {
    if (!entry.vertex) continue;
    const auto& p = pts[entry.index];
    const double cost = w_c * norm(p.log_dmse, y_lo, y_hi) +
                        (1.0 - w_c) * norm(p.log_nmse, x_lo, x_hi);
    const bool better =
        !have || cost < best_cost ||
        (cost == best_cost && (p.rho < pts[best].rho ||
                               (p.rho == pts[best].rho && p.delta > pts[best].delta)));
    if (better) {
      best = entry.index;
      best_cost = cost;
      have = true;
    }
  }
  return best;
}

}  // namespace jcr
