#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "jcr/complex_grid.hpp"
#include "jcr/errors.hpp"
#include "jcr/scene.hpp"
#include "jcr/spectral.hpp"
#include "jcr/trajectory.hpp"

namespace jcr {

/// Greedy-pursuit stopping policy: hard atom budget plus an optional
/// residual-norm floor (0 disables the floor). Pursuit always stops once the
/// residual is negligible relative to the input.
struct StoppingRule {
  std::uint32_t max_atoms = 1;
  double residual_threshold = 0.0;
};

struct SupportSet {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bins;  // (doppler, angle), selection order
};

struct ChannelEstimate {
  ComplexGrid z_hat;                   // masked-domain estimate, zero off support
  ComplexGrid h_hat;                   // channel estimate after unmasking
  SupportSet support;
  std::vector<double> residual_trace;  // residual 2-norm after each accepted atom
};

/**
 * Adjoint of the sampling operator: scatter the measurements onto their grid
 * coordinates (m, shifts[m]) and apply the inverse 2D unitary DFT. Because
 * rows hold at most one sample, the adjoint is an isometry onto its range.
 */
inline ComplexGrid adjoint_apply(const std::vector<cplx>& values, const Trajectory& trajectory) {
  if (values.size() != trajectory.frames)
    throw invalid_input("adjoint_apply: measurement count must equal frame count");
  ComplexGrid scattered(trajectory.frames, trajectory.antennas);
  for (std::size_t m = 0; m < values.size(); ++m)
    scattered.at(m, trajectory.shifts[m]) = values[m];
  return dft2d(scattered, true);
}

inline ComplexGrid adjoint_apply(const MeasurementSet& meas) {
  return adjoint_apply(meas.values, meas.trajectory);
}

namespace detail {

/// Raw sensing column for grid bin (p, q): a[m] = U_N(shifts[m], q) * U_M(m, p).
inline void fill_sensing_column(const Trajectory& t, std::uint32_t p, std::uint32_t q,
                                cplx* out) {
  const std::uint64_t m_count = t.frames, n_count = t.antennas;
  const double inv = 1.0 / std::sqrt(static_cast<double>(m_count * n_count));
  for (std::uint64_t m = 0; m < m_count; ++m) {
    const std::uint64_t num =
        (static_cast<std::uint64_t>(t.shifts[m]) * q) % n_count * m_count + (m * p) % m_count * n_count;
    const double ang = -2.0 * std::numbers::pi *
                       static_cast<double>(num % (m_count * n_count)) /
                       static_cast<double>(m_count * n_count);
    out[m] = cplx(std::cos(ang) * inv, std::sin(ang) * inv);
  }
}

/// Condition guard for a factored Gram system. The rcond estimate alone lets
/// an exactly singular matrix slip through (the factorization's solve then
/// acts like a pseudo-inverse), so the pivot magnitudes are checked as well.
inline bool gram_well_conditioned(const Eigen::LDLT<Eigen::MatrixXcd>& ldlt) {
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= 1e-10)) return false;
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  const auto d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = std::abs(d(i));
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
  }
  return dmax > 0.0 && dmin > 1e-12 * dmax;
}

/// Least squares through the normal equations with a pivoted factorization.
/// Throws degenerate_error when the Gram system's condition exceeds 1e10.
inline Eigen::VectorXcd gram_least_squares(const Eigen::MatrixXcd& columns,
                                           const Eigen::VectorXcd& y) {
  const Eigen::MatrixXcd gram = columns.adjoint() * columns;
  const Eigen::VectorXcd rhs = columns.adjoint() * y;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
  if (!gram_well_conditioned(ldlt))
    throw degenerate_error("least squares: selected columns are numerically dependent");
  return ldlt.solve(rhs);
}

}  // namespace detail

/**
 * Orthogonal matching pursuit against the circulant-shift sensing dictionary.
 * Correlation is evaluated for all M*N bins at once through one inverse 2D
 * transform per iteration (the adjoint), which is exact because every raw
 * dictionary column has the same norm 1/sqrt(N), making normalized and raw
 * correlation rankings identical. Coefficients are refit by least squares on
 * the raw selected columns each iteration, so the masked-domain coefficients
 * are read off directly; unmasking divides by the beam-domain gains.
 */
inline ChannelEstimate omp_recover(const MeasurementSet& meas, const StoppingRule& rule) {
  const std::uint32_t m_count = meas.trajectory.frames;
  const std::uint32_t n_count = meas.trajectory.antennas;
  if (rule.max_atoms < 1) throw invalid_input("omp_recover: max_atoms must be >= 1");
  if (rule.max_atoms > m_count)
    throw invalid_input("omp_recover: atom budget exceeds measurement count");
  if (meas.mask.diagonal.size() != n_count)
    throw invalid_input("omp_recover: mask length must equal antenna count");

  ChannelEstimate est{ComplexGrid(m_count, n_count), ComplexGrid(m_count, n_count), {}, {}};
  Eigen::VectorXcd y(m_count);
  for (std::uint32_t m = 0; m < m_count; ++m) y(m) = meas.values[m];
  const double eps_stop = 1e-24 * std::max(1.0, y.squaredNorm());

  Eigen::VectorXcd residual = y;
  Eigen::MatrixXcd columns(m_count, 0);
  Eigen::VectorXcd coeffs;
  std::vector<std::vector<bool>> used(m_count, std::vector<bool>(n_count, false));

  while (est.support.bins.size() < rule.max_atoms) {
    const double r_sq = residual.squaredNorm();
    if (r_sq <= eps_stop) break;
    if (rule.residual_threshold > 0.0 && std::sqrt(r_sq) <= rule.residual_threshold) break;

    std::vector<cplx> rvec(residual.data(), residual.data() + m_count);
    const ComplexGrid corr = adjoint_apply(rvec, meas.trajectory);
    std::uint32_t best_p = 0, best_q = 0;
    double best = -1.0;
    for (std::uint32_t q = 0; q < n_count; ++q)
      for (std::uint32_t p = 0; p < m_count; ++p) {
        if (used[p][q]) continue;
        const double v = std::abs(corr.at(p, q));
        if (v > best) {
          best = v;
          best_p = p;
          best_q = q;
        }
      }
    if (best < 0.0) break;
    used[best_p][best_q] = true;
    est.support.bins.emplace_back(best_p, best_q);

    columns.conservativeResize(Eigen::NoChange, columns.cols() + 1);
    detail::fill_sensing_column(meas.trajectory, best_p, best_q,
                                columns.col(columns.cols() - 1).data());
    coeffs = detail::gram_least_squares(columns, y);
    residual = y - columns * coeffs;
    est.residual_trace.push_back(residual.norm());
  }

  for (std::size_t k = 0; k < est.support.bins.size(); ++k) {
    const auto [p, q] = est.support.bins[k];
    est.z_hat.at(p, q) = coeffs(static_cast<Eigen::Index>(k));
    const cplx gain = meas.mask.diagonal[q];
    if (std::abs(gain) < 1e-12)
      throw degenerate_error("omp_recover: zero beam-domain gain on the support");
    est.h_hat.at(p, q) = est.z_hat.at(p, q) / gain;
  }
  return est;
}

/// Result of the dense-dictionary pursuit used by unstructured baselines.
struct DenseRecovery {
  std::vector<std::size_t> support;   // column indices, selection order
  std::vector<cplx> coefficients;     // raw-column coefficients, same order
  std::vector<double> residual_trace;
};

/**
 * Orthogonal matching pursuit on an explicit column dictionary. Columns are
 * normalized for atom selection (dictionaries here have unequal column
 * norms); coefficients are least-squares refits on the raw columns. Guarded
 * to small dictionaries.
 */
inline DenseRecovery omp_recover_dense(const std::vector<std::vector<cplx>>& dict,
                                       const std::vector<cplx>& y, const StoppingRule& rule) {
  if (dict.empty()) throw invalid_input("omp_recover_dense: empty dictionary");
  if (dict.size() > 4096)
    throw invalid_input("omp_recover_dense: dictionary too large (max 4096 columns)");
  const std::size_t rows = y.size();
  for (const auto& col : dict)
    if (col.size() != rows) throw invalid_input("omp_recover_dense: column length mismatch");
  if (rule.max_atoms < 1) throw invalid_input("omp_recover_dense: max_atoms must be >= 1");

  Eigen::MatrixXcd a(rows, dict.size());
  for (std::size_t j = 0; j < dict.size(); ++j)
    for (std::size_t m = 0; m < rows; ++m) a(m, j) = dict[j][m];
  Eigen::VectorXcd yv(rows);
  for (std::size_t m = 0; m < rows; ++m) yv(m) = y[m];
  const Eigen::VectorXd norms = a.colwise().norm();
  const double eps_stop = 1e-24 * std::max(1.0, yv.squaredNorm());

  DenseRecovery out;
  Eigen::VectorXcd residual = yv;
  Eigen::MatrixXcd picked(rows, 0);
  Eigen::VectorXcd coeffs;
  std::vector<bool> used(dict.size(), false);

  while (out.support.size() < rule.max_atoms && out.support.size() < rows) {
    const double r_sq = residual.squaredNorm();
    if (r_sq <= eps_stop) break;
    if (rule.residual_threshold > 0.0 && std::sqrt(r_sq) <= rule.residual_threshold) break;

    const Eigen::VectorXcd corr = a.adjoint() * residual;
    std::size_t best = dict.size();
    double best_val = -1.0;
    for (std::size_t j = 0; j < dict.size(); ++j) {
      if (used[j] || norms(static_cast<Eigen::Index>(j)) <= 0.0) continue;
      const double v = std::abs(corr(static_cast<Eigen::Index>(j))) / norms(static_cast<Eigen::Index>(j));
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    if (best == dict.size()) break;
    used[best] = true;
    out.support.push_back(best);

    picked.conservativeResize(Eigen::NoChange, picked.cols() + 1);
    picked.col(picked.cols() - 1) = a.col(static_cast<Eigen::Index>(best));
    coeffs = detail::gram_least_squares(picked, yv);
    residual = yv - picked * coeffs;
    out.residual_trace.push_back(residual.norm());
  }
  out.coefficients.resize(out.support.size());
  for (std::size_t k = 0; k < out.support.size(); ++k)
    out.coefficients[k] = coeffs(static_cast<Eigen::Index>(k));
  return out;
}

/**
 * Dictionary for the antenna-subset switching baseline: column (p, q) has
 * entries U_M(m, p) * beam_domain_m[q], where beam_domain_m is the unitary
 * DFT of frame m's precoder. Columns are indexed q*M + p to match the
 * vectorized channel layout.
 */
inline std::vector<std::vector<cplx>> switched_dictionary(
    const std::vector<std::vector<cplx>>& precoders) {
  if (precoders.empty()) throw invalid_input("switched_dictionary: no precoders");
  const std::size_t m_count = precoders.size();
  const std::size_t n_count = precoders[0].size();
  const auto um = [&](std::size_t m, std::size_t p) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>((m * p) % m_count) /
                       static_cast<double>(m_count);
    return cplx(std::cos(ang), std::sin(ang)) / std::sqrt(static_cast<double>(m_count));
  };
  std::vector<std::vector<cplx>> beam(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    if (precoders[m].size() != n_count)
      throw invalid_input("switched_dictionary: ragged precoder list");
    beam[m] = unitary_dft(precoders[m]);
  }
  std::vector<std::vector<cplx>> dict(m_count * n_count, std::vector<cplx>(m_count));
  for (std::size_t q = 0; q < n_count; ++q)
    for (std::size_t p = 0; p < m_count; ++p)
      for (std::size_t m = 0; m < m_count; ++m)
        dict[q * m_count + p][m] = um(m, p) * beam[m][q];
  return dict;
}

/// Per-target squared estimation error: (1/K) * ||truth - estimate||_F^2.
inline double nmse(const ComplexGrid& truth, const ComplexGrid& estimate, std::uint32_t targets) {
  if (!truth.same_shape(estimate)) throw invalid_input("nmse: shape mismatch");
  if (targets < 1) throw invalid_input("nmse: target count must be >= 1");
  double err = 0.0;
  for (std::size_t r = 0; r < truth.rows(); ++r)
    for (std::size_t c = 0; c < truth.cols(); ++c) err += std::norm(truth.at(r, c) - estimate.at(r, c));
  return err / static_cast<double>(targets);
}

inline double nmse(const ComplexGrid& truth, const ChannelEstimate& est, std::uint32_t targets) {
  return nmse(truth, est.h_hat, targets);
}

/**
 * Closed-form exact-support error level: with the true support known, least
 * squares through the raw sensing columns gives per-target error
 * Tr((A_S^* A_S)^{-1}) / (K * zeta_net), the flat-beam approximation of the
 * estimator variance (a single column yields N/zeta_net). The mask is checked
 * for live gains on the support but does not enter the flat-beam value.
 */
inline double nmse_analytic(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& support,
                            const Trajectory& trajectory, const GainMask& mask, double zeta_net,
                            std::uint32_t targets) {
  if (support.empty()) throw invalid_input("nmse_analytic: empty support");
  if (targets < 1) throw invalid_input("nmse_analytic: target count must be >= 1");
  if (!(zeta_net > 0.0)) throw invalid_input("nmse_analytic: zeta_net must be positive");
  const std::size_t k = support.size();
  Eigen::MatrixXcd columns(trajectory.frames, k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto [p, q] = support[j];
    if (p >= trajectory.frames || q >= trajectory.antennas)
      throw invalid_input("nmse_analytic: support bin out of range");
    if (q < mask.diagonal.size() && std::abs(mask.diagonal[q]) < 1e-12)
      throw degenerate_error("nmse_analytic: zero beam-domain gain on the support");
    detail::fill_sensing_column(trajectory, p, q, columns.col(static_cast<Eigen::Index>(j)).data());
  }
  const Eigen::MatrixXcd gram = columns.adjoint() * columns;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
  if (!detail::gram_well_conditioned(ldlt))
    throw degenerate_error("nmse_analytic: support columns are numerically dependent");
  const Eigen::MatrixXcd inv = ldlt.solve(Eigen::MatrixXcd::Identity(k, k));
  return inv.trace().real() / (static_cast<double>(targets) * zeta_net);
}

}  // namespace jcr
