#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "jcr/beamformer.hpp"
#include "jcr/recovery.hpp"
#include "jcr/rng.hpp"
#include "jcr/scene.hpp"
#include "jcr/spectral.hpp"
#include "jcr/trajectory.hpp"
#include "oracles.hpp"

using jcr::cplx;

namespace {

jcr::Beamformer random_beamformer(std::uint32_t antennas, std::uint64_t seed) {
  jcr::Rng rng(seed);
  std::vector<cplx> v(antennas);
  for (auto& x : v) x = rng.complex_gaussian(1.0);
  return jcr::quantize_to_beamformer(v, 4, 0.5);
}

std::vector<cplx> random_measurement_values(std::uint32_t frames, std::uint64_t seed) {
  jcr::Rng rng(seed);
  std::vector<cplx> y(frames);
  for (auto& v : y) v = rng.complex_gaussian(1.0);
  return y;
}

// Repeated shifts can make two dictionary columns' correlations exactly equal
// by symmetry; such ties are broken by last-ulp rounding, so step-for-step
// agreement between two numerical routes is only meaningful when every
// selection has a real winner. Walks the reference pursuit and checks that
// the top-2 correlation gap at every step exceeds a relative margin.
bool instance_decisive(const std::vector<std::vector<cplx>>& a, const std::vector<cplx>& y,
                       std::size_t atoms) {
  for (std::size_t i = 0; i < atoms; ++i) {
    const auto partial = oracle::dense_omp(a, y, i);
    if (partial.support.size() < i) break;  // pursuit stopped early; no later selections
    std::vector<cplx> residual = y;
    for (std::size_t m = 0; m < a.size(); ++m)
      for (std::size_t t = 0; t < partial.support.size(); ++t)
        residual[m] -= a[m][partial.support[t]] * partial.coefficients[t];
    const auto corr = oracle::explicit_adjoint(a, residual);
    std::vector<bool> used(corr.size(), false);
    for (const std::size_t j : partial.support) used[j] = true;
    double best = -1.0, second = -1.0;
    for (std::size_t j = 0; j < corr.size(); ++j) {
      if (used[j]) continue;
      const double v = std::abs(corr[j]);
      if (v > best) {
        second = best;
        best = v;
      } else if (v > second) {
        second = v;
      }
    }
    if (best - second <= 1e-9 * best) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("adjoint equals the explicit conjugated products and is an isometry") {
  struct Shape {
    std::uint32_t frames, antennas;
  };
  for (const Shape s : {Shape{5, 7}, Shape{7, 5}, Shape{31, 31}}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto traj = (s.frames == s.antennas && s.frames == 31)
                            ? jcr::optimized_trajectory(s.frames)
                            : jcr::random_trajectory(s.frames, s.antennas, seed);
      const auto y = random_measurement_values(s.frames, 100 + seed);
      const auto grid = jcr::adjoint_apply(y, traj);

      const auto a = oracle::explicit_sensing_matrix(traj.shifts, s.frames, s.antennas);
      const auto ref = oracle::explicit_adjoint(a, y);
      for (std::uint32_t q = 0; q < s.antennas; ++q)
        for (std::uint32_t p = 0; p < s.frames; ++p)
          CHECK(std::abs(grid.at(p, q) - ref[q * s.frames + p]) < 1e-9);

      double y_sq = 0.0;
      for (const auto& v : y) y_sq += std::norm(v);
      CHECK(grid.frobenius_norm_sq() == doctest::Approx(y_sq).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(jcr::adjoint_apply(std::vector<cplx>(3), jcr::optimized_trajectory(5)),
                  jcr::invalid_input);
}

TEST_CASE("structured pursuit matches the dense reference atom for atom") {
  int decisive = 0;
  for (const std::uint32_t n : {5u, 7u, 11u, 31u}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const std::uint32_t k = (n >= 11) ? 3 : 2;
      const auto traj = jcr::random_trajectory(n, n, 7000 + seed);
      const auto beam = random_beamformer(n, 7100 + seed);
      const auto scene = jcr::random_scene(k, n, n, 7200 + seed);
      const auto snr = jcr::make_snr_model(50.0, 2, 4, 0.5, n);
      const auto meas = jcr::synthesize(scene, beam, traj, snr, 7300 + seed);

      const auto a = oracle::explicit_sensing_matrix(traj.shifts, n, n);
      if (!instance_decisive(a, meas.values, k + 1)) continue;
      ++decisive;

      const auto est = jcr::omp_recover(meas, {k + 1, 0.0});
      const auto ref = oracle::dense_omp(a, meas.values, k + 1);

      REQUIRE(est.support.bins.size() == ref.support.size());
      for (std::size_t i = 0; i < ref.support.size(); ++i) {
        const auto [p, q] = est.support.bins[i];
        CHECK(static_cast<std::size_t>(q) * n + p == ref.support[i]);
        CHECK(std::abs(est.z_hat.at(p, q) - ref.coefficients[i]) < 1e-8);
      }
    }
  }
  CHECK(decisive >= 10);  // out of 12 instances
}

TEST_CASE("noiseless recovery on the low-coherence trajectory is exact") {
  const std::uint32_t n = 31, k = 3;
  const auto traj = jcr::optimized_trajectory(n);
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(0.5, n), 4, 50);
  const auto noiseless = jcr::make_snr_model(std::numeric_limits<double>::infinity(), 2, 4, 0.5, n);

  int exact = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto scene = jcr::random_scene(k, n, n, 9000 + seed);
    const auto meas = jcr::synthesize(scene, design.beamformer, traj, noiseless, 9100 + seed);
    const auto est = jcr::omp_recover(meas, {k, 0.0});

    std::set<std::pair<std::uint32_t, std::uint32_t>> truth_bins, found;
    for (const auto& t : scene.targets) truth_bins.emplace(t.doppler_bin, t.angle_bin);
    for (const auto& b : est.support.bins) found.insert(b);
    CHECK(truth_bins == found);

    const auto truth = jcr::assemble_channel(scene);
    const double err = jcr::nmse(truth, est, k);
    if (err < 1e-12) ++exact;

    REQUIRE(!est.residual_trace.empty());
    for (std::size_t i = 1; i < est.residual_trace.size(); ++i)
      CHECK(est.residual_trace[i] <= est.residual_trace[i - 1] + 1e-12);
    CHECK(est.residual_trace.back() < 1e-10);
  }
  CHECK(exact == 100);
}

TEST_CASE("unmasking divides the beam-domain gains back out") {
  const std::uint32_t n = 5;
  const auto traj = jcr::optimized_trajectory(n);
  jcr::GainMask mask{{cplx(1, 0), cplx(0.5, 0), cplx(2, 0), cplx(1, 0), cplx(0.25, 0)}, 0.5};
  jcr::TargetScene scene{{{2, 3, cplx(0.7, -0.2)}}, n, n};
  // noiseless measurement assembled by hand through the grid formula
  const auto z = jcr::dft2d(jcr::masked_matrix(jcr::assemble_channel(scene), mask));
  std::vector<cplx> values(n);
  for (std::uint32_t m = 0; m < n; ++m) values[m] = z.at(m, traj.shifts[m]);
  jcr::MeasurementSet meas{values, traj, mask, 0.0};

  const auto est = jcr::omp_recover(meas, {1, 0.0});
  REQUIRE(est.support.bins.size() == 1);
  CHECK(est.support.bins[0].first == 2);
  CHECK(est.support.bins[0].second == 3);
  const double root = std::sqrt(25.0);
  CHECK(std::abs(est.h_hat.at(2, 3) - cplx(0.7, -0.2) * root) < 1e-10);
  CHECK(std::abs(est.z_hat.at(2, 3) - cplx(0.7, -0.2) * root * mask.diagonal[3]) < 1e-10);
}

TEST_CASE("zero beam-domain gain on the support is refused") {
  const std::uint32_t n = 5;
  const auto traj = jcr::optimized_trajectory(n);
  const auto a = oracle::explicit_sensing_matrix(traj.shifts, n, n);
  // measurement lying exactly along the (p=1, q=2) column
  std::vector<cplx> y(n);
  for (std::uint32_t m = 0; m < n; ++m) y[m] = a[m][2 * n + 1];
  jcr::GainMask dead{{cplx(1, 0), cplx(1, 0), cplx(0, 0), cplx(1, 0), cplx(1, 0)}, 0.5};
  jcr::MeasurementSet meas{y, traj, dead, 0.0};
  CHECK_THROWS_AS(jcr::omp_recover(meas, {1, 0.0}), jcr::degenerate_error);
  CHECK_THROWS_AS(jcr::nmse_analytic({{1, 2}}, traj, dead, 100.0, 1), jcr::degenerate_error);
}

TEST_CASE("per-target squared error and the zero-estimate level") {
  const std::uint32_t n = 31, k = 3;
  const auto scene = jcr::random_scene(k, n, n, 42);
  const auto truth = jcr::assemble_channel(scene);
  const jcr::ComplexGrid zeros(n, n);
  CHECK(jcr::nmse(truth, zeros, k) == doctest::Approx(static_cast<double>(n) * n).epsilon(1e-12));
  CHECK(jcr::nmse(truth, truth, k) == doctest::Approx(0.0));
  CHECK_THROWS_AS(jcr::nmse(truth, jcr::ComplexGrid(2, 2), k), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::nmse(truth, zeros, 0), jcr::invalid_input);
}

TEST_CASE("exact-support error formula: single-bin value and scaling") {
  const std::uint32_t n = 31;
  const auto traj = jcr::optimized_trajectory(n);
  jcr::GainMask mask{std::vector<cplx>(n, cplx(1, 0)), 0.5};

  const double one = jcr::nmse_analytic({{4, 9}}, traj, mask, 100.0, 1);
  CHECK(one == doctest::Approx(static_cast<double>(n) / 100.0).epsilon(1e-12));
  const double twice = jcr::nmse_analytic({{4, 9}}, traj, mask, 200.0, 1);
  CHECK(twice == doctest::Approx(one / 2.0).epsilon(1e-12));

  // two-column value against the hand-inverted 2x2 Gram matrix
  const std::pair<std::uint32_t, std::uint32_t> s0{4, 9}, s1{17, 2};
  const auto a = oracle::explicit_sensing_matrix(traj.shifts, n, n);
  cplx g(0, 0);
  for (std::uint32_t m = 0; m < n; ++m)
    g += std::conj(a[m][s0.second * n + s0.first]) * a[m][s1.second * n + s1.first];
  const double diag = 1.0 / static_cast<double>(n);
  const double zeta_net = 100.0;
  const double expected = (2.0 * diag / (diag * diag - std::norm(g))) / (2.0 * zeta_net);
  CHECK(jcr::nmse_analytic({s0, s1}, traj, mask, zeta_net, 2) ==
        doctest::Approx(expected).epsilon(1e-10));

  CHECK_THROWS_AS(jcr::nmse_analytic({}, traj, mask, 100.0, 1), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::nmse_analytic({{4, 9}}, traj, mask, 100.0, 0), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::nmse_analytic({{4, 9}}, traj, mask, 0.0, 1), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::nmse_analytic({{40, 9}}, traj, mask, 100.0, 1), jcr::invalid_input);
  // duplicated column makes the Gram system singular
  CHECK_THROWS_AS(jcr::nmse_analytic({{4, 9}, {4, 9}}, traj, mask, 100.0, 2),
                  jcr::degenerate_error);
}

TEST_CASE("dense pursuit equals the reference on the switched dictionary") {
  const std::uint32_t n = 7;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto precoders = jcr::rs_baseline_precoders(n, n, 0.5, 5000 + seed);
    const auto dict = jcr::switched_dictionary(precoders);
    REQUIRE(dict.size() == static_cast<std::size_t>(n) * n);

    // dictionary definition check against the direct transform
    jcr::Rng pick(seed);
    for (int rep = 0; rep < 6; ++rep) {
      const std::uint32_t p = static_cast<std::uint32_t>(pick.uniform_below(n));
      const std::uint32_t q = static_cast<std::uint32_t>(pick.uniform_below(n));
      const auto um = oracle::dft_matrix(n);
      for (std::uint32_t m = 0; m < n; ++m) {
        const auto beam = oracle::direct_dft(precoders[m]);
        CHECK(std::abs(dict[q * n + p][m] - um[m][p] * beam[q]) < 1e-12);
      }
    }

    // sparse synthetic measurement: two live columns plus noise
    jcr::Rng rng(6000 + seed);
    std::vector<cplx> y(n, cplx(0, 0));
    const std::size_t j0 = rng.uniform_below(dict.size());
    std::size_t j1 = rng.uniform_below(dict.size());
    while (j1 == j0) j1 = rng.uniform_below(dict.size());
    const cplx c0 = rng.complex_gaussian(1.0), c1 = rng.complex_gaussian(1.0);
    for (std::uint32_t m = 0; m < n; ++m)
      y[m] = c0 * dict[j0][m] + c1 * dict[j1][m] + rng.complex_gaussian(1e-4);

    const auto mine = jcr::omp_recover_dense(dict, y, {3, 0.0});
    // oracle takes the row-major table
    std::vector<std::vector<cplx>> rows(n, std::vector<cplx>(dict.size()));
    for (std::size_t j = 0; j < dict.size(); ++j)
      for (std::uint32_t m = 0; m < n; ++m) rows[m][j] = dict[j][m];
    const auto ref = oracle::dense_omp(rows, y, 3);

    REQUIRE(mine.support.size() == ref.support.size());
    for (std::size_t i = 0; i < ref.support.size(); ++i) {
      CHECK(mine.support[i] == ref.support[i]);
      CHECK(std::abs(mine.coefficients[i] - ref.coefficients[i]) < 1e-8);
    }
  }
}

TEST_CASE("stopping rules and input validation") {
  const std::uint32_t n = 5;
  const auto traj = jcr::optimized_trajectory(n);
  jcr::GainMask mask{std::vector<cplx>(n, cplx(1, 0)), 0.5};
  const auto y = random_measurement_values(n, 77);
  jcr::MeasurementSet meas{y, traj, mask, 0.0};

  double y_norm = 0.0;
  for (const auto& v : y) y_norm += std::norm(v);
  y_norm = std::sqrt(y_norm);

  const auto stopped = jcr::omp_recover(meas, {3, 2.0 * y_norm});
  CHECK(stopped.support.bins.empty());
  CHECK(stopped.residual_trace.empty());

  const auto capped = jcr::omp_recover(meas, {2, 0.0});
  CHECK(capped.support.bins.size() == 2);

  CHECK_THROWS_AS(jcr::omp_recover(meas, {0, 0.0}), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::omp_recover(meas, {6, 0.0}), jcr::invalid_input);
  jcr::MeasurementSet bad_mask{y, traj, jcr::GainMask{std::vector<cplx>(3, cplx(1, 0)), 0.5}, 0.0};
  CHECK_THROWS_AS(jcr::omp_recover(bad_mask, {1, 0.0}), jcr::invalid_input);

  CHECK_THROWS_AS(jcr::omp_recover_dense({}, y, {1, 0.0}), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::omp_recover_dense({{cplx(1, 0)}}, y, {1, 0.0}), jcr::invalid_input);
  CHECK_THROWS_AS(
      jcr::omp_recover_dense(std::vector<std::vector<cplx>>(4097, std::vector<cplx>(2)),
                             std::vector<cplx>(2), {1, 0.0}),
      jcr::invalid_input);
}
