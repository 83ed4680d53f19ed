#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <vector>

#include "jcr/beamformer.hpp"
#include "jcr/spectral.hpp"
#include "jcr/trajectory.hpp"

using jcr::cplx;

TEST_CASE("magnitude profile: pinned example and unit norm") {
  const auto p = jcr::target_magnitude_profile(0.5, 3);
  CHECK(p[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-14));
  for (std::size_t n : {2u, 3u, 8u, 31u, 257u}) {
    for (double delta : {1.0 / static_cast<double>(n), 0.3, 0.5, 0.9, 1.0}) {
      if (delta < 1.0 / static_cast<double>(n)) continue;
      const auto prof = jcr::target_magnitude_profile(delta, n);
      double norm_sq = 0;
      for (double v : prof) norm_sq += v * v;
      CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(jcr::target_magnitude_profile(0.01, 31), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::target_magnitude_profile(1.1, 31), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::target_magnitude_profile(0.5, 0), jcr::invalid_input);
}

TEST_CASE("phase quantization: exact midpoints round to the smaller index") {
  const double step = 2.0 * std::numbers::pi / 16.0;
  CHECK(jcr::detail::quantize_phase_index(0.5 * step, 4) == 0);
  CHECK(jcr::detail::quantize_phase_index(1.5 * step, 4) == 1);
  CHECK(jcr::detail::quantize_phase_index(0.51 * step, 4) == 1);
  CHECK(jcr::detail::quantize_phase_index(15.6 * step, 4) == 0);   // wraps past the top
  CHECK(jcr::detail::quantize_phase_index(-0.4 * step, 4) == 0);   // negative angles normalize
  CHECK(jcr::detail::quantize_phase_index(-0.6 * step, 4) == 15);
}

TEST_CASE("design output stays on the quantized constant-modulus set") {
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(0.5, 31), 4, 100);
  const auto& f = design.beamformer;
  const double amp = 1.0 / std::sqrt(31.0);
  REQUIRE(f.weights.size() == 31);
  REQUIRE(f.phase_index.size() == 31);
  for (std::size_t n = 0; n < 31; ++n) {
    CHECK(f.phase_index[n] < 16);
    CHECK(std::abs(std::abs(f.weights[n]) - amp) < 1e-15);
    // reconstruction from the stored index must be bit-identical
    const cplx rebuilt = jcr::detail::weight_from_index(f.phase_index[n], f.bits, 31);
    CHECK(f.weights[n] == rebuilt);
  }
  CHECK(design.error_trace.size() == 100);
  CHECK(design.profile_error == design.error_trace.back());
}

TEST_CASE("all-to-communication split is achieved exactly") {
  for (int bits : {1, 2, 4}) {
    const auto design = jcr::gs_design(jcr::target_magnitude_profile(1.0, 8), bits, 10);
    const auto spectrum = jcr::unitary_dft(design.beamformer.weights);
    CHECK(std::norm(spectrum[0]) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("balanced split hits the communication-bin energy within 5 percent") {
  const double delta = 0.5;
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(delta, 257), 4, 100);
  const auto spectrum = jcr::unitary_dft(design.beamformer.weights);
  const double bin0 = std::norm(spectrum[0]);
  CHECK(std::abs(bin0 - delta) / delta < 0.05);
}

TEST_CASE("iterative design never loses to the one-shot quantized baseline") {
  for (double delta : {0.1, 0.5, 0.9}) {
    const auto profile = jcr::target_magnitude_profile(delta, 257);
    const auto design = jcr::gs_design(profile, 4, 100);
    const auto baseline = jcr::quantized_profile_design(profile, 4);
    const double base_err = jcr::detail::profile_gap(baseline.weights, profile);
    CHECK(design.profile_error <= base_err + 1e-12);
  }
}

TEST_CASE("near-total communication split keeps all beam-domain gains alive") {
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(30.0 / 31.0, 31), 4, 100);
  const auto mask = jcr::gain_mask(design.beamformer);
  double lo = 1e300;
  for (const auto& d : mask.diagonal) lo = std::min(lo, std::abs(d));
  CHECK(lo > 0.0);
}

TEST_CASE("gain diagonal is sqrt(N) times the beam-domain image") {
  // hand-built weights whose spectrum is the delta=0.5, N=3 profile
  const auto profile = jcr::target_magnitude_profile(0.5, 3);
  std::vector<cplx> shaped = {cplx(profile[0], 0), cplx(profile[1], 0), cplx(profile[2], 0)};
  jcr::Beamformer f;
  f.weights = jcr::unitary_dft(shaped, true);
  f.split = 0.5;
  const auto mask = jcr::gain_mask(f);
  CHECK(std::abs(mask.diagonal[0] - cplx(std::sqrt(1.5), 0)) < 1e-12);
  CHECK(std::abs(mask.diagonal[1] - cplx(std::sqrt(0.75), 0)) < 1e-12);
  CHECK(std::abs(mask.diagonal[2] - cplx(std::sqrt(0.75), 0)) < 1e-12);
}

TEST_CASE("degenerate mask is rejected") {
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(1.0, 8), 4, 10);
  CHECK_THROWS_AS(jcr::gain_mask(design.beamformer), jcr::degenerate_error);
}

TEST_CASE("steering moves the beam peak to the expected bin") {
  const std::size_t n = 31;
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(1.0, n), 6, 20);
  for (double sin_theta : {0.4, -0.26, 0.8}) {
    const auto steered = jcr::steer(design.beamformer, std::asin(sin_theta));
    const auto spectrum = jcr::unitary_dft(steered);
    std::size_t peak = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(spectrum[k]) > std::abs(spectrum[peak])) peak = k;
    const auto expect = static_cast<std::int64_t>(
        std::llround(static_cast<double>(n) * sin_theta / 2.0));
    const std::size_t expect_bin = static_cast<std::size_t>(((expect % 31) + 31) % 31);
    CHECK(peak == expect_bin);
  }
}

TEST_CASE("shifted family semantics") {
  const auto design = jcr::gs_design(jcr::target_magnitude_profile(0.5, 31), 4, 100);
  const auto& f = design.beamformer;
  SUBCASE("zero shift reproduces the base weights") {
    jcr::Trajectory t;
    t.frames = 1;
    t.antennas = 31;
    t.shifts = {0};
    const auto family = jcr::shifted_family(f, t);
    REQUIRE(family.size() == 1);
    for (std::size_t i = 0; i < 31; ++i) CHECK(family[0].weights[i] == f.weights[i]);
  }
  SUBCASE("every member keeps the beam magnitudes and the alphabet") {
    const auto t = jcr::optimized_trajectory(31);
    const auto family = jcr::shifted_family(f, t);
    const auto base_mag = jcr::unitary_dft(f.weights);
    for (const auto& g : family) {
      const auto spectrum = jcr::unitary_dft(g.weights);
      for (std::size_t k = 0; k < 31; ++k)
        CHECK(std::abs(spectrum[k]) == doctest::Approx(std::abs(base_mag[k])).epsilon(1e-12));
      for (std::size_t i = 0; i < 31; ++i)
        CHECK(g.weights[i] == jcr::detail::weight_from_index(g.phase_index[i], g.bits, 31));
    }
  }
  SUBCASE("distinct shifts give distinct members") {
    jcr::Trajectory t;
    t.frames = 31;
    t.antennas = 31;
    t.shifts.resize(31);
    for (std::uint32_t i = 0; i < 31; ++i) t.shifts[i] = i;
    const auto family = jcr::shifted_family(f, t);
    std::set<std::vector<std::uint32_t>> seen;
    for (const auto& g : family) seen.insert(g.phase_index);
    CHECK(seen.size() == 31);
  }
}

TEST_CASE("design input validation") {
  CHECK_THROWS_AS(jcr::gs_design({}, 4, 100), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::gs_design({0.5, -0.1}, 4, 100), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::gs_design({1.0}, 0, 100), jcr::invalid_input);
  CHECK_THROWS_AS(jcr::gs_design({1.0}, 4, 0), jcr::invalid_input);
}
