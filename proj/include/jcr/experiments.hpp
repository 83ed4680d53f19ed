#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "jcr/beamformer.hpp"
#include "jcr/errors.hpp"
#include "jcr/recovery.hpp"
#include "jcr/rng.hpp"
#include "jcr/scene.hpp"
#include "jcr/spectral.hpp"
#include "jcr/tradeoff.hpp"
#include "jcr/trajectory.hpp"

namespace jcr {

inline constexpr char kVersion[] = "0.1.0";

/**
 * Resolved settings for one experiment run. Scalar keys share names with the
 * config-file syntax; the short aliases M, N, K map onto frames, antennas,
 * targets. List keys take comma-separated values and fall back to
 * per-experiment defaults when absent.
 */
struct ExperimentConfig {
  std::string experiment;
  std::uint32_t frames = 31;    // M
  std::uint32_t antennas = 31;  // N
  std::uint32_t targets = 3;    // K
  double snr_db = 20.0;
  std::string snr_kind = "net";  // net | raw
  std::uint32_t rho = 2;
  double delta = 0.5;
  std::uint32_t trials = 500;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  std::uint32_t bits = 4;
  std::uint32_t gs_iterations = 100;
  std::uint32_t block_len = 512;
  double cpi_s = 5e-3;
  double bandwidth_hz = 1.76e9;
  double t_ifs_s = 0.0;
  std::uint32_t p_max = 53;
  double comm_snr_db = 20.0;
  double wc = 0.5;
  double active_fraction = 0.5;
  std::uint32_t support_draws = 50;
  std::uint32_t min_separation = 0;
  std::vector<double> snr_db_list;
  std::vector<std::uint32_t> k_list;
  std::vector<std::uint32_t> rho_list;
  std::vector<double> delta_list;
  std::vector<double> wc_list;
  std::set<std::string> explicit_keys;

  bool is_set(const std::string& key) const { return explicit_keys.count(key) != 0; }
};

inline const std::vector<std::pair<std::string, std::string>>& experiment_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"psf", "point spread and coherence of the deterministic shift trajectory"},
      {"nmse-vs-snr", "recovery error versus net sensing SNR, Monte Carlo and closed form"},
      {"nmse-vs-k", "recovery error versus target count at fixed SNR"},
      {"compare-trajectories",
       "deterministic vs random shifts vs antenna-subset switching baseline"},
      {"compare-rs", "deterministic shifts vs the antenna-subset switching baseline"},
      {"pareto-sweep", "sensing/communication tradeoff surface with its frontier"},
      {"weights-sweep", "frontier operating point as the objective weight sweeps 0 to 1"},
  };
  return catalog;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

inline double parse_double_value(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw config_error(key + ": empty value");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) throw config_error(key + ": not a number: " + value);
  return x;
}

inline std::uint64_t parse_uint_value(const std::string& key, const std::string& value,
                                      std::uint64_t max_allowed) {
  const std::string v = trim(value);
  if (v.empty() || v[0] == '-') throw config_error(key + ": must be a non-negative integer");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) throw config_error(key + ": not an integer: " + value);
  if (x > max_allowed) throw config_error(key + ": value too large");
  return x;
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : value) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& part : split_list(value)) out.push_back(parse_double_value(key, part));
  return out;
}

inline std::vector<std::uint32_t> parse_uint_list(const std::string& key,
                                                  const std::string& value) {
  std::vector<std::uint32_t> out;
  for (const auto& part : split_list(value))
    out.push_back(static_cast<std::uint32_t>(parse_uint_value(key, part, 0xffffffffu)));
  return out;
}

inline std::string format_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string format_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_g(v[i]);
  }
  return out;
}

inline std::string format_uint_list(const std::vector<std::uint32_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

/// Apply one key=value setting (config file line or --key value override).
inline void apply_setting(ExperimentConfig& cfg, const std::string& raw_key,
                          const std::string& value) {
  std::string key = detail::trim(raw_key);
  if (key == "M") key = "frames";
  if (key == "N") key = "antennas";
  if (key == "K") key = "targets";
  const auto as_u32 = [&](std::uint64_t max_allowed) {
    return static_cast<std::uint32_t>(detail::parse_uint_value(key, value, max_allowed));
  };
  if (key == "experiment") {
    cfg.experiment = detail::trim(value);
  } else if (key == "frames") {
    cfg.frames = as_u32(1u << 20);
  } else if (key == "antennas") {
    cfg.antennas = as_u32(1u << 20);
  } else if (key == "targets") {
    cfg.targets = as_u32(1u << 20);
  } else if (key == "snr_db") {
    cfg.snr_db = detail::parse_double_value(key, value);
  } else if (key == "snr_kind") {
    cfg.snr_kind = detail::trim(value);
  } else if (key == "rho") {
    cfg.rho = as_u32(1u << 20);
  } else if (key == "delta") {
    cfg.delta = detail::parse_double_value(key, value);
  } else if (key == "trials") {
    cfg.trials = as_u32(1u << 24);
  } else if (key == "seed") {
    cfg.seed = detail::parse_uint_value(key, value, ~std::uint64_t(0));
  } else if (key == "output_dir") {
    cfg.output_dir = detail::trim(value);
  } else if (key == "bits") {
    cfg.bits = as_u32(16);
  } else if (key == "gs_iterations") {
    cfg.gs_iterations = as_u32(1u << 20);
  } else if (key == "block_len") {
    cfg.block_len = as_u32(1u << 24);
  } else if (key == "cpi_s") {
    cfg.cpi_s = detail::parse_double_value(key, value);
  } else if (key == "bandwidth_hz") {
    cfg.bandwidth_hz = detail::parse_double_value(key, value);
  } else if (key == "t_ifs_s") {
    cfg.t_ifs_s = detail::parse_double_value(key, value);
  } else if (key == "p_max") {
    cfg.p_max = as_u32(1u << 20);
  } else if (key == "comm_snr_db") {
    cfg.comm_snr_db = detail::parse_double_value(key, value);
  } else if (key == "wc") {
    cfg.wc = detail::parse_double_value(key, value);
  } else if (key == "active_fraction") {
    cfg.active_fraction = detail::parse_double_value(key, value);
  } else if (key == "support_draws") {
    cfg.support_draws = as_u32(1u << 20);
  } else if (key == "min_separation") {
    cfg.min_separation = as_u32(1u << 20);
  } else if (key == "snr_db_list") {
    cfg.snr_db_list = detail::parse_double_list(key, value);
  } else if (key == "k_list") {
    cfg.k_list = detail::parse_uint_list(key, value);
  } else if (key == "rho_list") {
    cfg.rho_list = detail::parse_uint_list(key, value);
  } else if (key == "delta_list") {
    cfg.delta_list = detail::parse_double_list(key, value);
  } else if (key == "wc_list") {
    cfg.wc_list = detail::parse_double_list(key, value);
  } else {
    throw config_error("unknown setting: " + key);
  }
  cfg.explicit_keys.insert(key);
}

/// Parse config text: one key=value per line, '#' starts a comment.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line =
        text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line_no) + ": expected key=value");
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

/// Full cross-key validation; throws config_error with a actionable message.
inline void validate_config(const ExperimentConfig& cfg) {
  const auto& catalog = experiment_catalog();
  bool known = false;
  for (const auto& [name, desc] : catalog) known = known || name == cfg.experiment;
  if (!known) {
    std::string names;
    for (const auto& [name, desc] : catalog) names += (names.empty() ? "" : ", ") + name;
    throw config_error("experiment must be one of: " + names +
                       (cfg.experiment.empty() ? " (none given)" : " (got " + cfg.experiment + ")"));
  }
  if (cfg.antennas != cfg.frames)
    throw config_error("antennas (N) must equal frames (M): the shift trajectory works on a "
                       "square grid");
  if (cfg.frames < 2) throw config_error("frames must be >= 2");
  if (!detail::is_prime(cfg.frames))
    throw config_error("frames must be prime for the deterministic trajectory (got " +
                       std::to_string(cfg.frames) + ")");
  if (cfg.targets < 1 || cfg.targets > cfg.frames)
    throw config_error("targets must lie in [1, frames]");
  if (cfg.snr_kind != "net" && cfg.snr_kind != "raw")
    throw config_error("snr_kind must be 'net' or 'raw'");
  if (cfg.rho < 1 || cfg.rho > cfg.p_max) throw config_error("rho must lie in [1, p_max]");
  if (cfg.trials < 1) throw config_error("trials must be >= 1");
  if (cfg.bits < 1 || cfg.bits > 16) throw config_error("bits must lie in [1, 16]");
  if (cfg.gs_iterations < 1) throw config_error("gs_iterations must be >= 1");
  if (cfg.block_len < 1) throw config_error("block_len must be >= 1");
  if (!(cfg.cpi_s > 0.0) || !(cfg.bandwidth_hz > 0.0))
    throw config_error("cpi_s and bandwidth_hz must be positive");
  if (cfg.t_ifs_s < 0.0) throw config_error("t_ifs_s must be >= 0");
  if (cfg.p_max < 1) throw config_error("p_max must be >= 1");
  if (!(cfg.wc >= 0.0) || cfg.wc > 1.0) throw config_error("wc must lie in [0, 1]");
  if (!(cfg.active_fraction > 0.0) || cfg.active_fraction > 1.0)
    throw config_error("active_fraction must lie in (0, 1]");
  if (cfg.support_draws < 1) throw config_error("support_draws must be >= 1");
  if (cfg.output_dir.empty()) throw config_error("output_dir must not be empty");

  const double lo = 1.0 / static_cast<double>(cfg.antennas);
  if (cfg.delta < lo - 1e-12 || cfg.delta >= 1.0)
    throw config_error("delta must lie in [1/antennas, 1)");
  for (const double d : cfg.delta_list)
    if (d < lo - 1e-12 || d >= 1.0) throw config_error("delta_list values must lie in [1/antennas, 1)");
  for (const std::uint32_t k : cfg.k_list)
    if (k < 1 || k > cfg.frames) throw config_error("k_list values must lie in [1, frames]");
  for (const std::uint32_t r : cfg.rho_list)
    if (r < 1 || r > cfg.p_max) throw config_error("rho_list values must lie in [1, p_max]");
  for (const double w : cfg.wc_list)
    if (!(w >= 0.0) || w > 1.0) throw config_error("wc_list values must lie in [0, 1]");

  if (cfg.experiment == "pareto-sweep" || cfg.experiment == "weights-sweep") {
    try {
      make_waveform_budget(cfg.frames, cfg.block_len, 1.0 / cfg.bandwidth_hz, cfg.t_ifs_s,
                           cfg.cpi_s, cfg.p_max);
    } catch (const invalid_input& e) {
      throw config_error(std::string("timing budget: ") + e.what());
    }
  }
}

namespace detail {

inline unsigned resolved_worker_count() {
  if (const char* env = std::getenv("JCR_WORKERS")) {
    const std::string v = trim(env);
    char* end = nullptr;
    const unsigned long x = std::strtoul(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || x < 1 || x > 256)
      throw config_error("JCR_WORKERS must be an integer in [1, 256]");
    return static_cast<unsigned>(x);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : std::min(hw, 16u);
}

/// Run fn(0..count-1), possibly across threads. Results must go into
/// preallocated per-index slots so the outcome is independent of scheduling;
/// the first exception thrown by any index is rethrown here.
template <typename Fn>
inline void parallel_trials(std::uint32_t count, Fn&& fn) {
  const unsigned workers =
      std::min<unsigned>(resolved_worker_count(), std::max<std::uint32_t>(count, 1));
  if (workers <= 1 || count <= 1) {
    for (std::uint32_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint32_t> next{0};
  std::mutex err_lock;
  std::exception_ptr first_error;
  const auto body = [&]() {
    while (true) {
      const std::uint32_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> hold(err_lock);
        if (first_error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> hold(err_lock);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::string write_text_file(const std::filesystem::path& dir, const std::string& name,
                                   const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory: " + dir.string());
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write output file: " + path.string());
  out << content;
  out.close();
  if (!out) throw config_error("failed writing output file: " + path.string());
  return path.string();
}

/// Config echo used for provenance; excludes output_dir so reruns into
/// different directories stay byte-identical, and never records worker count.
inline std::string manifest_text(const ExperimentConfig& cfg) {
  std::string m;
  m += "experiment=" + cfg.experiment + "\n";
  m += "frames=" + std::to_string(cfg.frames) + "\n";
  m += "antennas=" + std::to_string(cfg.antennas) + "\n";
  m += "targets=" + std::to_string(cfg.targets) + "\n";
  m += "snr_db=" + format_g(cfg.snr_db) + "\n";
  m += "snr_kind=" + cfg.snr_kind + "\n";
  m += "rho=" + std::to_string(cfg.rho) + "\n";
  m += "delta=" + format_g(cfg.delta) + "\n";
  m += "trials=" + std::to_string(cfg.trials) + "\n";
  m += "seed=" + std::to_string(cfg.seed) + "\n";
  m += "bits=" + std::to_string(cfg.bits) + "\n";
  m += "gs_iterations=" + std::to_string(cfg.gs_iterations) + "\n";
  m += "block_len=" + std::to_string(cfg.block_len) + "\n";
  m += "cpi_s=" + format_g(cfg.cpi_s) + "\n";
  m += "bandwidth_hz=" + format_g(cfg.bandwidth_hz) + "\n";
  m += "t_ifs_s=" + format_g(cfg.t_ifs_s) + "\n";
  m += "p_max=" + std::to_string(cfg.p_max) + "\n";
  m += "comm_snr_db=" + format_g(cfg.comm_snr_db) + "\n";
  m += "wc=" + format_g(cfg.wc) + "\n";
  m += "active_fraction=" + format_g(cfg.active_fraction) + "\n";
  m += "support_draws=" + std::to_string(cfg.support_draws) + "\n";
  m += "min_separation=" + std::to_string(cfg.min_separation) + "\n";
  m += "snr_db_list=" + format_double_list(cfg.snr_db_list) + "\n";
  m += "k_list=" + format_uint_list(cfg.k_list) + "\n";
  m += "rho_list=" + format_uint_list(cfg.rho_list) + "\n";
  m += "delta_list=" + format_double_list(cfg.delta_list) + "\n";
  m += "wc_list=" + format_double_list(cfg.wc_list) + "\n";
  m += std::string("version=") + kVersion + "\n";
  return m;
}

/// SnrModel at a given dB level under the config's interpretation (net sensing
/// SNR after all gains, or the raw pre-processing SNR).
inline SnrModel resolve_snr(const ExperimentConfig& cfg, double snr_db, double delta) {
  const double lin = decibel_to_linear(snr_db);
  if (cfg.snr_kind == "net")
    return snr_model_from_net(lin, cfg.rho, cfg.block_len, delta, cfg.antennas);
  return make_snr_model(lin, cfg.rho, cfg.block_len, delta, cfg.antennas);
}

/// Idealized flat-profile gain mask (the design magnitudes, not a realized
/// quantized beam); used where only the closed-form error level is needed.
inline GainMask profile_mask(double delta, std::uint32_t antennas) {
  const auto profile = target_magnitude_profile(delta, antennas);
  GainMask mask;
  mask.split = delta;
  mask.diagonal.reserve(profile.size());
  for (const double g : profile) mask.diagonal.emplace_back(g, 0.0);
  return mask;
}

struct TrialOutcome {
  double mc_err = 0.0;
  double analytic = 0.0;
  bool exact_support = false;
};

enum class Scheme { occs, rccs, rs };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::occs: return "occs";
    case Scheme::rccs: return "rccs";
    default: return "rs";
  }
}

/// One Monte Carlo trial of the circulant-shift pipeline (deterministic or
/// random shifts) at target count k. stream tags the sweep point so parallel
/// trials draw independent, scheduling-invariant randomness.
inline TrialOutcome structured_trial(const ExperimentConfig& cfg, Scheme scheme,
                                     const SnrModel& snr, const Beamformer& beam,
                                     std::uint32_t k, std::uint64_t stream,
                                     std::uint32_t trial) {
  const Trajectory traj =
      scheme == Scheme::occs
          ? optimized_trajectory(cfg.frames)
          : random_trajectory(cfg.frames, cfg.antennas,
                              Rng::derive(cfg.seed, stream + 1, trial));
  const TargetScene scene = random_scene(k, cfg.frames, cfg.antennas,
                                         Rng::derive(cfg.seed, stream + 2, trial),
                                         cfg.min_separation);
  const MeasurementSet meas =
      synthesize(scene, beam, traj, snr, Rng::derive(cfg.seed, stream + 3, trial));
  const ChannelEstimate est = omp_recover(meas, {k, 0.0});

  TrialOutcome out;
  const ComplexGrid truth = assemble_channel(scene);
  out.mc_err = nmse(truth, est, k);

  std::set<std::pair<std::uint32_t, std::uint32_t>> truth_bins, found;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> support;
  for (const auto& t : scene.targets) {
    truth_bins.emplace(t.doppler_bin, t.angle_bin);
    support.emplace_back(t.doppler_bin, t.angle_bin);
  }
  for (const auto& b : est.support.bins) found.insert(b);
  out.exact_support = truth_bins == found;
  out.analytic =
      nmse_analytic(support, traj, profile_mask(snr.split, cfg.antennas), snr.zeta_net(), k);
  return out;
}

/// One Monte Carlo trial of the antenna-subset switching baseline: explicit
/// dictionary, dense pursuit, direct channel estimate (no unmasking).
inline TrialOutcome switched_trial(const ExperimentConfig& cfg, const SnrModel& snr,
                                   std::uint32_t k, std::uint64_t stream,
                                   std::uint32_t trial) {
  const auto precoders =
      rs_baseline_precoders(cfg.frames, cfg.antennas, cfg.active_fraction,
                            Rng::derive(cfg.seed, stream + 1, trial));
  const auto dict = switched_dictionary(precoders);
  const TargetScene scene = random_scene(k, cfg.frames, cfg.antennas,
                                         Rng::derive(cfg.seed, stream + 2, trial),
                                         cfg.min_separation);
  const ComplexGrid truth = assemble_channel(scene);

  const std::size_t m_count = cfg.frames, n_count = cfg.antennas;
  const auto noise =
      draw_noise(m_count, snr.noise_variance(), Rng::derive(cfg.seed, stream + 3, trial));
  // Power-fair synthesis: per-measurement target amplitude is the precoder's
  // beam gain times the channel gain, matching the structured chain where the
  // amplitude is the beam's DFT gain times the channel gain. With the
  // dictionary atoms U_M(m,p)*G_m(q), that makes the atom coefficient
  // sqrt(M)*h = truth/sqrt(N).
  const double atom_scale = std::sqrt(static_cast<double>(n_count));
  std::vector<cplx> y(m_count, cplx(0.0, 0.0));
  for (const auto& t : scene.targets) {
    const std::size_t j = static_cast<std::size_t>(t.angle_bin) * m_count + t.doppler_bin;
    const cplx beta = truth.at(t.doppler_bin, t.angle_bin) / atom_scale;
    for (std::size_t m = 0; m < m_count; ++m) y[m] += dict[j][m] * beta;
  }
  for (std::size_t m = 0; m < m_count; ++m) y[m] += noise[m];

  const DenseRecovery rec = omp_recover_dense(dict, y, {k, 0.0});

  TrialOutcome out;
  ComplexGrid estimate(m_count, n_count);
  std::set<std::pair<std::uint32_t, std::uint32_t>> truth_bins, found;
  for (const auto& t : scene.targets) truth_bins.emplace(t.doppler_bin, t.angle_bin);
  for (std::size_t i = 0; i < rec.support.size(); ++i) {
    const std::uint32_t p = static_cast<std::uint32_t>(rec.support[i] % m_count);
    const std::uint32_t q = static_cast<std::uint32_t>(rec.support[i] / m_count);
    estimate.at(p, q) = rec.coefficients[i] * atom_scale;
    found.emplace(p, q);
  }
  out.mc_err = nmse(truth, estimate, k);
  out.exact_support = truth_bins == found;
  out.analytic = 0.0;  // no closed form tracked for the baseline
  return out;
}

struct SweepRow {
  double mc_mean = 0.0;
  double analytic_mean = 0.0;
  double exact_rate = 0.0;
};

template <typename TrialFn>
inline SweepRow reduce_trials(std::uint32_t trials, TrialFn&& fn) {
  std::vector<TrialOutcome> slots(trials);
  parallel_trials(trials, [&](std::uint32_t i) { slots[i] = fn(i); });
  SweepRow row;
  for (const auto& s : slots) {  // fixed index order: worker-count independent
    row.mc_mean += s.mc_err;
    row.analytic_mean += s.analytic;
    row.exact_rate += s.exact_support ? 1.0 : 0.0;
  }
  row.mc_mean /= trials;
  row.analytic_mean /= trials;
  row.exact_rate /= trials;
  return row;
}

inline double safe_db(double x) { return linear_to_decibel(std::max(x, 1e-300)); }

}  // namespace detail

/// Names of the files a successful run writes into output_dir (manifest last).
inline std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::vector<std::string> written;

  const auto default_snr_list = [&]() -> std::vector<double> {
    if (cfg.is_set("snr_db_list") && !cfg.snr_db_list.empty()) return cfg.snr_db_list;
    if (cfg.experiment == "nmse-vs-snr") {
      std::vector<double> v;
      for (int db = -10; db <= 30; db += 5) v.push_back(db);
      return v;
    }
    return {20.0, 30.0};
  };
  const auto default_k_list = [&]() -> std::vector<std::uint32_t> {
    if (cfg.is_set("k_list") && !cfg.k_list.empty()) return cfg.k_list;
    if (cfg.experiment == "nmse-vs-k") {
      std::vector<std::uint32_t> v;
      for (std::uint32_t k = 1; k <= std::min(6u, cfg.frames); ++k) v.push_back(k);
      return v;
    }
    return {2u, 3u};
  };

  if (cfg.experiment == "psf") {
    const Trajectory traj = optimized_trajectory(cfg.frames);
    const SamplingAnalysis analysis = analyze(traj);
    std::string grid = "row,col,abs\n";
    for (std::size_t r = 0; r < analysis.psf.rows(); ++r)
      for (std::size_t c = 0; c < analysis.psf.cols(); ++c)
        grid += std::to_string(r) + "," + std::to_string(c) + "," +
                detail::format_g(std::abs(analysis.psf.at(r, c))) + "\n";
    written.push_back(detail::write_text_file(dir, "psf_grid.csv", grid));

    std::string summary = "coherence,max_targets,frames,antennas\n";
    summary += detail::format_g(analysis.coherence) + "," +
               std::to_string(max_recoverable_targets(cfg.antennas)) + "," +
               std::to_string(cfg.frames) + "," + std::to_string(cfg.antennas) + "\n";
    written.push_back(detail::write_text_file(dir, "psf_summary.csv", summary));

    std::string shifts = "m,shift\n";
    for (std::size_t m = 0; m < traj.shifts.size(); ++m)
      shifts += std::to_string(m) + "," + std::to_string(traj.shifts[m]) + "\n";
    written.push_back(detail::write_text_file(dir, "trajectory.csv", shifts));
  } else if (cfg.experiment == "nmse-vs-snr" || cfg.experiment == "nmse-vs-k") {
    const GsDesign design =
        gs_design(target_magnitude_profile(cfg.delta, cfg.antennas), cfg.bits,
                  cfg.gs_iterations);
    const bool vs_snr = cfg.experiment == "nmse-vs-snr";
    const auto snrs = vs_snr ? default_snr_list() : std::vector<double>{cfg.snr_db};
    const auto ks = vs_snr ? std::vector<std::uint32_t>{cfg.targets} : default_k_list();

    std::string csv = vs_snr ? "snr_db,analytic_db,mc_db,exact_rate,trials\n"
                             : "k,analytic_db,mc_db,exact_rate,trials\n";
    std::uint64_t point = 0;
    for (const double snr_db : snrs)
      for (const std::uint32_t k : ks) {
        const SnrModel snr = detail::resolve_snr(cfg, snr_db, cfg.delta);
        const std::uint64_t stream = 16 + point * 8;
        const auto row = detail::reduce_trials(cfg.trials, [&](std::uint32_t t) {
          return detail::structured_trial(cfg, detail::Scheme::occs, snr, design.beamformer,
                                          k, stream, t);
        });
        csv += (vs_snr ? detail::format_g(snr_db) : std::to_string(k)) + "," +
               detail::format_g(detail::safe_db(row.analytic_mean)) + "," +
               detail::format_g(detail::safe_db(row.mc_mean)) + "," +
               detail::format_g(row.exact_rate) + "," + std::to_string(cfg.trials) + "\n";
        ++point;
      }
    written.push_back(detail::write_text_file(
        dir, vs_snr ? "nmse_vs_snr.csv" : "nmse_vs_k.csv", csv));
  } else if (cfg.experiment == "compare-trajectories" || cfg.experiment == "compare-rs") {
    const GsDesign design =
        gs_design(target_magnitude_profile(cfg.delta, cfg.antennas), cfg.bits,
                  cfg.gs_iterations);
    const std::vector<detail::Scheme> schemes =
        cfg.experiment == "compare-rs"
            ? std::vector<detail::Scheme>{detail::Scheme::occs, detail::Scheme::rs}
            : std::vector<detail::Scheme>{detail::Scheme::occs, detail::Scheme::rccs,
                                          detail::Scheme::rs};
    std::string csv = "scheme,snr_db,k,mc_db,exact_rate,trials\n";
    std::uint64_t point = 0;
    for (const detail::Scheme scheme : schemes)
      for (const double snr_db : default_snr_list())
        for (const std::uint32_t k : default_k_list()) {
          const SnrModel snr = detail::resolve_snr(cfg, snr_db, cfg.delta);
          const std::uint64_t stream = 4096 + point * 8;
          const auto row = detail::reduce_trials(cfg.trials, [&](std::uint32_t t) {
            return scheme == detail::Scheme::rs
                       ? detail::switched_trial(cfg, snr, k, stream, t)
                       : detail::structured_trial(cfg, scheme, snr, design.beamformer, k,
                                                  stream, t);
          });
          csv += std::string(detail::scheme_name(scheme)) + "," + detail::format_g(snr_db) +
                 "," + std::to_string(k) + "," + detail::format_g(detail::safe_db(row.mc_mean)) +
                 "," + detail::format_g(row.exact_rate) + "," + std::to_string(cfg.trials) +
                 "\n";
          ++point;
        }
    written.push_back(detail::write_text_file(
        dir, cfg.experiment == "compare-rs" ? "compare_rs.csv" : "compare_trajectories.csv",
        csv));
  } else {  // pareto-sweep, weights-sweep
    const Trajectory traj = optimized_trajectory(cfg.frames);
    const GainMask flat = detail::profile_mask(cfg.delta, cfg.antennas);

    // per-support trace of the inverse Gram; depends only on support and
    // trajectory, so it is computed once and scaled across the lattice
    std::vector<double> traces(cfg.support_draws);
    detail::parallel_trials(cfg.support_draws, [&](std::uint32_t i) {
      const TargetScene scene = random_scene(cfg.targets, cfg.frames, cfg.antennas,
                                             Rng::derive(cfg.seed, 7, i), cfg.min_separation);
      std::vector<std::pair<std::uint32_t, std::uint32_t>> support;
      for (const auto& t : scene.targets) support.emplace_back(t.doppler_bin, t.angle_bin);
      traces[i] = nmse_analytic(support, traj, flat, 1.0, 1);  // = trace of the inverse Gram
    });
    double mean_trace = 0.0;
    for (const double t : traces) mean_trace += t;
    mean_trace /= cfg.support_draws;

    const WaveformBudget budget =
        make_waveform_budget(cfg.frames, cfg.block_len, 1.0 / cfg.bandwidth_hz, cfg.t_ifs_s,
                             cfg.cpi_s, cfg.p_max);
    const double zeta_c = decibel_to_linear(cfg.comm_snr_db);

    // raw link SNR for the sensing chain: either directly configured or
    // back-solved from the net value at the configured reference point
    const double zeta_raw =
        cfg.snr_kind == "raw"
            ? decibel_to_linear(cfg.snr_db)
            : detail::resolve_snr(cfg, cfg.snr_db, cfg.delta).zeta;

    std::vector<std::uint32_t> rhos = cfg.rho_list;
    if (rhos.empty())
      for (std::uint32_t r = 1; r <= cfg.p_max; r += 2) rhos.push_back(r);
    std::vector<double> deltas = cfg.delta_list;
    if (deltas.empty()) {
      for (int i = 1; i <= 19; ++i) deltas.push_back(0.05 * i);
      deltas.push_back(0.99);
    }

    const double k_scale = mean_trace / static_cast<double>(cfg.targets);
    const auto sensing = [&](std::uint32_t rho, double delta) {
      const double delta_r = (1.0 - delta) / static_cast<double>(cfg.antennas - 1);
      const double zeta_net = static_cast<double>(cfg.antennas) * delta_r * zeta_raw *
                              static_cast<double>(rho) * cfg.block_len;
      return k_scale / zeta_net;
    };
    const auto pts = build_region(budget, zeta_c, rhos, deltas, sensing);
    const auto front = pareto_frontier(pts);

    if (cfg.experiment == "pareto-sweep") {
      std::vector<int> on_front(pts.size(), 0), vertex(pts.size(), 0);
      for (const auto& e : front) {
        on_front[e.index] = 1;
        vertex[e.index] = e.vertex ? 1 : 0;
      }
      const std::size_t chosen = weighted_optimum(pts, front, cfg.wc);
      std::string csv = "rho,delta,nmse_db,dmse_log2,on_front,vertex,chosen\n";
      for (std::size_t i = 0; i < pts.size(); ++i)
        csv += std::to_string(pts[i].rho) + "," + detail::format_g(pts[i].delta) + "," +
               detail::format_g(10.0 * pts[i].log_nmse) + "," +
               detail::format_g(pts[i].log_dmse) + "," + std::to_string(on_front[i]) + "," +
               std::to_string(vertex[i]) + "," + (i == chosen ? "1" : "0") + "\n";
      written.push_back(detail::write_text_file(dir, "pareto_region.csv", csv));

      std::string choice = "wc,rho,delta,nmse_db,dmse_log2\n";
      choice += detail::format_g(cfg.wc) + "," + std::to_string(pts[chosen].rho) + "," +
                detail::format_g(pts[chosen].delta) + "," +
                detail::format_g(10.0 * pts[chosen].log_nmse) + "," +
                detail::format_g(pts[chosen].log_dmse) + "\n";
      written.push_back(detail::write_text_file(dir, "pareto_choice.csv", choice));
    } else {
      std::vector<double> weights = cfg.wc_list;
      if (weights.empty())
        for (int i = 0; i <= 20; ++i) weights.push_back(0.05 * i);
      std::string csv = "wc,rho,delta,nmse_db,dmse_log2\n";
      for (const double w : weights) {
        const std::size_t chosen = weighted_optimum(pts, front, w);
        csv += detail::format_g(w) + "," + std::to_string(pts[chosen].rho) + "," +
               detail::format_g(pts[chosen].delta) + "," +
               detail::format_g(10.0 * pts[chosen].log_nmse) + "," +
               detail::format_g(pts[chosen].log_dmse) + "\n";
      }
      written.push_back(detail::write_text_file(dir, "weights_sweep.csv", csv));
    }
  }

  written.push_back(detail::write_text_file(dir, "manifest.txt", detail::manifest_text(cfg)));
  return written;
}

}  // namespace jcr
