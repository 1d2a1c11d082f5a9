#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgm/cocycle.hpp"
#include "cgm/environment.hpp"
#include "cgm/exec.hpp"
#include "cgm/lpp.hpp"
#include "cgm/percolation.hpp"
#include "cgm/queue.hpp"
#include "cgm/shape.hpp"
#include "cgm/stats.hpp"
#include "cgm/weights.hpp"

// Experiment configuration, deterministic replicate execution, and result
// output. One experiment = one config = one bundle; replicate r always draws
// from the stream derive(seed, r), so bundles are a pure function of the
// config, independent of worker count and completion order.
namespace cgm::harness {

using json = nlohmann::json;

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "shape",           "legendre",   "duality", "stationary-lpp", "busemann",
      "queue-fixpoint",  "queue-geometric", "percolation-cone", "ergodic"};
  return names;
}

// --------------------------------------------------------------------------
// Family <-> JSON

inline WeightFamily family_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("family: expected an object with a string 'kind'");
  const std::string kind = j.at("kind");
  try {
    if (kind == "exponential") return WeightFamily::exponential(j.value("mean", 1.0));
    if (kind == "geometric") return WeightFamily::geometric(j.value("mean", 2.0));
    if (kind == "bernoulli_capped")
      return WeightFamily::bernoulli_capped(j.value("p1", 0.9), j.value("lo", 0.0));
    if (kind == "empirical") {
      if (!j.contains("samples")) throw ConfigError("family.samples: required for empirical");
      return WeightFamily::empirical(j.at("samples").get<std::vector<double>>());
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("family: ") + e.what());
  }
  throw ConfigError("family.kind: unknown kind '" + kind + "'");
}

inline json family_to_json(const WeightFamily& f) {
  json j;
  j["kind"] = family_name(f.kind);
  switch (f.kind) {
    case FamilyKind::exponential:
    case FamilyKind::geometric: j["mean"] = f.mean; break;
    case FamilyKind::bernoulli_capped:
      j["p1"] = f.p1;
      j["lo"] = f.lo;
      break;
    case FamilyKind::empirical: j["samples"] = f.samples; break;
  }
  return j;
}

// --------------------------------------------------------------------------
// Config

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";
};

struct ExperimentConfig {
  std::string experiment;
  WeightFamily family;
  std::uint64_t seed = 1;
  int workers = 1;
  json params;  // experiment-specific, defaults filled in
  OutputSpec output;
  json canonical;  // full echo with defaults, hashed and embedded in outputs
};

namespace detail {

inline json default_params(const std::string& experiment) {
  if (experiment == "shape")
    return {{"s_grid", {0.25, 0.5, 1.0, 2.0, 4.0}}, {"n", 400}, {"replicates", 100},
            {"band_lo", 0.93}, {"max_area", 4.0e9}};
  if (experiment == "legendre")
    return {{"alpha_points", 50}, {"alpha_span", 10.0}, {"s_points", 25}, {"s_max", 6.0}};
  if (experiment == "duality")
    return {{"xi_points", 9}, {"t_grid", {-1.0, 0.0, 1.0}}};
  if (experiment == "stationary-lpp")
    return {{"xi", {0.5, 0.5}}, {"side", 150}, {"replicates", 24}};
  if (experiment == "busemann")
    return {{"xi_list", {0.3, 0.5, 0.7}}, {"n_list", {100, 200, 300}}, {"replicates", 100}};
  if (experiment == "queue-fixpoint")
    return {{"arrival", {{"kind", "constant"}, {"alpha", 2.0}}}, {"customers", 3000},
            {"stations", 30}, {"seeds", 50}, {"cesaro", false}, {"k_early", 2}, {"k_late", 25}};
  if (experiment == "queue-geometric")
    return {{"alpha", 4.0}, {"customers", 100000}};
  if (experiment == "percolation-cone")
    return {{"n", 500}, {"N", 500}, {"replicates", 50}, {"psi_step", 25},
            {"directions", {{0.5, 0.5}, {0.75, 0.25}, {0.95, 0.05}}}, {"fan_replicates", 30},
            {"fan_n", 250}};
  if (experiment == "ergodic")
    return {{"xi", {0.5, 0.5}}, {"n_lo", 50}, {"n_hi", 400}, {"seeds", 50}};
  return json::object();
}

inline void require_positive_int(const json& p, const char* key) {
  if (!p.at(key).is_number_integer() || p.at(key).get<std::int64_t>() < 1)
    throw ConfigError(std::string("params.") + key + ": expected a positive integer");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw ConfigError("experiment: required string field");
  cfg.experiment = j.at("experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("experiment: unknown experiment '" + cfg.experiment + "'");

  if (!j.contains("family")) throw ConfigError("family: required field");
  cfg.family = family_from_json(j.at("family"));

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw ConfigError("seed: expected an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("workers")) {
    if (!j.at("workers").is_number_integer() || j.at("workers").get<int>() < 1)
      throw ConfigError("workers: expected a positive integer");
    cfg.workers = j.at("workers").get<int>();
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    cfg.output.dir = o.value("dir", cfg.output.dir);
    cfg.output.format = o.value("format", cfg.output.format);
    if (cfg.output.format != "csv" && cfg.output.format != "json")
      throw ConfigError("output.format: must be 'csv' or 'json'");
  }

  cfg.params = detail::default_params(cfg.experiment);
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("params: expected an object");
    for (const auto& [k, v] : j.at("params").items()) {
      if (!cfg.params.contains(k))
        throw ConfigError("params." + k + ": unknown parameter for experiment '" +
                          cfg.experiment + "'");
      cfg.params[k] = v;
    }
  }

  cfg.canonical = {{"experiment", cfg.experiment},
                   {"family", family_to_json(cfg.family)},
                   {"seed", cfg.seed},
                   {"workers", cfg.workers},
                   {"params", cfg.params},
                   {"output", {{"dir", cfg.output.dir}, {"format", cfg.output.format}}}};
  return cfg;
}

inline std::string config_hash(const json& canonical) {
  // hash only the fields that determine the records; workers and output
  // location are plumbing
  json key = canonical;
  key.erase("workers");
  key.erase("output");
  const std::string s = key.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// --------------------------------------------------------------------------
// Results

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
};

struct AuxTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultBundle {
  std::string config_hash;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<AuxTable> aux;  // secondary record tables, own CSV files
  std::vector<Verdict> verdicts;
  json summary;
  double wall_seconds = 0;

  bool all_pass() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }
};

namespace detail {

inline void add_verdict(ResultBundle& b, const std::string& name, bool pass, double value,
                        double threshold, const std::string& detail = "") {
  b.verdicts.push_back({name, pass, value, threshold, detail});
}

// ---------------------------- experiments ---------------------------------

inline void run_shape(const ExperimentConfig& cfg, ResultBundle& b) {
  const auto s_grid = cfg.params.at("s_grid").get<std::vector<double>>();
  const int n = cfg.params.at("n").get<int>();
  const int reps = cfg.params.at("replicates").get<int>();
  const double band_lo = cfg.params.at("band_lo").get<double>();
  const ShapeCurve curve = estimate_gamma_mc(cfg.family, s_grid, n, reps, cfg.seed,
                                             cfg.params.at("max_area").get<double>(), cfg.workers);
  b.columns = {"s", "gamma", "ci_lo", "ci_hi", "n", "replicates"};
  for (const auto& p : curve.points)
    b.rows.push_back({p.s, p.gamma_hat, p.gamma_hat - p.ci_half, p.gamma_hat + p.ci_half,
                      double(p.n), double(p.replicates)});
  if (cfg.family.solvable()) {
    const SolvableModel mo = solvable_model(cfg.family);
    for (const auto& p : curve.points) {
      const double limit = gamma_curve(mo, p.s);
      const bool ok = p.gamma_hat >= band_lo * limit && p.gamma_hat <= limit + 3 * p.ci_half;
      add_verdict(b, "gamma_band_s=" + std::to_string(p.s), ok, p.gamma_hat, limit,
                  "estimate within [band_lo*limit, limit + 3ci]");
    }
  }
  b.summary["points"] = curve.points.size();
}

inline void run_legendre(const ExperimentConfig& cfg, ResultBundle& b) {
  const SolvableModel mo = solvable_model(cfg.family);
  const ShapeCurve curve{mo, {}, false};
  const int na = cfg.params.at("alpha_points").get<int>();
  const double span = cfg.params.at("alpha_span").get<double>();
  b.columns = {"alpha", "f_numeric", "f_closed", "involution_err"};
  double worst_inv = 0, worst_closed = 0;
  for (int i = 0; i < na; ++i) {
    const double a = mo.m + span * (i + 1) / double(na);
    const double fn = f_legendre(curve, a).value;
    const double fc = f_closed(mo, a);
    const double inv = std::abs(f_legendre(curve, fn).value - a);
    worst_inv = std::max(worst_inv, inv);
    worst_closed = std::max(worst_closed, std::abs(fn - fc));
    b.rows.push_back({a, fn, fc, inv});
  }
  add_verdict(b, "involution", worst_inv < 1e-8, worst_inv, 1e-8, "max |f(f(a)) - a|");
  add_verdict(b, "legendre_vs_closed", worst_closed < 1e-6, worst_closed, 1e-6,
              "max |f_legendre - closed form|");

  const int ns = cfg.params.at("s_points").get<int>();
  const double s_max = cfg.params.at("s_max").get<double>();
  double worst_rt = 0;
  for (int i = 1; i <= ns; ++i) {
    const double s = s_max * i / double(ns);
    worst_rt = std::max(worst_rt, std::abs(gamma_from_f(mo, s) - gamma_curve(mo, s)));
  }
  add_verdict(b, "gamma_roundtrip", worst_rt < 1e-6, worst_rt, 1e-6, "max |gamma_from_f - gamma|");

  double worst_tilt = 0;
  for (int i = 1; i < 20; ++i) {
    const Vec2 xi{i / 20.0, 1 - i / 20.0};
    for (double t : {-1.0, 0.0, 2.0}) {
      const DualPoint d = tilt_to_velocity(mo, velocity_to_tilt(mo, xi, t));
      worst_tilt = std::max({worst_tilt, std::abs(d.t - t), std::abs(d.xi.x - xi.x)});
    }
  }
  add_verdict(b, "tilt_velocity_roundtrip", worst_tilt < 1e-9, worst_tilt, 1e-9,
              "max round-trip error over the xi-t grid");
}

inline void run_duality(const ExperimentConfig& cfg, ResultBundle& b) {
  const SolvableModel mo = solvable_model(cfg.family);
  const int nxi = cfg.params.at("xi_points").get<int>();
  const auto t_grid = cfg.params.at("t_grid").get<std::vector<double>>();
  b.columns = {"xi1", "t", "h1", "h2", "alpha", "duality_resid", "roundtrip_err"};
  double worst_dual = 0, worst_rt = 0;
  for (int i = 1; i <= nxi; ++i) {
    const Vec2 xi{i / double(nxi + 1), 1 - i / double(nxi + 1)};
    for (double t : t_grid) {
      const Vec2 h = velocity_to_tilt(mo, xi, t);
      const DualPoint d = tilt_to_velocity(mo, h);
      // g_pp(xi) = g_pl(h) - h.xi with g_pl(h) = t
      const double resid = std::abs(gpp(mo, xi) - (t - (h.x * xi.x + h.y * xi.y)));
      const double rt = std::max(std::abs(d.t - t), std::abs(d.xi.x - xi.x));
      worst_dual = std::max(worst_dual, resid);
      worst_rt = std::max(worst_rt, rt);
      b.rows.push_back({xi.x, t, h.x, h.y, d.alpha, resid, rt});
    }
  }
  add_verdict(b, "duality_identity", worst_dual < 1e-8, worst_dual, 1e-8,
              "g_pp(xi) = -h.xi + t at dual pairs");
  add_verdict(b, "bijection_roundtrip", worst_rt < 1e-9, worst_rt, 1e-9, "");
}

inline void run_stationary_lpp(const ExperimentConfig& cfg, ResultBundle& b) {
  const SolvableModel mo = solvable_model(cfg.family);
  const auto xi_arr = cfg.params.at("xi").get<std::vector<double>>();
  const Vec2 xi{xi_arr.at(0), xi_arr.at(1)};
  const int side = cfg.params.at("side").get<int>();
  const int reps = cfg.params.at("replicates").get<int>();

  b.columns = {"replicate", "recovery_resid", "mean_I", "mean_J",
               "y_mean",    "rho_e1",         "rho_e2", "marginal_p"};
  b.rows.assign(reps, {});
  parallel_for(reps, cfg.workers, [&](int r) {
    const auto sub = rng::derive(cfg.seed, r);
    const Pt v{side, side};
    const BoundaryCocycle bc = solvable_cocycle(mo, xi, v, side, rng::derive(sub, 1));
    const Environment env =
        sample_environment(mo.family(), side, side, Pt{0, 0}, rng::derive(sub, 2));
    const ExtendedCocycle ext = extend_cocycle(bc, env, Pt{0, 0});
    double recov = 0, sum_i = 0, sum_j = 0;
    std::size_t cnt = 0;
    for (int j = 0; j < side - 1; ++j)
      for (int i = 0; i < side - 1; ++i) {
        const Pt x{i, j};
        const double I = ext.B(x, x + e1), J = ext.B(x, x + e2);
        recov = std::max(recov, std::abs(std::min(I, J) - env.at(x)));
        sum_i += I;
        sum_j += J;
        ++cnt;
      }
    const auto burke = burke_check(ext, Pt{2, 2}, Pt{side - 2, side - 2});
    b.rows[r] = {double(r),   recov,        sum_i / cnt,  sum_j / cnt,
                 burke.y_mean, burke.rho_e1, burke.rho_e2, burke.marginal_p};
  });

  double worst_recov = 0;
  std::vector<double> mi, mj, ym, probs;
  for (const auto& row : b.rows) {
    worst_recov = std::max(worst_recov, row[1]);
    mi.push_back(row[2]);
    mj.push_back(row[3]);
    ym.push_back(row[4]);
    probs.push_back(row[7]);
  }
  add_verdict(b, "recovery_exact", worst_recov < 1e-10, worst_recov, 1e-10,
              "max |min_i B - w| over all bulk cells");
  const double alpha = grad_gamma(mo, xi.x / xi.y), fa = f_closed(mo, alpha);
  add_verdict(b, "increment_mean_I", std::abs(stats::mean(mi) - alpha) < 3 * stats::se_mean(mi),
              stats::mean(mi), alpha, "replicate mean of I vs alpha");
  add_verdict(b, "increment_mean_J", std::abs(stats::mean(mj) - fa) < 3 * stats::se_mean(mj),
              stats::mean(mj), fa, "replicate mean of J vs f(alpha)");
  add_verdict(b, "burke_mean", std::abs(stats::mean(ym) - mo.m) < 3 * stats::se_mean(ym),
              stats::mean(ym), mo.m, "replicate mean of Y vs m");
  std::sort(probs.begin(), probs.end());
  add_verdict(b, "burke_marginal_median_p", probs[probs.size() / 2] > 0.01,
              probs[probs.size() / 2], 0.01, "median marginal p-value");
}

inline void run_busemann(const ExperimentConfig& cfg, ResultBundle& b) {
  const SolvableModel mo = solvable_model(cfg.family);
  const auto xi_list = cfg.params.at("xi_list").get<std::vector<double>>();
  const auto n_list = cfg.params.at("n_list").get<std::vector<int>>();
  const int reps = cfg.params.at("replicates").get<int>();
  const std::size_t nn = n_list.size();
  int n_max = 0;
  for (int n : n_list) n_max = std::max(n_max, n);

  // pp rows: G_{0,v_n} - G_{e1,v_n}; p2l rows in an aux table of the same
  // shape, taken at the dual tilt of each direction with t = 0
  b.columns = {"n", "diff", "direction", "replicate"};
  b.rows.assign(xi_list.size() * reps * nn, {});
  AuxTable p2l_table{"p2l", {"n", "diff", "direction", "replicate"}, {}};
  p2l_table.rows.assign(xi_list.size() * reps * nn, {});

  for (std::size_t xi_idx = 0; xi_idx < xi_list.size(); ++xi_idx) {
    const Vec2 xi{xi_list[xi_idx], 1 - xi_list[xi_idx]};
    const Vec2 h = velocity_to_tilt(mo, xi, 0.0);
    parallel_for(reps, cfg.workers, [&, xi_idx, xi, h](int r) {
      const auto sub = rng::derive(cfg.seed, xi_idx * 100003ull + std::uint64_t(r));
      const Environment env = sample_environment(mo.family(), n_max + 2, n_max + 2, Pt{0, 0}, sub);
      const auto pp = busemann_estimate(env, Pt{0, 0}, Pt{1, 0}, xi, n_list);
      const auto p2l = busemann_point_to_line(env, e1, h, n_list);
      for (std::size_t k = 0; k < nn; ++k) {
        const std::size_t at = (xi_idx * reps + r) * nn + k;
        b.rows[at] = {double(n_list[k]), pp.diffs[k], xi.x, double(r)};
        p2l_table.rows[at] = {double(n_list[k]), p2l.diffs[k], xi.x, double(r)};
      }
    });
  }

  std::vector<double> means;
  for (std::size_t xi_idx = 0; xi_idx < xi_list.size(); ++xi_idx) {
    const Vec2 xi{xi_list[xi_idx], 1 - xi_list[xi_idx]};
    const Vec2 h = velocity_to_tilt(mo, xi, 0.0);
    const double alpha = grad_gamma(mo, xi.x / xi.y);
    std::vector<double> pp, p2l;
    for (int r = 0; r < reps; ++r) {
      const std::size_t at = (xi_idx * reps + r) * nn + (nn - 1);
      pp.push_back(b.rows[at][1]);
      p2l.push_back(p2l_table.rows[at][1]);
    }
    means.push_back(stats::mean(pp));
    add_verdict(b, "pp_mean_xi=" + std::to_string(xi.x),
                std::abs(stats::mean(pp) - alpha) < 2 * stats::se_mean(pp), stats::mean(pp), alpha,
                "replicate mean of G_{0,v}-G_{e1,v} vs grad g_pp . e1");
    const double gap = std::abs(stats::mean(p2l) - (stats::mean(pp) + h.x));
    add_verdict(b, "p2l_consistency_xi=" + std::to_string(xi.x),
                gap < 3 * (stats::se_mean(pp) + stats::se_mean(p2l)), gap,
                3 * (stats::se_mean(pp) + stats::se_mean(p2l)),
                "point-to-line estimator vs point-to-point + h.z");
  }
  b.aux.push_back(std::move(p2l_table));
  bool ordered = true;
  for (std::size_t i = 0; i + 1 < means.size(); ++i)
    if (xi_list[i] < xi_list[i + 1] && means[i] < means[i + 1]) ordered = false;
  add_verdict(b, "monotone_in_direction", ordered, 0, 0,
              "replicate means decrease as xi.e1 grows");
}

inline void run_queue_fixpoint(const ExperimentConfig& cfg, ResultBundle& b) {
  const auto& arr = cfg.params.at("arrival");
  const std::string kind = arr.at("kind").get<std::string>();
  const double alpha = arr.at("alpha").get<double>();
  ArrivalLaw law = kind == "constant"      ? ArrivalLaw::iid_constant(alpha)
                   : kind == "exponential" ? ArrivalLaw::iid_exponential(alpha)
                   : kind == "geometric"   ? ArrivalLaw::iid_geometric(alpha)
                                           : throw ConfigError("params.arrival.kind: unknown");
  const int customers = cfg.params.at("customers").get<int>();
  const int stations = cfg.params.at("stations").get<int>();
  const int seeds = cfg.params.at("seeds").get<int>();
  const bool cesaro = cfg.params.at("cesaro").get<bool>();
  const int k_early = cfg.params.at("k_early").get<int>();
  const int k_late = cfg.params.at("k_late").get<int>();
  if (k_late >= stations || k_early >= stations)
    throw ConfigError("params.k_early/k_late: must be below 'stations'");

  b.columns = {"seed", "station", "mean", "variance", "lag1", "ks_d", "ks_p"};
  std::vector<std::vector<std::vector<double>>> rows_per_seed(seeds);
  std::vector<int> improved(seeds, 0);
  std::vector<int> mean_ok(seeds, 0);
  parallel_for(seeds, cfg.workers, [&](int s) {
    const auto rep = fixed_point_iterate(law, cfg.family, customers, stations, cesaro,
                                         rng::derive(cfg.seed, s));
    int ok = 0;
    for (const auto& st : rep.stations) {
      rows_per_seed[s].push_back({double(s), double(st.k), st.mean, st.variance, st.lag1,
                                  st.ks_to_next, st.ks_p});
      if (std::abs(st.mean - alpha) < 3 * st.se) ++ok;
    }
    mean_ok[s] = ok;
    improved[s] = rep.stations[k_late].ks_to_next < rep.stations[k_early].ks_to_next ? 1 : 0;
  });
  for (auto& rs : rows_per_seed)
    for (auto& row : rs) b.rows.push_back(std::move(row));

  int improved_total = 0, mean_total = 0;
  for (int s = 0; s < seeds; ++s) {
    improved_total += improved[s];
    mean_total += mean_ok[s];
  }
  const double frac = double(improved_total) / seeds;
  add_verdict(b, "ks_attraction", frac >= 0.9, frac, 0.9,
              "KS(A^k, A^{k+1}) smaller at k_late than k_early");
  const double mean_frac = double(mean_total) / double(seeds * (stations + 1));
  add_verdict(b, "mean_preservation", mean_frac >= 0.95, mean_frac, 0.95,
              "per-station means within 3 batch SE of alpha");
}

inline void run_queue_geometric(const ExperimentConfig& cfg, ResultBundle& b) {
  const double alpha = cfg.params.at("alpha").get<double>();
  const int customers = cfg.params.at("customers").get<int>();
  if (!cfg.family.solvable()) throw ConfigError("family: queue-geometric needs a solvable family");
  const SolvableModel mo = solvable_model(cfg.family);
  const double fa = f_closed(mo, alpha);

  b.columns = {"marginal_p", "dep_lag1",    "lag1_bound",  "p_w0_hat", "p_w0_pred",
               "p_w0_se",    "wait_chi2_p", "joint_chi2_p", "sojourn",  "sojourn_pred",
               "sojourn_z",  "transpose_mean", "transpose_se", "transpose_resid"};

  double marginal_p = 0, lag1 = 0, lag1_bound = 0, w0 = 0, w0p = 0, w0se = 0;
  double wait_p = std::numeric_limits<double>::quiet_NaN();
  double joint_p = std::numeric_limits<double>::quiet_NaN();
  if (mo.kind == FamilyKind::geometric) {
    const auto rep = geometric_fixed_point_check(mo.m, alpha, customers, rng::derive(cfg.seed, 1));
    marginal_p = rep.departures_chi2.p_value;
    lag1 = rep.departures_lag1;
    lag1_bound = rep.lag1_bound;
    w0 = rep.p_w0_hat;
    w0p = rep.p_w0_pred;
    w0se = rep.p_w0_se;
    wait_p = rep.waiting_chi2.p_value;
    joint_p = rep.joint_chi2.p_value;
    add_verdict(b, "waiting_law_chi2", wait_p > 0.01, wait_p, 0.01, "");
    add_verdict(b, "joint_independence_chi2", joint_p > 0.01, joint_p, 0.01, "");
  } else {
    const auto rep =
        exponential_fixed_point_check(mo.m, alpha, customers, rng::derive(cfg.seed, 1));
    marginal_p = rep.departures_ks_p;
    lag1 = rep.departures_lag1;
    lag1_bound = rep.lag1_bound;
    w0 = rep.p_w0_hat;
    w0p = rep.p_w0_pred;
    w0se = rep.p_w0_se;
  }
  add_verdict(b, "departures_marginal", marginal_p > 0.01, marginal_p, 0.01,
              "chi-square (geometric) or KS (exponential) at 1%");
  add_verdict(b, "departures_lag1", std::abs(lag1) < lag1_bound, lag1, lag1_bound, "");
  add_verdict(b, "p_w0", std::abs(w0 - w0p) < 3 * w0se, w0, w0p, "P(W=0) within 3 SE");

  const auto soj = sojourn_mean_check(alpha, cfg.family, customers, rng::derive(cfg.seed, 2));
  add_verdict(b, "sojourn_mean", std::abs(soj.z) < 3, soj.empirical, soj.predicted,
              "E[W+S] within 3 batch SE of f(alpha)");

  const int tc = std::min(customers, 4000);
  const auto win = tandem_pass(mo.kind == FamilyKind::geometric
                                   ? ArrivalLaw::iid_geometric(alpha)
                                   : ArrivalLaw::iid_exponential(alpha),
                               cfg.family, tc, std::min(40, tc / 4), rng::derive(cfg.seed, 3));
  const auto t = transpose_system(win);
  const auto tres = verify_transpose(t);
  std::vector<double> flat;
  for (int jj = 0; jj < t.stations; ++jj)
    for (int i = 0; i < t.customers; ++i) flat.push_back(t.A(i, jj) - t.shift);
  const double tmean = stats::mean(flat), tse = stats::batch_se(flat);
  add_verdict(b, "transpose_identities", tres.max_all() < 1e-12, tres.max_all(), 1e-12, "");
  add_verdict(b, "transpose_arrival_mean", std::abs(tmean - fa) < 3 * tse, tmean, fa,
              "mean of A~ vs f(alpha)");

  b.rows.push_back({marginal_p, lag1, lag1_bound, w0, w0p, w0se, wait_p, joint_p, soj.empirical,
                    soj.predicted, soj.z, tmean, tse, tres.max_all()});
  b.summary["f_alpha"] = fa;
}

inline void run_percolation_cone(const ExperimentConfig& cfg, ResultBundle& b) {
  if (cfg.family.kind != FamilyKind::bernoulli_capped)
    throw ConfigError("family: percolation-cone needs a bernoulli_capped family");
  const double p1 = cfg.family.p1, lo = cfg.family.lo;
  const int n = cfg.params.at("n").get<int>();
  const int N = cfg.params.at("N").get<int>();
  const int reps = cfg.params.at("replicates").get<int>();
  const int psi_step = cfg.params.at("psi_step").get<int>();

  b.columns = {"replicate",      "beta_speed",  "diag_estimate", "psi_final",
               "psi_stabilized", "cone_agree",  "wd_half",       "wd_full"};
  b.rows.assign(reps, {});
  parallel_for(reps, cfg.workers, [&](int r) {
    const auto sub = rng::derive(cfg.seed, r);
    const Environment env =
        sample_environment(cfg.family, n + 2, n + 2, Pt{0, 0}, rng::derive(sub, 1));
    // right-edge speed on this replicate's own field
    const auto level = wet_level(oriented_field(env), n);
    double speed = std::numeric_limits<double>::quiet_NaN();
    for (int i = n; i >= 0; --i)
      if (level[i]) {
        speed = double(i) / n;
        break;
      }
    const double diag = last_passage(env, Pt{0, 0}, Pt{n / 2, n / 2}) / double(n);
    std::vector<int> grid;
    for (int k = psi_step; k <= N; k += psi_step) grid.push_back(k);
    const auto psi = psi_estimate(env, Pt{0, 0}, grid);
    const auto cone = cone_busemann_check(env, Pt{0, 0}, Pt{1, 0}, n, N);
    const auto wd = weak_disorder_diagnostic(env, Pt{0, 0}, {N / 2, N});
    b.rows[r] = {double(r),      speed,
                 diag,           psi.psi_final,
                 psi.stabilized ? 1.0 : 0.0, cone.agree ? 1.0 : 0.0,
                 wd[0],          wd[1]};
  });

  std::vector<double> speeds, diags, wd_half, wd_full;
  int stab = 0, agree = 0, survived = 0;
  for (const auto& row : b.rows) {
    if (!std::isnan(row[1])) {
      speeds.push_back(row[1]);
      ++survived;
    }
    diags.push_back(row[2]);
    stab += row[4] > 0.5;
    agree += row[5] > 0.5;
    wd_half.push_back(row[6]);
    wd_full.push_back(row[7]);
  }
  const double beta = stats::mean(speeds);
  add_verdict(b, "beta_in_half_one", beta > 0.5 && beta < 1.0, beta, 0, "right-edge speed");
  add_verdict(b, "survival", double(survived) / reps > 0.9, double(survived) / reps, 0.9, "");
  add_verdict(b, "diagonal_speed_one", std::abs(stats::mean(diags) - 1.0) < 0.01,
              stats::mean(diags), 1.0, "n^{-1} G_{0,(n/2,n/2)} within 0.01 of 1");
  add_verdict(b, "psi_stabilizes", double(stab) / reps >= 0.9, double(stab) / reps, 0.9, "");
  add_verdict(b, "cone_busemann_agreement", double(agree) / reps >= 0.9, double(agree) / reps,
              0.9, "");
  const double v_half = stats::sample_variance(wd_half), v_full = stats::sample_variance(wd_full);
  add_verdict(b, "weak_disorder_variance", v_full <= 2 * v_half + 1e-9, v_full, 2 * v_half,
              "across-seed variance of G_n(0) - n stays bounded");

  // direction fan against the estimated cone boundary
  std::vector<Vec2> dirs;
  for (const auto& d : cfg.params.at("directions"))
    dirs.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
  const int fan_n = cfg.params.at("fan_n").get<int>();
  const auto fan = flat_edge_check(p1, lo, fan_n, cfg.params.at("fan_replicates").get<int>(),
                                   dirs, rng::derive(cfg.seed, 0xFA11));
  AuxTable fan_table{"fan", {"direction", "estimate", "ci", "n"}, {}};
  for (const auto& d : fan.fan)
    fan_table.rows.push_back({d.xi.x, d.estimate, 1.96 * d.se, double(fan_n)});
  b.aux.push_back(std::move(fan_table));
  b.summary["fan_beta_hat"] = fan.beta.beta_hat;
  b.summary["p1"] = p1;
  b.summary["lo"] = lo;
  b.summary["beta_hat"] = beta;
}

inline void run_ergodic(const ExperimentConfig& cfg, ResultBundle& b) {
  const SolvableModel mo = solvable_model(cfg.family);
  const auto xi_arr = cfg.params.at("xi").get<std::vector<double>>();
  const Vec2 xi{xi_arr.at(0), xi_arr.at(1)};
  const int n_lo = cfg.params.at("n_lo").get<int>();
  const int n_hi = cfg.params.at("n_hi").get<int>();
  const int seeds = cfg.params.at("seeds").get<int>();
  if (n_lo >= n_hi) throw ConfigError("params.n_lo: must be below n_hi");

  b.columns = {"seed", "value_lo", "value_hi", "decayed"};
  b.rows.assign(seeds, {});
  parallel_for(seeds, cfg.workers, [&](int s) {
    const auto sub = rng::derive(cfg.seed, s);
    const int side = n_hi + 1;
    const Pt v{side, side};
    const BoundaryCocycle bc = solvable_cocycle(mo, xi, v, side, rng::derive(sub, 1));
    const Environment env =
        sample_environment(mo.family(), side, side, Pt{0, 0}, rng::derive(sub, 2));
    const ExtendedCocycle ext = extend_cocycle(bc, env, Pt{0, 0});
    const auto curve = ergodic_diagnostic(center(ext), {n_lo, n_hi});
    b.rows[s] = {double(s), curve[0], curve[1], curve[1] < curve[0] ? 1.0 : 0.0};
  });
  int decayed = 0;
  for (const auto& row : b.rows) decayed += row[3] > 0.5;
  const double frac = double(decayed) / seeds;
  add_verdict(b, "ergodic_decay", frac >= 0.95, frac, 0.95,
              "max |F(0,x)|/n smaller at n_hi than n_lo");
}

}  // namespace detail

inline ResultBundle run(const ExperimentConfig& cfg) {
  ResultBundle b;
  b.config_hash = config_hash(cfg.canonical);
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.experiment == "shape") detail::run_shape(cfg, b);
  else if (cfg.experiment == "legendre") detail::run_legendre(cfg, b);
  else if (cfg.experiment == "duality") detail::run_duality(cfg, b);
  else if (cfg.experiment == "stationary-lpp") detail::run_stationary_lpp(cfg, b);
  else if (cfg.experiment == "busemann") detail::run_busemann(cfg, b);
  else if (cfg.experiment == "queue-fixpoint") detail::run_queue_fixpoint(cfg, b);
  else if (cfg.experiment == "queue-geometric") detail::run_queue_geometric(cfg, b);
  else if (cfg.experiment == "percolation-cone") detail::run_percolation_cone(cfg, b);
  else if (cfg.experiment == "ergodic") detail::run_ergodic(cfg, b);
  else throw ConfigError("experiment: unknown experiment '" + cfg.experiment + "'");
  b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  b.summary["config_hash"] = b.config_hash;
  b.summary["config"] = cfg.canonical;
  b.summary["wall_seconds"] = b.wall_seconds;
  json verdicts = json::array();
  for (const auto& v : b.verdicts)
    verdicts.push_back({{"name", v.name},
                        {"pass", v.pass},
                        {"value", v.value},
                        {"threshold", v.threshold},
                        {"detail", v.detail}});
  b.summary["verdicts"] = verdicts;
  b.summary["all_pass"] = b.all_pass();
  return b;
}

// --------------------------------------------------------------------------
// Output files. csv format: <dir>/<experiment>_<hash8>.csv (rows) plus a
// .summary.json next to it; json format: a single .json with rows embedded.

inline std::vector<std::string> emit(const ResultBundle& b, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output.dir);
  const std::string stem = cfg.experiment + "_" + b.config_hash.substr(0, 8);
  std::vector<std::string> written;

  auto rows_json = [&](const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
      json r = json::object();
      for (std::size_t c = 0; c < columns.size(); ++c)
        if (std::isnan(row[c])) r[columns[c]] = nullptr;
        else r[columns[c]] = row[c];
      out.push_back(r);
    }
    return out;
  };
  auto write_table = [&](const fs::path& path, const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows) {
    std::ofstream csv(path);
    if (!csv) throw std::runtime_error("emit: cannot write " + path.string());
    csv << "# config_hash=" << b.config_hash << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c)
      csv << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
    csv << std::setprecision(17);
    for (const auto& row : rows)
      for (std::size_t c = 0; c < row.size(); ++c) csv << row[c] << (c + 1 < row.size() ? ',' : '\n');
    written.push_back(path.string());
  };

  if (cfg.output.format == "csv") {
    write_table(fs::path(cfg.output.dir) / (stem + ".csv"), b.columns, b.rows);
    for (const auto& t : b.aux)
      write_table(fs::path(cfg.output.dir) / (stem + "." + t.name + ".csv"), t.columns, t.rows);

    const fs::path sum_path = fs::path(cfg.output.dir) / (stem + ".summary.json");
    std::ofstream sum(sum_path);
    if (!sum) throw std::runtime_error("emit: cannot write " + sum_path.string());
    sum << b.summary.dump(2) << "\n";
    written.push_back(sum_path.string());
  } else {
    json all = b.summary;
    all["columns"] = b.columns;
    all["rows"] = rows_json(b.columns, b.rows);
    for (const auto& t : b.aux)
      all["tables"][t.name] = {{"columns", t.columns}, {"rows", rows_json(t.columns, t.rows)}};
    const fs::path path = fs::path(cfg.output.dir) / (stem + ".json");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit: cannot write " + path.string());
    out << all.dump(2) << "\n";
    written.push_back(path.string());
  }
  return written;
}

}  // namespace cgm::harness
