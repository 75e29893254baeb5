#include "fdavp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "fdavp/parallel.hpp"
#include "fdavp/serialize.hpp"

namespace fdavp {

namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------ config utils

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const Json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field '" + key + "' has the wrong type");
  }
}

template <typename T>
T require(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "/" + key + ": wrong type");
  }
}

// ------------------------------------------------------------ spec parsers

MeanSpec parse_mean(const Json& j) {
  reject_unknown_keys(j, {"kind", "terms", "alpha", "j_max", "amplitude"}, "mean");
  const auto kind = require<std::string>(j, "kind", "mean");
  if (kind == "zero") return MeanSpec::zero();
  if (kind == "trig") {
    std::vector<std::pair<MultiIndex, double>> terms;
    if (!j.contains("terms")) throw ConfigError("mean: trig needs 'terms'");
    for (const auto& t : j.at("terms")) {
      reject_unknown_keys(t, {"k", "a"}, "mean/terms");
      terms.emplace_back(require<std::vector<int>>(t, "k", "mean/terms"),
                         require<double>(t, "a", "mean/terms"));
    }
    return MeanSpec::trig(std::move(terms));
  }
  if (kind == "weierstrass") {
    const double alpha = require<double>(j, "alpha", "mean");
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ConfigError("mean/alpha: weierstrass exponent must lie in (0,1)");
    }
    return MeanSpec::weier(alpha, get_or<int>(j, "j_max", 12),
                           get_or<double>(j, "amplitude", 1.0));
  }
  throw ConfigError("mean/kind: expected zero|trig|weierstrass");
}

CovarianceSpec parse_cov(const Json& j) {
  reject_unknown_keys(j, {"kind", "scale", "hurst"}, "cov");
  const auto kind = require<std::string>(j, "kind", "cov");
  if (kind == "zero") return CovarianceSpec::zero();
  if (kind == "exponential") return CovarianceSpec::exponential(require<double>(j, "scale", "cov"));
  if (kind == "matern32") return CovarianceSpec::matern32(require<double>(j, "scale", "cov"));
  if (kind == "fbm") return CovarianceSpec::fbm(require<double>(j, "hurst", "cov"));
  throw ConfigError("cov/kind: expected zero|exponential|matern32|fbm");
}

NoiseSpec parse_noise(const Json& j) {
  reject_unknown_keys(j, {"law", "df", "sigma"}, "noise");
  NoiseSpec n = NoiseSpec::none();
  const auto law = get_or<std::string>(j, "law", "gaussian");
  if (law == "gaussian") n.law = NoiseSpec::Law::gaussian;
  else if (law == "rademacher") n.law = NoiseSpec::Law::rademacher;
  else if (law == "student_t") {
    n.law = NoiseSpec::Law::student_t;
    n.df = get_or<double>(j, "df", 5.0);
    if (n.df < 4.0) throw ConfigError("noise/df: student_t needs df >= 4");
  } else {
    throw ConfigError("noise/law: expected gaussian|rademacher|student_t");
  }
  if (j.contains("sigma")) {
    const Json& s = j.at("sigma");
    reject_unknown_keys(s, {"kind", "value", "base", "slope"}, "noise/sigma");
    const auto kind = require<std::string>(s, "kind", "noise/sigma");
    if (kind == "constant") {
      const double v = require<double>(s, "value", "noise/sigma");
      if (v < 0.0) throw ConfigError("noise/sigma/value: must be >= 0");
      n.sigma = [v](std::span<const double>) { return v; };
    } else if (kind == "affine") {
      const double base = require<double>(s, "base", "noise/sigma");
      const double slope = require<double>(s, "slope", "noise/sigma");
      n.sigma = [base, slope](std::span<const double> t) {
        return std::max(0.0, base + slope * t[0]);
      };
    } else {
      throw ConfigError("noise/sigma/kind: expected constant|affine");
    }
  }
  return n;
}

DesignDensity parse_density(const Json& j, int dim) {
  reject_unknown_keys(j, {"kind", "a", "b"}, "density");
  const auto kind = require<std::string>(j, "kind", "density");
  if (kind == "uniform") return DesignDensity::uniform(dim);
  if (kind == "beta") {
    return DesignDensity::product_beta(dim, require<double>(j, "a", "density"),
                                       require<double>(j, "b", "density"));
  }
  throw ConfigError("density/kind: expected uniform|beta");
}

SimConfig parse_sim_config(const Json& j, std::uint64_t seed_override, int threads) {
  reject_unknown_keys(j, {"dim", "n_curves", "counts", "mean", "cov", "noise",
                          "density", "seed", "truth", "truth_grid", "csv"},
                      "simulate");
  SimConfig cfg;
  cfg.dim = get_or<int>(j, "dim", 1);
  if (cfg.dim < 1 || cfg.dim > 3) throw ConfigError("simulate/dim: expected 1..3");
  cfg.n_curves = require<int>(j, "n_curves", "simulate");
  if (cfg.n_curves < 1) throw ConfigError("simulate/n_curves: must be >= 1");
  const Json& counts = j.contains("counts") ? j.at("counts") : Json{{"kind", "fixed"}, {"m", 1}};
  reject_unknown_keys(counts, {"kind", "m", "m_lo", "m_hi"}, "simulate/counts");
  const auto ckind = require<std::string>(counts, "kind", "simulate/counts");
  if (ckind == "fixed") cfg.counts = CountLaw::fixed(require<int>(counts, "m", "simulate/counts"));
  else if (ckind == "uniform") {
    cfg.counts = CountLaw::uniform(require<int>(counts, "m_lo", "simulate/counts"),
                                   require<int>(counts, "m_hi", "simulate/counts"));
  } else {
    throw ConfigError("simulate/counts/kind: expected fixed|uniform");
  }
  cfg.mean = j.contains("mean") ? parse_mean(j.at("mean")) : MeanSpec::zero();
  cfg.cov = j.contains("cov") ? parse_cov(j.at("cov")) : CovarianceSpec::zero();
  cfg.noise = j.contains("noise") ? parse_noise(j.at("noise")) : NoiseSpec::none();
  cfg.density = j.contains("density") ? parse_density(j.at("density"), cfg.dim)
                                      : DesignDensity::uniform(cfg.dim);
  validate_density(cfg.density);
  cfg.seed = seed_override ? seed_override : get_or<std::uint64_t>(j, "seed", 0);
  cfg.truth_channel = get_or<bool>(j, "truth", true);
  cfg.truth_grid = get_or<int>(j, "truth_grid", cfg.dim == 1 ? 512 : 64);
  cfg.threads = threads;
  return cfg;
}

Json resolved_sim_config(const SimConfig& cfg, const Json& raw) {
  Json out = raw;
  out["dim"] = cfg.dim;
  out["seed"] = cfg.seed;
  if (!out.contains("counts")) out["counts"] = {{"kind", "fixed"}, {"m", 1}};
  if (!out.contains("mean")) out["mean"] = {{"kind", "zero"}};
  if (!out.contains("cov")) out["cov"] = {{"kind", "zero"}};
  if (!out.contains("noise")) out["noise"] = {{"law", "gaussian"}};
  if (!out.contains("density")) out["density"] = {{"kind", "uniform"}};
  // student-t errors sit outside the sub-gaussian moment assumption that the
  // regularity theory relies on; record that in the echoed spec
  if (cfg.noise.outside_d6()) out["noise"]["outside_subgaussian"] = true;
  out["truth"] = cfg.truth_channel;
  out["truth_grid"] = cfg.truth_grid;
  return out;
}

// --------------------------------------------------------------- commands

int cmd_simulate(const Json& cfg, const std::string& out_path, std::uint64_t seed_override,
                 int threads) {
  const SimConfig sim = parse_sim_config(cfg, seed_override, threads);
  const Json resolved = resolved_sim_config(sim, cfg);
  FunctionalDataset data = simulate(sim);
  data.meta_json = resolved.dump();
  write_text_file(out_path, dataset_to_json(data).dump(1) + "\n");
  if (get_or<bool>(cfg, "csv", false)) {
    write_text_file(out_path + ".csv",
                    csv_with_meta(dataset_to_csv(data), sim.seed, resolved));
  }
  return 0;
}

struct LevelChoice {
  int level = 0;
  double alpha = 1.0, c_vp = 1.0, k1 = 1.0, rho = 0.0;
  bool plug_in_k1 = false;
  bool optimal = false;
};

LevelChoice parse_level(const Json& j) {
  reject_unknown_keys(j, {"kind", "L", "alpha", "c_vp", "k1", "rho"}, "level");
  LevelChoice out;
  const auto kind = require<std::string>(j, "kind", "level");
  if (kind == "fixed") {
    out.level = require<int>(j, "L", "level");
    if (out.level < 1) throw ConfigError("level/L: must be >= 1");
    return out;
  }
  if (kind != "optimal") throw ConfigError("level/kind: expected fixed|optimal");
  out.optimal = true;
  out.alpha = require<double>(j, "alpha", "level");
  out.c_vp = get_or<double>(j, "c_vp", 1.0);
  out.rho = get_or<double>(j, "rho", 0.0);
  if (j.contains("k1") && j.at("k1").is_string()) {
    if (j.at("k1").get<std::string>() != "plug-in") {
      throw ConfigError("level/k1: expected a number or \"plug-in\"");
    }
    out.plug_in_k1 = true;
  } else {
    out.k1 = get_or<double>(j, "k1", 1.0);
  }
  return out;
}

int cmd_estimate(const Json& cfg, const std::string& out_path, std::uint64_t seed_override,
                 int threads) {
  reject_unknown_keys(cfg, {"dataset", "level", "density", "weights", "seed"}, "estimate");
  const auto dataset_path = require<std::string>(cfg, "dataset", "estimate");
  const FunctionalDataset data = dataset_from_json(read_json_file(dataset_path));
  const DesignDensity density = cfg.contains("density")
      ? parse_density(cfg.at("density"), data.dim) : DesignDensity::uniform(data.dim);
  WeightConfig wcfg;
  if (cfg.contains("weights")) {
    reject_unknown_keys(cfg.at("weights"), {"mc_draws", "seed"}, "estimate/weights");
    wcfg.mc_draws = get_or<std::uint64_t>(cfg.at("weights"), "mc_draws", 0);
    wcfg.seed = get_or<std::uint64_t>(cfg.at("weights"), "seed", 0);
  }
  const std::uint64_t seed = seed_override ? seed_override : get_or<std::uint64_t>(cfg, "seed", data.seed);
  if (!wcfg.seed) wcfg.seed = seed;
  wcfg.threads = threads;

  LevelChoice choice = cfg.contains("level") ? parse_level(cfg.at("level"))
                                             : LevelChoice{.level = 1, .optimal = false};
  Json resolved = cfg;
  resolved["seed"] = seed;
  if (choice.optimal) {
    if (choice.plug_in_k1) choice.k1 = estimate_k1(data, density, 0, wcfg);
    choice.level = optimal_L(choice.alpha, choice.c_vp, choice.k1, data.dim,
                             data.total_obs(), choice.rho);
    resolved["level"]["resolved_L"] = choice.level;
    resolved["level"]["resolved_k1"] = choice.k1;
  }
  const FitResult fit = fourier_coefficients(data, density, choice.level, wcfg, threads);
  Json out = model_to_json(fit, resolved, seed);
  if (data.truth) {
    // risk against the stored truth grid
    const std::size_t g = data.truth->grid.size() / static_cast<std::size_t>(data.dim);
    double err = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      const std::span<const double> t{data.truth->grid.data() + i * static_cast<std::size_t>(data.dim),
                                      static_cast<std::size_t>(data.dim)};
      const double diff = vp_eval(fit.model, t) - data.truth->mu[i];
      err += diff * diff;
    }
    Json risk;
    risk["l2_error"] = err / static_cast<double>(g);
    risk["grid_points"] = g;
    out["risk"] = std::move(risk);
  }
  write_text_file(out_path, out.dump(1) + "\n");
  return 0;
}

int cmd_infer(const Json& cfg, const std::string& out_path, std::uint64_t seed_override,
              int threads) {
  reject_unknown_keys(cfg, {"dataset", "model", "method", "level", "grid", "n_draws",
                            "sigma", "centering", "n_subsets", "vartheta", "alpha",
                            "c_vp", "k1", "rho", "whole_curves", "density", "weights",
                            "seed"},
                      "infer");
  const auto dataset_path = require<std::string>(cfg, "dataset", "infer");
  const FunctionalDataset data = dataset_from_json(read_json_file(dataset_path));
  const DesignDensity density = cfg.contains("density")
      ? parse_density(cfg.at("density"), data.dim) : DesignDensity::uniform(data.dim);
  const auto method = get_or<std::string>(cfg, "method", "gaussian");
  const double level = get_or<double>(cfg, "level", 0.95);
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("infer/level: must lie in (0,1)");
  const std::uint64_t seed = seed_override ? seed_override : get_or<std::uint64_t>(cfg, "seed", data.seed);
  Json resolved = cfg;
  resolved["seed"] = seed;
  resolved["method"] = method;
  resolved["level"] = level;

  BandResult band;
  if (method == "gaussian") {
    const auto model_path = require<std::string>(cfg, "model", "infer");
    FourierModel model = model_from_json(read_json_file(model_path));
    int L = model.level;
    const auto centering = get_or<std::string>(cfg, "centering", "vp");
    if (centering == "mean") {
      // undersmoothing: refit at L-diamond = ceil(vtheta(Mbar) Mbar^{1/(2a+D)})
      const double alpha = get_or<double>(cfg, "alpha", 1.0);
      const double mb = static_cast<double>(data.total_obs());
      const double vt = std::max(1.0, std::log(std::log(mb)));
      L = static_cast<int>(std::ceil(vt * std::pow(mb, 1.0 / (2.0 * alpha + data.dim))));
      WeightConfig wcfg;
      wcfg.seed = seed;
      wcfg.threads = threads;
      model = fourier_coefficients(data, density, L, wcfg, threads).model;
      resolved["centering"] = "mean";
      resolved["L_diamond"] = L;
    } else if (centering != "vp") {
      throw ConfigError("infer/centering: expected vp|mean");
    }
    SigmaMatrix sigma;
    const Json& sj = cfg.contains("sigma") ? cfg.at("sigma") : Json{{"mode", "plugin"}};
    reject_unknown_keys(sj, {"mode", "sigma2", "cov", "quad"}, "infer/sigma");
    const auto mode = require<std::string>(sj, "mode", "infer/sigma");
    const double rho = get_or<double>(cfg, "rho", 0.0);
    const int quad = get_or<int>(sj, "quad", 0);
    if (mode == "oracle") {
      const Json& s2 = sj.contains("sigma2") ? sj.at("sigma2")
                                             : Json{{"kind", "constant"}, {"value", 0.0}};
      reject_unknown_keys(s2, {"kind", "value", "base", "slope"}, "infer/sigma/sigma2");
      const auto s2kind = require<std::string>(s2, "kind", "infer/sigma/sigma2");
      ScalarField sigma2;
      if (s2kind == "constant") {
        const double v = require<double>(s2, "value", "infer/sigma/sigma2");
        sigma2 = [v](std::span<const double>) { return v; };
      } else if (s2kind == "affine") {
        const double base = require<double>(s2, "base", "infer/sigma/sigma2");
        const double slope = require<double>(s2, "slope", "infer/sigma/sigma2");
        sigma2 = [base, slope](std::span<const double> t) { return base + slope * t[0]; };
      } else {
        throw ConfigError("infer/sigma/sigma2/kind: expected constant|affine");
      }
      const CovarianceSpec cov = sj.contains("cov") ? parse_cov(sj.at("cov"))
                                                    : CovarianceSpec::zero();
      double pairs = 0.0;
      for (const auto& c : data.curves) {
        const double mi = static_cast<double>(c.count(data.dim));
        pairs += mi * (mi - 1.0);
      }
      sigma = sigma_matrix_oracle(
          data.dim, L, data.total_obs(), pairs, sigma2,
          [cov](std::span<const double> s, std::span<const double> t) { return cov.eval(s, t); },
          density, rho, quad, threads);
    } else if (mode == "plugin") {
      sigma = sigma_matrix_plugin(data, density, L, rho, quad, 0, threads);
    } else {
      throw ConfigError("infer/sigma/mode: expected oracle|plugin");
    }
    band = uniform_band_gaussian(model, sigma, rates(data, L), level,
                                 get_or<int>(cfg, "grid", 0),
                                 get_or<int>(cfg, "n_draws", 2000), seed, threads);
    band.flags.push_back("sigma-" + sigma.mode);
    if (centering == "mean") band.flags.push_back("undersmoothed-L-diamond");
  } else if (method == "subsampling") {
    SubsamplingConfig sub;
    sub.alpha_mu = require<double>(cfg, "alpha", "infer");
    sub.c_vp = get_or<double>(cfg, "c_vp", 1.0);
    sub.k1 = get_or<double>(cfg, "k1", 1.0);
    sub.rho = get_or<double>(cfg, "rho", 0.0);
    sub.level = level;
    sub.n_subsets = get_or<int>(cfg, "n_subsets", 0);
    if (cfg.contains("vartheta")) {
      const Json& v = cfg.at("vartheta");
      reject_unknown_keys(v, {"mode", "value"}, "infer/vartheta");
      sub.vartheta = VarthetaMode::from_string(require<std::string>(v, "mode", "infer/vartheta"),
                                               get_or<double>(v, "value", 1.0));
    }
    sub.grid_per_axis = get_or<int>(cfg, "grid", 0);
    sub.whole_curves = get_or<bool>(cfg, "whole_curves", false);
    sub.seed = seed;
    sub.threads = threads;
    band = subsampling_bands(data, density, sub);
    write_text_file(out_path + "_pointwise.csv",
                    csv_with_meta(band_pointwise_csv(band, data.dim), seed, resolved));
  } else {
    throw ConfigError("infer/method: expected gaussian|subsampling");
  }
  write_text_file(out_path, csv_with_meta(band_to_csv(band, data.dim), seed, resolved));
  write_text_file(out_path + ".json", band_sidecar(band, resolved, seed).dump(1) + "\n");
  return 0;
}

int cmd_regularity(const Json& cfg, const std::string& out_path, std::uint64_t seed_override,
                   int threads) {
  (void)threads;
  reject_unknown_keys(cfg, {"dataset", "tau", "tau_prime", "r_prime", "mode", "cap",
                            "constants", "seed"},
                      "regularity");
  const auto dataset_path = require<std::string>(cfg, "dataset", "regularity");
  const FunctionalDataset data = dataset_from_json(read_json_file(dataset_path));
  RegularityConfig rc;
  rc.tau = get_or<double>(cfg, "tau", 0.6);
  rc.tau_prime = get_or<double>(cfg, "tau_prime", 0.3);
  rc.r_prime = get_or<double>(cfg, "r_prime", 1.0);
  const auto mode = get_or<std::string>(cfg, "mode", "adjacent");
  if (mode == "adjacent") rc.mode = NeighborMode::adjacent;
  else if (mode == "shell") rc.mode = NeighborMode::shell;
  else throw ConfigError("regularity/mode: expected adjacent|shell");
  const std::uint64_t seed = seed_override ? seed_override : get_or<std::uint64_t>(cfg, "seed", data.seed);

  RegularityEstimate est = estimate_alpha(data, rc);
  double k1 = 1.0, c_vp = 1.0, rho = 0.0;
  if (cfg.contains("constants")) {
    reject_unknown_keys(cfg.at("constants"), {"k1", "c_vp", "rho"}, "regularity/constants");
    k1 = get_or<double>(cfg.at("constants"), "k1", 1.0);
    c_vp = get_or<double>(cfg.at("constants"), "c_vp", 1.0);
    rho = get_or<double>(cfg.at("constants"), "rho", 0.0);
  }
  est.l_hat = plug_in_L(est, k1, c_vp, data.total_obs(), data.dim, rho);
  PartitionSpec part{data.dim, est.cells_per_axis, rc.mode};
  est.c_hat = holder_constant(data, part, est, get_or<double>(cfg, "cap", 100.0));
  Json resolved = cfg;
  resolved["seed"] = seed;
  write_text_file(out_path, regularity_report(est, resolved, seed).dump(1) + "\n");
  return 0;
}

// bench: replicated simulate -> estimate -> risk sweeps with resume support
int cmd_bench(const Json& cfg, const std::string& out_dir, std::uint64_t seed_override,
              int threads) {
  reject_unknown_keys(cfg, {"sweep", "replications", "simulate", "level", "seed"}, "bench");
  const Json& sweep = require<Json>(cfg, "sweep", "bench");
  reject_unknown_keys(sweep, {"variable", "values"}, "bench/sweep");
  const auto variable = require<std::string>(sweep, "variable", "bench/sweep");
  if (variable != "m_bar" && variable != "m_per_curve") {
    throw ConfigError("bench/sweep/variable: expected m_bar|m_per_curve");
  }
  const auto values = require<std::vector<long>>(sweep, "values", "bench/sweep");
  if (values.empty()) throw ConfigError("bench/sweep/values: must be nonempty");
  const int reps = require<int>(cfg, "replications", "bench");
  if (reps < 1) throw ConfigError("bench/replications: must be >= 1");
  const Json& sim_raw = require<Json>(cfg, "simulate", "bench");
  const std::uint64_t root_seed = seed_override ? seed_override : get_or<std::uint64_t>(cfg, "seed", 1);
  Json resolved = cfg;
  resolved["seed"] = root_seed;

  fs::create_directories(out_dir);
  const std::size_t total = values.size() * static_cast<std::size_t>(reps);
  std::vector<double> risks(total, 0.0);
  std::vector<int> levels(total, 0);

  parallel_for(total, [&](std::size_t job) {
    const std::size_t vi = job / static_cast<std::size_t>(reps);
    const int rep = static_cast<int>(job % static_cast<std::size_t>(reps));
    const std::uint64_t rep_seed = derive_seed(root_seed, Stream::replication, job);
    const fs::path rep_file = fs::path(out_dir) /
        ("rep_" + std::to_string(values[vi]) + "_" + std::to_string(rep_seed) + ".csv");

    if (fs::exists(rep_file)) {
      // resume: completed replications are detected by their seed-named file
      std::ifstream in(rep_file);
      std::string header, row;
      std::getline(in, header);
      if (std::getline(in, row)) {
        const auto last = row.rfind(',');
        const auto prev = row.rfind(',', last - 1);
        risks[job] = std::stod(row.substr(last + 1));
        levels[job] = std::stoi(row.substr(prev + 1, last - prev - 1));
        return;
      }
    }

    Json sim_json = sim_raw;
    if (variable == "m_bar") {
      // M_i per-curve count fixed by the base config; N = value / m
      const Json& counts = sim_json.contains("counts") ? sim_json.at("counts")
                                                       : Json{{"kind", "fixed"}, {"m", 1}};
      const int m = require<int>(counts, "m", "bench/simulate/counts");
      sim_json["n_curves"] = static_cast<int>(values[vi] / m);
    } else {
      sim_json["counts"] = {{"kind", "fixed"}, {"m", static_cast<int>(values[vi])}};
    }
    const SimConfig sim = parse_sim_config(sim_json, rep_seed, 1);
    FunctionalDataset data = simulate(sim);

    const DesignDensity density = sim_json.contains("density")
        ? parse_density(sim_json.at("density"), data.dim) : DesignDensity::uniform(data.dim);
    LevelChoice choice = parse_level(require<Json>(cfg, "level", "bench"));
    WeightConfig wcfg;
    wcfg.seed = rep_seed;
    if (choice.optimal) {
      if (choice.plug_in_k1) choice.k1 = estimate_k1(data, density, 0, wcfg);
      choice.level = optimal_L(choice.alpha, choice.c_vp, choice.k1, data.dim,
                               data.total_obs(), choice.rho);
    }
    const FitResult fit = fourier_coefficients(data, density, choice.level, wcfg, 1);
    double err = 0.0;
    const std::size_t g = data.truth->grid.size() / static_cast<std::size_t>(data.dim);
    for (std::size_t i = 0; i < g; ++i) {
      const std::span<const double> t{data.truth->grid.data() + i * static_cast<std::size_t>(data.dim),
                                      static_cast<std::size_t>(data.dim)};
      const double diff = vp_eval(fit.model, t) - data.truth->mu[i];
      err += diff * diff;
    }
    err /= static_cast<double>(g);
    risks[job] = err;
    levels[job] = choice.level;

    std::string body = "sweep_value,rep,seed,L,l2_risk\n";
    body += std::to_string(values[vi]) + "," + std::to_string(rep) + "," +
            std::to_string(rep_seed) + "," + std::to_string(choice.level) + "," +
            Json(err).dump() + "\n";
    write_text_file(rep_file.string(), body);
  }, threads);

  // aggregate CSV: mean and SE per sweep point
  std::string agg = "sweep_value,n_reps,mean_risk,se,mean_L\n";
  std::vector<double> log_means;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    double mean = 0.0;
    for (int r = 0; r < reps; ++r) mean += risks[vi * reps + static_cast<std::size_t>(r)];
    mean /= reps;
    double var = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double d = risks[vi * reps + static_cast<std::size_t>(r)] - mean;
      var += d * d;
    }
    var = reps > 1 ? var / (reps - 1) : 0.0;
    double mean_l = 0.0;
    for (int r = 0; r < reps; ++r) mean_l += levels[vi * reps + static_cast<std::size_t>(r)];
    mean_l /= reps;
    agg += std::to_string(values[vi]) + "," + std::to_string(reps) + "," + Json(mean).dump() +
           "," + Json(std::sqrt(var / reps)).dump() + "," + Json(mean_l).dump() + "\n";
    log_means.push_back(std::log(mean));
  }
  write_text_file((fs::path(out_dir) / "aggregate.csv").string(),
                  csv_with_meta(agg, root_seed, resolved));

  // summary with the log-log slope of mean risk against the sweep variable
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const double x = std::log(static_cast<double>(values[vi]));
    sx += x; sy += log_means[vi]; sxx += x * x; sxy += x * log_means[vi];
  }
  const double n = static_cast<double>(values.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  Json summary;
  summary["meta"] = Json{{"tool", "fdavp"}, {"version", version_string()},
                         {"seed", root_seed}, {"config", resolved}};
  summary["slope_fit"] = slope;
  summary["values"] = values;
  write_text_file((fs::path(out_dir) / "summary.json").string(), summary.dump(1) + "\n");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Mean function estimation and inference for discretely observed random functions"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  int threads = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out_path, "output path")->required();
    sub->add_option("--threads", threads, "worker threads (default FDAVP_THREADS or hardware)");
    sub->add_option("--seed", seed, "root seed override");
  };
  for (const char* name : {"simulate", "estimate", "infer", "regularity", "bench"}) {
    add_common(app.add_subcommand(name));
  }

  std::vector<const char*> argv;
  argv.push_back("fdavp");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    const Json cfg = read_json_file(config_path);
    if (threads <= 0) threads = default_threads();
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "simulate") return cmd_simulate(cfg, out_path, seed, threads);
    if (cmd == "estimate") return cmd_estimate(cfg, out_path, seed, threads);
    if (cmd == "infer") return cmd_infer(cfg, out_path, seed, threads);
    if (cmd == "regularity") return cmd_regularity(cfg, out_path, seed, threads);
    if (cmd == "bench") return cmd_bench(cfg, out_path, seed, threads);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace fdavp
