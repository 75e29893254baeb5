#include "fdavp/serialize.hpp"

#include <fstream>
#include <sstream>

namespace fdavp {

namespace {

Json meta_block(std::uint64_t seed, const Json& config_echo) {
  Json meta;
  meta["tool"] = "fdavp";
  meta["version"] = version_string();
  meta["seed"] = seed;
  meta["config"] = config_echo;
  return meta;
}

std::string csv_header_comment(std::uint64_t seed, const Json& config_echo) {
  std::ostringstream os;
  os << "# fdavp " << version_string() << "\n";
  os << "# seed " << seed << "\n";
  os << "# config " << config_echo.dump() << "\n";
  return os.str();
}

void append_number(std::string& out, double v) {
  out += Json(v).dump();  // shortest round-trip formatting, deterministic
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("short write to " + path);
}

Json dataset_to_json(const FunctionalDataset& data) {
  Json j;
  Json meta;
  meta["D"] = data.dim;
  meta["N"] = data.curves.size();
  meta["seed"] = data.seed;
  meta["version"] = version_string();
  if (!data.meta_json.empty()) meta["specs"] = Json::parse(data.meta_json);
  j["meta"] = std::move(meta);
  Json curves = Json::array();
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    const auto& c = data.curves[i];
    const std::size_t mi = c.count(data.dim);
    Json jc;
    jc["i"] = i;
    Json ts = Json::array();
    for (std::size_t m = 0; m < mi; ++m) {
      Json pt = Json::array();
      for (int d = 0; d < data.dim; ++d) {
        pt.push_back(c.t[m * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)]);
      }
      ts.push_back(std::move(pt));
    }
    jc["t"] = std::move(ts);
    jc["y"] = c.y;
    if (!c.latent.empty()) jc["x"] = c.latent;
    if (!c.eps.empty()) jc["eps"] = c.eps;
    curves.push_back(std::move(jc));
  }
  j["curves"] = std::move(curves);
  if (data.truth) {
    Json t;
    const std::size_t g = data.truth->grid.size() / static_cast<std::size_t>(data.dim);
    Json grid = Json::array();
    for (std::size_t i = 0; i < g; ++i) {
      Json pt = Json::array();
      for (int d = 0; d < data.dim; ++d) {
        pt.push_back(data.truth->grid[i * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)]);
      }
      grid.push_back(std::move(pt));
    }
    t["grid"] = std::move(grid);
    t["mu"] = data.truth->mu;
    j["truth"] = std::move(t);
  }
  return j;
}

FunctionalDataset dataset_from_json(const Json& j) {
  FunctionalDataset data;
  try {
    data.dim = j.at("meta").at("D").get<int>();
    data.seed = j.at("meta").at("seed").get<std::uint64_t>();
    if (j.at("meta").contains("specs")) data.meta_json = j.at("meta").at("specs").dump();
    for (const auto& jc : j.at("curves")) {
      Curve c;
      for (const auto& pt : jc.at("t")) {
        if (static_cast<int>(pt.size()) != data.dim) {
          throw ConfigError("dataset: point dimension mismatch");
        }
        for (const auto& v : pt) c.t.push_back(v.get<double>());
      }
      c.y = jc.at("y").get<std::vector<double>>();
      if (jc.contains("x")) c.latent = jc.at("x").get<std::vector<double>>();
      if (jc.contains("eps")) c.eps = jc.at("eps").get<std::vector<double>>();
      if (c.y.size() != c.count(data.dim)) throw ConfigError("dataset: y length mismatch");
      data.curves.push_back(std::move(c));
    }
    if (j.contains("truth")) {
      TruthChannel t;
      for (const auto& pt : j.at("truth").at("grid")) {
        for (const auto& v : pt) t.grid.push_back(v.get<double>());
      }
      t.mu = j.at("truth").at("mu").get<std::vector<double>>();
      data.truth = std::move(t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  return data;
}

std::string dataset_to_csv(const FunctionalDataset& data) {
  std::string out = "curve,m";
  for (int d = 1; d <= data.dim; ++d) out += ",t_" + std::to_string(d);
  out += ",y\n";
  for (std::size_t i = 0; i < data.curves.size(); ++i) {
    const auto& c = data.curves[i];
    const std::size_t mi = c.count(data.dim);
    for (std::size_t m = 0; m < mi; ++m) {
      out += std::to_string(i);
      out += ",";
      out += std::to_string(m);
      for (int d = 0; d < data.dim; ++d) {
        out += ",";
        append_number(out, c.t[m * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(d)]);
      }
      out += ",";
      append_number(out, c.y[m]);
      out += "\n";
    }
  }
  return out;
}

Json model_to_json(const FitResult& fit, const Json& config_echo, std::uint64_t seed) {
  Json j;
  j["meta"] = meta_block(seed, config_echo);
  j["D"] = fit.model.dim;
  j["L"] = fit.model.level;
  j["index_order"] = "lex";
  j["coefficients"] = fit.model.coefficients;
  Json w;
  w["route"] = fit.weights.route;
  w["mc_draws"] = fit.weights.mc_draws;
  w["seed"] = fit.weights.seed;
  w["sum_w_residual"] = fit.weights.sum_w_residual;
  j["weights"] = std::move(w);
  return j;
}

FourierModel model_from_json(const Json& j) {
  try {
    FourierModel model(j.at("D").get<int>(), j.at("L").get<int>());
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    if (coeffs.size() != model.indices.size()) throw ConfigError("model: coefficient count mismatch");
    model.coefficients = coeffs;
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

std::string band_to_csv(const BandResult& band, int dim) {
  std::string out;
  for (int d = 1; d <= dim; ++d) out += "t_" + std::to_string(d) + ",";
  out += "center,lower,upper\n";
  const std::size_t g = band.center.size();
  for (std::size_t i = 0; i < g; ++i) {
    for (int d = 0; d < dim; ++d) {
      append_number(out, band.grid[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)]);
      out += ",";
    }
    append_number(out, band.center[i]);
    out += ",";
    append_number(out, band.lower[i]);
    out += ",";
    append_number(out, band.upper[i]);
    out += "\n";
  }
  return out;
}

std::string band_pointwise_csv(const BandResult& band, int dim) {
  std::string out;
  for (int d = 1; d <= dim; ++d) out += "t_" + std::to_string(d) + ",";
  out += "center,ci_lower,ci_upper\n";
  const std::size_t g = band.center.size();
  for (std::size_t i = 0; i < g; ++i) {
    for (int d = 0; d < dim; ++d) {
      append_number(out, band.grid[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)]);
      out += ",";
    }
    append_number(out, band.center[i]);
    out += ",";
    append_number(out, band.ci_lower[i]);
    out += ",";
    append_number(out, band.ci_upper[i]);
    out += "\n";
  }
  return out;
}

Json band_sidecar(const BandResult& band, const Json& config_echo, std::uint64_t seed) {
  Json j;
  j["meta"] = meta_block(seed, config_echo);
  j["method"] = band.method;
  j["level"] = band.level;
  j["critical"] = band.critical;
  if (band.method == "gaussian") {
    Json refine;
    refine["critical_half_grid"] = band.critical_coarse;
    refine["relative_change"] = band.critical > 0.0
        ? (band.critical - band.critical_coarse) / band.critical : 0.0;
    j["grid_refinement"] = std::move(refine);
  }
  j["half_width"] = band.half_width;
  j["r1"] = band.r1;
  j["r2"] = std::isfinite(band.r2) ? Json(band.r2) : Json("inf");
  j["clip_magnitude"] = band.clip_magnitude;
  j["tau_full"] = band.tau_full;
  j["grid_points"] = band.center.size();
  j["flags"] = band.flags;
  return j;
}

Json regularity_report(const RegularityEstimate& est, const Json& config_echo,
                       std::uint64_t seed) {
  Json j;
  j["meta"] = meta_block(seed, config_echo);
  j["K"] = est.cells_per_axis;
  j["K_theoretical"] = est.cells_theoretical;
  j["J"] = est.j_grid;
  j["tau"] = est.tau;
  j["tau_prime"] = est.tau_prime;
  j["r_prime"] = est.r_prime;
  j["g_hat"] = est.g;
  Json grid = Json::array();
  for (std::size_t i = 0; i < est.h_grid.size(); ++i) {
    Json row;
    row["j"] = i + 1;
    row["Hj"] = est.h_grid[i];
    row["Hhat"] = est.h_hat[i];
    grid.push_back(std::move(row));
  }
  j["H_grid"] = std::move(grid);
  j["j0_hat"] = est.j0;
  j["alpha_hat"] = est.alpha;
  j["C_hat"] = est.c_hat;
  j["L_hat"] = est.l_hat;
  j["flags"] = est.flags;
  Json diag;
  diag["N_cal"] = est.n_cal;
  diag["m_frak"] = est.m_frak;
  diag["balance_ratio"] = est.balance_ratio;
  j["diagnostics"] = std::move(diag);
  return j;
}

std::string csv_with_meta(const std::string& body, std::uint64_t seed, const Json& config_echo) {
  return csv_header_comment(seed, config_echo) + body;
}

}  // namespace fdavp
