#pragma once

#include <json.hpp>
#include <string>

#include "fdavp/inference.hpp"
#include "fdavp/regularity.hpp"
#include "fdavp/simulate.hpp"

namespace fdavp {

using Json = nlohmann::ordered_json;

inline std::string version_string() {
#ifdef FDAVP_VERSION
  return FDAVP_VERSION;
#else
  return "dev";
#endif
}

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// {meta:{D,N,seed,specs}, curves:[{i,t:[[..]],y:[..],x?,eps?}], truth?:{grid,mu}}
Json dataset_to_json(const FunctionalDataset& data);
FunctionalDataset dataset_from_json(const Json& j);

// CSV columns: curve,m,t_1..t_D,y
std::string dataset_to_csv(const FunctionalDataset& data);

// {meta, D, L, index_order:"lex", coefficients:[..], weights:{...}}
Json model_to_json(const FitResult& fit, const Json& config_echo, std::uint64_t seed);
FourierModel model_from_json(const Json& j);

std::string band_to_csv(const BandResult& band, int dim);
std::string band_pointwise_csv(const BandResult& band, int dim);
Json band_sidecar(const BandResult& band, const Json& config_echo, std::uint64_t seed);

Json regularity_report(const RegularityEstimate& est, const Json& config_echo,
                       std::uint64_t seed);

// prepends "# fdavp <version> / # seed / # config" comment lines
std::string csv_with_meta(const std::string& body, std::uint64_t seed, const Json& config_echo);

}  // namespace fdavp
