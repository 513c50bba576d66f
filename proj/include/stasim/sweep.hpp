#pragma once

// Layer sweeps: every (layer, config) pair gets seeded synthetic inputs, a
// full simulation and a cost report, normalized against a baseline config.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stasim/microarch.hpp"

namespace stasim {

inline constexpr int kSweepReportVersion = 1;

struct LayerSpec {
  std::string name;
  std::size_t mr = 0;
  std::size_t k = 0;
  std::size_t nc = 0;
  double weight_density = 1.0;
  double activation_density = 1.0;
};

// Header must be exactly: name,mr,k,nc,weight_density,activation_density
std::vector<LayerSpec> read_layers_csv(std::istream& in);
std::vector<LayerSpec> load_layers_csv(const std::filesystem::path& path);

struct SweepOptions {
  std::vector<ArrayConfig> configs;
  std::string baseline;  // config name; empty selects the first SA 1x1x1
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  bool check_oracle = false;
  ResourceWeights weights;
};

// The three configurations of the headline comparison.
std::vector<ArrayConfig> default_sweep_configs();

// Entries are ordered by layer, then by config, as given. The report does not
// depend on jobs. Throws ConfigError for invalid configs or an unknown baseline.
nlohmann::ordered_json run_sweep(const std::vector<LayerSpec>& layers, const SweepOptions& options);

// Dotted-path flattening of one entry (e.g. "cost.per_mac.multipliers").
std::vector<std::pair<std::string, nlohmann::ordered_json>> flatten(const nlohmann::ordered_json& entry);

// One header row plus one row per entry; numbers are written exactly as the
// JSON serializer writes them.
std::string report_to_csv(const nlohmann::ordered_json& report);
std::string csv_cell(const nlohmann::ordered_json& value);

}  // namespace stasim
