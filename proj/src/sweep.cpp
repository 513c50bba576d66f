#include "stasim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <sstream>
#include <thread>

#include "stasim/dbb.hpp"
#include "stasim/matrix.hpp"
#include "stasim/reference.hpp"
#include "stasim/sim.hpp"

namespace stasim {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kLayerHeader = "name,mr,k,nc,weight_density,activation_density";
constexpr const char* kNormalization =
    "ratio = baseline_metric / candidate_metric, metrics per effective MAC (iso-throughput); higher is better";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_field(const std::string& s, std::size_t line_no, const char* what) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (!in || in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("layer CSV line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
  return v;
}

SparsityProfile profile_for(double density, std::uint64_t seed) {
  return density >= 1.0 ? SparsityProfile::dense(seed) : SparsityProfile::random(density, seed);
}

ojson ratio(double baseline, double candidate) {
  if (candidate == 0.0) return nullptr;
  return baseline / candidate;
}

struct Metrics {
  double multipliers_per_mac;
  double register_bits_per_mac;
  double adder_nodes_per_mac;
  double busy_lane_cycles_per_mac;
  double weight_footprint_bytes;
  double weighted_area_per_mac;
  double weighted_power_per_mac;
};

struct Job {
  ojson entry;
  bool ok = false;
  Metrics metrics{};
};

Job run_job(const LayerSpec& layer, std::size_t layer_index, const ArrayConfig& cfg, const SweepOptions& opt) {
  Job job;
  ojson& e = job.entry;
  e["layer"] = layer.name;
  e["config"] = cfg.name();
  try {
    if (layer.mr == 0 || layer.k == 0 || layer.nc == 0) throw ShapeError("layer dimensions must be positive");
    if (layer.mr > kMaxDim || layer.k > kMaxDim || layer.nc > kMaxDim) throw ShapeError("layer dimension too large");
    if (!(layer.weight_density > 0 && layer.weight_density <= 1) ||
        !(layer.activation_density > 0 && layer.activation_density <= 1)) {
      throw ConfigError("layer densities must lie in (0, 1]");
    }

    const Int8Matrix x = generate(layer.mr, layer.k, profile_for(layer.activation_density, mix_seed(opt.seed, 2 * layer_index)));
    Int8Matrix w = generate(layer.k, layer.nc, profile_for(layer.weight_density, mix_seed(opt.seed, 2 * layer_index + 1)));

    SimResult sim{AccMatrix(1, 1), {}, {}};
    FootprintReport fp;
    if (cfg.is_dbb()) {
      w = prune_to_dbb(w, cfg.b, cfg.dbb_nnz);
      const DBBMatrix d = encode(w, cfg.b, cfg.dbb_nnz);
      sim = simulate_gemm(cfg, x, d);
      fp = footprint(d);
    } else {
      sim = simulate_gemm(cfg, x, w);
      fp.dense_bytes = fp.compressed_bytes = fp.value_bytes = w.size();
    }

    if (opt.check_oracle && !(sim.result == reference::oracle_gemm(x, w))) {
      throw std::runtime_error("oracle mismatch");
    }

    const CostReport c = cost(cfg);
    const CycleModel cm = cycle_count(cfg, layer.k);
    const auto gating = gating_stats(sim.stats);
    const auto macs = static_cast<double>(sim.stats.effective_macs);
    const std::uint64_t real = sim.stats.lane_busy_cycles + sim.stats.lane_gated_cycles;

    e["status"] = "ok";
    e["error"] = nullptr;
    e["checksum"] = checksum_hex(sim.result);
    e["oracle_checked"] = opt.check_oracle;
    e["cycles"] = sim.stats.cycles;
    e["tiles"] = sim.stats.tiles_executed;
    e["cycle_model"] = to_json(cm);
    e["effective_macs"] = sim.stats.effective_macs;
    e["lane_utilization"] = sim.stats.lane_utilization();
    e["lane_gated_fraction"] = gating ? ojson(gating->lane_gated_fraction) : ojson(nullptr);
    e["pe_gated_fraction"] = gating && gating->granularity == Gating::pe ? ojson(gating->pe_gated_fraction) : ojson(nullptr);
    e["zero_pair_fraction"] =
        real == 0 ? 0.0 : static_cast<double>(sim.stats.zero_pair_lane_cycles) / static_cast<double>(real);
    e["busy_lane_cycles_per_mac"] = static_cast<double>(sim.stats.lane_busy_cycles) / macs;
    e["weight_density"] = static_cast<double>(count_nonzeros(w)) / static_cast<double>(w.size());
    e["footprint"] = {{"dense_bytes", fp.dense_bytes},
                      {"compressed_bytes", fp.compressed_bytes},
                      {"ratio", static_cast<double>(fp.compressed_bytes) / static_cast<double>(fp.dense_bytes)}};
    e["cost"] = {{"multipliers_8b", c.multipliers_8b},
                 {"effective_macs_per_cycle", c.effective_macs_per_cycle},
                 {"per_pe_multipliers", c.per_pe.multipliers_8b},
                 {"per_pe_effective_macs", c.per_pe.effective_macs},
                 {"multipliers_per_mac", c.multipliers_per_mac},
                 {"operand_regs_per_mac", c.operand_regs_per_mac},
                 {"accumulator_regs_per_mac", c.accumulator_regs_per_mac},
                 {"register_bits_per_mac", c.register_bits_per_mac},
                 {"adder_nodes_per_mac", c.adder_nodes_per_mac},
                 {"mux_per_mac", c.mux_per_mac}};

    job.metrics.multipliers_per_mac = c.multipliers_per_mac;
    job.metrics.register_bits_per_mac = c.register_bits_per_mac;
    job.metrics.adder_nodes_per_mac = c.adder_nodes_per_mac;
    job.metrics.busy_lane_cycles_per_mac = static_cast<double>(sim.stats.lane_busy_cycles) / macs;
    job.metrics.weight_footprint_bytes = static_cast<double>(fp.compressed_bytes);
    if (!opt.weights.empty()) {
      const WeightedCost wc = roll_up(c, opt.weights);
      e["weighted"] = to_json(wc);
      job.metrics.weighted_area_per_mac = wc.area_per_mac;
      job.metrics.weighted_power_per_mac = wc.power_per_mac;
    }
    job.ok = true;
  } catch (const std::exception& ex) {
    e["status"] = "error";
    e["error"] = ex.what();
  }
  return job;
}

void flatten_into(const std::string& prefix, const ojson& value, std::vector<std::pair<std::string, ojson>>& out) {
  if (value.is_object()) {
    for (const auto& [key, child] : value.items()) flatten_into(prefix.empty() ? key : prefix + "." + key, child, out);
  } else {
    out.emplace_back(prefix, value);
  }
}

}  // namespace

std::vector<LayerSpec> read_layers_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("layer CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLayerHeader) throw FormatError(std::string("layer CSV header must be '") + kLayerHeader + "'");

  std::vector<LayerSpec> layers;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 6) throw FormatError("layer CSV line " + std::to_string(line_no) + ": expected 6 fields");
    LayerSpec l;
    l.name = cells[0];
    l.mr = parse_field<std::size_t>(cells[1], line_no, "mr");
    l.k = parse_field<std::size_t>(cells[2], line_no, "k");
    l.nc = parse_field<std::size_t>(cells[3], line_no, "nc");
    l.weight_density = parse_field<double>(cells[4], line_no, "weight_density");
    l.activation_density = parse_field<double>(cells[5], line_no, "activation_density");
    layers.push_back(std::move(l));
  }
  return layers;
}

std::vector<LayerSpec> load_layers_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_layers_csv(in);
}

std::vector<ArrayConfig> default_sweep_configs() {
  return {parse_arch("SA:1x1x1_8x8"), parse_arch("STA:4x8x4_2x2"), parse_arch("STA_DBB:4x8x4_2x2:nnz=4")};
}

nlohmann::ordered_json run_sweep(const std::vector<LayerSpec>& layers, const SweepOptions& options) {
  SweepOptions opt = options;
  if (opt.configs.empty()) opt.configs = default_sweep_configs();
  for (const auto& cfg : opt.configs) require_valid(cfg);

  std::size_t baseline = opt.configs.size();
  if (opt.baseline.empty()) {
    for (std::size_t i = 0; i < opt.configs.size(); ++i) {
      const auto& c = opt.configs[i];
      if (c.variant == Variant::SA && c.a == 1 && c.b == 1 && c.c == 1) {
        baseline = i;
        break;
      }
    }
    if (baseline == opt.configs.size()) {
      opt.configs.insert(opt.configs.begin(), parse_arch("SA:1x1x1_8x8"));
      baseline = 0;
    }
  } else {
    for (std::size_t i = 0; i < opt.configs.size(); ++i) {
      if (opt.configs[i].name() == opt.baseline) baseline = i;
    }
    if (baseline == opt.configs.size()) throw ConfigError("baseline '" + opt.baseline + "' is not among the configs");
  }

  const std::size_t ncfg = opt.configs.size();
  std::vector<Job> jobs(layers.size() * ncfg);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx; (idx = next.fetch_add(1)) < jobs.size();) {
      jobs[idx] = run_job(layers[idx / ncfg], idx / ncfg, opt.configs[idx % ncfg], opt);
    }
  };
  {
    const std::size_t n = std::max<std::size_t>(1, std::min(opt.jobs, jobs.size()));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }

  ojson report;
  report["schema"] = "stasim-sweep-report";
  report["version"] = kSweepReportVersion;
  report["seed"] = opt.seed;
  report["baseline"] = opt.configs[baseline].name();
  report["normalization"] = kNormalization;
  report["check_oracle"] = opt.check_oracle;
  report["configs"] = ojson::array();
  for (const auto& cfg : opt.configs) report["configs"].push_back(to_json(cfg));
  report["weights"] = to_json(opt.weights);
  report["layers"] = ojson::array();
  for (const auto& l : layers) {
    report["layers"].push_back({{"name", l.name},
                                {"mr", l.mr},
                                {"k", l.k},
                                {"nc", l.nc},
                                {"weight_density", l.weight_density},
                                {"activation_density", l.activation_density}});
  }

  report["entries"] = ojson::array();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Job& base = jobs[li * ncfg + baseline];
    for (std::size_t ci = 0; ci < ncfg; ++ci) {
      Job& job = jobs[li * ncfg + ci];
      if (job.ok) {
        ojson r = ojson::object();
        const bool have = base.ok;
        const Metrics& b = base.metrics;
        const Metrics& m = job.metrics;
        auto put = [&](const char* key, double bv, double cv) { r[key] = have ? ratio(bv, cv) : ojson(nullptr); };
        put("multipliers_per_mac", b.multipliers_per_mac, m.multipliers_per_mac);
        put("register_bits_per_mac", b.register_bits_per_mac, m.register_bits_per_mac);
        put("adder_nodes_per_mac", b.adder_nodes_per_mac, m.adder_nodes_per_mac);
        put("busy_lane_cycles_per_mac", b.busy_lane_cycles_per_mac, m.busy_lane_cycles_per_mac);
        put("weight_footprint_bytes", b.weight_footprint_bytes, m.weight_footprint_bytes);
        if (!opt.weights.empty()) {
          put("weighted_area_per_mac", b.weighted_area_per_mac, m.weighted_area_per_mac);
          put("weighted_power_per_mac", b.weighted_power_per_mac, m.weighted_power_per_mac);
        }
        job.entry["ratios"] = std::move(r);
      }
      report["entries"].push_back(std::move(job.entry));
    }
  }
  return report;
}

std::vector<std::pair<std::string, nlohmann::ordered_json>> flatten(const nlohmann::ordered_json& entry) {
  std::vector<std::pair<std::string, ojson>> out;
  flatten_into("", entry, out);
  return out;
}

std::string csv_cell(const nlohmann::ordered_json& value) {
  if (value.is_null()) return "";
  if (!value.is_string()) return value.dump();
  const auto s = value.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

std::string report_to_csv(const nlohmann::ordered_json& report) {
  std::vector<std::string> columns;
  std::vector<std::vector<std::pair<std::string, ojson>>> rows;
  for (const auto& entry : report.at("entries")) {
    rows.push_back(flatten(entry));
    for (const auto& [key, value] : rows.back()) {
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
    }
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out << ',';
      for (const auto& [key, value] : row) {
        if (key == columns[i]) {
          out << csv_cell(value);
          break;
        }
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace stasim
