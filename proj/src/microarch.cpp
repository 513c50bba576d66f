#include "stasim/microarch.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "stasim/errors.hpp"

namespace stasim {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

double per_mac(std::size_t count, std::size_t macs) { return static_cast<double>(count) / static_cast<double>(macs); }

constexpr const char* kWeightKinds[] = {"multiplier_8b",       "adder_node",    "operand_reg_bit",
                                        "accumulator_reg_bit", "index_reg_bit", "mux_input"};

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::SA_NCG: return "SA_NCG";
    case Variant::SA: return "SA";
    case Variant::STA: return "STA";
    case Variant::STA_DBB: return "STA_DBB";
  }
  return "?";
}

std::string to_string(Gating g) {
  switch (g) {
    case Gating::off: return "off";
    case Gating::lane: return "lane";
    case Gating::pe: return "pe";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "SA_NCG" || s == "SA-NCG") return Variant::SA_NCG;
  if (s == "SA") return Variant::SA;
  if (s == "STA") return Variant::STA;
  if (s == "STA_DBB" || s == "STA-DBB") return Variant::STA_DBB;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

Gating parse_gating(std::string_view s) {
  if (s == "off") return Gating::off;
  if (s == "lane") return Gating::lane;
  if (s == "pe") return Gating::pe;
  throw ConfigError("unknown gating mode '" + std::string(s) + "'");
}

std::string ArrayConfig::name() const {
  std::ostringstream os;
  os << to_string(variant) << ':' << a << 'x' << b << 'x' << c << '_' << m << 'x' << n;
  if (is_dbb()) os << ":nnz=" << dbb_nnz;
  os << ":gating=" << to_string(gating);
  return os.str();
}

ArrayConfig parse_arch(std::string_view arch_name) {
  const auto parts = split(arch_name, ':');
  if (parts.size() < 2) throw ConfigError("architecture '" + std::string(arch_name) + "' must look like VARIANT:AxBxC_MxN");
  ArrayConfig cfg;
  cfg.variant = parse_variant(parts[0]);
  cfg.gating = cfg.variant == Variant::SA_NCG ? Gating::off : Gating::lane;

  const auto shape = split(parts[1], '_');
  if (shape.size() != 2) throw ConfigError("array shape '" + std::string(parts[1]) + "' must look like AxBxC_MxN");
  const auto pe = split(shape[0], 'x');
  const auto grid = split(shape[1], 'x');
  if (pe.size() != 3 || grid.size() != 2) {
    throw ConfigError("array shape '" + std::string(parts[1]) + "' must look like AxBxC_MxN");
  }
  cfg.a = parse_count(pe[0], "A");
  cfg.b = parse_count(pe[1], "B");
  cfg.c = parse_count(pe[2], "C");
  cfg.m = parse_count(grid[0], "M");
  cfg.n = parse_count(grid[1], "N");

  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto kv = split(parts[i], '=');
    if (kv.size() != 2) throw ConfigError("bad architecture field '" + std::string(parts[i]) + "'");
    if (kv[0] == "nnz") {
      cfg.dbb_nnz = parse_count(kv[1], "nnz");
    } else if (kv[0] == "gating") {
      cfg.gating = parse_gating(kv[1]);
    } else {
      throw ConfigError("unknown architecture field '" + std::string(kv[0]) + "'");
    }
  }
  return cfg;
}

std::vector<std::string> validate_config(const ArrayConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.a == 0 || cfg.b == 0 || cfg.c == 0) errors.emplace_back("A, B and C must be positive");
  if (cfg.m == 0 || cfg.n == 0) errors.emplace_back("M and N must be positive");
  if ((cfg.variant == Variant::SA || cfg.variant == Variant::SA_NCG) && (cfg.a != 1 || cfg.b != 1 || cfg.c != 1)) {
    errors.emplace_back(to_string(cfg.variant) + " requires A=B=C=1");
  }
  if (cfg.variant == Variant::SA_NCG && cfg.gating != Gating::off) {
    errors.emplace_back("SA_NCG has no clock gating; gating must be off");
  }
  if (cfg.is_dbb()) {
    if (cfg.dbb_nnz == 0) errors.emplace_back("STA_DBB requires dbb_nnz >= 1");
    if (cfg.dbb_nnz > cfg.b) errors.emplace_back("dbb_nnz <= B");
    if (cfg.b > 255) errors.emplace_back("STA_DBB requires B <= 255 (DBB block size)");
  } else if (cfg.dbb_nnz != 0) {
    errors.emplace_back("dbb_nnz applies to STA_DBB only");
  }
  if (cfg.m * cfg.a > 4096 || cfg.n * cfg.c > 4096 || cfg.b > 4096) {
    errors.emplace_back("array dimensions are unreasonably large");
  }
  return errors;
}

void require_valid(const ArrayConfig& cfg) {
  const auto errors = validate_config(cfg);
  if (errors.empty()) return;
  std::string msg = "invalid configuration " + cfg.name() + ":";
  for (const auto& e : errors) msg += " " + e + ";";
  msg.pop_back();
  throw ConfigError(msg);
}

std::size_t index_bits(std::size_t b) {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < b) ++bits;
  return bits;
}

CycleModel cycle_count(const ArrayConfig& cfg, std::size_t k) {
  require_valid(cfg);
  if (k == 0) throw ConfigError("reduction dimension K must be positive");
  CycleModel model;
  model.stream = (k + cfg.b - 1) / cfg.b;
  model.skew = (cfg.m - 1) + (cfg.n - 1);
  model.readout = cfg.m * cfg.a;
  model.total = model.stream + model.skew + model.readout;
  return model;
}

CostReport cost(const ArrayConfig& cfg) {
  require_valid(cfg);
  const std::size_t lanes = cfg.lanes();

  CostReport r;
  auto& pe = r.per_pe;
  pe.effective_macs = cfg.a * cfg.b * cfg.c;
  pe.multipliers_8b = cfg.a * lanes * cfg.c;
  pe.activation_regs = cfg.a * cfg.b;
  pe.weight_value_regs = lanes * cfg.c;
  pe.index_regs = cfg.is_dbb() ? lanes * cfg.c : 0;
  pe.accumulator_regs = cfg.a * cfg.c;
  pe.muxes = cfg.is_dbb() ? cfg.a * lanes * cfg.c : 0;
  // Balanced tree of (lanes - 1) two-input nodes plus the accumulate adder.
  pe.adder_nodes = cfg.a * cfg.c * lanes;

  r.pe_count = cfg.m * cfg.n;
  r.effective_macs_per_cycle = r.pe_count * pe.effective_macs;
  r.multipliers_8b = r.pe_count * pe.multipliers_8b;
  r.adder_nodes = r.pe_count * pe.adder_nodes;
  r.operand_regs = r.pe_count * (pe.activation_regs + pe.weight_value_regs);
  r.operand_regs_bits = 8 * r.operand_regs;
  r.accumulator_regs = r.pe_count * pe.accumulator_regs;
  r.accumulator_regs_bits = 32 * r.accumulator_regs;
  r.index_regs = r.pe_count * pe.index_regs;
  r.index_reg_bits = r.index_regs * index_bits(cfg.b);
  r.mux_count = r.pe_count * pe.muxes;
  r.mux_width = cfg.is_dbb() ? cfg.b : 0;

  const std::size_t macs = r.effective_macs_per_cycle;
  r.multipliers_per_mac = per_mac(r.multipliers_8b, macs);
  r.adder_nodes_per_mac = per_mac(r.adder_nodes, macs);
  r.operand_regs_per_mac = per_mac(r.operand_regs, macs);
  r.operand_bits_per_mac = per_mac(r.operand_regs_bits, macs);
  r.accumulator_regs_per_mac = per_mac(r.accumulator_regs, macs);
  r.accumulator_bits_per_mac = per_mac(r.accumulator_regs_bits, macs);
  r.index_bits_per_mac = per_mac(r.index_reg_bits, macs);
  r.mux_per_mac = per_mac(r.mux_count, macs);
  r.register_bits_per_mac = per_mac(r.operand_regs_bits + r.accumulator_regs_bits + r.index_reg_bits, macs);
  return r;
}

WeightedCost roll_up(const CostReport& cost, const ResourceWeights& weights) {
  const std::map<std::string, std::size_t> counts = {
      {"multiplier_8b", cost.multipliers_8b},
      {"adder_node", cost.adder_nodes},
      {"operand_reg_bit", cost.operand_regs_bits},
      {"accumulator_reg_bit", cost.accumulator_regs_bits},
      {"index_reg_bit", cost.index_reg_bits},
      {"mux_input", cost.mux_count * cost.mux_width},
  };
  WeightedCost w;
  for (const auto& [kind, coef] : weights.by_kind) {
    const auto it = counts.find(kind);
    if (it == counts.end()) throw ConfigError("unknown resource kind '" + kind + "' in weights");
    w.area += coef.area * static_cast<double>(it->second);
    w.power += coef.power * static_cast<double>(it->second);
  }
  const auto macs = static_cast<double>(cost.effective_macs_per_cycle);
  w.area_per_mac = w.area / macs;
  w.power_per_mac = w.power / macs;
  return w;
}

ArrayConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config document must be a JSON object");
  try {
    ArrayConfig cfg;
    cfg.variant = parse_variant(j.at("variant").get<std::string>());
    cfg.gating = cfg.variant == Variant::SA_NCG ? Gating::off : Gating::lane;
    cfg.a = j.value("a", std::size_t{1});
    cfg.b = j.value("b", std::size_t{1});
    cfg.c = j.value("c", std::size_t{1});
    cfg.m = j.value("m", std::size_t{1});
    cfg.n = j.value("n", std::size_t{1});
    cfg.dbb_nnz = j.value("dbb_nnz", std::size_t{0});
    if (j.contains("gating")) cfg.gating = parse_gating(j.at("gating").get<std::string>());
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config document: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const ArrayConfig& cfg) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name();
  j["variant"] = to_string(cfg.variant);
  j["a"] = cfg.a;
  j["b"] = cfg.b;
  j["c"] = cfg.c;
  j["m"] = cfg.m;
  j["n"] = cfg.n;
  j["dbb_nnz"] = cfg.dbb_nnz;
  j["gating"] = to_string(cfg.gating);
  return j;
}

ResourceWeights weights_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("weights must be a JSON object");
  ResourceWeights w;
  try {
    for (const auto& [kind, coef] : j.items()) {
      if (std::find(std::begin(kWeightKinds), std::end(kWeightKinds), kind) == std::end(kWeightKinds)) {
        throw ConfigError("unknown resource kind '" + kind + "' in weights");
      }
      w.by_kind[kind] = {coef.value("area", 0.0), coef.value("power", 0.0)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad weights table: ") + e.what());
  }
  return w;
}

nlohmann::ordered_json to_json(const ResourceWeights& w) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [kind, coef] : w.by_kind) j[kind] = {{"area", coef.area}, {"power", coef.power}};
  return j;
}

nlohmann::ordered_json to_json(const CycleModel& m) {
  return {{"stream", m.stream}, {"skew", m.skew}, {"readout", m.readout}, {"total", m.total}};
}

nlohmann::ordered_json to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["per_pe"] = {{"effective_macs", r.per_pe.effective_macs},   {"multipliers_8b", r.per_pe.multipliers_8b},
                 {"activation_regs", r.per_pe.activation_regs}, {"weight_value_regs", r.per_pe.weight_value_regs},
                 {"index_regs", r.per_pe.index_regs},           {"accumulator_regs", r.per_pe.accumulator_regs},
                 {"muxes", r.per_pe.muxes},                     {"adder_nodes", r.per_pe.adder_nodes}};
  j["pe_count"] = r.pe_count;
  j["effective_macs_per_cycle"] = r.effective_macs_per_cycle;
  j["multipliers_8b"] = r.multipliers_8b;
  j["adder_nodes"] = r.adder_nodes;
  j["operand_regs"] = r.operand_regs;
  j["operand_regs_bits"] = r.operand_regs_bits;
  j["accumulator_regs"] = r.accumulator_regs;
  j["accumulator_regs_bits"] = r.accumulator_regs_bits;
  j["index_regs"] = r.index_regs;
  j["index_reg_bits"] = r.index_reg_bits;
  j["mux_count"] = r.mux_count;
  j["mux_width"] = r.mux_width;
  j["per_mac"] = {{"multipliers", r.multipliers_per_mac},
                  {"adder_nodes", r.adder_nodes_per_mac},
                  {"operand_regs", r.operand_regs_per_mac},
                  {"operand_bits", r.operand_bits_per_mac},
                  {"accumulator_regs", r.accumulator_regs_per_mac},
                  {"accumulator_bits", r.accumulator_bits_per_mac},
                  {"index_bits", r.index_bits_per_mac},
                  {"muxes", r.mux_per_mac},
                  {"register_bits", r.register_bits_per_mac}};
  return j;
}

nlohmann::ordered_json to_json(const WeightedCost& w) {
  return {{"area", w.area}, {"power", w.power}, {"area_per_mac", w.area_per_mac}, {"power_per_mac", w.power_per_mac}};
}

}  // namespace stasim
