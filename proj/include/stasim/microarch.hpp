#pragma once

// Array configurations (A x B x C tensor PEs on an M x N grid), the
// analytical cycle model and the structural cost model.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace stasim {

enum class Variant { SA_NCG, SA, STA, STA_DBB };
enum class Gating { off, lane, pe };

std::string to_string(Variant v);
std::string to_string(Gating g);
Variant parse_variant(std::string_view s);
Gating parse_gating(std::string_view s);

struct ArrayConfig {
  Variant variant = Variant::SA;
  std::size_t a = 1;
  std::size_t b = 1;
  std::size_t c = 1;
  std::size_t m = 1;
  std::size_t n = 1;
  std::size_t dbb_nnz = 0;  // STA_DBB only: physical multiplier lanes per dot unit
  Gating gating = Gating::lane;

  bool is_dbb() const { return variant == Variant::STA_DBB; }
  // Physical multiplier lanes per dot-product unit.
  std::size_t lanes() const { return is_dbb() ? dbb_nnz : b; }
  std::size_t tile_rows() const { return m * a; }
  std::size_t tile_cols() const { return n * c; }
  // Gating mode the hardware actually has; SA_NCG has none.
  Gating effective_gating() const { return variant == Variant::SA_NCG ? Gating::off : gating; }

  // Canonical spelling, e.g. "STA_DBB:4x8x4_2x2:nnz=4:gating=lane".
  std::string name() const;

  bool operator==(const ArrayConfig&) const = default;
};

// Parses the canonical spelling produced by ArrayConfig::name(). The nnz and
// gating fields are optional (gating defaults to lane, or off for SA_NCG).
ArrayConfig parse_arch(std::string_view arch_name);

// Every violated rule, one message each. Empty means valid.
std::vector<std::string> validate_config(const ArrayConfig& cfg);

// Throws ConfigError listing all findings.
void require_valid(const ArrayConfig& cfg);

// ceil(log2(b)); 0 for b == 1.
std::size_t index_bits(std::size_t b);

struct CycleModel {
  std::size_t stream = 0;   // ceil(K / B)
  std::size_t skew = 0;     // (M-1) + (N-1)
  std::size_t readout = 0;  // M * A
  std::size_t total = 0;

  bool operator==(const CycleModel&) const = default;
};

CycleModel cycle_count(const ArrayConfig& cfg, std::size_t k);

// Structural resource counts for the whole array. Per-MAC fields divide by
// effective MACs per cycle (M*N*A*B*C, with B the logical width for STA_DBB).
struct CostReport {
  struct PerPe {
    std::size_t effective_macs = 0;
    std::size_t multipliers_8b = 0;
    std::size_t activation_regs = 0;
    std::size_t weight_value_regs = 0;
    std::size_t index_regs = 0;
    std::size_t accumulator_regs = 0;
    std::size_t muxes = 0;
    std::size_t adder_nodes = 0;
  };

  PerPe per_pe;
  std::size_t pe_count = 0;
  std::size_t effective_macs_per_cycle = 0;

  std::size_t multipliers_8b = 0;
  std::size_t adder_nodes = 0;
  std::size_t operand_regs = 0;  // activation + weight value registers, 8 bits each
  std::size_t operand_regs_bits = 0;
  std::size_t accumulator_regs = 0;
  std::size_t accumulator_regs_bits = 0;
  std::size_t index_regs = 0;
  std::size_t index_reg_bits = 0;
  std::size_t mux_count = 0;
  std::size_t mux_width = 0;  // inputs per mux, 0 when there are none

  double multipliers_per_mac = 0;
  double adder_nodes_per_mac = 0;
  double operand_regs_per_mac = 0;
  double operand_bits_per_mac = 0;
  double accumulator_regs_per_mac = 0;
  double accumulator_bits_per_mac = 0;
  double index_bits_per_mac = 0;
  double mux_per_mac = 0;
  double register_bits_per_mac = 0;  // operand + accumulator + index bits
};

// Throws ConfigError for an invalid configuration.
CostReport cost(const ArrayConfig& cfg);

// User-supplied area/power coefficients per resource kind. Recognized kinds:
// multiplier_8b, adder_node, operand_reg_bit, accumulator_reg_bit,
// index_reg_bit, mux_input (one 8-bit mux leg).
struct ResourceWeights {
  struct Coefficients {
    double area = 0;
    double power = 0;
  };
  std::map<std::string, Coefficients> by_kind;

  bool empty() const { return by_kind.empty(); }
};

struct WeightedCost {
  double area = 0;
  double power = 0;
  double area_per_mac = 0;
  double power_per_mac = 0;
};

WeightedCost roll_up(const CostReport& cost, const ResourceWeights& weights);

// Config documents: {"variant", "a", "b", "c", "m", "n", "dbb_nnz", "gating",
// optional "weights": {kind: {"area": x, "power": y}}}.
ArrayConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ArrayConfig& cfg);
ResourceWeights weights_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ResourceWeights& w);
nlohmann::ordered_json to_json(const CycleModel& m);
nlohmann::ordered_json to_json(const CostReport& r);
nlohmann::ordered_json to_json(const WeightedCost& w);

}  // namespace stasim
