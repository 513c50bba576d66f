#include <gtest/gtest.h>

#include <algorithm>

#include "stasim/errors.hpp"
#include "stasim/microarch.hpp"
#include "stasim/netlist.hpp"

using namespace stasim;

namespace {

ArrayConfig make(Variant v, std::size_t a, std::size_t b, std::size_t c, std::size_t m, std::size_t n,
                 std::size_t nnz = 0) {
  ArrayConfig cfg;
  cfg.variant = v;
  cfg.a = a;
  cfg.b = b;
  cfg.c = c;
  cfg.m = m;
  cfg.n = n;
  cfg.dbb_nnz = nnz;
  return cfg;
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, ValidateExamples) {
  EXPECT_TRUE(validate_config(make(Variant::STA, 4, 8, 4, 2, 2)).empty());
  EXPECT_TRUE(mentions(validate_config(make(Variant::SA, 2, 1, 1, 1, 1)), "SA requires A=B=C=1"));
  EXPECT_TRUE(mentions(validate_config(make(Variant::STA_DBB, 2, 4, 2, 2, 2, 5)), "dbb_nnz <= B"));
}

TEST(Config, ValidateListsEveryFinding) {
  ArrayConfig cfg = make(Variant::SA_NCG, 2, 2, 1, 0, 1, 3);
  const auto errors = validate_config(cfg);
  EXPECT_TRUE(mentions(errors, "M and N must be positive"));
  EXPECT_TRUE(mentions(errors, "SA_NCG requires A=B=C=1"));
  EXPECT_TRUE(mentions(errors, "gating must be off"));
  EXPECT_TRUE(mentions(errors, "dbb_nnz applies to STA_DBB only"));
  EXPECT_THROW(require_valid(cfg), ConfigError);
  EXPECT_TRUE(mentions(validate_config(make(Variant::STA_DBB, 1, 4, 1, 1, 1)), "dbb_nnz >= 1"));
  EXPECT_TRUE(mentions(validate_config(make(Variant::STA, 0, 4, 1, 1, 1)), "A, B and C must be positive"));
}

TEST(Config, ParseAndName) {
  const ArrayConfig cfg = parse_arch("STA_DBB:4x8x4_2x2:nnz=4");
  EXPECT_EQ(cfg, make(Variant::STA_DBB, 4, 8, 4, 2, 2, 4));
  EXPECT_EQ(cfg.name(), "STA_DBB:4x8x4_2x2:nnz=4:gating=lane");
  EXPECT_EQ(parse_arch(cfg.name()), cfg);
  EXPECT_EQ(parse_arch("SA_NCG:1x1x1_8x8").effective_gating(), Gating::off);
  EXPECT_EQ(parse_arch("STA:2x2x2_2x2:gating=pe").gating, Gating::pe);
  EXPECT_EQ(parse_variant("STA-DBB"), Variant::STA_DBB);
  EXPECT_THROW(parse_arch("STA:2x2_2x2"), ConfigError);
  EXPECT_THROW(parse_arch("TPU:1x1x1_1x1"), ConfigError);
  EXPECT_THROW(parse_arch("STA:2x2x2_2x2:speed=9"), ConfigError);
  EXPECT_THROW(parse_gating("sometimes"), ConfigError);
}

TEST(Config, JsonDocuments) {
  const auto j = nlohmann::json::parse(R"({"variant":"STA_DBB","a":2,"b":4,"c":2,"m":2,"n":2,"dbb_nnz":2,"gating":"pe"})");
  ArrayConfig expected = make(Variant::STA_DBB, 2, 4, 2, 2, 2, 2);
  expected.gating = Gating::pe;
  EXPECT_EQ(config_from_json(j), expected);
  EXPECT_EQ(config_from_json(nlohmann::json::parse(to_json(expected).dump())), expected);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"a":2})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"variant":"STA","a":"two"})")), ConfigError);
}

TEST(Config, IndexBits) {
  EXPECT_EQ(index_bits(1), 0u);
  EXPECT_EQ(index_bits(2), 1u);
  EXPECT_EQ(index_bits(4), 2u);
  EXPECT_EQ(index_bits(5), 3u);
  EXPECT_EQ(index_bits(8), 3u);
  EXPECT_EQ(index_bits(255), 8u);
}

TEST(Cost, ClassicArray) {
  const CostReport r = cost(make(Variant::SA, 1, 1, 1, 8, 8));
  EXPECT_DOUBLE_EQ(r.operand_regs_per_mac, 2.0);
  EXPECT_DOUBLE_EQ(r.accumulator_bits_per_mac, 32.0);
  EXPECT_DOUBLE_EQ(r.multipliers_per_mac, 1.0);
  EXPECT_EQ(r.effective_macs_per_cycle, 64u);
  EXPECT_EQ(r.mux_count, 0u);
  EXPECT_EQ(r.index_reg_bits, 0u);
}

TEST(Cost, TensorPeHalvesOperandRegisters) {
  const CostReport r = cost(make(Variant::STA, 2, 2, 2, 2, 2));
  EXPECT_DOUBLE_EQ(r.operand_regs_per_mac, 1.0);
  EXPECT_DOUBLE_EQ(r.accumulator_regs_per_mac, 0.5);
}

TEST(Cost, DbbPerPeCounts) {
  const CostReport r = cost(make(Variant::STA_DBB, 2, 4, 2, 2, 2, 2));
  EXPECT_EQ(r.per_pe.effective_macs, 16u);
  EXPECT_EQ(r.per_pe.multipliers_8b, 8u);
  EXPECT_EQ(r.effective_macs_per_cycle, 64u);
  EXPECT_EQ(r.multipliers_8b, 32u);
  EXPECT_EQ(r.per_pe.muxes, 8u);
  EXPECT_EQ(r.mux_width, 4u);
  EXPECT_EQ(r.per_pe.index_regs, 4u);
  EXPECT_EQ(r.index_reg_bits, 4u * 4u * 2u);
}

TEST(Cost, LargeTensorPe) {
  const CostReport r = cost(make(Variant::STA, 4, 8, 4, 2, 2));
  EXPECT_DOUBLE_EQ(r.operand_regs_per_mac, 0.5);
  EXPECT_DOUBLE_EQ(r.accumulator_regs_per_mac, 0.125);
  EXPECT_EQ(r.per_pe.adder_nodes, 4u * 4u * 8u);
}

TEST(Cost, ClosedFormsOverGrid) {
  for (std::size_t a : {1, 2, 4, 8}) {
    for (std::size_t b : {1, 2, 4, 8}) {
      for (std::size_t c : {1, 2, 4, 8}) {
        const CostReport r = cost(make(Variant::STA, a, b, c, 2, 3));
        EXPECT_DOUBLE_EQ(r.operand_regs_per_mac, 1.0 / a + 1.0 / c);
        EXPECT_DOUBLE_EQ(r.accumulator_regs_per_mac, 1.0 / b);
        for (std::size_t nnz = 1; nnz <= b; ++nnz) {
          const CostReport d = cost(make(Variant::STA_DBB, a, b, c, 2, 3, nnz));
          EXPECT_EQ(d.multipliers_8b * b, r.multipliers_8b * nnz);
          EXPECT_EQ(d.effective_macs_per_cycle, r.effective_macs_per_cycle);
        }
      }
    }
  }
}

TEST(Cost, PerMacInvariantToGridSize) {
  const CostReport base = cost(make(Variant::STA_DBB, 4, 8, 4, 1, 1, 3));
  for (std::size_t m : {1, 2, 5}) {
    for (std::size_t n : {1, 3, 4}) {
      const CostReport r = cost(make(Variant::STA_DBB, 4, 8, 4, m, n, 3));
      EXPECT_DOUBLE_EQ(r.register_bits_per_mac, base.register_bits_per_mac);
      EXPECT_DOUBLE_EQ(r.multipliers_per_mac, base.multipliers_per_mac);
      EXPECT_DOUBLE_EQ(r.adder_nodes_per_mac, base.adder_nodes_per_mac);
      EXPECT_DOUBLE_EQ(r.mux_per_mac, base.mux_per_mac);
      EXPECT_EQ(r.multipliers_8b, base.multipliers_8b * m * n);
    }
  }
}

TEST(Cost, MonotoneInTensorShape) {
  double prev_a = 1e9, prev_b = 1e9;
  for (std::size_t x : {1, 2, 4, 8, 16}) {
    const double op = cost(make(Variant::STA, x, 4, 4, 1, 1)).operand_regs_per_mac;
    const double acc = cost(make(Variant::STA, 4, x, 4, 1, 1)).accumulator_regs_per_mac;
    EXPECT_LT(op, prev_a);
    EXPECT_LT(acc, prev_b);
    prev_a = op;
    prev_b = acc;
  }
}

TEST(Cost, FullDensityDbbMatchesDenseExceptIndexing) {
  const CostReport s = cost(make(Variant::STA, 4, 8, 4, 2, 2));
  const CostReport d = cost(make(Variant::STA_DBB, 4, 8, 4, 2, 2, 8));
  EXPECT_EQ(d.multipliers_8b, s.multipliers_8b);
  EXPECT_EQ(d.adder_nodes, s.adder_nodes);
  EXPECT_EQ(d.operand_regs_bits, s.operand_regs_bits);
  EXPECT_EQ(d.accumulator_regs_bits, s.accumulator_regs_bits);
  EXPECT_EQ(d.effective_macs_per_cycle, s.effective_macs_per_cycle);
  EXPECT_GT(d.mux_count, 0u);
  EXPECT_GT(d.index_reg_bits, 0u);
  EXPECT_EQ(s.mux_count, 0u);
  EXPECT_EQ(s.index_reg_bits, 0u);
}

TEST(Cost, RejectsInvalidConfig) { EXPECT_THROW(cost(make(Variant::SA, 2, 2, 2, 1, 1)), ConfigError); }

TEST(Cost, WeightedRollUp) {
  const auto weights = weights_from_json(nlohmann::json::parse(
      R"({"multiplier_8b":{"area":10,"power":2},"accumulator_reg_bit":{"area":1},"mux_input":{"power":0.5}})"));
  const CostReport r = cost(make(Variant::STA_DBB, 2, 4, 2, 1, 1, 2));
  const WeightedCost w = roll_up(r, weights);
  EXPECT_DOUBLE_EQ(w.area, 10.0 * 8 + 4 * 32);
  EXPECT_DOUBLE_EQ(w.power, 2.0 * 8 + 0.5 * 8 * 4);
  EXPECT_DOUBLE_EQ(w.area_per_mac, w.area / 16);
  EXPECT_THROW(weights_from_json(nlohmann::json::parse(R"({"flux_capacitor":{"area":1}})")), ConfigError);
}

TEST(Cycles, Examples) {
  EXPECT_EQ(cycle_count(make(Variant::STA, 2, 2, 2, 2, 2), 4), (CycleModel{2, 2, 4, 8}));
  EXPECT_EQ(cycle_count(make(Variant::SA, 1, 1, 1, 1, 1), 1), (CycleModel{1, 0, 1, 2}));
  EXPECT_EQ(cycle_count(make(Variant::STA_DBB, 2, 4, 2, 2, 2, 2), 8), (CycleModel{2, 2, 4, 8}));
  EXPECT_EQ(cycle_count(make(Variant::STA, 4, 8, 4, 2, 2), 9).stream, 2u);
  EXPECT_THROW(cycle_count(make(Variant::STA, 2, 2, 2, 2, 2), 0), ConfigError);
}

// The netlist is assembled element by element, so agreement with the closed
// forms is a real cross-check rather than a restatement.
TEST(Netlist, MatchesClosedFormsOverGrid) {
  for (std::size_t a : {1, 2, 4, 8}) {
    for (std::size_t b : {1, 2, 4, 8}) {
      for (std::size_t c : {1, 2, 4, 8}) {
        std::vector<ArrayConfig> cfgs = {make(Variant::STA, a, b, c, 2, 2)};
        if (b > 1) cfgs.push_back(make(Variant::STA_DBB, a, b, c, 2, 2, std::max<std::size_t>(1, b / 2)));
        for (const auto& cfg : cfgs) {
          const Netlist net = build_netlist(cfg);
          const CostReport r = cost(cfg);
          const auto macs = static_cast<double>(r.effective_macs_per_cycle);
          const double op = static_cast<double>(net.count(NodeKind::activation_reg) + net.count(NodeKind::weight_value_reg));
          if (!cfg.is_dbb()) {
            EXPECT_DOUBLE_EQ(op / macs, 1.0 / a + 1.0 / c) << cfg.name();
          }
          EXPECT_DOUBLE_EQ(net.count(NodeKind::accumulator_reg) / macs, 1.0 / b) << cfg.name();
          EXPECT_EQ(net.count(NodeKind::multiplier), r.multipliers_8b) << cfg.name();
          EXPECT_EQ(net.count(NodeKind::adder), r.adder_nodes) << cfg.name();
          EXPECT_EQ(net.count(NodeKind::mux), r.mux_count) << cfg.name();
          EXPECT_EQ(net.total_bits(NodeKind::index_reg), r.index_reg_bits) << cfg.name();
          EXPECT_EQ(net.total_bits(NodeKind::accumulator_reg), r.accumulator_regs_bits) << cfg.name();
          EXPECT_EQ(net.total_bits(NodeKind::activation_reg) + net.total_bits(NodeKind::weight_value_reg),
                    r.operand_regs_bits)
              << cfg.name();
        }
      }
    }
  }
}

TEST(Netlist, WiringIsConsistent) {
  const ArrayConfig cfg = make(Variant::STA_DBB, 2, 4, 2, 2, 3, 2);
  const Netlist net = build_netlist(cfg);
  const auto fanin = net.fanin_counts();
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    switch (net.nodes[i].kind) {
      case NodeKind::multiplier:
      case NodeKind::adder:
        EXPECT_EQ(fanin[i], 2u);
        break;
      case NodeKind::mux:
        EXPECT_EQ(fanin[i], cfg.b + 1);  // B activations plus the index select
        break;
      case NodeKind::input_port:
        EXPECT_EQ(fanin[i], 0u);
        break;
      default:
        EXPECT_GE(fanin[i], 1u);
    }
  }
  EXPECT_EQ(net.count(NodeKind::output_port), cfg.tile_cols());
}
