#pragma once

// Element-by-element structural graph of an array: every operand register,
// accumulator, multiplier, mux and adder node is instantiated and wired. It
// is built by walking the hardware rather than from closed-form counts, so it
// serves as an independent cross-check for the cost model.

#include <cstddef>
#include <utility>
#include <vector>

#include "stasim/microarch.hpp"

namespace stasim {

enum class NodeKind {
  input_port,
  output_port,
  activation_reg,
  weight_value_reg,
  index_reg,
  accumulator_reg,
  multiplier,
  mux,
  adder,
};

struct NetNode {
  NodeKind kind;
  unsigned bits;  // register/port width; 0 for combinational nodes
  std::size_t pe_row;
  std::size_t pe_col;
};

struct Netlist {
  std::vector<NetNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // driver -> sink

  std::size_t count(NodeKind kind) const;
  std::size_t total_bits(NodeKind kind) const;
  std::vector<std::size_t> fanin_counts() const;
};

Netlist build_netlist(const ArrayConfig& cfg);

}  // namespace stasim
