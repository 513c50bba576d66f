#include "stasim/netlist.hpp"

#include <cstdint>

namespace stasim {

std::size_t Netlist::count(NodeKind kind) const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.kind == kind;
  return n;
}

std::size_t Netlist::total_bits(NodeKind kind) const {
  std::size_t n = 0;
  for (const auto& node : nodes) {
    if (node.kind == kind) n += node.bits;
  }
  return n;
}

std::vector<std::size_t> Netlist::fanin_counts() const {
  std::vector<std::size_t> fanin(nodes.size(), 0);
  for (const auto& [from, to] : edges) ++fanin[to];
  return fanin;
}

Netlist build_netlist(const ArrayConfig& cfg) {
  require_valid(cfg);
  const bool dbb = cfg.is_dbb();
  const std::size_t lanes = cfg.lanes();
  const unsigned idx_bits = static_cast<unsigned>(index_bits(cfg.b));

  Netlist net;
  auto add = [&](NodeKind kind, unsigned bits, std::size_t i, std::size_t j) {
    net.nodes.push_back({kind, bits, i, j});
    return net.nodes.size() - 1;
  };
  auto wire = [&](std::size_t from, std::size_t to) { net.edges.emplace_back(from, to); };

  // Per-PE register handles, indexed [pe][element].
  const std::size_t pes = cfg.m * cfg.n;
  std::vector<std::vector<std::size_t>> act(pes), wval(pes), widx(pes), acc(pes);
  auto pe_id = [&](std::size_t i, std::size_t j) { return i * cfg.n + j; };

  for (std::size_t i = 0; i < cfg.m; ++i) {
    for (std::size_t j = 0; j < cfg.n; ++j) {
      const std::size_t p = pe_id(i, j);

      for (std::size_t a = 0; a < cfg.a; ++a) {
        for (std::size_t k = 0; k < cfg.b; ++k) {
          const std::size_t reg = add(NodeKind::activation_reg, 8, i, j);
          const std::size_t src =
              j == 0 ? add(NodeKind::input_port, 8, i, j) : act[pe_id(i, j - 1)][a * cfg.b + k];
          wire(src, reg);
          act[p].push_back(reg);
        }
      }

      for (std::size_t l = 0; l < lanes; ++l) {
        for (std::size_t c = 0; c < cfg.c; ++c) {
          const std::size_t reg = add(NodeKind::weight_value_reg, 8, i, j);
          wire(i == 0 ? add(NodeKind::input_port, 8, i, j) : wval[pe_id(i - 1, j)][l * cfg.c + c], reg);
          wval[p].push_back(reg);
          if (dbb) {
            const std::size_t ireg = add(NodeKind::index_reg, idx_bits, i, j);
            wire(i == 0 ? add(NodeKind::input_port, idx_bits, i, j) : widx[pe_id(i - 1, j)][l * cfg.c + c], ireg);
            widx[p].push_back(ireg);
          }
        }
      }

      for (std::size_t a = 0; a < cfg.a; ++a) {
        for (std::size_t c = 0; c < cfg.c; ++c) {
          std::vector<std::size_t> terms;
          for (std::size_t l = 0; l < lanes; ++l) {
            const std::size_t mul = add(NodeKind::multiplier, 0, i, j);
            if (dbb) {
              const std::size_t mux = add(NodeKind::mux, 0, i, j);
              for (std::size_t k = 0; k < cfg.b; ++k) wire(act[p][a * cfg.b + k], mux);
              wire(widx[p][l * cfg.c + c], mux);
              wire(mux, mul);
            } else {
              wire(act[p][a * cfg.b + l], mul);
            }
            wire(wval[p][l * cfg.c + c], mul);
            terms.push_back(mul);
          }
          while (terms.size() > 1) {
            std::vector<std::size_t> next;
            for (std::size_t t = 0; t + 1 < terms.size(); t += 2) {
              const std::size_t node = add(NodeKind::adder, 0, i, j);
              wire(terms[t], node);
              wire(terms[t + 1], node);
              next.push_back(node);
            }
            if (terms.size() % 2) next.push_back(terms.back());
            terms.swap(next);
          }
          const std::size_t reg = add(NodeKind::accumulator_reg, 32, i, j);
          const std::size_t sum = add(NodeKind::adder, 0, i, j);
          wire(terms.front(), sum);
          wire(reg, sum);
          wire(sum, reg);
          acc[p].push_back(reg);
        }
      }
    }
  }

  // Readout shift chains run down each accumulator column.
  for (std::size_t j = 0; j < cfg.n; ++j) {
    for (std::size_t c = 0; c < cfg.c; ++c) {
      std::size_t prev = SIZE_MAX;
      for (std::size_t i = 0; i < cfg.m; ++i) {
        for (std::size_t a = 0; a < cfg.a; ++a) {
          const std::size_t reg = acc[pe_id(i, j)][a * cfg.c + c];
          if (prev != SIZE_MAX) wire(prev, reg);
          prev = reg;
        }
      }
      wire(prev, add(NodeKind::output_port, 32, cfg.m - 1, j));
    }
  }
  return net;
}

}  // namespace stasim
