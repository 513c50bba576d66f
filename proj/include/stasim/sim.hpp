#pragma once

// Cycle-accurate, bit-exact simulation of the output-stationary array.
//
// Each cycle every PE first latches operands (activations from the left
// neighbour, weights and indices from the one above; edge PEs from the
// injection ports) and then performs one A x C block of B-wide dot products
// into its stationary accumulators. Row group i of the activation tile is
// injected i cycles late and column group j of the weight tile j cycles late,
// so step s of the K loop reaches PE(i, j) on cycle s + i + j. Once every PE
// has consumed all ceil(K/B) steps, the accumulators drain through per-column
// shift chains, one accumulator row per cycle, bottom row first.
//
// For STA_DBB, each of the dbb_nnz lanes of a dot unit holds one stored
// non-zero weight and its in-block index; the index drives a B:1 mux that
// selects the matching activation. Unused slots carry weight 0, index 0.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "stasim/dbb.hpp"
#include "stasim/matrix.hpp"
#include "stasim/microarch.hpp"

namespace stasim {

// Lane-cycles are classified once per PE per compute cycle:
//   busy   - a real operand pair the multiplier evaluates;
//   gated  - a real operand pair suppressed by clock gating;
//   idle   - no real operand pair: wavefront fill/drain, edge-tile or K
//            padding, or an unused DBB slot.
// busy + gated + idle == lanes * compute_cycles.
struct SimStats {
  Gating gating = Gating::off;
  std::uint64_t cycles = 0;
  std::uint64_t compute_cycles = 0;  // stream + skew phase
  std::uint64_t readout_cycles = 0;
  std::uint64_t effective_macs = 0;
  std::uint64_t lanes = 0;  // physical multiplier lanes in the array
  std::uint64_t lane_busy_cycles = 0;
  std::uint64_t lane_gated_cycles = 0;
  std::uint64_t lane_idle_cycles = 0;
  std::uint64_t lane_stream_idle_cycles = 0;  // idle lanes inside PEs that were processing a step
  std::uint64_t zero_pair_lane_cycles = 0;    // real pairs with a zero operand, whatever the gating
  std::uint64_t pe_stream_cycles = 0;         // PE-cycles spent on a step
  std::uint64_t pe_gated_cycles = 0;
  std::uint64_t tiles_executed = 0;

  double lane_utilization() const;
  SimStats& operator+=(const SimStats& other);
};

struct GatingReport {
  Gating granularity = Gating::lane;
  double lane_gated_fraction = 0;  // gated / (busy + gated)
  double pe_gated_fraction = 0;    // pe_gated / pe_stream (pe granularity only)
};

// Empty when the run had no clock gating.
std::optional<GatingReport> gating_stats(const SimStats& stats);

struct PEState {
  std::vector<std::int8_t> activations;    // A x B
  std::vector<std::int8_t> weight_values;  // lanes x C
  std::vector<std::uint16_t> weight_index;  // lanes x C; for dense arrays lane l reads activation l
  std::vector<std::uint8_t> weight_live;   // lanes x C; slot carries a real weight
  std::vector<std::int32_t> accumulators;  // A x C
  std::int64_t act_step = -1;              // K step held in the activation registers, -1 for a bubble
  std::int64_t weight_step = -1;
};

struct TraceEvent {
  std::uint64_t cycle;
  std::size_t pe_row;
  std::size_t pe_col;
  std::size_t step;
};

struct SimResult {
  AccMatrix result;
  SimStats stats;
  std::vector<TraceEvent> trace;
};

struct Tile {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t rows = 0;  // live rows, <= M*A
  std::size_t cols = 0;  // live columns, <= N*C
};

struct TileSchedule {
  std::size_t tile_rows = 0;
  std::size_t tile_cols = 0;
  std::size_t k = 0;
  std::vector<Tile> tiles;  // row-major over the tile grid
};

TileSchedule make_schedule(const ArrayConfig& cfg, std::size_t mr, std::size_t k, std::size_t nc);

// One array instance; owns PE state and is reused across tiles.
class SystolicArray {
 public:
  explicit SystolicArray(const ArrayConfig& cfg);

  const ArrayConfig& config() const { return cfg_; }
  const PEState& pe(std::size_t i, std::size_t j) const { return pes_[i * cfg_.n + j]; }

  // Runs one output tile. x holds the activation rows [tile.row0, +M*A) and w
  // the weight columns [tile.col0, +N*C); anything past tile.rows/tile.cols
  // (or past the matrix) is zero padding. Writes live outputs into out.
  void run_tile(const Int8Matrix& x, const Int8Matrix* dense_w, const DBBMatrix* dbb_w, const Tile& tile,
                AccMatrix& out, SimStats& stats, std::vector<TraceEvent>* trace);

 private:
  void inject_activations(const Int8Matrix& x, const Tile& tile, std::size_t i, std::int64_t step, PEState& dst) const;
  void inject_weights(const Int8Matrix* dense_w, const DBBMatrix* dbb_w, const Tile& tile, std::size_t j,
                      std::int64_t step, PEState& dst) const;
  void compute(std::size_t i, std::size_t j, const Tile& tile, SimStats& stats);

  ArrayConfig cfg_;
  Gating gating_;
  std::size_t lanes_;
  std::size_t k_ = 0;
  std::vector<PEState> pes_;
};

// Shapes: x (M*A) x K, w K x (N*C). For STA_DBB, dense weights are encoded
// with block size B and bound dbb_nnz first (BoundViolation if they do not
// fit); DBB weights must use block size B and a bound <= dbb_nnz. Other
// variants accept DBB weights by decoding them.
SimResult simulate_tile(const ArrayConfig& cfg, const Int8Matrix& x_tile, const Int8Matrix& w_tile,
                        bool record_trace = false);
SimResult simulate_tile(const ArrayConfig& cfg, const Int8Matrix& x_tile, const DBBMatrix& w_tile,
                        bool record_trace = false);

// Arbitrary MR x K by K x NC GEMM as a sequence of tiles.
SimResult simulate_gemm(const ArrayConfig& cfg, const Int8Matrix& x, const Int8Matrix& w);
SimResult simulate_gemm(const ArrayConfig& cfg, const Int8Matrix& x, const DBBMatrix& w);

nlohmann::ordered_json to_json(const SimStats& s);
nlohmann::ordered_json to_json(const std::optional<GatingReport>& g);

}  // namespace stasim
