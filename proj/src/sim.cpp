#include "stasim/sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace stasim {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void check_dbb_alignment(const ArrayConfig& cfg, const DBBMatrix& w) {
  if (w.block_size() != cfg.b) {
    throw ShapeError("DBB block size " + std::to_string(w.block_size()) + " does not match array B=" +
                     std::to_string(cfg.b));
  }
  if (w.nnz_bound() > cfg.dbb_nnz) {
    throw ShapeError("DBB bound " + std::to_string(w.nnz_bound()) + " exceeds the array's " +
                     std::to_string(cfg.dbb_nnz) + " lanes per dot unit");
  }
}

}  // namespace

double SimStats::lane_utilization() const {
  const std::uint64_t total = lane_busy_cycles + lane_gated_cycles + lane_idle_cycles;
  return total == 0 ? 0.0 : static_cast<double>(lane_busy_cycles) / static_cast<double>(total);
}

SimStats& SimStats::operator+=(const SimStats& o) {
  cycles += o.cycles;
  compute_cycles += o.compute_cycles;
  readout_cycles += o.readout_cycles;
  effective_macs += o.effective_macs;
  lanes = std::max(lanes, o.lanes);
  lane_busy_cycles += o.lane_busy_cycles;
  lane_gated_cycles += o.lane_gated_cycles;
  lane_idle_cycles += o.lane_idle_cycles;
  lane_stream_idle_cycles += o.lane_stream_idle_cycles;
  zero_pair_lane_cycles += o.zero_pair_lane_cycles;
  pe_stream_cycles += o.pe_stream_cycles;
  pe_gated_cycles += o.pe_gated_cycles;
  tiles_executed += o.tiles_executed;
  return *this;
}

std::optional<GatingReport> gating_stats(const SimStats& s) {
  if (s.gating == Gating::off) return std::nullopt;
  GatingReport r;
  r.granularity = s.gating;
  const std::uint64_t real = s.lane_busy_cycles + s.lane_gated_cycles;
  r.lane_gated_fraction = real == 0 ? 0.0 : static_cast<double>(s.lane_gated_cycles) / static_cast<double>(real);
  if (s.gating == Gating::pe && s.pe_stream_cycles > 0) {
    r.pe_gated_fraction = static_cast<double>(s.pe_gated_cycles) / static_cast<double>(s.pe_stream_cycles);
  }
  return r;
}

TileSchedule make_schedule(const ArrayConfig& cfg, std::size_t mr, std::size_t k, std::size_t nc) {
  if (mr == 0 || k == 0 || nc == 0) throw ShapeError("GEMM dimensions must be positive");
  TileSchedule sched;
  sched.tile_rows = cfg.tile_rows();
  sched.tile_cols = cfg.tile_cols();
  sched.k = k;
  for (std::size_t r = 0; r < mr; r += sched.tile_rows) {
    for (std::size_t c = 0; c < nc; c += sched.tile_cols) {
      sched.tiles.push_back({r, c, std::min(sched.tile_rows, mr - r), std::min(sched.tile_cols, nc - c)});
    }
  }
  return sched;
}

SystolicArray::SystolicArray(const ArrayConfig& cfg) : cfg_(cfg) {
  require_valid(cfg_);
  gating_ = cfg_.effective_gating();
  lanes_ = cfg_.lanes();
  pes_.resize(cfg_.m * cfg_.n);
  for (auto& pe : pes_) {
    pe.activations.assign(cfg_.a * cfg_.b, 0);
    pe.weight_values.assign(lanes_ * cfg_.c, 0);
    pe.weight_index.assign(lanes_ * cfg_.c, 0);
    pe.weight_live.assign(lanes_ * cfg_.c, 0);
    pe.accumulators.assign(cfg_.a * cfg_.c, 0);
  }
}

void SystolicArray::inject_activations(const Int8Matrix& x, const Tile& tile, std::size_t i, std::int64_t step,
                                       PEState& dst) const {
  const auto steps = static_cast<std::int64_t>(ceil_div(k_, cfg_.b));
  if (step < 0 || step >= steps) {
    std::fill(dst.activations.begin(), dst.activations.end(), 0);
    dst.act_step = -1;
    return;
  }
  const std::size_t k0 = static_cast<std::size_t>(step) * cfg_.b;
  for (std::size_t a = 0; a < cfg_.a; ++a) {
    const std::size_t local = i * cfg_.a + a;
    const std::size_t row = tile.row0 + local;
    for (std::size_t kb = 0; kb < cfg_.b; ++kb) {
      const std::size_t k = k0 + kb;
      dst.activations[a * cfg_.b + kb] = (local < tile.rows && k < k_) ? x(row, k) : 0;
    }
  }
  dst.act_step = step;
}

void SystolicArray::inject_weights(const Int8Matrix* dense_w, const DBBMatrix* dbb_w, const Tile& tile, std::size_t j,
                                   std::int64_t step, PEState& dst) const {
  std::fill(dst.weight_values.begin(), dst.weight_values.end(), 0);
  std::fill(dst.weight_index.begin(), dst.weight_index.end(), 0);
  std::fill(dst.weight_live.begin(), dst.weight_live.end(), 0);
  const auto steps = static_cast<std::int64_t>(ceil_div(k_, cfg_.b));
  if (step < 0 || step >= steps) {
    dst.weight_step = -1;
    return;
  }
  const auto s = static_cast<std::size_t>(step);
  for (std::size_t c = 0; c < cfg_.c; ++c) {
    const std::size_t local = j * cfg_.c + c;
    if (local >= tile.cols) continue;
    const std::size_t col = tile.col0 + local;
    if (dbb_w) {
      const auto values = dbb_w->values(col, s);
      std::size_t slot = 0;
      for (std::size_t kb = 0; kb < cfg_.b && slot < lanes_; ++kb) {
        if (!dbb_w->bit(col, s, kb)) continue;
        dst.weight_values[slot * cfg_.c + c] = values[slot];
        dst.weight_index[slot * cfg_.c + c] = static_cast<std::uint16_t>(kb);
        dst.weight_live[slot * cfg_.c + c] = 1;
        ++slot;
      }
    } else {
      for (std::size_t l = 0; l < lanes_; ++l) {
        const std::size_t k = s * cfg_.b + l;
        dst.weight_index[l * cfg_.c + c] = static_cast<std::uint16_t>(l);
        if (k < k_) {
          dst.weight_values[l * cfg_.c + c] = (*dense_w)(k, col);
          dst.weight_live[l * cfg_.c + c] = 1;
        }
      }
    }
  }
  dst.weight_step = step;
}

void SystolicArray::compute(std::size_t i, std::size_t j, const Tile& tile, SimStats& stats) {
  PEState& pe = pes_[i * cfg_.n + j];
  const std::uint64_t pe_lanes = cfg_.a * lanes_ * cfg_.c;
  if (pe.act_step < 0 || pe.weight_step < 0) {
    if (pe.act_step != pe.weight_step) throw std::logic_error("operand wavefronts out of alignment");
    stats.lane_idle_cycles += pe_lanes;
    return;
  }
  if (pe.act_step != pe.weight_step) throw std::logic_error("operand wavefronts out of alignment");

  const auto s = static_cast<std::size_t>(pe.act_step);
  const std::size_t live_rows = std::min(cfg_.a, tile.rows > i * cfg_.a ? tile.rows - i * cfg_.a : 0);
  const std::size_t live_cols = std::min(cfg_.c, tile.cols > j * cfg_.c ? tile.cols - j * cfg_.c : 0);
  const std::size_t live_k = std::min(cfg_.b, k_ - s * cfg_.b);
  stats.effective_macs += live_rows * live_k * live_cols;

  std::uint64_t real = 0;
  std::uint64_t zero_pairs = 0;
  bool any_nonzero_pair = false;
  for (std::size_t a = 0; a < cfg_.a; ++a) {
    const std::int8_t* act = pe.activations.data() + a * cfg_.b;
    for (std::size_t c = 0; c < cfg_.c; ++c) {
      std::uint32_t sum = 0;
      for (std::size_t l = 0; l < lanes_; ++l) {
        const std::size_t slot = l * cfg_.c + c;
        const int xv = act[pe.weight_index[slot]];
        const int wv = pe.weight_values[slot];
        sum += static_cast<std::uint32_t>(xv * wv);
        const bool zero = xv == 0 || wv == 0;
        any_nonzero_pair |= !zero;
        if (a < live_rows && pe.weight_live[slot]) {
          ++real;
          zero_pairs += zero;
        }
      }
      auto& acc = pe.accumulators[a * cfg_.c + c];
      acc = static_cast<std::int32_t>(static_cast<std::uint32_t>(acc) + sum);
    }
  }

  ++stats.pe_stream_cycles;
  stats.zero_pair_lane_cycles += zero_pairs;
  stats.lane_idle_cycles += pe_lanes - real;
  stats.lane_stream_idle_cycles += pe_lanes - real;
  switch (gating_) {
    case Gating::off:
      stats.lane_busy_cycles += real;
      break;
    case Gating::lane:
      stats.lane_busy_cycles += real - zero_pairs;
      stats.lane_gated_cycles += zero_pairs;
      break;
    case Gating::pe:
      if (any_nonzero_pair) {
        stats.lane_busy_cycles += real;
      } else {
        ++stats.pe_gated_cycles;
        stats.lane_gated_cycles += real;
      }
      break;
  }
}

void SystolicArray::run_tile(const Int8Matrix& x, const Int8Matrix* dense_w, const DBBMatrix* dbb_w, const Tile& tile,
                             AccMatrix& out, SimStats& stats, std::vector<TraceEvent>* trace) {
  k_ = dense_w ? dense_w->rows() : dbb_w->rows();
  const std::size_t m = cfg_.m;
  const std::size_t n = cfg_.n;
  for (auto& pe : pes_) {
    std::fill(pe.accumulators.begin(), pe.accumulators.end(), 0);
    pe.act_step = -1;
    pe.weight_step = -1;
  }

  SimStats local;
  local.gating = gating_;
  local.lanes = m * n * cfg_.a * lanes_ * cfg_.c;

  const std::uint64_t steps_needed = m * n * ceil_div(k_, cfg_.b);
  std::uint64_t steps_done = 0;
  std::uint64_t cycle = 0;
  while (steps_done < steps_needed) {
    const auto t = static_cast<std::int64_t>(cycle);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = n - 1; j > 0; --j) {
        PEState& dst = pes_[i * n + j];
        const PEState& src = pes_[i * n + j - 1];
        dst.activations = src.activations;
        dst.act_step = src.act_step;
      }
      inject_activations(x, tile, i, t - static_cast<std::int64_t>(i), pes_[i * n]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = m - 1; i > 0; --i) {
        PEState& dst = pes_[i * n + j];
        const PEState& src = pes_[(i - 1) * n + j];
        dst.weight_values = src.weight_values;
        dst.weight_index = src.weight_index;
        dst.weight_live = src.weight_live;
        dst.weight_step = src.weight_step;
      }
      inject_weights(dense_w, dbb_w, tile, j, t - static_cast<std::int64_t>(j), pes_[j]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const PEState& pe = pes_[i * n + j];
        if (pe.act_step >= 0) {
          ++steps_done;
          if (trace) trace->push_back({cycle, i, j, static_cast<std::size_t>(pe.act_step)});
        }
        compute(i, j, tile, local);
      }
    }
    ++cycle;
  }
  local.compute_cycles = cycle;

  // Drain: the bottom accumulator row of each column leaves the array and
  // every row above moves down one place.
  const std::size_t chain = m * cfg_.a;
  for (std::size_t r = 0; r < chain; ++r) {
    const std::size_t row = chain - 1 - r;
    if (row < tile.rows) {
      for (std::size_t j = 0; j < n; ++j) {
        const PEState& bottom = pes_[(m - 1) * n + j];
        for (std::size_t c = 0; c < cfg_.c; ++c) {
          const std::size_t col = j * cfg_.c + c;
          if (col < tile.cols) out(tile.row0 + row, tile.col0 + col) = bottom.accumulators[(cfg_.a - 1) * cfg_.c + c];
        }
      }
    }
    for (std::size_t i = m; i-- > 0;) {
      for (std::size_t j = 0; j < n; ++j) {
        auto& acc = pes_[i * n + j].accumulators;
        for (std::size_t a = cfg_.a - 1; a > 0; --a) {
          std::copy_n(acc.begin() + static_cast<std::ptrdiff_t>((a - 1) * cfg_.c), cfg_.c,
                      acc.begin() + static_cast<std::ptrdiff_t>(a * cfg_.c));
        }
        if (i == 0) {
          std::fill_n(acc.begin(), cfg_.c, 0);
        } else {
          const auto& above = pes_[(i - 1) * n + j].accumulators;
          std::copy_n(above.begin() + static_cast<std::ptrdiff_t>((cfg_.a - 1) * cfg_.c), cfg_.c, acc.begin());
        }
      }
    }
    ++cycle;
  }
  local.readout_cycles = chain;
  local.cycles = cycle;
  local.tiles_executed = 1;
  stats += local;
  stats.gating = gating_;
}

namespace {

SimResult run_gemm(const ArrayConfig& cfg, const Int8Matrix& x, const Int8Matrix* dense_w, const DBBMatrix* dbb_w,
                   bool record_trace) {
  const std::size_t k = dense_w ? dense_w->rows() : dbb_w->rows();
  const std::size_t nc = dense_w ? dense_w->cols() : dbb_w->cols();
  if (x.cols() != k) {
    throw ShapeError("inner dimensions disagree: x is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     ", w has " + std::to_string(k) + " rows");
  }
  SystolicArray array(cfg);
  const TileSchedule sched = make_schedule(cfg, x.rows(), k, nc);
  SimResult res{AccMatrix(x.rows(), nc), SimStats{}, {}};
  res.stats.gating = cfg.effective_gating();
  for (const Tile& tile : sched.tiles) {
    array.run_tile(x, dense_w, dbb_w, tile, res.result, res.stats, record_trace ? &res.trace : nullptr);
  }
  return res;
}

SimResult dispatch(const ArrayConfig& cfg, const Int8Matrix& x, const Int8Matrix& w, bool record_trace) {
  require_valid(cfg);
  if (cfg.is_dbb()) {
    if (x.cols() != w.rows()) {
      throw ShapeError("inner dimensions disagree: x has " + std::to_string(x.cols()) + " columns, w has " +
                       std::to_string(w.rows()) + " rows");
    }
    const DBBMatrix d = encode(w, cfg.b, cfg.dbb_nnz);
    return run_gemm(cfg, x, nullptr, &d, record_trace);
  }
  return run_gemm(cfg, x, &w, nullptr, record_trace);
}

SimResult dispatch(const ArrayConfig& cfg, const Int8Matrix& x, const DBBMatrix& w, bool record_trace) {
  require_valid(cfg);
  if (!cfg.is_dbb()) {
    const Int8Matrix dense = decode(w);
    return run_gemm(cfg, x, &dense, nullptr, record_trace);
  }
  check_dbb_alignment(cfg, w);
  return run_gemm(cfg, x, nullptr, &w, record_trace);
}

void check_tile_shape(const ArrayConfig& cfg, const Int8Matrix& x, std::size_t w_rows, std::size_t w_cols) {
  if (x.rows() != cfg.tile_rows() || w_cols != cfg.tile_cols()) {
    throw ShapeError("tile must be " + std::to_string(cfg.tile_rows()) + "xK by Kx" + std::to_string(cfg.tile_cols()) +
                     " for " + cfg.name());
  }
  if (x.cols() != w_rows) throw ShapeError("tile inner dimensions disagree");
}

}  // namespace

SimResult simulate_tile(const ArrayConfig& cfg, const Int8Matrix& x_tile, const Int8Matrix& w_tile, bool record_trace) {
  require_valid(cfg);
  check_tile_shape(cfg, x_tile, w_tile.rows(), w_tile.cols());
  return dispatch(cfg, x_tile, w_tile, record_trace);
}

SimResult simulate_tile(const ArrayConfig& cfg, const Int8Matrix& x_tile, const DBBMatrix& w_tile, bool record_trace) {
  require_valid(cfg);
  check_tile_shape(cfg, x_tile, w_tile.rows(), w_tile.cols());
  return dispatch(cfg, x_tile, w_tile, record_trace);
}

SimResult simulate_gemm(const ArrayConfig& cfg, const Int8Matrix& x, const Int8Matrix& w) {
  return dispatch(cfg, x, w, false);
}

SimResult simulate_gemm(const ArrayConfig& cfg, const Int8Matrix& x, const DBBMatrix& w) {
  return dispatch(cfg, x, w, false);
}

nlohmann::ordered_json to_json(const SimStats& s) {
  nlohmann::ordered_json j;
  j["gating"] = to_string(s.gating);
  j["cycles"] = s.cycles;
  j["compute_cycles"] = s.compute_cycles;
  j["readout_cycles"] = s.readout_cycles;
  j["tiles_executed"] = s.tiles_executed;
  j["effective_macs"] = s.effective_macs;
  j["lanes"] = s.lanes;
  j["lane_busy_cycles"] = s.lane_busy_cycles;
  j["lane_gated_cycles"] = s.lane_gated_cycles;
  j["lane_idle_cycles"] = s.lane_idle_cycles;
  j["lane_stream_idle_cycles"] = s.lane_stream_idle_cycles;
  j["zero_pair_lane_cycles"] = s.zero_pair_lane_cycles;
  j["pe_stream_cycles"] = s.pe_stream_cycles;
  j["pe_gated_cycles"] = s.pe_gated_cycles;
  j["lane_utilization"] = s.lane_utilization();
  return j;
}

nlohmann::ordered_json to_json(const std::optional<GatingReport>& g) {
  if (!g) return nullptr;
  return {{"granularity", to_string(g->granularity)},
          {"lane_gated_fraction", g->lane_gated_fraction},
          {"pe_gated_fraction", g->pe_gated_fraction}};
}

}  // namespace stasim
