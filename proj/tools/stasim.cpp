// stasim command-line driver.
//
// Exit codes: 0 ok, 2 data-format violation, 3 shape/config error,
// 4 simulator/oracle mismatch, 1 anything else.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stasim/dbb.hpp"
#include "stasim/matrix.hpp"
#include "stasim/microarch.hpp"
#include "stasim/netlist.hpp"
#include "stasim/reference.hpp"
#include "stasim/sim.hpp"
#include "stasim/sweep.hpp"

namespace {

using namespace stasim;
using ojson = nlohmann::ordered_json;

class OracleMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArchFlags {
  std::string config_path;
  std::optional<std::string> variant;
  std::optional<std::size_t> a, b, c, m, n, dbb_nnz;
  std::optional<std::string> gating;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config document");
    cmd->add_option("--variant", variant, "SA_NCG, SA, STA or STA_DBB");
    cmd->add_option("--a", a, "rows per tensor PE (A)");
    cmd->add_option("--b", b, "dot-product width (B)");
    cmd->add_option("--c", c, "columns per tensor PE (C)");
    cmd->add_option("--m", m, "PE grid rows (M)");
    cmd->add_option("--n", n, "PE grid columns (N)");
    cmd->add_option("--dbb-nnz", dbb_nnz, "multiplier lanes per dot unit (STA_DBB)");
    cmd->add_option("--gating", gating, "off, lane or pe");
  }

  // Config file first, explicit flags on top.
  std::pair<ArrayConfig, ResourceWeights> resolve() const {
    ArrayConfig cfg;
    ResourceWeights weights;
    if (!config_path.empty()) {
      const auto j = read_json(config_path);
      cfg = config_from_json(j);
      if (j.contains("weights")) weights = weights_from_json(j.at("weights"));
    }
    if (variant) {
      cfg.variant = parse_variant(*variant);
      if (!gating && cfg.variant == Variant::SA_NCG) cfg.gating = Gating::off;
    }
    if (a) cfg.a = *a;
    if (b) cfg.b = *b;
    if (c) cfg.c = *c;
    if (m) cfg.m = *m;
    if (n) cfg.n = *n;
    if (dbb_nnz) cfg.dbb_nnz = *dbb_nnz;
    if (gating) cfg.gating = parse_gating(*gating);
    require_valid(cfg);
    return {cfg, weights};
  }

  static nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Int8Matrix load_dense(const std::string& path) {
  if (ends_with(path, ".csv")) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_matrix_csv(in);
  }
  if (peek_magic(path) == "STAD") return decode(load_dbb(path));
  return load_matrix(path);
}

void store_dense(const Int8Matrix& m, const std::string& path) {
  if (ends_with(path, ".csv")) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_matrix_csv(out, m);
    return;
  }
  store_matrix(m, path);
}

void emit(const ojson& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

ojson footprint_json(const FootprintReport& fp) {
  return {{"dense_bytes", fp.dense_bytes},
          {"compressed_bytes", fp.compressed_bytes},
          {"mask_bytes", fp.mask_bytes},
          {"value_bytes", fp.value_bytes},
          {"reduction_fraction", fp.reduction_fraction}};
}

template <typename F>
int guarded(F&& body) {
  try {
    body();
    return 0;
  } catch (const BoundViolation& e) {
    std::cerr << "error: " << e.what() << " (first violating column " << e.col() << ", block " << e.block_index()
              << "); prune the matrix first\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const OracleMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Systolic tensor array simulator, DBB codec and cost model"};
  app.require_subcommand(1);
  int status = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a seeded int8 matrix");
  struct {
    std::size_t rows = 0, cols = 0, block = 8, nnz = 4;
    std::string kind = "dense", out;
    double density = 1.0;
    std::uint64_t seed = 1;
  } g;
  gen->add_option("--rows", g.rows)->required();
  gen->add_option("--cols", g.cols)->required();
  gen->add_option("--kind", g.kind)->check(CLI::IsMember({"dense", "random", "dbb"}));
  gen->add_option("--density", g.density, "non-zero fraction (random)");
  gen->add_option("--block", g.block, "DBB block size");
  gen->add_option("--nnz", g.nnz, "DBB non-zero bound");
  gen->add_option("--seed", g.seed);
  gen->add_option("-o,--output", g.out)->required();
  gen->callback([&] {
    status = guarded([&] {
      SparsityProfile p;
      p.kind = parse_sparsity_kind(g.kind);
      p.density = g.density;
      p.block_size = g.block;
      p.nnz_bound = g.nnz;
      p.seed = g.seed;
      store_dense(generate(g.rows, g.cols, p), g.out);
    });
  });

  // encode / decode / prune / validate
  struct {
    std::string in, out;
    std::size_t block = 8, nnz = 4;
  } d;
  auto* enc = app.add_subcommand("encode", "compress a matrix into the DBB format");
  enc->add_option("input", d.in)->required();
  enc->add_option("--block", d.block);
  enc->add_option("--nnz", d.nnz);
  enc->add_option("-o,--output", d.out);
  enc->callback([&] {
    status = guarded([&] {
      const DBBMatrix m = encode(load_dense(d.in), d.block, d.nnz);
      if (!d.out.empty()) store_dbb(m, d.out);
      emit(footprint_json(footprint(m)), "");
    });
  });

  auto* dec = app.add_subcommand("decode", "expand a DBB file to a dense matrix");
  dec->add_option("input", d.in)->required();
  dec->add_option("-o,--output", d.out)->required();
  dec->callback([&] { status = guarded([&] { store_dense(decode(load_dbb(d.in)), d.out); }); });

  auto* prn = app.add_subcommand("prune", "magnitude-prune every block down to the bound");
  prn->add_option("input", d.in)->required();
  prn->add_option("--block", d.block);
  prn->add_option("--nnz", d.nnz);
  prn->add_option("-o,--output", d.out)->required();
  prn->callback([&] { status = guarded([&] { store_dense(prune_to_dbb(load_dense(d.in), d.block, d.nnz), d.out); }); });

  auto* val = app.add_subcommand("validate", "list blocks that exceed the bound (exit 2 if any)");
  val->add_option("input", d.in)->required();
  val->add_option("--block", d.block);
  val->add_option("--nnz", d.nnz);
  val->callback([&] {
    status = guarded([&] {
      const Int8Matrix w = load_dense(d.in);
      const auto v = validate(w, d.block, d.nnz);
      ojson cols = ojson::object();
      for (std::size_t c = 0; c < v.size(); ++c) {
        if (!v[c].empty()) cols[std::to_string(c)] = v[c];
      }
      const std::size_t count = violation_count(v);
      emit({{"violating_blocks", count}, {"columns", cols}}, "");
      if (count) throw FormatError(std::to_string(count) + " blocks exceed the bound");
    });
  });

  // cost
  ArchFlags cost_arch;
  std::optional<std::size_t> cost_k;
  std::string cost_weights;
  auto* cst = app.add_subcommand("cost", "structural cost model and cycle model");
  cost_arch.add_to(cst);
  cst->add_option("--k", cost_k, "reduction dimension for the cycle model");
  cst->add_option("--weights", cost_weights, "JSON table of area/power coefficients");
  cst->callback([&] {
    status = guarded([&] {
      auto [cfg, weights] = cost_arch.resolve();
      if (!cost_weights.empty()) weights = weights_from_json(ArchFlags::read_json(cost_weights));
      const CostReport r = cost(cfg);
      ojson j;
      j["config"] = to_json(cfg);
      j["cost"] = to_json(r);
      if (!weights.empty()) j["weighted"] = to_json(roll_up(r, weights));
      if (cost_k) j["cycle_model"] = to_json(cycle_count(cfg, *cost_k));
      const Netlist net = build_netlist(cfg);
      j["netlist"] = {{"nodes", net.nodes.size()}, {"edges", net.edges.size()}};
      emit(j, "");
    });
  });

  // sim
  ArchFlags sim_arch;
  struct {
    std::string x, w, out, result;
    bool check = false, trace = false;
  } s;
  auto* sim = app.add_subcommand("sim", "cycle-accurate GEMM simulation");
  sim_arch.add_to(sim);
  sim->add_option("x", s.x, "activation matrix (STAM int8 or CSV)")->required();
  sim->add_option("w", s.w, "weight matrix (STAM int8, STAD or CSV)")->required();
  sim->add_flag("--check-oracle", s.check, "compare against the reference GEMM");
  sim->add_flag("--trace", s.trace, "include the per-cycle PE schedule (single-tile runs)");
  sim->add_option("-o,--output", s.out, "report path (default stdout)");
  sim->add_option("--result", s.result, "write the int32 product as STAM");
  sim->callback([&] {
    status = guarded([&] {
      const ArrayConfig cfg = sim_arch.resolve().first;
      const Int8Matrix x = load_dense(s.x);
      const bool w_is_dbb = !ends_with(s.w, ".csv") && peek_magic(s.w) == "STAD";
      std::optional<DBBMatrix> wd;
      std::optional<Int8Matrix> wm;
      if (w_is_dbb) {
        wd = load_dbb(s.w);
      } else {
        wm = load_dense(s.w);
      }
      const std::size_t k = w_is_dbb ? wd->rows() : wm->rows();
      if (x.cols() != k) {
        throw ShapeError("x has " + std::to_string(x.cols()) + " columns but w has " + std::to_string(k) + " rows");
      }

      SimResult res = w_is_dbb ? simulate_gemm(cfg, x, *wd) : simulate_gemm(cfg, x, *wm);
      const bool single_tile = x.rows() <= cfg.tile_rows() && (w_is_dbb ? wd->cols() : wm->cols()) <= cfg.tile_cols();
      if (s.trace && single_tile) {
        const Int8Matrix wt = w_is_dbb ? decode(*wd) : *wm;
        Int8Matrix xt(cfg.tile_rows(), x.cols());
        Int8Matrix wpad(k, cfg.tile_cols());
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) xt(r, c) = x(r, c);
        for (std::size_t r = 0; r < k; ++r)
          for (std::size_t c = 0; c < wt.cols(); ++c) wpad(r, c) = wt(r, c);
        res.trace = simulate_tile(cfg, xt, wpad, true).trace;
      }

      ojson j;
      j["schema"] = "stasim-sim-report";
      j["version"] = 1;
      j["config"] = to_json(cfg);
      j["x"] = {{"rows", x.rows()}, {"cols", x.cols()}};
      j["w"] = {{"rows", k},
                {"cols", res.result.cols()},
                {"format", w_is_dbb ? "dbb" : "dense"}};
      j["checksum"] = checksum_hex(res.result);
      j["stats"] = to_json(res.stats);
      j["cycle_model"] = to_json(cycle_count(cfg, k));
      j["gating"] = to_json(gating_stats(res.stats));
      if (s.check) {
        const AccMatrix expect = reference::oracle_gemm(x, w_is_dbb ? decode(*wd) : *wm);
        const bool match = expect == res.result;
        j["oracle"] = {{"checked", true}, {"match", match}};
        if (!match) {
          emit(j, s.out);
          throw OracleMismatch("simulator result differs from the reference GEMM");
        }
      }
      if (s.trace) {
        ojson t = ojson::array();
        for (const auto& ev : res.trace) t.push_back({ev.cycle, ev.pe_row, ev.pe_col, ev.step});
        j["trace"] = {{"fields", {"cycle", "pe_row", "pe_col", "k_step"}}, {"events", t}};
      }
      if (!s.result.empty()) store_matrix(res.result, s.result);
      emit(j, s.out);
    });
  });

  // sweep
  struct {
    std::string layers, out, csv, baseline, weights;
    std::vector<std::string> archs, config_files;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    bool check = false;
  } w;
  auto* swp = app.add_subcommand("sweep", "layer x config experiment with baseline-normalized ratios");
  swp->add_option("layers", w.layers, "layer CSV")->required();
  swp->add_option("--arch", w.archs, "VARIANT:AxBxC_MxN[:nnz=K][:gating=G], repeatable");
  swp->add_option("--config", w.config_files, "JSON config document, repeatable");
  swp->add_option("--baseline", w.baseline, "config used for normalization (default SA 1x1x1)");
  swp->add_option("--seed", w.seed);
  swp->add_option("--jobs", w.jobs, "parallel workers");
  swp->add_option("--weights", w.weights, "JSON table of area/power coefficients");
  swp->add_flag("--check-oracle", w.check);
  swp->add_option("-o,--output", w.out, "JSON report path (default stdout)");
  swp->add_option("--csv", w.csv, "CSV report path");
  swp->callback([&] {
    status = guarded([&] {
      SweepOptions opt;
      opt.seed = w.seed;
      opt.jobs = w.jobs;
      opt.check_oracle = w.check;
      for (const auto& a : w.archs) opt.configs.push_back(parse_arch(a));
      for (const auto& f : w.config_files) opt.configs.push_back(config_from_json(ArchFlags::read_json(f)));
      if (!w.weights.empty()) opt.weights = weights_from_json(ArchFlags::read_json(w.weights));
      if (!w.baseline.empty()) {
        opt.baseline = w.baseline.find(':') != std::string::npos ? parse_arch(w.baseline).name() : w.baseline;
      }
      const ojson report = run_sweep(load_layers_csv(w.layers), opt);
      emit(report, w.out);
      if (!w.csv.empty()) {
        std::ofstream out(w.csv);
        if (!out) throw FormatError("cannot open " + w.csv + " for writing");
        out << report_to_csv(report);
      }
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return status;
}
