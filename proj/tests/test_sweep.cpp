#include <gtest/gtest.h>

#include <sstream>

#include "stasim/errors.hpp"
#include "stasim/sweep.hpp"

using namespace stasim;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<LayerSpec> parse_layers(const std::string& text) {
  std::istringstream in(text);
  return read_layers_csv(in);
}

const char* kHeader = "name,mr,k,nc,weight_density,activation_density\n";

const ojson& entry_for(const ojson& report, const std::string& layer, const std::string& config) {
  for (const auto& e : report.at("entries")) {
    if (e.at("layer") == layer && e.at("config") == config) return e;
  }
  throw std::runtime_error("no entry " + layer + " / " + config);
}

// Splits CSV with RFC 4180 quoting; enough for the report writer's output.
std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows(1);
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      rows.back().push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n') {
      rows.back().push_back(std::move(cell));
      cell.clear();
      rows.emplace_back();
    } else {
      cell += ch;
    }
  }
  rows.pop_back();
  return rows;
}

SweepOptions headline_options() {
  SweepOptions opt;
  opt.configs = default_sweep_configs();
  opt.seed = 42;
  return opt;
}

}  // namespace

TEST(LayersCsv, Parses) {
  const auto layers = parse_layers(std::string(kHeader) + "conv1,64,147,64,1.0,0.5\nfc,8,256,10,0.25,1\n");
  ASSERT_EQ(layers.size(), 2u);
  EXPECT_EQ(layers[0].name, "conv1");
  EXPECT_EQ(layers[0].k, 147u);
  EXPECT_DOUBLE_EQ(layers[0].activation_density, 0.5);
  EXPECT_DOUBLE_EQ(layers[1].weight_density, 0.25);
}

TEST(LayersCsv, RejectsMalformedInput) {
  EXPECT_THROW(parse_layers(""), FormatError);
  EXPECT_THROW(parse_layers("name,mr,k,nc\nx,1,1,1\n"), FormatError);
  EXPECT_THROW(parse_layers(std::string(kHeader) + "x,1,1\n"), FormatError);
  EXPECT_THROW(parse_layers(std::string(kHeader) + "x,one,1,1,1,1\n"), FormatError);
  EXPECT_THROW(parse_layers(std::string(kHeader) + "x,1,1,1,1,dense\n"), FormatError);
}

TEST(Sweep, HeadlineComparison) {
  const auto layers = parse_layers(std::string(kHeader) + "l0,16,64,16,0.5,0.6\n");
  const ojson report = run_sweep(layers, headline_options());
  EXPECT_EQ(report.at("schema"), "stasim-sweep-report");
  EXPECT_EQ(report.at("version"), kSweepReportVersion);
  EXPECT_EQ(report.at("baseline"), "SA:1x1x1_8x8:gating=lane");
  ASSERT_EQ(report.at("entries").size(), 3u);

  const ojson& sa = entry_for(report, "l0", "SA:1x1x1_8x8:gating=lane");
  const ojson& sta = entry_for(report, "l0", "STA:4x8x4_2x2:gating=lane");
  const ojson& dbb = entry_for(report, "l0", "STA_DBB:4x8x4_2x2:nnz=4:gating=lane");
  for (const ojson* e : {&sa, &sta, &dbb}) {
    EXPECT_EQ(e->at("status"), "ok");
    EXPECT_EQ(e->at("effective_macs"), 16u * 64u * 16u);
  }
  EXPECT_EQ(dbb.at("cost").at("multipliers_8b").get<std::size_t>() * 2, sta.at("cost").at("multipliers_8b").get<std::size_t>());
  for (const auto& [key, value] : sa.at("ratios").items()) EXPECT_EQ(value, 1.0) << key;

  EXPECT_DOUBLE_EQ(dbb.at("footprint").at("ratio").get<double>(), 0.625);
  EXPECT_DOUBLE_EQ(sta.at("footprint").at("ratio").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(dbb.at("ratios").at("multipliers_per_mac").get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(sta.at("ratios").at("multipliers_per_mac").get<double>(), 1.0);
  EXPECT_GT(sta.at("ratios").at("register_bits_per_mac").get<double>(), 1.0);
}

TEST(Sweep, ExplicitBaselineSelfRatios) {
  SweepOptions opt = headline_options();
  opt.baseline = "STA:4x8x4_2x2:gating=lane";
  opt.weights.by_kind["multiplier_8b"] = {3.0, 1.5};
  opt.weights.by_kind["accumulator_reg_bit"] = {0.25, 0.1};
  const ojson report = run_sweep(parse_layers(std::string(kHeader) + "a,9,20,7,0.8,0.8\n"), opt);
  const ojson& sta = entry_for(report, "a", opt.baseline);
  EXPECT_EQ(sta.at("ratios").size(), 7u);
  for (const auto& [key, value] : sta.at("ratios").items()) EXPECT_EQ(value, 1.0) << key;
}

TEST(Sweep, UnknownBaseline) {
  SweepOptions opt = headline_options();
  opt.baseline = "STA:2x2x2_1x1:gating=lane";
  EXPECT_THROW(run_sweep(parse_layers(std::string(kHeader) + "a,4,4,4,1,1\n"), opt), ConfigError);
}

TEST(Sweep, BaselineAddedWhenMissing) {
  SweepOptions opt;
  opt.configs = {parse_arch("STA:2x2x2_2x2")};
  const ojson report = run_sweep(parse_layers(std::string(kHeader) + "a,4,4,4,1,1\n"), opt);
  EXPECT_EQ(report.at("configs").size(), 2u);
  EXPECT_EQ(report.at("baseline"), "SA:1x1x1_8x8:gating=lane");
}

TEST(Sweep, LayerErrorsAreRecorded) {
  const auto layers = parse_layers(std::string(kHeader) + "good,4,8,4,1,1\nbad,4,8,4,1.5,1\nzero,0,8,4,1,1\n");
  const ojson report = run_sweep(layers, headline_options());
  ASSERT_EQ(report.at("entries").size(), 9u);
  for (const auto& e : report.at("entries")) {
    EXPECT_EQ(e.at("status"), e.at("layer") == "good" ? "ok" : "error");
    if (e.at("status") == "error") {
      EXPECT_TRUE(e.at("error").is_string());
    }
  }
}

TEST(Sweep, OracleCheckedRuns) {
  SweepOptions opt = headline_options();
  opt.check_oracle = true;
  const ojson report = run_sweep(parse_layers(std::string(kHeader) + "a,13,40,11,0.4,0.7\n"), opt);
  for (const auto& e : report.at("entries")) {
    EXPECT_EQ(e.at("status"), "ok");
    EXPECT_TRUE(e.at("oracle_checked").get<bool>());
  }
}

TEST(Sweep, IndependentOfThreadCount) {
  const auto layers = parse_layers(std::string(kHeader) + "a,16,32,16,0.5,0.5\nb,9,17,23,1,0.3\nc,30,8,5,0.2,1\n");
  SweepOptions opt = headline_options();
  opt.configs.push_back(parse_arch("STA:2x2x2_2x2:gating=pe"));
  const std::string serial = run_sweep(layers, opt).dump(2);
  for (std::size_t jobs : {2, 5, 16}) {
    opt.jobs = jobs;
    EXPECT_EQ(run_sweep(layers, opt).dump(2), serial);
  }
  opt.seed = 43;
  EXPECT_NE(run_sweep(layers, opt).dump(2), serial);
}

TEST(Sweep, CsvMatchesJson) {
  const auto layers = parse_layers(std::string(kHeader) + "a,16,32,16,0.5,0.5\nbad,4,8,4,2,1\n");
  const ojson report = run_sweep(layers, headline_options());
  const auto rows = split_csv(report_to_csv(report));
  ASSERT_EQ(rows.size(), 1 + report.at("entries").size());
  const auto& header = rows[0];
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ASSERT_EQ(rows[r].size(), header.size());
    const ojson& entry = report.at("entries")[r - 1];
    const auto flat = flatten(entry);
    std::size_t matched = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& cell = rows[r][c];
      const auto it = std::find_if(flat.begin(), flat.end(), [&](const auto& kv) { return kv.first == header[c]; });
      if (it == flat.end()) {
        EXPECT_EQ(cell, "") << header[c];
        continue;
      }
      ++matched;
      const ojson& value = it->second;
      if (value.is_string()) {
        EXPECT_EQ(cell, value.get<std::string>()) << header[c];
      } else if (value.is_null()) {
        EXPECT_EQ(cell, "") << header[c];
      } else {
        EXPECT_EQ(ojson::parse(cell), value) << header[c];
      }
    }
    EXPECT_EQ(matched, flat.size());
  }
}
