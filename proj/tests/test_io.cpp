#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "feeder/io.hpp"

using namespace feeder;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "feeder_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(ParseConfig, EmptyObjectGivesDefaults) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c.params.region_length, 3.0);
  EXPECT_EQ(c.demand.collection.total, 1200.0);
  EXPECT_EQ(c.axis, SweepAxis::none);
  EXPECT_FALSE(c.capacity);
  EXPECT_EQ(c.max_outer, 200);
  EXPECT_EQ(c.max_inner, 500);
}

TEST(ParseConfig, CommentsAndFields) {
  const auto c = parse_config(R"(
    // line comment
    {
      "name": "x", /* block comment */
      "params": {"value_of_time": 5, "nx": 10},
      "demand": {
        "both": {"total": 900, "x": {"mean": 0, "sigma": 0.5}},
        "distribution": {"y": {"mean": 1, "sigma": null}}
      },
      "design_class": "uniform-stop-spacing",
      "compare_classes": false,
      "coordination": "collect",
      "capacity": 12,
      "solver": {"max_outer": 50, "seed": 9}
    })");
  EXPECT_EQ(c.name, "x");
  EXPECT_EQ(c.params.value_of_time, 5);
  EXPECT_EQ(c.params.nx, 10);
  EXPECT_EQ(c.demand.collection.total, 900);
  EXPECT_EQ(*c.demand.collection.x.sigma, 0.5);
  EXPECT_EQ(c.demand.distribution.total, 900);
  EXPECT_EQ(c.demand.distribution.y.mean, 1);
  EXPECT_FALSE(c.demand.distribution.y.sigma);
  EXPECT_EQ(c.design_class, DesignClass::uniform_stop);
  EXPECT_FALSE(c.compare_classes);
  EXPECT_EQ(c.mode, Coordination::collect);
  EXPECT_EQ(*c.capacity, 12);
  EXPECT_EQ(c.max_outer, 50);
  EXPECT_EQ(*c.seed, 9u);
}

TEST(ParseConfig, AllModesAndSweep) {
  const auto c = parse_config(R"({"coordination": "all", "sweep": {"axis": "H_t", "values": [0.1, 0.2]}})");
  EXPECT_TRUE(c.all_modes);
  EXPECT_EQ(c.axis, SweepAxis::trunk_headway);
  EXPECT_EQ(c.values.size(), 2u);
}

TEST(ParseConfig, Errors) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"lenght": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"region_length": "3"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"params": {"region_width": -2}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"design_class": "odd"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"coordination": "sometimes"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sweep": {"axis": "K"}})"), ConfigError);
  EXPECT_THROW(load_config(scratch("missing.json")), ConfigError);
}

TEST(GridCsv, ReadsAndDrivesAScenario) {
  const auto csv = scratch("grid.csv");
  write_text(csv, "y\\x,0,1.5,3\n0,400,200,50\n1,200,100,25\n2,100,50,10\n");
  const GridDensity g = read_grid_csv(csv);
  ASSERT_EQ(g.xs.size(), 3u);
  ASSERT_EQ(g.ys.size(), 3u);
  EXPECT_EQ(g.values(1, 0), 200);
  EXPECT_EQ(g.values(0, 2), 100);
  EXPECT_DOUBLE_EQ(g.eval(0.75, 0.5), (400 + 200 + 200 + 100) / 4.0);

  const auto c = parse_config(R"({"demand": {"both": {"grid": "grid.csv"}}, "capacity": 10,
                                  "compare_classes": false})",
                              csv.parent_path());
  ASSERT_TRUE(c.demand.tabulated());
  const Report rep = run_scenario(c);
  EXPECT_TRUE(rep.converged());
}

TEST(GridCsv, Errors) {
  const auto bad = scratch("bad.csv");
  write_text(bad, "y,0,1\n0,1\n");
  EXPECT_THROW(read_grid_csv(bad), ConfigError);
  write_text(bad, "y,0,1\n0,1,abc\n");
  EXPECT_THROW(read_grid_csv(bad), ConfigError);
  write_text(bad, "y,0,1\n");
  EXPECT_THROW(read_grid_csv(bad), ConfigError);
  EXPECT_THROW(read_grid_csv(scratch("nope.csv")), ConfigError);
}

TEST(ShippedConfigs, AllParse) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(FEEDER_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
    ++count;
  }
  EXPECT_GE(count, 10);
}

TEST(Output, CostFieldNames) {
  const CostBreakdown c;
  std::vector<std::string> names;
  for (const auto& [k, v] : cost_fields(c)) names.push_back(k);
  const std::vector<std::string> expect{"C_s", "C_vk", "C_vh", "V_h1", "V_h2", "V_h3", "C_A", "C_Wp", "C_Wd",
                                        "C_W", "C_T1", "C_T2", "C_T3", "C_T", "AC", "UC", "GC"};
  EXPECT_EQ(names, expect);
  const Json j = to_json(c);
  for (const auto& n : expect) EXPECT_TRUE(j.contains(n)) << n;
}

TEST(Output, ReportBytesAreReproducible) {
  ScenarioConfig c;
  c.capacity = 10;
  const std::string a = to_json(run_scenario(c), true).dump(2);
  const std::string b = to_json(run_scenario(c), true).dump(2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("seconds"), std::string::npos);
  EXPECT_EQ(reports_csv({run_scenario(c)}), reports_csv({run_scenario(c)}));
}

TEST(Output, CsvShapes) {
  ScenarioConfig c;
  c.capacity = 10;
  c.compare_classes = false;
  const Report rep = run_scenario(c);
  const std::string table = reports_csv({rep});
  EXPECT_EQ(table.rfind("scenario,axis,value,design_class,mode,transposed,capacity,converged,C_s,", 0), 0u);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);

  const Lattice lat = Lattice::of(c.params);
  const std::string design = design_csv(rep.runs[0].design, lat);
  EXPECT_EQ(design.rfind("i,j,x,y,H_lp,H_ld,S_l,B\n", 0), 0u);
  EXPECT_EQ(std::count(design.begin(), design.end(), '\n'), 1 + lat.nx * lat.ny);
}

TEST(Output, PlanExports) {
  DiscretePlan plan{3, 2, 10, Coordination::none,
                    {PlanLine{0.5, {0.2, 0.9}, 0.1, 0.15, false}, PlanLine{1.7, {1.0}, 0.2, 0.25, true}},
                    {"note"}};
  const std::string csv = plan_csv(plan);
  EXPECT_EQ(csv, "line,x_p,y_q,H_lp,H_ld\n0,0.5,0.2,0.1,0.15\n0,0.5,0.9,0.1,0.15\n1,1.7,1,0.2,0.25\n");
  const Json j = to_json(plan);
  EXPECT_EQ(j["lines"].size(), 2u);
  EXPECT_EQ(j["warnings"][0], "note");
  const Json plot = plan_plot_data(plan);
  EXPECT_EQ(plot["segments"].size(), 4u);
  EXPECT_EQ(plot["stops"].size(), 3u);
}

TEST(Output, TimingIsSeparate) {
  ScenarioConfig c;
  c.capacity = 10;
  c.compare_classes = false;
  const Json t = timing_json({run_scenario(c)});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t[0].contains("seconds"));
  EXPECT_EQ(t[0]["runs"].size(), 1u);
}
