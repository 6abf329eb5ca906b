#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "lka/datasets.hpp"
#include "lka/harness.hpp"
#include "support.hpp"

namespace hn = lka::harness;
namespace dt = lka::data;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

#ifndef LKA_SOURCE_CONFIG_DIR
#define LKA_SOURCE_CONFIG_DIR "configs"
#endif

std::string config_dir() {
  const char* e = std::getenv("LKA_CONFIG_DIR");
  return e && *e ? e : LKA_SOURCE_CONFIG_DIR;
}

std::string csv_of(const dt::Dataset& d) {
  std::ostringstream os;
  dt::write_csv(os, d);
  return os.str();
}

std::size_t lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

hn::ExperimentConfig cfg(const std::string& exp, std::uint64_t seed, json params) {
  hn::ExperimentConfig c;
  c.experiment = exp;
  c.seed = seed;
  c.params = std::move(params);
  return c;
}

}  // namespace

TEST(Harness, GenDataRowCounts) {
  const auto ce = dt::generate("circle_ellipse", {}, 7);
  const std::string s = csv_of(ce);
  EXPECT_EQ(lines(s), 2001u);
  EXPECT_EQ(s.substr(0, s.find('\n')), "x,y,label");
  EXPECT_EQ(lines(csv_of(dt::generate("example10_1", {}, 3))), 3901u);
  EXPECT_EQ(csv_of(dt::generate("uniform_sphere", {{"M", 0}}, 1)), "x,y,z\n");
  EXPECT_EQ(lines(csv_of(dt::generate("three_moons", {}, 1))), 1501u);
  EXPECT_THROW(dt::generate("spiral", {}, 1), lka::InvalidArgument);
}

TEST(Harness, CsvRoundTripIsExact) {
  for (const auto& kind : dt::kinds()) {
    const auto d = dt::generate(kind, {{"M", 50}, {"per_class", 20}, {"scale", 0.1}}, 4);
    std::istringstream is(csv_of(d));
    const auto back = dt::read_csv(is);
    EXPECT_EQ(back.columns, d.columns) << kind;
    EXPECT_EQ(back.labels, d.labels) << kind;
    EXPECT_EQ(back.X, d.X) << kind;
  }
  std::istringstream bad("x,y\n1,2,3\n");
  EXPECT_THROW(dt::read_csv(bad), lka::InvalidArgument);
}

TEST(Harness, ConfigRoundTrip) {
  auto c = cfg("masc", 42, {{"data", "three_moons"}, {"masc", {{"n", 32}, {"eta", "auto"}}}, {"x", 1e-300}});
  c.out_dir = "somewhere";
  const auto back = hn::ExperimentConfig::parse(c.to_json().dump());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.to_json().dump(), c.to_json().dump());
}

TEST(Harness, ConfigErrors) {
  EXPECT_THROW(hn::ExperimentConfig::parse(""), hn::UsageError);
  EXPECT_THROW(hn::ExperimentConfig::parse(" \n\t"), hn::UsageError);
  EXPECT_THROW(hn::ExperimentConfig::parse("{"), hn::UsageError);
  EXPECT_THROW(hn::ExperimentConfig::parse("[1]"), hn::UsageError);
  EXPECT_THROW(hn::ExperimentConfig::parse(R"({"seed": 1})"), hn::UsageError);
  EXPECT_THROW(hn::ExperimentConfig::parse(R"({"experiment": "fig4", "params": 3})"), hn::UsageError);
  EXPECT_THROW(hn::run(cfg("nope", 1, json::object())), hn::UsageError);
  const auto tmp = fs::temp_directory_path() / "lka_empty_config.json";
  { std::ofstream(tmp.string()); }
  try {
    hn::ExperimentConfig::load(tmp.string());
    ADD_FAILURE() << "empty file accepted";
  } catch (const hn::UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos);
  }
  fs::remove(tmp);
}

TEST(Harness, ModuleErrorsNameTheModule) {
  auto c = cfg("quadrature", 1, {{"points", 20}, {"order", 16}});
  c.source = "cfg.json";
  try {
    hn::run(c);
    ADD_FAILURE() << "too few points accepted";
  } catch (const lka::Error& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("scattered_quadrature"), std::string::npos) << w;
    EXPECT_NE(w.find("cfg.json"), std::string::npos) << w;
  }
}

TEST(Harness, SplitTiming) {
  json r = {{"a", 1}, {"seconds", 2.0}, {"rows", {{{"n", 1}, {"seconds", 0.5}}, {{"n", 2}}}}};
  const json t = hn::split_timing(r);
  EXPECT_EQ(r, json({{"a", 1}, {"rows", {{{"n", 1}}, {{"n", 2}}}}}));
  EXPECT_EQ(t["/"], 2.0);
  EXPECT_EQ(t["/rows/0"], 0.5);
}

TEST(Harness, Fig4ConfigGivesTwoCurves) {
  const auto rep = hn::run(hn::ExperimentConfig::load(config_dir() + "/fig4.json"));
  ASSERT_EQ(rep.plots.size(), 2u);
  for (const auto& p : rep.plots) {
    EXPECT_EQ(p.svg.rfind("<svg", 0), 0u);
    EXPECT_NE(p.svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(std::count(p.svg.begin(), p.svg.end(), '\n') > 10, true);
  }
  EXPECT_EQ(rep.result["rows"].size(), 2u);
}

TEST(Harness, Table2IsFiveByNine) {
  const auto rep = hn::run(cfg("table2", 3, {{"train", 2500}, {"test", 300}, {"n", 10}, {"qs_order", 12}, {"runs", 1}}));
  const json& rows = rep.result["mean"]["rows"];
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& [k, v] : rows.items()) EXPECT_EQ(v.size(), 9u) << k;
  EXPECT_EQ(rep.result["mean"]["thresholds"].size(), 9u);
  EXPECT_EQ(rep.plots.size(), 1u);
  EXPECT_FALSE(rep.to_json()["timing"].empty());
}

TEST(Harness, CheckedInConfigsAreValid) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(config_dir())) {
    if (e.path().extension() != ".json") continue;
    const auto c = hn::ExperimentConfig::load(e.path().string());
    EXPECT_TRUE(hn::experiments().count(c.experiment)) << e.path();
    names.insert(e.path().stem().string());
  }
  for (const char* need : {"fig4", "table2", "remark79", "quadrature", "reproduction", "manifold", "three_moons",
                           "circle_ellipse", "example10_1", "zonal"})
    EXPECT_TRUE(names.count(need)) << need;
}

TEST(Harness, WritesReportAndPlots) {
  const auto dir = fs::temp_directory_path() / "lka_harness_out";
  fs::remove_all(dir);
  const auto rep = hn::run(cfg("masc", 1, {{"data", "three_moons"}, {"data_params", {{"per_class", 60}}}, {"masc", {{"n", 16}}}}));
  const auto files = hn::write(rep, dir.string(), "moons");
  ASSERT_EQ(files.size(), 2u);
  std::ifstream f(files[0]);
  const json j = json::parse(f);
  EXPECT_EQ(j["config"]["experiment"], "masc");
  EXPECT_TRUE(j.contains("timing"));
  EXPECT_EQ(j["version"], hn::kVersion);
  fs::remove_all(dir);
}

class HarnessProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(HarnessProperties, GenDataDeterministic) {
  for (const auto& kind : dt::kinds()) {
    const json p = {{"M", 40}, {"per_class", 30}, {"scale", 0.05}};
    EXPECT_EQ(csv_of(dt::generate(kind, p, GetParam())), csv_of(dt::generate(kind, p, GetParam()))) << kind;
    EXPECT_NE(csv_of(dt::generate(kind, p, GetParam())), csv_of(dt::generate(kind, p, GetParam() + 1))) << kind;
  }
}

TEST_P(HarnessProperties, PayloadsAreByteIdentical) {
  const std::vector<hn::ExperimentConfig> cs = {
      cfg("fig4", GetParam(), {{"N", 64}, {"degrees", {8, 16}}}),
      cfg("quadrature", GetParam(), {{"points", 300}, {"order", 8}, {"polys", 5}}),
      cfg("reproduction", GetParam(), {{"torus_n", 8}, {"sphere_n", 8}, {"polys", 5}, {"probes", 20}}),
      cfg("masc", GetParam(), {{"data", "circle_ellipse"}, {"data_params", {{"per_class", 150}}},
                               {"masc", {{"n", 16}, {"budget", 10}, {"hierarchical", true}, {"fill", true}}}}),
      cfg("example10_1", GetParam(), {{"n", 32}, {"probes", 256}, {"data_params", {{"scale", 0.1}}}}),
      cfg("zonal_rate", GetParam(), {{"degrees", {4, 8}}, {"probes", 50}, {"repro_polys", 2}, {"repro_points", 5}}),
      cfg("manifold_rate", GetParam(), {{"degrees", {4, 8}}, {"probes", 16}}),
  };
  for (const auto& c : cs) {
    const auto a = hn::run(c), b = hn::run(c);
    EXPECT_EQ(a.payload().dump(), b.payload().dump()) << c.experiment;
    ASSERT_EQ(a.plots.size(), b.plots.size());
    for (std::size_t i = 0; i < a.plots.size(); ++i) EXPECT_EQ(a.plots[i].svg, b.plots[i].svg) << c.experiment;
    // nothing time-dependent left in the payload
    EXPECT_EQ(a.payload().dump().find("seconds"), std::string::npos) << c.experiment;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, HarnessProperties, ::testing::ValuesIn(lka::testing::kSeeds));
