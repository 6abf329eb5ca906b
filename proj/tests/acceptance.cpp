// Acceptance suite: runs every checked-in experiment config and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any line fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "lka/harness.hpp"

namespace fs = std::filesystem;
namespace hn = lka::harness;
using nlohmann::json;

namespace {

#ifndef LKA_SOURCE_CONFIG_DIR
#define LKA_SOURCE_CONFIG_DIR "configs"
#endif

std::string env_or(const char* name, const std::string& def) {
  const char* v = std::getenv(name);
  return v && *v ? v : def;
}

std::string num(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

struct Line {
  bool pass = false;
  std::string detail;
};

// appends one clause to a line; the line passes only if every clause does
struct Clauses {
  bool all = true;
  std::string text;
  void add(bool ok, const std::string& what) {
    all = all && ok;
    text += (text.empty() ? "" : "; ") + what + (ok ? "" : " [x]");
  }
};

class Suite {
 public:
  Suite(std::string config_dir, std::string out_dir) : config_dir_(std::move(config_dir)), out_dir_(std::move(out_dir)) {}

  hn::Report run(const std::string& name) {
    auto cfg = hn::ExperimentConfig::load((fs::path(config_dir_) / (name + ".json")).string());
    auto rep = hn::run(cfg);
    hn::write(rep, out_dir_, name);
    return rep;
  }

  void check(int id, const std::string& title, double limit_seconds, const std::function<Line(double&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Line line;
    double seconds = 0.0;
    try {
      line = body(seconds);
    } catch (const std::exception& e) {
      line = {false, std::string("error: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds == 0.0) seconds = wall;
    std::string timing = num(seconds, 3) + " s";
    if (limit_seconds > 0) {
      const bool fast = seconds < limit_seconds;
      timing += fast ? " < " : " >= ";
      timing += num(limit_seconds, 4) + " s";
      if (!fast) timing += " [x]";
      line.pass = line.pass && fast;
    }
    std::cout << (line.pass ? "PASS" : "FAIL") << "  " << id << ". " << title << ": " << line.detail << " (" << timing << ")"
              << std::endl;
    failures_ += line.pass ? 0 : 1;
  }

  int failures() const { return failures_; }

 private:
  std::string config_dir_, out_dir_;
  int failures_ = 0;
};

double percent(const json& rows, const std::string& method, int exponent) {
  return rows.at(method).at(std::size_t(exponent - 2)).get<double>();
}

double run_percent(const json& run, const std::string& method, int exponent) {
  return run.at("rows").at(method).at("percent_below").at(std::size_t(exponent - 2)).get<double>();
}

}  // namespace

int main() {
  const std::string config_dir = env_or("LKA_CONFIG_DIR", LKA_SOURCE_CONFIG_DIR);
  const std::string out_dir = env_or("LKA_ACCEPTANCE_OUT", "acceptance_out");
  std::cout << "configs: " << config_dir << "\nreports: " << out_dir << std::endl;
  Suite s(config_dir, out_dir);

  s.check(1, "torus |cos x|^(1/4), Fourier vs sigma_n at 1e-4", 30, [&](double& sec) {
    const auto r = s.run("fig4");
    sec = r.timing["total_seconds"];
    Clauses c;
    for (const auto& row : r.result["rows"]) {
      const int n = row["n"];
      const double f = row["fourier_percent"], g = row["sigma_percent"];
      const double fmax = n == 128 ? 5 : 8, gmin = n == 128 ? 45 : 70;
      c.add(f <= fmax && g >= gmin, "n=" + std::to_string(n) + " Fourier " + num(f) + "% (<=" + num(fmax) + ") sigma " +
                                        num(g) + "% (>=" + num(gmin) + ")");
    }
    c.add(r.plots.size() == 2, std::to_string(r.plots.size()) + " SVG panels");
    return Line{c.all, c.text};
  });

  s.check(2, "sphere benchmark g, n=64, 3 runs", 600, [&](double& sec) {
    const auto r = s.run("table2");
    sec = r.timing["total_seconds"];
    const json& m = r.result["mean"]["rows"];
    Clauses c;
    c.add(percent(m, "QS5", 7) >= 80, "QS5@1e-7 " + num(percent(m, "QS5", 7)) + " (>=80)");
    for (const char* k : {"LS", "MS1", "QS1"}) c.add(percent(m, k, 7) <= 5, std::string(k) + "@1e-7 " + num(percent(m, k, 7)) + " (<=5)");
    const double ms5 = percent(m, "MS5", 6);
    c.add(ms5 >= 20 && ms5 <= 50, "MS5@1e-6 " + num(ms5) + " (in [20,50])");
    bool full = true;
    for (const char* k : {"LS", "MS1", "QS1", "MS5", "QS5"}) full = full && percent(m, k, 2) == 100.0;
    c.add(full, "all methods 100 at 1e-2");
    int ordered = 0;
    for (const auto& run : r.result["runs"]) {
      const double low = std::max({run_percent(run, "LS", 7), run_percent(run, "MS1", 7), run_percent(run, "QS1", 7)});
      ordered += run_percent(run, "QS5", 7) > run_percent(run, "MS5", 7) && run_percent(run, "MS5", 7) > low;
    }
    c.add(ordered == int(r.result["runs"].size()),
          "QS5>MS5>max(LS,MS1,QS1) at 1e-7 in " + std::to_string(ordered) + "/" + std::to_string(r.result["runs"].size()) + " runs");
    return Line{c.all, c.text};
  });

  s.check(3, "piecewise-smooth target, LS vs QS5 at 1e-5", 600, [&](double& sec) {
    const auto r = s.run("remark79");
    sec = r.timing["total_seconds"];
    const json& m = r.result["mean"]["rows"];
    Clauses c;
    c.add(percent(m, "LS", 5) <= 10, "LS " + num(percent(m, "LS", 5)) + "% (<=10)");
    c.add(percent(m, "QS5", 5) >= 40, "QS5 " + num(percent(m, "QS5", 5)) + "% (>=40)");
    return Line{c.all, c.text};
  });

  s.check(4, "quadrature weights, 4096 points on S^2, order 16", 60, [&](double& sec) {
    const auto r = s.run("quadrature");
    sec = r.timing["total_seconds"];
    Clauses c;
    c.add(r.result["points"] == 4096 && r.result["order"] == 16 && r.result["polys"] == 50, "4096 points, order 16, 50 polynomials");
    c.add(r.result["moment_residual"].get<double>() < 1e-8, "moment residual " + num(r.result["moment_residual"]) + " (<1e-8)");
    c.add(r.result["max_poly_error"].get<double>() < 1e-7, "max integration error " + num(r.result["max_poly_error"]) + " (<1e-7)");
    return Line{c.all, c.text};
  });

  s.check(5, "reproduction of degree <= n/2-1 polynomials", 0, [&](double& sec) {
    const auto r = s.run("reproduction");
    sec = r.timing["total_seconds"];
    Clauses c;
    c.add(r.result["polys"] == 100 && r.result["filter"] == "quintic", "100 polynomials per domain, quintic filter");
    c.add(r.result["torus"]["max_error"].get<double>() < 1e-8, "torus sup error " + num(r.result["torus"]["max_error"]) + " (<1e-8)");
    c.add(r.result["sphere"]["max_error"].get<double>() < 1e-8, "sphere sup error " + num(r.result["sphere"]["max_error"]) + " (<1e-8)");
    return Line{c.all, c.text};
  });

  s.check(6, "regression on a great circle, n = 8, 16, 32", 300, [&](double& sec) {
    const auto r = s.run("manifold");
    sec = r.timing["total_seconds"];
    const auto& rows = r.result["rows"];
    Clauses c;
    bool dec = true;
    std::string errs;
    double dens = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      errs += (i ? " > " : "") + num(rows[i]["sup_error"]);
      if (i) dec = dec && rows[i]["sup_error"].get<double>() < rows[i - 1]["sup_error"].get<double>();
      dens = std::max(dens, rows[i]["density_error"].get<double>());
    }
    c.add(dec, "sup errors " + errs);
    const double total = rows.front()["sup_error"].get<double>() / rows.back()["sup_error"].get<double>();
    c.add(total >= 4, "total decrease " + num(total) + "x (>=4)");
    c.add(dens <= 0.1, "max |density - 1| " + num(dens) + " (<=0.1)");
    return Line{c.all, c.text};
  });

  s.check(7, "MASC three moons", 60, [&](double& sec) {
    const auto r = s.run("three_moons");
    sec = r.timing["total_seconds"];
    Clauses c;
    c.add(r.result["clusters"].size() == 3, std::to_string(r.result["clusters"].size()) + " clusters (=3)");
    c.add(r.result["queries"] == 3, r.result["queries"].dump() + " queries (=3)");
    c.add(r.result["accuracy"].get<double>() == 1.0, "accuracy " + num(100 * r.result["accuracy"].get<double>()) + "% (=100)");
    return Line{c.all, c.text};
  });

  s.check(8, "MASC circle and ellipse", 120, [&](double& sec) {
    const auto r = s.run("circle_ellipse");
    sec = r.timing["total_seconds"];
    Clauses c;
    c.add(r.result["accuracy"].get<double>() >= 0.75, "accuracy " + num(100 * r.result["accuracy"].get<double>()) + "% (>=75)");
    c.add(r.result["queries"].get<int>() <= 40, r.result["queries"].dump() + " queries (<=40)");
    return Line{c.all, c.text};
  });

  s.check(9, "mixture on the circle, F_128 maxima and kept set", 60, [&](double& sec) {
    const auto r = s.run("example10_1");
    sec = r.timing["total_seconds"];
    Clauses c;
    for (const auto& a : r.result["atoms"])
      c.add(a["within"].get<bool>(), "max near " + num(a["atom"]) + " at " + num(a["nearest_max"], 5) + " (|d| " +
                                         num(a["distance"], 2) + " <= " + num(r.result["tolerance"], 3) + ")");
    const auto kept = r.result["kept_per_component"].get<std::vector<int>>();
    std::string k;
    bool all = true;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      k += (i ? "," : "") + std::to_string(kept[i]);
      all = all && kept[i] > 0;
    }
    c.add(all && kept.size() == 5, "kept per component " + k);
    return Line{c.all, c.text};
  });

  s.check(10, "zonal network reproducing identity and dyadic rate", 0, [&](double& sec) {
    const auto r = s.run("zonal");
    sec = r.timing["total_seconds"];
    Clauses c;
    const double e = r.result["reproduce"]["max_error"];
    c.add(r.result["gamma"] == 0.0 && e < 1e-6, "reproduce Pi_8 error " + num(e) + " (<1e-6)");
    const double want = r.result["expected_ratio"];
    for (const auto& row : r.result["rows"])
      if (row.contains("ratio")) {
        const double q = row["ratio"];
        c.add(q >= want / 2 && q <= want * 2, "ratio at n=" + row["n"].dump() + " " + num(q) + " (in [" + num(want / 2) + "," + num(2 * want) + "])");
      }
    return Line{c.all, c.text};
  });

  s.check(11, "invariant and property suite", 900, [&](double& sec) {
    const fs::path self = fs::read_symlink("/proc/self/exe");
    const std::string bin = env_or("LKA_TESTS_BIN", (self.parent_path() / "lka_tests").string());
    if (!fs::exists(bin)) return Line{false, "test binary not found: " + bin};
    fs::create_directories(out_dir);
    const std::string log = (fs::path(out_dir) / "unit_tests.log").string();
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = std::system(("\"" + bin + "\" > \"" + log + "\" 2>&1").c_str());
    sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ifstream f(log);
    std::string line, passed = "?", seeded = "0";
    int seeds = 0;
    const std::regex pass_re(R"(\[  PASSED  \] (\d+) tests?)"), seed_re(R"(\[       OK \] Seeds/\S+/(\d+) )");
    std::smatch m;
    std::vector<int> seen(3, 0);
    while (std::getline(f, line)) {
      if (std::regex_search(line, m, pass_re)) passed = m[1];
      if (std::regex_search(line, m, seed_re)) {
        ++seeds;
        const int k = std::stoi(m[1]);
        if (k < 3) seen[std::size_t(k)] = 1;
      }
    }
    Clauses c;
    c.add(rc == 0, "exit status " + std::to_string(rc) + ", " + passed + " tests passed");
    c.add(seen[0] && seen[1] && seen[2], std::to_string(seeds) + " seeded property runs over 3 seeds");
    return Line{c.all, c.text};
  });

  std::cout << (s.failures() ? std::to_string(s.failures()) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return s.failures() ? 1 : 0;
}
