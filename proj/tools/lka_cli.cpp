// lka: command-line front end for data generation and experiments.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "lka/datasets.hpp"
#include "lka/harness.hpp"

namespace hn = lka::harness;
using nlohmann::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = "out";
  int threads = 1;
};

// "key=value"; the value is parsed as JSON when possible, else kept as a string
void apply_sets(json& params, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw hn::UsageError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
    json v = json::parse(val, nullptr, false);
    params[key] = v.is_discarded() ? json(val) : v;
  }
}

hn::ExperimentConfig make_config(const Globals& g, const std::string& experiment, const std::vector<std::string>& allowed,
                                 const std::vector<std::string>& sets) {
  hn::ExperimentConfig c;
  if (!g.config.empty()) {
    c = hn::ExperimentConfig::load(g.config);
    if (std::find(allowed.begin(), allowed.end(), c.experiment) == allowed.end())
      throw hn::UsageError("config " + g.config + " is for experiment '" + c.experiment + "', not this subcommand");
  } else {
    c.experiment = experiment;
  }
  if (g.seed) c.seed = *g.seed;
  apply_sets(c.params, sets);
  return c;
}

int run_and_write(const Globals& g, hn::ExperimentConfig c, const std::string& out_dir_flag) {
  if (c.experiment == "masc" || c.experiment == "example10_1") c.params["threads"] = g.threads;
  const std::string dir = !out_dir_flag.empty() ? out_dir_flag : (!c.out_dir.empty() ? c.out_dir : g.out_dir);
  const auto rep = hn::run(c);
  const std::string stem = c.source.empty() ? c.experiment : std::filesystem::path(c.source).stem().string();
  for (const auto& p : hn::write(rep, dir, stem)) std::cerr << "wrote " << p << '\n';
  std::cout << rep.result.dump(2) << '\n';
  return 0;
}

// experiment subcommand: optional positional experiment name plus --set overrides
struct ExpCmd {
  CLI::App* app;
  std::string experiment;
  std::vector<std::string> sets;
};

ExpCmd add_experiment(CLI::App& root, const std::string& name, const std::string& help,
                      const std::vector<std::string>& choices) {
  ExpCmd e{root.add_subcommand(name, help), choices.front(), {}};
  if (choices.size() > 1)
    e.app->add_option("experiment", e.experiment, "which experiment")->check(CLI::IsMember(choices));
  e.app->add_option("--set", e.sets, "override a parameter, key=value (value parsed as JSON)");
  return e;
}

void summarize(const std::string& path, std::ostream& os) {
  std::ifstream f(path);
  if (!f) throw hn::UsageError("cannot read report " + path);
  const json j = json::parse(f);
  os << path << ": " << j.at("config").at("experiment").get<std::string>() << " seed "
     << j.at("config").at("seed").get<std::uint64_t>() << " version " << j.value("version", "?") << '\n';
  if (j.contains("timing") && j["timing"].contains("total_seconds"))
    os << "  time " << j["timing"]["total_seconds"].get<double>() << " s\n";
  for (const auto& [k, v] : j.at("result").items()) {
    std::string s = v.dump();
    if (s.size() > 160) s = s.substr(0, 157) + "...";
    os << "  " << k << ": " << s << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localized kernel approximation experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--out-dir", g.out_dir, "directory for reports and plots")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for the kernel sums")->check(CLI::PositiveNumber);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic data set as CSV");
  std::string kind, out_csv;
  std::vector<std::string> gen_sets;
  gen->add_option("kind", kind, "data kind")->required()->check(CLI::IsMember(lka::data::kinds()));
  gen->add_option("--set", gen_sets, "generator parameter, key=value");
  gen->add_option("-o,--out", out_csv, "output file (default: stdout)");

  auto torus = add_experiment(app, "torus", "filtered approximation on the circle (fig4)", {"fig4"});
  auto quad = add_experiment(app, "quad", "scattered quadrature and reproduction checks", {"quadrature", "reproduction"});
  auto sphere = add_experiment(app, "sphere", "approximation benchmarks on S^2", {"table2", "remark79"});
  auto mani = add_experiment(app, "manifold", "kernel regression rate on a great circle", {"manifold_rate"});
  auto zon = add_experiment(app, "zonal", "zonal network rate and reproducing identity", {"zonal_rate"});

  // masc
  auto* masc = app.add_subcommand("masc", "active-learning classification by support clustering");
  masc->require_subcommand(0, 1);
  auto* masc_run = masc->add_subcommand("run", "cluster a CSV point set and label it through an oracle");
  std::string data_csv, labels_csv, eta = "auto", result_out, metric = "euclidean";
  int n = 0, budget = -1;
  double theta = 0.01;
  masc_run->add_option("--data", data_csv, "points CSV (header row; optional label column)")->required();
  masc_run->add_option("--labels-oracle", labels_csv, "labels CSV answering oracle queries");
  masc_run->add_option("--n", n, "kernel degree (0: automatic)");
  masc_run->add_option("--theta", theta, "threshold relative to the maximum");
  masc_run->add_option("--eta", eta, "separation, a number or auto");
  masc_run->add_option("--budget", budget, "maximum number of queries");
  masc_run->add_option("--metric", metric, "euclidean, torus or chordal");
  masc_run->add_option("--out", result_out, "result JSON path")->required();
  std::vector<std::string> run_sets;
  masc_run->add_option("--set", run_sets, "MASC setting, key=value (e.g. eta_factor=12)");
  std::string masc_exp = "masc";
  std::vector<std::string> masc_sets;
  masc->add_option("experiment", masc_exp, "experiment when no subcommand is given")
      ->check(CLI::IsMember({"masc", "example10_1"}));
  masc->add_option("--set", masc_sets, "override a parameter, key=value");

  auto* report = app.add_subcommand("report", "summarize report files or compare their payloads");
  std::vector<std::string> report_files;
  bool compare = false;
  report->add_option("files", report_files, "report JSON files")->required();
  report->add_flag("--compare", compare, "exit 1 unless all payloads (timing excluded) are identical");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*gen) {
      json params = json::object();
      apply_sets(params, gen_sets);
      const auto d = lka::data::generate(kind, params, g.seed.value_or(1));
      if (out_csv.empty()) {
        lka::data::write_csv(std::cout, d);
      } else {
        if (const auto parent = std::filesystem::path(out_csv).parent_path(); !parent.empty())
          std::filesystem::create_directories(parent);
        lka::data::write_csv(out_csv, d);
        std::cerr << "wrote " << d.size() << " rows to " << out_csv << '\n';
      }
      return 0;
    }
    for (auto* e : {&torus, &quad, &sphere, &mani, &zon})
      if (*e->app) {
        std::vector<std::string> allowed;
        if (e == &quad) allowed = {"quadrature", "reproduction"};
        else if (e == &sphere) allowed = {"table2", "remark79"};
        else allowed = {e->experiment};
        return run_and_write(g, make_config(g, e->experiment, allowed, e->sets), "");
      }
    if (*masc_run) {
      hn::ExperimentConfig c;
      c.experiment = "masc";
      if (g.seed) c.seed = *g.seed;
      json mc = json::object();
      if (!g.config.empty()) mc = hn::ExperimentConfig::load(g.config).params.value("masc", json::object());
      mc["n"] = n;
      mc["theta"] = theta;
      if (eta == "auto") {
        mc["eta"] = "auto";
      } else {
        try {
          mc["eta"] = std::stod(eta);
        } catch (const std::exception&) {
          throw hn::UsageError("--eta must be a number or auto");
        }
      }
      if (budget >= 0) mc["budget"] = budget;
      mc["threads"] = g.threads;
      apply_sets(mc, masc_sets);
      apply_sets(mc, run_sets);
      c.params = {{"csv", data_csv}, {"metric", metric}, {"masc", mc}};
      if (!labels_csv.empty()) c.params["labels_csv"] = labels_csv;
      const auto rep = hn::run(c);
      const json out{{"clusters", rep.result["clusters"]},
                     {"queries", rep.result["queries"]},
                     {"accuracy", rep.result["accuracy"]},
                     {"labeled", rep.result["labeled"]}};
      if (const auto parent = std::filesystem::path(result_out).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
      std::ofstream f(result_out);
      if (!f) throw hn::UsageError("cannot write " + result_out);
      f << out.dump(2) << '\n';
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*masc) return run_and_write(g, make_config(g, masc_exp, {"masc", "example10_1"}, masc_sets), "");
    if (*report) {
      for (const auto& f : report_files) summarize(f, std::cout);
      if (compare) {
        std::optional<std::string> first;
        for (const auto& path : report_files) {
          std::ifstream f(path);
          json j = json::parse(f);
          j.erase("timing");
          const std::string s = j.dump();
          if (!first) first = s;
          else if (s != *first) {
            std::cout << "payloads differ: " << path << '\n';
            return 1;
          }
        }
        std::cout << "payloads identical\n";
      }
      return 0;
    }
  } catch (const hn::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
