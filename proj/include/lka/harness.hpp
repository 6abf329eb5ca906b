#pragma once

// Experiment runner: JSON config in, JSON report and SVG plots out.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <complex>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lka/datasets.hpp"
#include "lka/error.hpp"
#include "lka/filters.hpp"
#include "lka/manifold.hpp"
#include "lka/masc.hpp"
#include "lka/quadrature.hpp"
#include "lka/rng.hpp"
#include "lka/sphere.hpp"
#include "lka/sphere_approx.hpp"
#include "lka/svg.hpp"
#include "lka/torus.hpp"
#include "lka/zonal.hpp"

namespace lka::harness {

using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

// bad command line or config file
struct UsageError : Error {
  using Error::Error;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  json params = json::object();
  std::string out_dir;  // empty: decided by the caller
  std::string source;   // file it was read from, not serialized

  json to_json() const {
    json j{{"experiment", experiment}, {"seed", seed}, {"params", params}};
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    return j;
  }

  static ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    if (!j.contains("experiment") || !j["experiment"].is_string()) throw UsageError("config needs an \"experiment\" string");
    ExperimentConfig c;
    c.experiment = j["experiment"].get<std::string>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("params")) {
      if (!j["params"].is_object()) throw UsageError("\"params\" must be an object");
      c.params = j["params"];
    }
    c.out_dir = j.value("out_dir", std::string());
    return c;
  }

  static ExperimentConfig parse(const std::string& text, const std::string& source = "<string>") {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw UsageError("empty config file: " + source);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw UsageError("cannot parse config " + source + ": " + e.what());
    }
    auto c = from_json(j);
    c.source = source;
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }
};

struct Plot {
  std::string file;  // name relative to the output directory
  std::string svg;
};

struct Report {
  ExperimentConfig config;
  json result;  // deterministic given the config
  json timing;  // wall clock, excluded from the payload
  std::vector<Plot> plots;

  // everything that must be byte-identical across runs with equal config
  json payload() const { return {{"config", config.to_json()}, {"result", result}, {"version", kVersion}}; }

  json to_json() const {
    json j = payload();
    j["timing"] = timing;
    return j;
  }
};

// Moves every "seconds" entry out of a result into a flat timing map keyed by
// JSON pointer, so the remaining payload is deterministic.
inline json split_timing(json& result) {
  json timing = json::object();
  std::function<void(json&, const std::string&)> walk = [&](json& node, const std::string& path) {
    if (node.is_object()) {
      if (node.contains("seconds")) {
        timing[path.empty() ? "/" : path] = node["seconds"];
        node.erase("seconds");
      }
      for (auto& [k, v] : node.items()) walk(v, path + "/" + k);
    } else if (node.is_array()) {
      for (std::size_t i = 0; i < node.size(); ++i) walk(node[i], path + "/" + std::to_string(i));
    }
  };
  walk(result, "");
  return timing;
}

namespace detail {

inline std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<int> int_list(const json& p, const char* key, std::vector<int> def) {
  return p.contains(key) ? p[key].get<std::vector<int>>() : def;
}

inline svg::Bars histogram_bars(const std::string& title, const std::vector<std::string>& names,
                                const std::vector<std::vector<double>>& values) {
  svg::Bars b;
  b.title = title;
  b.ylabel = "% of test points with error below threshold";
  for (int x = 2; x <= 10; ++x) b.groups.push_back("1e-" + std::to_string(x));
  b.names = names;
  b.values = values;
  return b;
}

// trigonometric polynomial with real values, frequencies |k|_inf <= deg
struct TrigPoly {
  int q = 1;
  std::vector<torus::MultiIndex> k;
  std::vector<std::complex<double>> c;
  double operator()(const torus::Point& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      double dot = 0.0;
      for (int d = 0; d < q; ++d) dot += k[i][d] * x[d];
      s += (c[i] * std::exp(std::complex<double>(0.0, dot))).real();
    }
    return s;
  }
};

inline TrigPoly random_trig_poly(Rng& rng, int q, int deg) {
  TrigPoly p;
  p.q = q;
  // real part of sum c_k e^{ikx} over k in the box is real-valued and has |k|_2 <= sqrt(q) deg
  for (const auto& k : torus::lattice(q, std::sqrt(double(q)) * deg + 1)) {
    bool in = true;
    for (int d = 0; d < q; ++d) in = in && std::abs(k[d]) <= deg;
    if (!in) continue;
    p.k.push_back(k);
    p.c.push_back({rng.normal(), rng.normal()});
  }
  return p;
}

inline double synth_sphere(const sphere::HarmonicBasis2& H, const Eigen::VectorXd& c, const Eigen::Vector3d& x,
                           std::vector<double>& buf) {
  buf.resize(std::size_t(H.size()));
  H.eval(x[0], x[1], x[2], buf.data());
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) s += c[i] * buf[std::size_t(i)];
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------- torus

// Fourier projection vs filtered sigma_n of |cos x|^a on the N-point grid.
inline Report run_fig4(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const int N = p.value("N", 512);
  const double a = p.value("exponent", 0.25), thr = p.value("threshold", 1e-4);
  const Filter smooth = Filter::parse(p.value("filter", std::string("quintic")));
  const auto degrees = detail::int_list(p, "degrees", {128, 256});
  auto f = [&](const torus::Point& x) { return std::pow(std::fabs(std::cos(x[0])), a); };
  const auto data = torus::TorusSamples::grid(1, N, f);
  const auto grid = torus::grid_points(1, N);
  Report rep{cfg, json::object(), json::object(), {}};
  rep.result["rows"] = json::array();
  for (int n : degrees) {
    const torus::Sigma four(data, Filter(FilterKind::sharp), n), sig(data, smooth, n);
    const auto vf = four.eval(grid), vs = sig.eval(grid);
    std::vector<double> x, ef, es;
    int cf = 0, cs = 0;
    double mf = 0, ms = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = f(grid[i]);
      const double e1 = std::fabs(vf[i].real() - t), e2 = std::fabs(vs[i].real() - t);
      cf += e1 <= thr;
      cs += e2 <= thr;
      mf = std::max(mf, e1);
      ms = std::max(ms, e2);
      // wrap to (-pi, pi] for the plot
      x.push_back(std::remainder(grid[i][0], 2 * std::numbers::pi) / std::numbers::pi);
      ef.push_back(std::max(e1, 1e-17));
      es.push_back(std::max(e2, 1e-17));
    }
    rep.result["rows"].push_back({{"n", n},
                                  {"fourier_percent", 100.0 * cf / N},
                                  {"sigma_percent", 100.0 * cs / N},
                                  {"fourier_max_error", mf},
                                  {"sigma_max_error", ms}});
    // sort by x for a clean polyline
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    svg::Series s1{"Fourier projection", {}, {}}, s2{"sigma_n (" + smooth.name() + ")", {}, {}};
    for (auto i : order) {
      s1.x.push_back(x[i]);
      s1.y.push_back(ef[i]);
      s2.x.push_back(x[i]);
      s2.y.push_back(es[i]);
    }
    svg::Plot plot{"|cos x|^" + svg::fmt(a) + ", n = " + std::to_string(n), "x / pi", "absolute error", false, true,
                   {s1, s2}};
    rep.plots.push_back({"fig4_n" + std::to_string(n) + ".svg", plot.render()});
  }
  rep.result["N"] = N;
  rep.result["threshold"] = thr;
  return rep;
}

// ---------------------------------------------------------------- sphere approximation

inline sphere_approx::BenchConfig bench_config(const json& p) {
  sphere_approx::BenchConfig b;
  b.train = p.value("train", b.train);
  b.test = p.value("test", b.test);
  b.n = p.value("n", b.n);
  b.qs_order = p.value("qs_order", b.qs_order);
  return b;
}

// runs seeds seed, seed+1, ...; mean table over the runs
inline Report run_table(const ExperimentConfig& cfg, bool remark) {
  namespace sa = sphere_approx;
  const auto bc = bench_config(cfg.params);
  const int runs = cfg.params.value("runs", remark ? 1 : 3);
  require(runs >= 1, "runs must be >= 1");
  Report rep{cfg, json::object(), json::object(), {}};
  std::map<std::string, std::vector<double>> mean;
  std::vector<std::string> names;
  rep.result["runs"] = json::array();
  for (int r = 0; r < runs; ++r) {
    const std::uint64_t seed = cfg.seed + std::uint64_t(r);
    const auto res = remark ? sa::example_remark79(seed, bc) : sa::benchmark_table2(seed, bc);
    json j = res.to_json();
    j["seed"] = seed;
    rep.result["runs"].push_back(j);
    for (std::size_t i = 0; i < res.methods.size(); ++i) {
      const std::string name = sa::method_name(res.methods[i]);
      if (r == 0) names.push_back(name);
      auto& m = mean[name];
      m.resize(9, 0.0);
      for (int x = 2; x <= 10; ++x) m[std::size_t(x - 2)] += res.rows[i].at(x) / runs;
    }
  }
  json table = json::object();
  for (const auto& nm : names) table[nm] = mean[nm];
  rep.result["mean"] = {{"thresholds", sa::error_histogram(Eigen::VectorXd()).thresholds}, {"rows", table}};
  std::vector<std::vector<double>> vals;
  for (const auto& nm : names) vals.push_back(mean[nm]);
  rep.plots.push_back({remark ? "remark79.svg" : "table2.svg",
                       detail::histogram_bars(remark ? "Piecewise-smooth target, LS vs QS5" : "Benchmark g, mean over runs",
                                              names, vals)
                           .render()});
  return rep;
}

// ---------------------------------------------------------------- quadrature

inline Report run_quadrature(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const Eigen::Index M = p.value("points", 4096);
  const int order = p.value("order", 16), polys = p.value("polys", 50);
  Rng rng(cfg.seed, "quadrature/cloud");
  const auto cloud = quad::PointCloud::sphere(sphere::uniform_sphere(rng, M));
  const auto rule = quad::solve_weights(cloud, order);
  // the basis is orthonormal for the normalized surface measure, so the integral is c_0
  sphere::HarmonicBasis2 H(order);
  Rng prng(cfg.seed, "quadrature/polys");
  std::vector<double> buf;
  double worst = 0.0;
  for (int t = 0; t < polys; ++t) {
    Eigen::VectorXd c(H.size());
    for (auto& v : c) v = prng.normal();
    Eigen::VectorXd vals(M);
    for (Eigen::Index j = 0; j < M; ++j) vals[j] = detail::synth_sphere(H, c, cloud.X.col(j), buf);
    worst = std::max(worst, std::fabs(rule.integrate(vals) - c[0]));
  }
  Eigen::VectorXd w = rule.weights * double(M);
  std::sort(w.data(), w.data() + w.size());
  Report rep{cfg, json::object(), json::object(), {}};
  rep.result = {{"points", M},
                {"order", order},
                {"moment_residual", rule.moment_residual},
                {"weight_sum", rule.weight_sum()},
                {"min_weight_times_M", w[0]},
                {"max_weight_times_M", w[w.size() - 1]},
                {"polys", polys},
                {"max_poly_error", worst}};
  std::vector<double> idx(std::size_t(w.size()));
  std::iota(idx.begin(), idx.end(), 0.0);
  svg::Plot plot{"Sorted quadrature weights", "rank", "M * weight", false, false, {{"weights", idx, detail::to_vec(w)}}};
  rep.plots.push_back({"quadrature_weights.svg", plot.render()});
  return rep;
}

// sigma_n with the quintic filter and exact rules on random polynomials of degree <= n/2 - 1
inline Report run_reproduction(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const int tn = p.value("torus_n", 16), tq = p.value("torus_q", 1), sn = p.value("sphere_n", 16);
  const int polys = p.value("polys", 100), probes = p.value("probes", 256);
  const Filter h = Filter::parse(p.value("filter", std::string("quintic")));
  Rng rng(cfg.seed, "reproduction/torus");
  double terr = 0.0;
  for (int t = 0; t < polys; ++t) {
    const auto P = detail::random_trig_poly(rng, tq, tn / 2 - 1);
    const torus::Sigma sig(torus::TorusSamples::grid(tq, 2 * tn, P), h, tn);
    for (int i = 0; i < probes; ++i) {
      torus::Point x{0, 0, 0};
      for (int d = 0; d < tq; ++d) x[d] = rng.uniform(0, 2 * std::numbers::pi);
      terr = std::max(terr, std::abs(sig(x) - P(x)));
    }
  }
  // products with degree < n harmonics have degree < 3n/2, so a rule exact to 2n suffices
  const auto mu = quad::product_gauss_rule(2 * sn);
  sphere::HarmonicBasis2 H(sn);
  Rng srng(cfg.seed, "reproduction/sphere");
  std::vector<double> buf;
  double serr = 0.0;
  for (int t = 0; t < polys; ++t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(H.size());
    for (int i = 0; i < (sn / 2) * (sn / 2); ++i) c[i] = srng.normal();
    Eigen::VectorXd vals(mu.cloud.size());
    for (Eigen::Index j = 0; j < vals.size(); ++j) vals[j] = detail::synth_sphere(H, c, mu.cloud.X.col(j), buf);
    const Eigen::VectorXd s = zonal::filtered_coeffs(mu, vals, sn, h);
    const Eigen::Matrix3Xd X = sphere::uniform_sphere(srng, probes);
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      serr = std::max(serr, std::fabs(detail::synth_sphere(H, s, X.col(j), buf) - detail::synth_sphere(H, c, X.col(j), buf)));
  }
  Report rep{cfg, json::object(), json::object(), {}};
  rep.result = {{"torus", {{"n", tn}, {"q", tq}, {"grid", 2 * tn}, {"max_error", terr}}},
                {"sphere", {{"n", sn}, {"rule_degree", 2 * sn}, {"max_error", serr}}},
                {"polys", polys},
                {"filter", h.name()}};
  return rep;
}

// ---------------------------------------------------------------- manifold

inline Report run_manifold(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  manifold::RateConfig rc;
  rc.degrees = detail::int_list(p, "degrees", rc.degrees);
  rc.gamma = p.value("gamma", rc.gamma);
  rc.delta = p.value("delta", rc.delta);
  rc.noise = p.value("noise", rc.noise);
  rc.probes = p.value("probes", rc.probes);
  rc.Q = p.value("Q", rc.Q);
  const std::string target = p.value("target", std::string("x1"));
  if (target == "x1") {
    rc.target = [](const Eigen::VectorXd& x) { return x[0]; };
  } else if (target == "exp") {
    rc.target = [](const Eigen::VectorXd& x) { return std::exp(x[0] + 0.5 * x[1]); };
  } else {
    throw InvalidArgument("unknown manifold target: " + target);
  }
  const auto table = manifold::rate_experiment(rc, cfg.seed);
  Report rep{cfg, table.to_json(), json::object(), {}};
  rep.result["target"] = target;
  svg::Series s{"sup error", {}, {}}, d{"max |density - 1|", {}, {}};
  for (const auto& r : table.rows) {
    s.x.push_back(r.n);
    s.y.push_back(std::max(r.sup_error, 1e-17));
    d.x.push_back(r.n);
    d.y.push_back(std::max(r.density_error, 1e-17));
  }
  rep.plots.push_back({"manifold_rate.svg", svg::Plot{"Estimator on a great circle", "n", "error", true, true, {s, d}}.render()});
  return rep;
}

// ---------------------------------------------------------------- zonal

inline Report run_zonal(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  zonal::RateConfig rc;
  rc.degrees = detail::int_list(p, "degrees", rc.degrees);
  rc.gamma = p.value("gamma", rc.gamma);
  rc.mu_factor = p.value("mu_factor", rc.mu_factor);
  rc.nu_factor = p.value("nu_factor", rc.nu_factor);
  rc.probes = p.value("probes", rc.probes);
  const int deg = p.value("repro_degree", 8), reps = p.value("repro_polys", 20), pts = p.value("repro_points", 50);
  // reproducing identity: integral of |x.y|^{2g+1} D_g P(y) over y equals P(x)
  Rng rng(cfg.seed, "zonal/reproduce");
  zonal::ZonalMask mask(rc.gamma, 2, deg);
  sphere::HarmonicBasis2 H(deg + 1);
  std::vector<double> buf;
  double rerr = 0.0;
  for (int t = 0; t < reps; ++t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(H.size());
    // odd harmonics are annihilated by the even kernel, so P has even degrees only
    for (int l = 0; l <= deg; l += 2)
      for (int k = 0; k < 2 * l + 1; ++k) c[l * l + k] = rng.normal();
    const Eigen::VectorXd D = zonal::apply_inverse(mask, c);
    const Eigen::Matrix3Xd X = sphere::uniform_sphere(rng, pts);
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      rerr = std::max(rerr, std::fabs(zonal::zonal_integral(rc.gamma, X.col(j), D) - detail::synth_sphere(H, c, X.col(j), buf)));
  }
  const auto rows = zonal::rate_experiment(rc, cfg.seed);
  Report rep{cfg, json::object(), json::object(), {}};
  json jr = json::array();
  svg::Series s{"sup error", {}, {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json r{{"n", rows[i].n},
           {"centers", rows[i].centers},
           {"sup_error", rows[i].sup_error},
           {"coeff_l1", rows[i].coeff_l1},
           {"seconds", rows[i].seconds}};
    if (i > 0) r["ratio"] = rows[i].sup_error / rows[i - 1].sup_error;
    jr.push_back(r);
    s.x.push_back(rows[i].n);
    s.y.push_back(std::max(rows[i].sup_error, 1e-17));
  }
  rep.result = {{"gamma", rc.gamma},
                {"expected_ratio", std::pow(2.0, -2.0 * (rc.gamma + 1.0))},
                {"reproduce", {{"degree", deg}, {"polys", reps}, {"max_error", rerr}}},
                {"rows", jr}};
  rep.plots.push_back({"zonal_rate.svg", svg::Plot{"Zonal network, even part of exp(z)", "n", "sup error", true, true, {s}}.render()});
  return rep;
}

// ---------------------------------------------------------------- masc

inline svg::Plot cluster_scatter(const data::Dataset& d, const std::vector<int>& labels, const std::vector<masc::Index>& queried,
                                 const std::string& title) {
  svg::Plot plot{title, d.columns.size() > 0 ? d.columns[0] : "x", d.columns.size() > 1 ? d.columns[1] : "y", false, false, {}};
  int classes = 0;
  for (int l : labels) classes = std::max(classes, l + 1);
  for (int c = -1; c < classes; ++c) {
    svg::Series s{c < 0 ? "unlabeled" : "label " + std::to_string(c), {}, {}, true, c < 0 ? "#bbbbbb" : svg::palette(std::size_t(c))};
    for (Eigen::Index j = 0; j < d.size(); ++j)
      if (labels[std::size_t(j)] == c) {
        s.x.push_back(d.X(0, j));
        s.y.push_back(d.X.rows() > 1 ? d.X(1, j) : 0.0);
      }
    if (!s.x.empty()) plot.series.push_back(s);
  }
  svg::Series q{"queried", {}, {}, true, "#000000"};
  for (auto i : queried) {
    q.x.push_back(d.X(0, i));
    q.y.push_back(d.X.rows() > 1 ? d.X(1, i) : 0.0);
  }
  plot.series.push_back(q);
  return plot;
}

// Dataset plus an oracle label vector (ground truth when it came from the generator).
inline std::pair<data::Dataset, std::vector<int>> masc_data(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  data::Dataset d;
  if (p.contains("csv")) {
    d = data::read_csv(p["csv"].get<std::string>());
  } else {
    const std::string kind = p.value("data", std::string("three_moons"));
    d = data::generate(kind, p.value("data_params", json::object()), cfg.seed);
  }
  std::vector<int> oracle = d.labels;
  if (p.contains("labels_csv")) {
    const auto l = data::read_csv(p["labels_csv"].get<std::string>());
    oracle = l.labels;
    // a label file without a "label" header: use its single column
    if (oracle.empty() && l.X.rows() == 1)
      for (Eigen::Index j = 0; j < l.X.cols(); ++j) oracle.push_back(int(std::lround(l.X(0, j))));
  }
  if (oracle.empty()) throw UsageError("masc needs labels for the oracle (a label column or a labels file)");
  if (Eigen::Index(oracle.size()) != d.size()) throw UsageError("label count does not match the number of points");
  return {std::move(d), std::move(oracle)};
}

inline Report run_masc(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  auto [d, truth] = masc_data(cfg);
  const auto metric = masc::parse_metric(p.value("metric", std::string(d.kind == "example10_1" ? "torus" : "euclidean")));
  auto mc = masc::Config::from_json(p.value("masc", json::object()));
  if (p.contains("threads")) mc.threads = p["threads"].get<int>();
  const auto cloud = masc::MetricCloud::make(d.X, metric);
  const auto r = masc::masc_pipeline(cloud, [&](masc::Index i) { return truth[std::size_t(i)]; }, mc);
  Report rep{cfg, json::object(), json::object(), {}};
  rep.result = r.to_json();
  rep.result["data"] = d.kind;
  rep.result["points"] = d.size();
  rep.result["metric"] = masc::metric_name(metric);
  rep.result["config"] = mc.to_json();
  rep.result["labeled"] = std::count_if(r.labels.begin(), r.labels.end(), [](int l) { return l != masc::kUnlabeled; });
  rep.result["accuracy"] = masc::accuracy(r.labels, truth);
  if (d.X.rows() <= 2)
    rep.plots.push_back({"masc_" + d.kind + ".svg",
                         cluster_scatter(d, r.labels, r.queried,
                                         d.kind + ": " + std::to_string(r.queries()) + " queries").render()});
  return rep;
}

// F_n on the circle for the Example 10.1 mixture: local maxima, kept set, clusters.
inline Report run_example10_1(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const int n = p.value("n", 128), probes = p.value("probes", 4096);
  const double theta = p.value("theta", 0.01), cells = p.value("tolerance_cells", 4.0);
  const double theta5 = p.value("cluster_theta", 0.25), eta5 = p.value("cluster_eta", 0.01);
  const auto d = data::generate("example10_1", p.value("data_params", json::object()), cfg.seed);
  const auto cloud = masc::MetricCloud::torus(d.X);
  Eigen::MatrixXd P(1, probes);
  for (int i = 0; i < probes; ++i) P(0, i) = -std::numbers::pi + 2 * std::numbers::pi * (i + 0.5) / probes;
  const auto est = masc::support_estimate(cloud, n, Filter(FilterKind::quintic), P, masc::PsiForm::squared_real,
                                          p.value("threads", 1));
  // strict local maxima on the periodic probe grid, largest first
  std::vector<std::pair<double, double>> maxima;
  for (int i = 0; i < probes; ++i) {
    const double a = est.at_probes[(i + probes - 1) % probes], b = est.at_probes[i], c = est.at_probes[(i + 1) % probes];
    if (b > a && b >= c) maxima.push_back({b, P(0, i)});
  }
  std::sort(maxima.begin(), maxima.end(), [](auto& u, auto& v) { return u.first > v.first; });
  const double tol = cells * 2 * std::numbers::pi / n;
  json atoms = json::array();
  for (double atom : p.value("atoms", std::vector<double>{-2.0, 0.4, 1.5})) {
    double best = std::numeric_limits<double>::infinity(), at = 0;
    for (const auto& m : maxima) {
      const double dd = std::fabs(std::remainder(m.second - atom, 2 * std::numbers::pi));
      if (dd < best) best = dd, at = m.second;
    }
    atoms.push_back({{"atom", atom}, {"nearest_max", at}, {"distance", best}, {"within", best <= tol}});
  }
  std::vector<int> kept_per(5, 0), total(5, 0);
  for (int l : d.labels) ++total[std::size_t(l)];
  for (auto i : masc::threshold_set(est, theta)) ++kept_per[std::size_t(d.labels[std::size_t(i)])];
  const auto part = masc::cluster(cloud, masc::threshold_set(est, theta5), eta5);
  json sizes = json::array();
  for (const auto& c : part.clusters) sizes.push_back(c.size());
  json top = json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(maxima.size(), 10); ++k)
    top.push_back({{"x", maxima[k].second}, {"F", maxima[k].first}});
  Report rep{cfg, json::object(), json::object(), {}};
  rep.result = {{"n", n},
                {"points", d.size()},
                {"tolerance", tol},
                {"atoms", atoms},
                {"top_maxima", top},
                {"theta", theta},
                {"kept_per_component", kept_per},
                {"component_sizes", total},
                {"clusters", {{"theta", theta5}, {"eta", eta5}, {"sizes", sizes}}}};
  svg::Series f{"F_n", {}, {}}, t{"threshold", {}, {}};
  const double cut = theta * est.max_over_samples();
  for (int i = 0; i < probes; ++i) {
    f.x.push_back(P(0, i));
    f.y.push_back(std::max(est.at_probes[i], 1e-12));
  }
  t.x = {P(0, 0), P(0, probes - 1)};
  t.y = {cut, cut};
  rep.plots.push_back({"example10_1_F.svg", svg::Plot{"F_" + std::to_string(n) + " on the circle", "x", "F_n", false, true, {f, t}}.render()});
  return rep;
}

// ---------------------------------------------------------------- dispatch

struct Experiment {
  const char* module;
  std::function<Report(const ExperimentConfig&)> run;
};

inline const std::map<std::string, Experiment>& experiments() {
  static const std::map<std::string, Experiment> m = {
      {"fig4", {"torus_approx", run_fig4}},
      {"table2", {"sphere_approx", [](const ExperimentConfig& c) { return run_table(c, false); }}},
      {"remark79", {"sphere_approx", [](const ExperimentConfig& c) { return run_table(c, true); }}},
      {"quadrature", {"scattered_quadrature", run_quadrature}},
      {"reproduction", {"torus_approx+sphere_approx", run_reproduction}},
      {"manifold_rate", {"manifold_regression", run_manifold}},
      {"zonal_rate", {"zonal_networks", run_zonal}},
      {"masc", {"masc", run_masc}},
      {"example10_1", {"masc", run_example10_1}},
  };
  return m;
}

inline std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline Report run(const ExperimentConfig& cfg) {
  const auto& all = experiments();
  const auto it = all.find(cfg.experiment);
  if (it == all.end()) {
    std::string known;
    for (const auto& [k, v] : all) known += (known.empty() ? "" : ", ") + k;
    throw UsageError("unknown experiment '" + cfg.experiment + "' (known: " + known + ")");
  }
  const auto t0 = std::chrono::steady_clock::now();
  Report rep;
  try {
    rep = it->second.run(cfg);
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(std::string(it->second.module) + ": " + e.what() +
                (cfg.source.empty() ? std::string() : " (config " + cfg.source + ")"));
  }
  rep.config = cfg;
  rep.timing = split_timing(rep.result);
  rep.timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.timing["finished"] = timestamp();
  return rep;
}

// Writes <dir>/<stem>.json and the plots; returns the written paths.
inline std::vector<std::string> write(const Report& rep, const std::string& dir, const std::string& stem) {
  std::filesystem::create_directories(dir.empty() ? "." : dir);
  const std::filesystem::path base = dir.empty() ? "." : dir;
  std::vector<std::string> out;
  const auto jp = (base / (stem + ".json")).string();
  std::ofstream f(jp);
  require(bool(f), "cannot write " + jp);
  f << rep.to_json().dump(2) << '\n';
  out.push_back(jp);
  for (const auto& p : rep.plots) {
    const auto sp = (base / p.file).string();
    svg::write(sp, p.svg);
    out.push_back(sp);
  }
  return out;
}

}  // namespace lka::harness
