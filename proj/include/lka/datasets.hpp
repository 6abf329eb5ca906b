#pragma once

// Synthetic data sets and their CSV form. Points are columns of X; labels are
// class indices (empty for unlabeled kinds).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lka/error.hpp"
#include "lka/rng.hpp"
#include "lka/sphere.hpp"

namespace lka::data {

struct Dataset {
  std::string kind;
  std::vector<std::string> columns;  // coordinate names
  Eigen::MatrixXd X;
  std::vector<int> labels;

  Eigen::Index size() const { return X.cols(); }
  bool labeled() const { return !labels.empty(); }
};

inline std::vector<std::string> coord_names(int d) {
  if (d == 1) return {"t"};
  if (d == 2) return {"x", "y"};
  if (d == 3) return {"x", "y", "z"};
  std::vector<std::string> c;
  for (int i = 0; i < d; ++i) c.push_back("x" + std::to_string(i));
  return c;
}

// uniform on S^q in R^{q+1}
inline Dataset uniform_sphere(Rng& rng, Eigen::Index M, int q = 2) {
  require(M >= 0 && q >= 1, "uniform_sphere needs M >= 0 and q >= 1");
  Dataset d{"uniform_sphere", coord_names(q + 1), Eigen::MatrixXd(q + 1, M), {}};
  for (Eigen::Index j = 0; j < M; ++j) {
    Eigen::VectorXd v(q + 1);
    do
      for (auto& c : v) c = rng.normal();
    while (v.norm() == 0.0);
    d.X.col(j) = v.normalized();
  }
  return d;
}

// uniform on a random great circle of S^Q
inline Dataset great_circle(Rng& rng, Eigen::Index M, int Q = 2) {
  require(M >= 0 && Q >= 1, "great_circle needs M >= 0 and Q >= 1");
  const Eigen::MatrixXd U = sphere::random_rotation(rng, Q + 1);
  Dataset d{"great_circle", coord_names(Q + 1), Eigen::MatrixXd(Q + 1, M), {}};
  for (Eigen::Index j = 0; j < M; ++j) {
    const double th = rng.uniform(0.0, 2 * std::numbers::pi);
    d.X.col(j) = U.col(0) * std::cos(th) + U.col(1) * std::sin(th);
  }
  return d;
}

// Mixture on the circle (-pi, pi]. Counts per component: two uniforms on
// [-0.6,-0.4] (600 each, one label), normal(0.05, sd 0.2) 2400, atoms at -2,
// 0.4, 1.5 with 60, 120, 120 points. Labels 0..4 in that order.
inline Dataset example10_1(Rng& rng, double scale = 1.0) {
  require(scale > 0, "scale must be positive");
  auto cnt = [&](int k) { return Eigen::Index(std::lround(k * scale)); };
  std::vector<std::pair<double, int>> pts;
  for (Eigen::Index i = 0; i < 2 * cnt(600); ++i) pts.push_back({rng.uniform(-0.6, -0.4), 0});
  for (Eigen::Index i = 0; i < cnt(2400); ++i)
    pts.push_back({std::remainder(rng.normal(0.05, 0.2), 2 * std::numbers::pi), 1});
  const double atoms[3] = {-2.0, 0.4, 1.5};
  const int counts[3] = {60, 120, 120};
  for (int a = 0; a < 3; ++a)
    for (Eigen::Index i = 0; i < cnt(counts[a]); ++i) pts.push_back({atoms[a], 2 + a});
  Dataset d{"example10_1", {"t"}, Eigen::MatrixXd(1, Eigen::Index(pts.size())), {}};
  for (std::size_t j = 0; j < pts.size(); ++j) {
    d.X(0, Eigen::Index(j)) = pts[j].first;
    d.labels.push_back(pts[j].second);
  }
  return d;
}

// Three unit half-circles: upper at (0,0), lower at (1,0.5), upper at (2.5,0.5).
// Noise-free arcs are 0.5 apart.
inline Dataset three_moons(Rng& rng, Eigen::Index per_moon = 500, double noise = 0.05) {
  require(per_moon >= 0 && noise >= 0, "three_moons needs per_moon >= 0 and noise >= 0");
  const double cx[3] = {0.0, 1.0, 2.5}, cy[3] = {0.0, 0.5, 0.5}, sgn[3] = {1.0, -1.0, 1.0};
  Dataset d{"three_moons", {"x", "y"}, Eigen::MatrixXd(2, 3 * per_moon), {}};
  Eigen::Index j = 0;
  for (int m = 0; m < 3; ++m)
    for (Eigen::Index i = 0; i < per_moon; ++i, ++j) {
      const double t = rng.uniform(0.0, std::numbers::pi);
      d.X(0, j) = cx[m] + std::cos(t) + noise * rng.normal();
      d.X(1, j) = cy[m] + sgn[m] * std::sin(t) + noise * rng.normal();
      d.labels.push_back(m);
    }
  return d;
}

// points uniform in arclength on the ellipse (a cos t, b sin t)
inline Eigen::MatrixXd ellipse_arclength(Rng& rng, Eigen::Index N, double a, double b) {
  constexpr int T = 20000;
  std::vector<double> s(T + 1, 0.0);
  auto speed = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
  const double dt = 2 * std::numbers::pi / T;
  for (int i = 1; i <= T; ++i) s[i] = s[i - 1] + 0.5 * dt * (speed((i - 1) * dt) + speed(i * dt));
  Eigen::MatrixXd P(2, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const double u = rng.uniform(0.0, s[T]);
    const auto it = std::upper_bound(s.begin(), s.end(), u);
    const int i = std::clamp(int(it - s.begin()), 1, T);
    const double t = (i - 1 + (u - s[i - 1]) / (s[i] - s[i - 1])) * dt;
    P(0, j) = a * std::cos(t);
    P(1, j) = b * std::sin(t);
  }
  return P;
}

// Unit circle (label 0) and a concentric ellipse with semi-major axis
// `major` and the given eccentricity (label 1), both with additive noise.
inline Dataset circle_ellipse(Rng& rng, Eigen::Index per_class = 1000, double eccentricity = 0.79,
                              double noise = 0.05, double major = 1.25) {
  require(per_class >= 0 && eccentricity >= 0 && eccentricity < 1 && noise >= 0 && major > 0,
          "circle_ellipse parameters out of range");
  const double minor = major * std::sqrt(1 - eccentricity * eccentricity);
  Dataset d{"circle_ellipse", {"x", "y"}, Eigen::MatrixXd(2, 2 * per_class), {}};
  d.X.leftCols(per_class) = ellipse_arclength(rng, per_class, 1.0, 1.0);
  d.X.rightCols(per_class) = ellipse_arclength(rng, per_class, major, minor);
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    d.X(0, j) += noise * rng.normal();
    d.X(1, j) += noise * rng.normal();
    d.labels.push_back(j < per_class ? 0 : 1);
  }
  return d;
}

// Two isotropic Gaussians in R^2 with centers gap_sigmas * sigma apart.
inline Dataset two_blobs(Rng& rng, Eigen::Index per_blob = 500, double sigma = 0.1, double gap_sigmas = 10.0) {
  require(per_blob >= 0 && sigma > 0, "two_blobs needs per_blob >= 0 and sigma > 0");
  Dataset d{"two_blobs", {"x", "y"}, Eigen::MatrixXd(2, 2 * per_blob), {}};
  for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
    const int b = j < per_blob ? 0 : 1;
    d.X(0, j) = b * gap_sigmas * sigma + sigma * rng.normal();
    d.X(1, j) = sigma * rng.normal();
    d.labels.push_back(b);
  }
  return d;
}

inline const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k = {"uniform_sphere", "great_circle", "example10_1",
                                             "three_moons",    "circle_ellipse", "two_blobs"};
  return k;
}

// params: M, q, Q, per_class, noise, eccentricity, major, sigma, gap_sigmas, scale
inline Dataset generate(const std::string& kind, const nlohmann::json& params, std::uint64_t seed) {
  Rng rng(seed, "data/" + kind);
  const auto& p = params.is_null() ? nlohmann::json::object() : params;
  if (kind == "uniform_sphere") return uniform_sphere(rng, p.value("M", 1000), p.value("q", 2));
  if (kind == "great_circle") return great_circle(rng, p.value("M", 1000), p.value("Q", 2));
  if (kind == "example10_1") return example10_1(rng, p.value("scale", 1.0));
  if (kind == "three_moons") return three_moons(rng, p.value("per_class", 500), p.value("noise", 0.05));
  if (kind == "circle_ellipse")
    return circle_ellipse(rng, p.value("per_class", 1000), p.value("eccentricity", 0.79), p.value("noise", 0.05),
                          p.value("major", 1.25));
  if (kind == "two_blobs") return two_blobs(rng, p.value("per_class", 500), p.value("sigma", 0.1), p.value("gap_sigmas", 10.0));
  throw InvalidArgument("unknown data kind: " + kind);
}

// header "x,y[,label]"; full round-trip precision
inline void write_csv(std::ostream& os, const Dataset& d) {
  for (std::size_t c = 0; c < d.columns.size(); ++c) os << (c ? "," : "") << d.columns[c];
  if (d.labeled()) os << ",label";
  os << '\n' << std::setprecision(17);
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    for (Eigen::Index r = 0; r < d.X.rows(); ++r) os << (r ? "," : "") << d.X(r, j);
    if (d.labeled()) os << ',' << d.labels[j];
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& d) {
  std::ofstream f(path);
  require(bool(f), "cannot write " + path);
  write_csv(f, d);
}

// Reads a CSV with a header row; a column named "label" becomes the labels.
inline Dataset read_csv(std::istream& is) {
  std::string line;
  require(bool(std::getline(is, line)), "empty CSV (no header)");
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
  }
  int label_col = -1;
  Dataset d;
  d.kind = "csv";
  for (std::size_t c = 0; c < head.size(); ++c) {
    if (head[c] == "label")
      label_col = int(c);
    else
      d.columns.push_back(head[c]);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c == label_col)
        d.labels.push_back(std::stoi(cell));
      else
        row.push_back(std::stod(cell));
      ++c;
    }
    require(c == int(head.size()), "CSV row has the wrong number of fields");
    rows.push_back(std::move(row));
  }
  d.X.resize(Eigen::Index(d.columns.size()), Eigen::Index(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t r = 0; r < rows[j].size(); ++r) d.X(Eigen::Index(r), Eigen::Index(j)) = rows[j][r];
  return d;
}

inline Dataset read_csv(const std::string& path) {
  std::ifstream f(path);
  require(bool(f), "cannot read " + path);
  return read_csv(f);
}

}  // namespace lka::data
