#pragma once

// Regression and density estimation on an unknown q-dimensional submanifold of
// S^Q by direct summation of the q-dimensional localized kernel over ambient
// inner products.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lka/error.hpp"
#include "lka/filters.hpp"
#include "lka/rng.hpp"
#include "lka/sphere.hpp"

namespace lka::manifold {

enum class Mode { raw, ratio };

inline Mode parse_mode(const std::string& s) {
  if (s == "raw") return Mode::raw;
  if (s == "ratio") return Mode::ratio;
  throw InvalidArgument("unknown mode: " + s);
}

struct LabeledCloud {
  int Q = 2;  // ambient sphere S^Q
  int q = 2;  // manifold dimension
  Eigen::MatrixXd X;  // (Q+1) x M, unit columns
  Eigen::VectorXd y;
  double y_bound = std::numeric_limits<double>::infinity();

  Eigen::Index size() const { return X.cols(); }

  void check() const {
    require(q >= 1 && q <= Q, "manifold dimension must satisfy 1 <= q <= Q");
    require(X.rows() == Q + 1, "points must live in R^{Q+1}");
    require(X.cols() == y.size(), "labels and points differ in length");
    require(X.cols() > 0, "empty sample");
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      require(std::fabs(X.col(j).norm() - 1.0) < 1e-9, "points must be unit vectors");
    if (std::isfinite(y_bound)) require(y.cwiseAbs().maxCoeff() <= y_bound, "labels exceed the declared range");
  }
};

// (1/M) sum y_j Phi(x.x_j) and (1/M) sum Phi(x.x_j)
struct KernelSums {
  double fy = 0.0;
  double f = 0.0;
};

inline constexpr double kMinDenominator = 1e-10;

class Estimator {
 public:
  Estimator(LabeledCloud data, double n, Filter h = Filter(FilterKind::quintic), Mode mode = Mode::raw)
      : data_(std::move(data)), kernel_(data_.q, n, h), mode_(mode) {
    data_.check();
  }

  const LabeledCloud& data() const { return data_; }
  const sphere::SphericalKernel& kernel() const { return kernel_; }
  Mode mode() const { return mode_; }

  KernelSums sums(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    require(x.size() == data_.X.rows(), "probe dimension mismatch");
    const Eigen::Index M = data_.size();
    constexpr Eigen::Index B = 4096;
    std::vector<double> t(B), phi(B);
    double fy = 0.0, f = 0.0;
    for (Eigen::Index s = 0; s < M; s += B) {
      const Eigen::Index w = std::min(B, M - s);
      Eigen::Map<Eigen::VectorXd> tv(t.data(), w);
      tv.noalias() = data_.X.middleCols(s, w).transpose() * x;
      for (Eigen::Index i = 0; i < w; ++i) t[i] = std::clamp(t[i], -1.0, 1.0);
      kernel_.eval_unchecked(std::span<const double>(t.data(), w), std::span<double>(phi.data(), w));
      const Eigen::Map<const Eigen::VectorXd> pv(phi.data(), w);
      fy += pv.dot(data_.y.segment(s, w));
      f += pv.sum();
    }
    return {fy / double(M), f / double(M)};
  }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const auto s = sums(x);
    if (mode_ == Mode::raw) return s.fy;
    if (std::fabs(s.f) < kMinDenominator) throw OutOfSupport("probe is far from the data support");
    return s.fy / s.f;
  }

  // one value per probe column
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& P) const {
    Eigen::VectorXd v(P.cols());
    for (Eigen::Index j = 0; j < P.cols(); ++j) v[j] = (*this)(P.col(j));
    return v;
  }

  // (1/M) sum Phi(x.x_j), the density estimate w.r.t. the manifold's normalized volume
  double density(const Eigen::Ref<const Eigen::VectorXd>& x) const { return sums(x).f; }

 private:
  LabeledCloud data_;
  sphere::SphericalKernel kernel_;
  Mode mode_;
};

// M(n) = ceil(4 n^{q+2 gamma} ln(n/delta))
inline Eigen::Index sample_schedule(double n, int q, double gamma, double delta = 0.1) {
  require(n >= 1 && delta > 0 && delta < 0.5, "schedule needs n >= 1 and 0 < delta < 1/2");
  return Eigen::Index(std::ceil(4.0 * std::pow(n, q + 2 * gamma) * std::log(n / delta)));
}

// Points (cos th, sin th, 0, ...) rotated by U: a great circle in S^Q.
inline Eigen::MatrixXd circle_points(const Eigen::MatrixXd& U, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd X(U.rows(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    X.col(j) = U.col(0) * std::cos(theta[j]) + U.col(1) * std::sin(theta[j]);
  return X;
}

struct RateConfig {
  std::vector<int> degrees = {8, 16, 32};
  double gamma = 1.5;
  double delta = 0.1;
  double noise = 0.0;
  int probes = 64;
  int Q = 2;
  // target on the ambient coordinates; x_1 by default
  std::function<double(const Eigen::VectorXd&)> target = [](const Eigen::VectorXd& x) { return x[0]; };
};

struct RateRow {
  int n = 0;
  Eigen::Index M = 0;
  double sup_error = 0.0;
  double density_error = 0.0;  // max |density - 1| over the probes
  double seconds = 0.0;
};

struct RateTable {
  std::vector<RateRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // of log error vs log n

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& r : rows)
      j["rows"].push_back({{"n", r.n}, {"M", r.M}, {"sup_error", r.sup_error}, {"density_error", r.density_error},
                           {"seconds", r.seconds}});
    j["slope"] = std::isnan(slope) ? nlohmann::json(nullptr) : nlohmann::json(slope);
    return j;
  }
};

// Uniform samples on a random great circle of S^Q, labels target + N(0, noise^2),
// raw estimator at each degree with M(n) samples, sup error over equispaced probes.
inline RateTable rate_experiment(const RateConfig& cfg, std::uint64_t seed) {
  require(!cfg.degrees.empty(), "no degrees");
  require(cfg.Q >= 2, "ambient sphere must have Q >= 2");
  Rng rot_rng(seed, "manifold/rotation");
  const Eigen::MatrixXd U = sphere::random_rotation(rot_rng, cfg.Q + 1);
  Eigen::VectorXd pth(cfg.probes);
  for (int i = 0; i < cfg.probes; ++i) pth[i] = 2 * std::numbers::pi * (i + 0.5) / cfg.probes;
  const Eigen::MatrixXd P = circle_points(U, pth);
  RateTable table;
  for (int n : cfg.degrees) {
    const auto t0 = std::chrono::steady_clock::now();
    RateRow row;
    row.n = n;
    row.M = sample_schedule(n, 1, cfg.gamma, cfg.delta);
    Rng rng(seed, "manifold/sample/" + std::to_string(n));
    Eigen::VectorXd th(row.M);
    for (auto& v : th) v = rng.uniform(0.0, 2 * std::numbers::pi);
    LabeledCloud d{cfg.Q, 1, circle_points(U, th), Eigen::VectorXd(row.M)};
    th.resize(0);
    for (Eigen::Index j = 0; j < row.M; ++j) d.y[j] = cfg.target(d.X.col(j)) + (cfg.noise > 0 ? rng.normal(0.0, cfg.noise) : 0.0);
    Estimator est(std::move(d), n);
    for (Eigen::Index i = 0; i < P.cols(); ++i) {
      const auto s = est.sums(P.col(i));
      row.sup_error = std::max(row.sup_error, std::fabs(s.fy - cfg.target(P.col(i))));
      row.density_error = std::max(row.density_error, std::fabs(s.f - 1.0));
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.rows.push_back(row);
  }
  if (table.rows.size() >= 2) {
    double mx = 0, my = 0;
    const double L = double(table.rows.size());
    for (const auto& r : table.rows) {
      mx += std::log(double(r.n)) / L;
      my += std::log(std::max(r.sup_error, 1e-300)) / L;
    }
    double sxy = 0, sxx = 0;
    for (const auto& r : table.rows) {
      const double dx = std::log(double(r.n)) - mx;
      sxy += dx * (std::log(std::max(r.sup_error, 1e-300)) - my);
      sxx += dx * dx;
    }
    table.slope = sxy / sxx;
  }
  return table;
}

}  // namespace lka::manifold
