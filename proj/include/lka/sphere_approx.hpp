#pragma once

// Polynomial approximation on S^2 from random samples: least squares (LS),
// Monte-Carlo filtered projections (MS1, MS5) and quadrature-based filtered
// projections (QS1, QS5), plus the percentile error harness.

#include <Eigen/Dense>
#include <array>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lka/blas.hpp"
#include "lka/error.hpp"
#include "lka/filters.hpp"
#include "lka/quadrature.hpp"
#include "lka/rng.hpp"
#include "lka/sphere.hpp"

namespace lka::sphere_approx {

enum class Method { LS, MS1, QS1, MS5, QS5 };
inline constexpr std::array<Method, 5> kAllMethods = {Method::LS, Method::MS1, Method::QS1, Method::MS5, Method::QS5};

inline std::string method_name(Method m) {
  switch (m) {
    case Method::LS: return "LS";
    case Method::MS1: return "MS1";
    case Method::QS1: return "QS1";
    case Method::MS5: return "MS5";
    case Method::QS5: return "QS5";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : kAllMethods)
    if (method_name(m) == s) return m;
  throw InvalidArgument("unknown method: " + s);
}

inline bool is_ms(Method m) { return m == Method::MS1 || m == Method::MS5; }
inline bool is_qs(Method m) { return m == Method::QS1 || m == Method::QS5; }
inline Filter method_filter(Method m) {
  return (m == Method::MS5 || m == Method::QS5) ? Filter(FilterKind::quintic) : Filter(FilterKind::sharp);
}

struct ApproxModel {
  Method method = Method::LS;
  int n = 0;
  Eigen::VectorXd coeffs;  // over HarmonicBasis2(n)
  bool failed = false;
  std::string failure;
  double quadrature_residual = std::numeric_limits<double>::quiet_NaN();
};

// Values of several models at the columns of X (rows = models).
inline Eigen::MatrixXd evaluate(const std::vector<ApproxModel>& models, const Eigen::Matrix3Xd& X) {
  require(!models.empty(), "no models to evaluate");
  const int n = models.front().n;
  for (const auto& m : models) require(m.n == n, "models must share the degree");
  sphere::HarmonicBasis2 H(n);
  Eigen::MatrixXd C(Eigen::Index(models.size()), H.size());
  for (std::size_t i = 0; i < models.size(); ++i)
    C.row(Eigen::Index(i)) = models[i].failed ? Eigen::VectorXd::Zero(H.size()) : models[i].coeffs;
  Eigen::MatrixXd out(C.rows(), X.cols());
  const Eigen::Index step = quad::chunk_cols(H.size());
  Eigen::MatrixXd A(H.size(), step);
  for (Eigen::Index s = 0; s < X.cols(); s += step) {
    const Eigen::Index cols = std::min(step, X.cols() - s);
    H.eval_block(X, s, cols, A.leftCols(cols));
    out.middleCols(s, cols).noalias() = C * A.leftCols(cols);
  }
  return out;
}

inline Eigen::VectorXd evaluate(const ApproxModel& m, const Eigen::Matrix3Xd& X) {
  return evaluate(std::vector<ApproxModel>{m}, X).row(0).transpose();
}

inline void apply_filter(Eigen::VectorXd& c, int n, Filter h) {
  for (int l = 0; l < n; ++l) {
    const double f = h(double(l) / n);
    c.segment(l * l, 2 * l + 1) *= f;
  }
}

struct FitOptions {
  int qs_order = 0;  // order of the quadrature rule for QS*; 0 means n
};

// Fits every requested method on one sample, sharing the Gram pass between LS and QS*.
inline std::vector<ApproxModel> fit_all(const std::vector<Method>& methods, const Eigen::Matrix3Xd& X,
                                        const Eigen::VectorXd& y, int n, FitOptions opt = {}) {
  require(n >= 1, "degree must be >= 1");
  require(X.cols() == y.size(), "values and points differ in length");
  require(X.cols() >= 1, "no data");
  const int qs_order = opt.qs_order > 0 ? opt.qs_order : n;
  require(qs_order >= n, "quadrature order must be at least the degree");
  const Eigen::Index M = X.cols();
  const int K = n * n;
  bool need_ls = false, need_qs = false;
  for (Method m : methods) {
    need_ls |= m == Method::LS;
    need_qs |= is_qs(m);
  }
  auto cloud = quad::PointCloud::sphere(X);
  std::optional<quad::TestBasis> big;
  Eigen::VectorXd Ay;  // A_n y over the degree < n harmonics
  Eigen::MatrixXd gram_ls;
  std::optional<quad::QuadratureRule> rule;
  std::string qs_failure;

  if (need_ls || need_qs) {
    big.emplace(cloud, need_qs ? qs_order : n);
    const Eigen::MatrixXd V = y;
    auto sys = quad::accumulate_gram(cloud, *big, &V);
    Ay = sys.rhs.col(0).head(K);
    if (need_ls) gram_ls = sys.gram.topLeftCorner(K, K);
    if (need_qs) {
      if (M < big->dim()) {
        qs_failure = "too few points for the quadrature order";
      } else {
        try {
          rule = quad::solve_weights_from_gram(cloud, *big, std::move(sys.gram));
        } catch (const ConstructionFailure& e) {
          qs_failure = e.what();
        }
      }
    }
  } else {
    quad::TestBasis B(cloud, n);
    Ay = quad::apply_basis(cloud, B, y);
  }

  Eigen::VectorXd qs_coeffs;
  if (rule) {
    quad::TestBasis B(cloud, n);
    qs_coeffs = quad::apply_basis(cloud, B, rule->weights.cwiseProduct(y));
  }

  std::vector<ApproxModel> out;
  for (Method m : methods) {
    ApproxModel mod;
    mod.method = m;
    mod.n = n;
    if (m == Method::LS) {
      if (M < K) {
        mod.failed = true;
        mod.failure = "least squares needs at least n^2 samples";
      } else {
        try {
          Eigen::MatrixXd L = gram_ls;
          blas::cholesky_lower(L);
          mod.coeffs = blas::cholesky_solve(L, Ay);
        } catch (const ConstructionFailure& e) {
          mod.failed = true;
          mod.failure = std::string("least squares rank deficiency: ") + e.what();
        }
      }
    } else if (is_ms(m)) {
      mod.coeffs = Ay / double(M);
      apply_filter(mod.coeffs, n, method_filter(m));
    } else {
      if (!rule) {
        mod.failed = true;
        mod.failure = qs_failure;
      } else {
        mod.coeffs = qs_coeffs;
        apply_filter(mod.coeffs, n, method_filter(m));
        mod.quadrature_residual = rule->moment_residual;
      }
    }
    out.push_back(std::move(mod));
  }
  return out;
}

inline ApproxModel fit(Method m, const Eigen::Matrix3Xd& X, const Eigen::VectorXd& y, int n, FitOptions opt = {}) {
  auto r = fit_all({m}, X, y, n, opt);
  if (r[0].failed) throw ConstructionFailure(r[0].failure);
  return r[0];
}

struct ErrorHistogram {
  std::vector<double> thresholds;  // 10^-2 .. 10^-10
  std::vector<double> percent_below;
  bool failed = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["thresholds"] = thresholds;
    j["percent_below"] = failed ? nlohmann::json(nullptr) : nlohmann::json(percent_below);
    j["failed"] = failed;
    return j;
  }
  // percentage at threshold 10^-x
  double at(int x) const {
    require(x >= 2 && x <= 10, "threshold exponent must be in 2..10");
    return failed ? std::numeric_limits<double>::quiet_NaN() : percent_below[std::size_t(x - 2)];
  }
};

inline ErrorHistogram error_histogram(const Eigen::VectorXd& err) {
  ErrorHistogram h;
  for (int x = 2; x <= 10; ++x) {
    const double t = std::pow(10.0, -x);
    Eigen::Index c = 0;
    for (double e : err)
      if (std::fabs(e) < t) ++c;
    h.thresholds.push_back(t);
    h.percent_below.push_back(err.size() ? 100.0 * double(c) / double(err.size()) : 100.0);
  }
  return h;
}

inline ErrorHistogram error_table(const ApproxModel& m, const Eigen::VectorXd& truth, const Eigen::Matrix3Xd& X) {
  if (m.failed) {
    auto h = error_histogram(Eigen::VectorXd());
    h.failed = true;
    return h;
  }
  return error_histogram(evaluate(m, X) - truth);
}

// max(0.015 - |x - (0,0,1.02)|^2, 0) + exp(0.9x + 1.1y + z)
inline double benchmark_g(double x, double y, double z) {
  const double cap = 0.015 - (x * x + y * y + (z - 1.02) * (z - 1.02));
  return std::max(cap, 0.0) + std::exp(0.9 * x + 1.1 * y + z);
}

inline double remark_target(double x, double, double z) {
  auto pp = [](double t) { return t > 0 ? std::pow(t, 5.0 / 6.0) : 0.0; };
  return pp(x - 0.7) + pp(z - 0.7);
}

template <class F>
Eigen::VectorXd sample_values(const Eigen::Matrix3Xd& X, F&& f) {
  Eigen::VectorXd v(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) v[j] = f(X(0, j), X(1, j), X(2, j));
  return v;
}

struct BenchConfig {
  Eigen::Index train = 65536;
  Eigen::Index test = 20000;
  int n = 64;
  int qs_order = 80;
};

struct BenchResult {
  std::vector<Method> methods;
  std::vector<ErrorHistogram> rows;
  std::vector<std::string> failures;
  Eigen::MatrixXd errors;  // methods x test points
  double seconds = 0.0;
  double quadrature_residual = std::numeric_limits<double>::quiet_NaN();

  const ErrorHistogram& row(Method m) const {
    for (std::size_t i = 0; i < methods.size(); ++i)
      if (methods[i] == m) return rows[i];
    throw InvalidArgument("method not in result");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      auto r = rows[i].to_json();
      if (!failures[i].empty()) r["failure"] = failures[i];
      j["rows"][method_name(methods[i])] = r;
    }
    j["seconds"] = seconds;
    j["quadrature_residual"] = std::isnan(quadrature_residual) ? nlohmann::json(nullptr) : nlohmann::json(quadrature_residual);
    return j;
  }
};

template <class F>
BenchResult run_benchmark(const std::vector<Method>& methods, F&& target, std::uint64_t seed, const BenchConfig& cfg,
                          const char* label) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng train_rng(seed, std::string(label) + "/train"), test_rng(seed, std::string(label) + "/test");
  const Eigen::Matrix3Xd X = sphere::uniform_sphere(train_rng, cfg.train);
  const Eigen::Matrix3Xd T = sphere::uniform_sphere(test_rng, cfg.test);
  const Eigen::VectorXd y = sample_values(X, target), truth = sample_values(T, target);
  auto models = fit_all(methods, X, y, cfg.n, FitOptions{cfg.qs_order});
  BenchResult r;
  r.methods = methods;
  r.errors = evaluate(models, T).rowwise() - truth.transpose();
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].failed) {
      ErrorHistogram h = error_histogram(Eigen::VectorXd());
      h.failed = true;
      r.rows.push_back(h);
    } else {
      r.rows.push_back(error_histogram(r.errors.row(Eigen::Index(i)).transpose()));
    }
    r.failures.push_back(models[i].failure);
    if (!std::isnan(models[i].quadrature_residual)) r.quadrature_residual = models[i].quadrature_residual;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline BenchResult benchmark_table2(std::uint64_t seed, const BenchConfig& cfg = {}) {
  return run_benchmark({kAllMethods.begin(), kAllMethods.end()},
                       [](double x, double y, double z) { return benchmark_g(x, y, z); }, seed, cfg, "table2");
}

// Least squares against the quadrature-based localized reconstruction (QS5).
inline BenchResult example_remark79(std::uint64_t seed, const BenchConfig& cfg = {}) {
  return run_benchmark({Method::LS, Method::QS5}, [](double x, double y, double z) { return remark_target(x, y, z); },
                       seed, cfg, "remark79");
}

}  // namespace lka::sphere_approx
