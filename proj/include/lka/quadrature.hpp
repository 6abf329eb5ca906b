#pragma once

// Quadrature / MZ weights on scattered clouds (torus T^q and sphere S^2),
// minimal-norm moment matching, and separation statistics.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "lka/blas.hpp"
#include "lka/error.hpp"
#include "lka/rng.hpp"
#include "lka/sphere.hpp"
#include "lka/torus.hpp"

namespace lka::quad {

enum class Domain { torus, sphere };

struct PointCloud {
  Domain domain = Domain::sphere;
  int q = 2;
  // one point per column: q rows on the torus, q+1 rows on the sphere
  Eigen::MatrixXd X;

  Eigen::Index size() const { return X.cols(); }
  int ambient() const { return domain == Domain::torus ? q : q + 1; }

  void check() const {
    require(q >= 1 && q <= 3, "cloud dimension must be 1..3");
    require(X.rows() == ambient(), "cloud point dimension mismatch");
    const double two_pi = 2 * std::numbers::pi;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (domain == Domain::sphere) {
        require(std::fabs(X.col(j).norm() - 1.0) < 1e-9, "sphere points must be unit vectors");
      } else {
        for (int d = 0; d < q; ++d) require(X(d, j) >= 0 && X(d, j) < two_pi, "torus points must lie in [0,2pi)");
      }
    }
  }

  static PointCloud sphere(Eigen::MatrixXd X) {
    PointCloud c{Domain::sphere, int(X.rows()) - 1, std::move(X)};
    c.check();
    return c;
  }
  static PointCloud torus(Eigen::MatrixXd X) {
    PointCloud c{Domain::torus, int(X.rows()), std::move(X)};
    for (auto& v : c.X.reshaped()) v = torus::wrap(v);
    c.check();
    return c;
  }
  static PointCloud torus_grid(int q, int N) {
    const auto pts = torus::grid_points(q, N);
    Eigen::MatrixXd X(q, Eigen::Index(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j)
      for (int d = 0; d < q; ++d) X(d, Eigen::Index(j)) = pts[j][d];
    return torus(std::move(X));
  }

  torus::Point torus_point(Eigen::Index j) const {
    torus::Point p{0, 0, 0};
    for (int d = 0; d < q; ++d) p[d] = X(d, j);
    return p;
  }
};

// Real orthonormal test basis of order n (probability measure): on S^2 the
// harmonics of degree < n, on T^q the constant plus sqrt2 cos/sin over half of
// the lattice |k|_2 < n.
class TestBasis {
 public:
  TestBasis(const PointCloud& c, int n) : domain_(c.domain), q_(c.q), n_(n) {
    require(n >= 1, "order must be >= 1");
    if (domain_ == Domain::sphere) {
      require(q_ == 2, "sphere quadrature is implemented for S^2");
      harm_ = std::make_unique<sphere::HarmonicBasis2>(n);
      dim_ = harm_->size();
    } else {
      for (const auto& k : torus::lattice(q_, n)) {
        const torus::MultiIndex mk{-k[0], -k[1], -k[2]};
        if (mk < k) half_.push_back(k);
      }
      dim_ = 1 + 2 * int(half_.size());
    }
  }

  int dim() const { return dim_; }
  int order() const { return n_; }
  const std::vector<torus::MultiIndex>& half_lattice() const { return half_; }

  // out (dim x cols) gets the basis at cloud columns start..start+cols-1
  void eval_block(const PointCloud& c, Eigen::Index start, Eigen::Index cols, Eigen::Ref<Eigen::MatrixXd> out) const {
    if (domain_ == Domain::sphere) {
      harm_->eval_block(c.X, start, cols, out);
      return;
    }
    int r = 0;
    for (const auto& k : half_)
      for (int d = 0; d < q_; ++d) r = std::max(r, std::abs(k[d]));
    torus::PhaseTable ph(q_, r);
    const double s2 = std::numbers::sqrt2;
    for (Eigen::Index j = 0; j < cols; ++j) {
      ph.fill(c.torus_point(start + j));
      double* o = out.col(j).data();
      o[0] = 1.0;
      for (std::size_t i = 0; i < half_.size(); ++i) {
        const auto e = ph(half_[i]);
        o[1 + 2 * i] = s2 * e.real();
        o[2 + 2 * i] = s2 * e.imag();
      }
    }
  }

 private:
  Domain domain_;
  int q_, n_, dim_ = 0;
  std::unique_ptr<sphere::HarmonicBasis2> harm_;
  std::vector<torus::MultiIndex> half_;
};

inline Eigen::Index chunk_cols(int K) { return std::clamp<Eigen::Index>((1 << 23) / std::max(K, 1), 64, 4096); }

// Calls fn(start, cols, A_block) for successive column blocks of the basis matrix.
template <class Fn>
void for_each_block(const PointCloud& c, const TestBasis& B, Fn&& fn) {
  const Eigen::Index M = c.size(), step = chunk_cols(B.dim());
  Eigen::MatrixXd A(B.dim(), step);
  for (Eigen::Index s = 0; s < M; s += step) {
    const Eigen::Index cols = std::min(step, M - s);
    B.eval_block(c, s, cols, A.leftCols(cols));
    fn(s, cols, A.leftCols(cols));
  }
}

// Lower triangle of A A^T together with A * V for optional right-hand sides V (M x r).
struct GramSystem {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd rhs;
};

inline GramSystem accumulate_gram(const PointCloud& c, const TestBasis& B, const Eigen::MatrixXd* V = nullptr) {
  GramSystem g;
  g.gram = Eigen::MatrixXd::Zero(B.dim(), B.dim());
  if (V) {
    require(V->rows() == c.size(), "right-hand side rows must match the cloud");
    g.rhs = Eigen::MatrixXd::Zero(B.dim(), V->cols());
  }
  for_each_block(c, B, [&](Eigen::Index s, Eigen::Index cols, const Eigen::Ref<const Eigen::MatrixXd>& A) {
    blas::syrk_lower(g.gram, A);
    if (V) g.rhs.noalias() += A * V->middleRows(s, cols);
  });
  return g;
}

// A * v for a vector over the cloud
inline Eigen::VectorXd apply_basis(const PointCloud& c, const TestBasis& B, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(B.dim());
  for_each_block(c, B, [&](Eigen::Index s, Eigen::Index cols, const Eigen::Ref<const Eigen::MatrixXd>& A) {
    out.noalias() += A * v.segment(s, cols);
  });
  return out;
}

struct QuadratureRule {
  PointCloud cloud;
  Eigen::VectorXd weights;
  int order = 0;
  double moment_residual = 0.0;
  double mz_norm_estimate = std::numeric_limits<double>::quiet_NaN();

  double integrate(const Eigen::VectorXd& values) const { return weights.dot(values); }
  double weight_sum() const { return weights.sum(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["order"] = order;
    j["residual"] = moment_residual;
    j["mz_estimate"] = std::isnan(mz_norm_estimate) ? nlohmann::json(nullptr) : nlohmann::json(mz_norm_estimate);
    j["domain"] = cloud.domain == Domain::sphere ? "sphere" : "torus";
    j["q"] = cloud.q;
    auto nodes = nlohmann::json::array();
    for (Eigen::Index c = 0; c < cloud.size(); ++c) {
      auto p = nlohmann::json::array();
      for (Eigen::Index d = 0; d < cloud.X.rows(); ++d) p.push_back(cloud.X(d, c));
      nodes.push_back(p);
    }
    j["nodes"] = nodes;
    j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
    return j;
  }

  static QuadratureRule from_json(const nlohmann::json& j) {
    QuadratureRule r;
    const auto& nodes = j.at("nodes");
    require(!nodes.empty(), "rule has no nodes");
    const Eigen::Index dim = Eigen::Index(nodes[0].size());
    Eigen::MatrixXd X(dim, Eigen::Index(nodes.size()));
    for (std::size_t c = 0; c < nodes.size(); ++c)
      for (Eigen::Index d = 0; d < dim; ++d) X(d, Eigen::Index(c)) = nodes[c].at(d).get<double>();
    const std::string dom = j.value("domain", "sphere");
    r.cloud = dom == "torus" ? PointCloud::torus(std::move(X)) : PointCloud::sphere(std::move(X));
    const auto w = j.at("weights").get<std::vector<double>>();
    require(Eigen::Index(w.size()) == r.cloud.size(), "weights/nodes length mismatch");
    r.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));
    r.order = j.at("order").get<int>();
    r.moment_residual = j.value("residual", 0.0);
    if (j.contains("mz_estimate") && !j["mz_estimate"].is_null()) r.mz_norm_estimate = j["mz_estimate"].get<double>();
    return r;
  }
};

// max_i |sum_j w_j phi_i(x_j) - delta_{i0}|
inline double moment_residual(const PointCloud& c, const TestBasis& B, const Eigen::VectorXd& w) {
  Eigen::VectorXd m = apply_basis(c, B, w);
  m[0] -= 1.0;
  return m.cwiseAbs().maxCoeff();
}

inline constexpr double kMaxResidual = 1e-6;

// Minimal-norm weights w = A^T z with (A A^T) z = e_0, given the Gram (consumed).
inline QuadratureRule solve_weights_from_gram(const PointCloud& c, const TestBasis& B, Eigen::MatrixXd gram) {
  const int K = B.dim();
  blas::cholesky_lower(gram);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
  rhs[0] = 1.0;
  Eigen::VectorXd z = blas::cholesky_solve(gram, rhs);
  Eigen::VectorXd w(c.size()), best;
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 4; ++it) {
    // one pass: w = A^T z, then the moment residual A w - e_0
    Eigen::VectorXd m = Eigen::VectorXd::Zero(K);
    for_each_block(c, B, [&](Eigen::Index s, Eigen::Index cols, const Eigen::Ref<const Eigen::MatrixXd>& A) {
      w.segment(s, cols).noalias() = A.transpose() * z;
      m.noalias() += A * w.segment(s, cols);
    });
    m[0] -= 1.0;
    const double r = m.cwiseAbs().maxCoeff();
    if (!(r < res)) break;
    res = r;
    best = w;
    if (res < 1e-15) break;
    z -= blas::cholesky_solve(gram, m);
  }
  if (!(res <= kMaxResidual))
    throw ConstructionFailure("moment residual " + std::to_string(res) + " above tolerance; cloud too sparse for order");
  QuadratureRule rule;
  rule.cloud = c;
  rule.order = B.order();
  rule.moment_residual = res;
  rule.weights = std::move(best);
  return rule;
}

inline QuadratureRule solve_weights(const PointCloud& c, int n) {
  TestBasis B(c, n);
  if (c.size() < B.dim())
    throw ConstructionFailure("cloud has " + std::to_string(c.size()) + " points but the order-" + std::to_string(n) +
                              " space has dimension " + std::to_string(B.dim()));
  return solve_weights_from_gram(c, B, accumulate_gram(c, B).gram);
}

// Tensor Gauss-Legendre x equispaced-azimuth rule on S^2, exact for degree <= L.
inline QuadratureRule product_gauss_rule(int L) {
  require(L >= 0, "degree must be >= 0");
  const int m = L / 2 + 1, P = L + 1;
  const auto gl = sphere::gauss_jacobi_ab(0, 0, m);
  Eigen::MatrixXd X(3, Eigen::Index(m) * P);
  Eigen::VectorXd w(X.cols());
  for (int i = 0; i < m; ++i) {
    const double z = gl.nodes[i], rho = std::sqrt(std::max(0.0, 1 - z * z));
    for (int j = 0; j < P; ++j) {
      const double ph = 2 * std::numbers::pi * j / P;
      const Eigen::Index c = Eigen::Index(i) * P + j;
      X.col(c) << rho * std::cos(ph), rho * std::sin(ph), z;
      X.col(c).normalize();
      w[c] = gl.weights[i] / (2.0 * P);
    }
  }
  QuadratureRule r;
  r.cloud = PointCloud::sphere(std::move(X));
  r.weights = std::move(w);
  r.order = L + 1;
  r.moment_residual = 0.0;
  return r;
}

// Exact equal-weight grid rule on T^q; exact on |k|_inf < N.
inline QuadratureRule torus_grid_rule(int q, int N) {
  QuadratureRule r;
  r.cloud = PointCloud::torus_grid(q, N);
  r.weights = Eigen::VectorXd::Constant(r.cloud.size(), 1.0 / double(r.cloud.size()));
  r.order = N / 2;
  r.moment_residual = 0.0;
  return r;
}

// |||nu||| estimate: max over random normalized polynomials of sum|w||P| / int|P|.
inline double mz_norm_estimate(const QuadratureRule& rule, int n, std::uint64_t seed = 0, int trials = 200) {
  const PointCloud& c = rule.cloud;
  TestBasis B(c, n);
  Rng rng(seed, "quad/mz");
  Eigen::MatrixXd C(trials, B.dim());
  for (auto& v : C.reshaped()) v = rng.normal();
  C.rowwise().normalize();
  QuadratureRule ref;
  if (c.domain == Domain::sphere) {
    ref = product_gauss_rule(std::max(4 * n, 32));
  } else {
    const int N = c.q == 1 ? std::max(16 * n, 64) : (c.q == 2 ? std::max(4 * n, 32) : std::max(2 * n + 2, 16));
    ref = torus_grid_rule(c.q, N);
  }
  auto abs_integrals = [&](const QuadratureRule& r, bool abs_weights) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(trials);
    TestBasis Br(r.cloud, n);
    for_each_block(r.cloud, Br, [&](Eigen::Index s, Eigen::Index cols, const Eigen::Ref<const Eigen::MatrixXd>& A) {
      const Eigen::MatrixXd P = C * A;
      Eigen::VectorXd w = r.weights.segment(s, cols);
      if (abs_weights) w = w.cwiseAbs();
      acc.noalias() += P.cwiseAbs() * w;
    });
    return acc;
  };
  const Eigen::VectorXd num = abs_integrals(rule, true), den = abs_integrals(ref, false);
  return (num.array() / den.array()).maxCoeff();
}

struct SeparationStats {
  double mesh_norm = 0.0;       // delta, estimated from probes
  double min_separation = 0.0;  // eta, exact
};

inline double torus_dist(const PointCloud& c, Eigen::Index i, const torus::Point& p) {
  double m = 0.0;
  for (int d = 0; d < c.q; ++d) {
    const double a = torus::wrap(c.X(d, i) - p[d]);
    m = std::max(m, std::min(a, 2 * std::numbers::pi - a));
  }
  return m;
}

// Nearest-cloud distance for each probe column.
inline Eigen::VectorXd nearest_distance(const PointCloud& c, const Eigen::MatrixXd& probes) {
  Eigen::VectorXd out(probes.cols());
  if (c.domain == Domain::sphere) {
    const Eigen::Index step = 1024;
    for (Eigen::Index s = 0; s < probes.cols(); s += step) {
      const Eigen::Index cols = std::min(step, probes.cols() - s);
      const Eigen::MatrixXd D = probes.middleCols(s, cols).transpose() * c.X;
      for (Eigen::Index i = 0; i < cols; ++i) out[s + i] = std::acos(std::clamp(D.row(i).maxCoeff(), -1.0, 1.0));
    }
  } else {
    for (Eigen::Index i = 0; i < probes.cols(); ++i) {
      torus::Point p{0, 0, 0};
      for (int d = 0; d < c.q; ++d) p[d] = probes(d, i);
      double m = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < c.size(); ++j) m = std::min(m, torus_dist(c, j, p));
      out[i] = m;
    }
  }
  return out;
}

inline Eigen::MatrixXd random_probes(const PointCloud& c, Eigen::Index count, std::uint64_t seed) {
  Rng rng(seed, "quad/probes");
  if (c.domain == Domain::sphere) return sphere::uniform_sphere(rng, count, c.q + 1);
  Eigen::MatrixXd P(c.q, count);
  for (auto& v : P.reshaped()) v = rng.uniform(0.0, 2 * std::numbers::pi);
  return P;
}

inline double min_separation(const PointCloud& c) {
  double eta = std::numeric_limits<double>::infinity();
  if (c.domain == Domain::sphere) {
    double best = -1.0;
    for (Eigen::Index i = 0; i + 1 < c.size(); ++i) {
      const Eigen::Index rest = c.size() - i - 1;
      best = std::max(best, (c.X.rightCols(rest).transpose() * c.X.col(i)).maxCoeff());
    }
    eta = std::acos(std::clamp(best, -1.0, 1.0));
  } else {
    for (Eigen::Index i = 0; i + 1 < c.size(); ++i)
      for (Eigen::Index j = i + 1; j < c.size(); ++j) eta = std::min(eta, torus_dist(c, j, c.torus_point(i)));
  }
  return eta;
}

inline SeparationStats separation_stats(const PointCloud& c, std::uint64_t seed = 0) {
  require(c.size() >= 2, "separation statistics need at least 2 points");
  SeparationStats s;
  s.min_separation = min_separation(c);
  s.mesh_norm = nearest_distance(c, random_probes(c, 50 * c.size(), seed)).maxCoeff();
  return s;
}

// Greedy subset whose pairwise distances are all >= eta (scan order).
inline PointCloud prune_to_separation(const PointCloud& c, double eta) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    bool ok = true;
    for (Eigen::Index k : keep) {
      const double d = c.domain == Domain::sphere ? sphere::geodesic(c.X.col(i), c.X.col(k))
                                                  : torus_dist(c, k, c.torus_point(i));
      if (d < eta) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(i);
  }
  PointCloud out{c.domain, c.q, Eigen::MatrixXd(c.X.rows(), Eigen::Index(keep.size()))};
  for (std::size_t i = 0; i < keep.size(); ++i) out.X.col(Eigen::Index(i)) = c.X.col(keep[i]);
  return out;
}

}  // namespace lka::quad
