#pragma once

// ReLU^gamma zonal networks sum a_xi |x.xi|^{2 gamma + 1} on S^2, synthesized
// from samples through the spectral inverse D_gamma of the zonal integral operator.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "lka/error.hpp"
#include "lka/filters.hpp"
#include "lka/quadrature.hpp"
#include "lka/sphere.hpp"

namespace lka::zonal {

// Expansion |x.y|^{2g+1} = sum_l B_l sum_k Y_{l,k}(x) Y_{l,k}(y) against the
// probability measure on S^q.
class ZonalMask {
 public:
  ZonalMask(double gamma, int q, int n_max) : gamma_(gamma), q_(q), n_max_(n_max) {
    require(gamma > -0.5, "gamma must exceed -1/2");
    const double e = 2 * gamma + 1;
    require(!(std::fabs(e - std::round(e)) < 1e-12 && int(std::llround(e)) % 2 == 0),
            "2 gamma + 1 must not be an even integer");
    require(n_max >= 0, "n_max must be >= 0");
    sphere::Ultraspherical b(q, n_max);
    // even l: g_l = int |t|^{2g+1} p_l(t) (1-t^2)^{q/2-1} dt; with s = t^2 = (1+u)/2 this is
    // 2^{-g-a-1} int p_l(sqrt((1+u)/2)) (1-u)^a (1+u)^g du, a = q/2 - 1, exact by Gauss-Jacobi.
    const double a = 0.5 * q - 1.0;
    const auto rule = sphere::gauss_jacobi_ab(a, gamma, n_max / 2 + 2);
    const double scale = std::pow(2.0, -gamma - a - 1.0);
    B_.assign(n_max + 1, 0.0);
    std::vector<double> vals(n_max + 1);
    std::vector<double> g(n_max + 1, 0.0);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      b.values(std::sqrt(0.5 * (1.0 + rule.nodes[i])), vals);
      for (int l = 0; l <= n_max; l += 2) g[l] += rule.weights[i] * vals[l];
    }
    for (int l = 0; l <= n_max; l += 2) {
      B_[l] = scale * g[l] / (sphere::volume_ratio(q) * b.at_one(l));
      if (std::fabs(B_[l]) < 1e-14) throw ConstructionFailure("mask coefficient vanishes at degree " + std::to_string(l));
    }
  }

  double gamma() const { return gamma_; }
  int q() const { return q_; }
  int n_max() const { return n_max_; }
  double exponent() const { return 2 * gamma_ + 1; }
  double B(int l) const { return B_.at(l); }
  const std::vector<double>& coeffs() const { return B_; }

  nlohmann::json to_json() const { return {{"gamma", gamma_}, {"q", q_}, {"n_max", n_max_}, {"B", B_}}; }

 private:
  double gamma_;
  int q_, n_max_;
  std::vector<double> B_;
};

inline ZonalMask mask_build(double gamma, int q, int n_max) { return ZonalMask(gamma, q, n_max); }

// Divides harmonic coefficients (HarmonicBasis2 layout, degrees < n) by B_l.
// Odd degrees lie in the kernel of the zonal operator: with reject_odd they must
// vanish (to tol), otherwise they are dropped and the result targets the even part.
inline Eigen::VectorXd apply_inverse(const ZonalMask& mask, const Eigen::VectorXd& c, bool reject_odd = true,
                                     double tol = 1e-10) {
  const int n = int(std::lround(std::sqrt(double(c.size()))));
  require(n * n == c.size(), "coefficient vector is not a full harmonic block");
  require(mask.q() == 2, "harmonic coefficients are on S^2");
  require(n - 1 <= mask.n_max(), "mask does not reach the degree");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(c.size());
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  for (int l = 0; l < n; ++l) {
    const auto seg = c.segment(l * l, 2 * l + 1);
    if (l % 2) {
      if (reject_odd && seg.cwiseAbs().maxCoeff() > tol * scale)
        throw InvalidArgument("odd-degree content cannot be divided by the zonal mask");
      continue;
    }
    d.segment(l * l, 2 * l + 1) = seg / mask.B(l);
  }
  return d;
}

// int |x.y|^{2g+1} D(y) dmu*(y) for D given by harmonic coefficients (degrees < n),
// exact: x is taken as the pole and each hemisphere uses a z^{2g+1} Jacobi rule.
inline double zonal_integral(double gamma, const Eigen::Vector3d& x, const Eigen::VectorXd& d) {
  const int n = int(std::lround(std::sqrt(double(d.size()))));
  sphere::HarmonicBasis2 H(n);
  const Eigen::Vector3d e3 = x.normalized();
  Eigen::Vector3d e1 = std::fabs(e3[0]) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  e1 = (e1 - e1.dot(e3) * e3).normalized();
  const Eigen::Vector3d e2 = e3.cross(e1);
  const int m = n / 2 + 2, P = n + 1;
  const auto rule = sphere::gauss_jacobi_ab(0.0, 2 * gamma + 1, m);
  const double zscale = std::pow(0.5, 2 * gamma + 2);  // z = (1+u)/2 on [0,1]
  std::vector<double> y(H.size());
  double total = 0.0;
  for (int s : {1, -1})
    for (int i = 0; i < m; ++i) {
      const double z = 0.5 * (1.0 + rule.nodes[i]), rho = std::sqrt(std::max(0.0, 1 - z * z));
      for (int j = 0; j < P; ++j) {
        const double ph = 2 * std::numbers::pi * j / P;
        const Eigen::Vector3d p = (rho * std::cos(ph) * e1 + rho * std::sin(ph) * e2 + s * z * e3).normalized();
        H.eval(p[0], p[1], p[2], y.data());
        const double val = Eigen::Map<const Eigen::VectorXd>(y.data(), H.size()).dot(d);
        // dmu* = dz dphi / (4 pi)
        total += zscale * rule.weights[i] * val / (2.0 * P);
      }
    }
  return total;
}

struct ZonalNetwork {
  double gamma = 0.0;
  Eigen::Matrix3Xd centers;
  Eigen::VectorXd coeffs;

  double exponent() const { return 2 * gamma + 1; }

  double operator()(const Eigen::Vector3d& x) const {
    const Eigen::VectorXd t = (centers.transpose() * x).cwiseAbs();
    const double e = exponent();
    double s = 0.0;
    for (Eigen::Index j = 0; j < t.size(); ++j) s += coeffs[j] * (e == 1.0 ? t[j] : std::pow(t[j], e));
    return s;
  }

  Eigen::VectorXd evaluate(const Eigen::Matrix3Xd& P) const {
    Eigen::VectorXd v(P.cols());
    const Eigen::Index step = 512;
    const double e = exponent();
    for (Eigen::Index s = 0; s < P.cols(); s += step) {
      const Eigen::Index cols = std::min(step, P.cols() - s);
      Eigen::MatrixXd T = (centers.transpose() * P.middleCols(s, cols)).cwiseAbs();
      if (e != 1.0) T = T.array().pow(e).matrix();
      v.segment(s, cols).noalias() = T.transpose() * coeffs;
    }
    return v;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["gamma"] = gamma;
    auto c = nlohmann::json::array();
    for (Eigen::Index i = 0; i < centers.cols(); ++i) c.push_back({centers(0, i), centers(1, i), centers(2, i)});
    j["centers"] = c;
    j["coeffs"] = std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size());
    return j;
  }

  static ZonalNetwork from_json(const nlohmann::json& j) {
    ZonalNetwork net;
    net.gamma = j.at("gamma").get<double>();
    const auto& c = j.at("centers");
    net.centers.resize(3, Eigen::Index(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int d = 0; d < 3; ++d) net.centers(d, Eigen::Index(i)) = c[i].at(d).get<double>();
    const auto a = j.at("coeffs").get<std::vector<double>>();
    require(a.size() == c.size(), "centers/coeffs length mismatch");
    net.coeffs = Eigen::Map<const Eigen::VectorXd>(a.data(), Eigen::Index(a.size()));
    return net;
  }
};

// Filtered projection coefficients sigma_n(mu; f) over HarmonicBasis2(n).
inline Eigen::VectorXd filtered_coeffs(const quad::QuadratureRule& mu, const Eigen::VectorXd& f, int n, Filter h) {
  require(f.size() == mu.cloud.size(), "samples do not match the rule");
  quad::TestBasis B(mu.cloud, n);
  Eigen::VectorXd c = quad::apply_basis(mu.cloud, B, mu.weights.cwiseProduct(f));
  for (int l = 0; l < n; ++l) c.segment(l * l, 2 * l + 1) *= h(double(l) / n);
  return c;
}

// Network with centers at the nodes of nu and a_xi = w_xi D_gamma(sigma_n(mu; f))(xi).
// Odd-degree content of f is dropped: the network is even and targets the even part.
inline ZonalNetwork synthesize(const quad::QuadratureRule& mu, const Eigen::VectorXd& f, const quad::QuadratureRule& nu,
                               int n, double gamma, Filter h = Filter(FilterKind::quintic)) {
  require(n >= 1, "degree must be >= 1");
  require(mu.cloud.domain == quad::Domain::sphere && nu.cloud.domain == quad::Domain::sphere && mu.cloud.q == 2 &&
              nu.cloud.q == 2,
          "zonal synthesis works on S^2 rules");
  for (const auto* r : {&mu, &nu})
    if (!(r->moment_residual <= quad::kMaxResidual)) throw ConstructionFailure("quadrature rule residual too large");
  ZonalMask mask(gamma, 2, n);
  const Eigen::VectorXd d = apply_inverse(mask, filtered_coeffs(mu, f, n, h), false);
  quad::TestBasis B(nu.cloud, n);
  ZonalNetwork net;
  net.gamma = gamma;
  net.centers = nu.cloud.X;
  net.coeffs.resize(nu.cloud.size());
  quad::for_each_block(nu.cloud, B, [&](Eigen::Index s, Eigen::Index cols, const Eigen::Ref<const Eigen::MatrixXd>& A) {
    net.coeffs.segment(s, cols) = nu.weights.segment(s, cols).cwiseProduct(A.transpose() * d);
  });
  return net;
}

struct RateRow {
  int n = 0;
  Eigen::Index centers = 0;
  double sup_error = 0.0;
  double coeff_l1 = 0.0;
  double seconds = 0.0;
};

struct RateConfig {
  std::vector<int> degrees = {8, 16, 32};
  double gamma = 0.0;
  int mu_factor = 4;  // mu is the product rule exact to degree mu_factor * n
  int nu_factor = 4;  // nu has order nu_factor * n
  int probes = 2000;
};

// Dyadic rate table for the even part of exp(x . e3), i.e. cosh(z).
inline std::vector<RateRow> rate_experiment(const RateConfig& cfg, std::uint64_t seed) {
  Rng rng(seed, "zonal/probes");
  const Eigen::Matrix3Xd P = sphere::uniform_sphere(rng, cfg.probes);
  std::vector<RateRow> rows;
  for (int n : cfg.degrees) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto mu = quad::product_gauss_rule(cfg.mu_factor * n);
    const auto nu = quad::product_gauss_rule(cfg.nu_factor * n - 1);
    Eigen::VectorXd f(mu.cloud.size());
    for (Eigen::Index j = 0; j < f.size(); ++j) f[j] = std::exp(mu.cloud.X(2, j));
    const auto net = synthesize(mu, f, nu, n, cfg.gamma);
    const Eigen::VectorXd v = net.evaluate(P);
    RateRow r;
    r.n = n;
    r.centers = net.centers.cols();
    for (Eigen::Index j = 0; j < P.cols(); ++j) r.sup_error = std::max(r.sup_error, std::fabs(v[j] - std::cosh(P(2, j))));
    r.coeff_l1 = net.coeffs.lpNorm<1>();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lka::zonal
