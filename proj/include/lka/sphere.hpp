#pragma once

// Polynomial machinery on S^q: volumes, orthonormal ultraspherical polynomials,
// Gauss-Jacobi rules, the localized kernel Phi_{n,q} (Clenshaw), and real
// spherical harmonics on S^2 normalized against the probability measure.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include <json.hpp>

#include "lka/error.hpp"
#include "lka/filters.hpp"
#include "lka/rng.hpp"

namespace lka::sphere {

inline double volume_omega(int q) {
  require(q >= 1, "sphere dimension q must be >= 1");
  const double a = 0.5 * (q + 1);
  return 2.0 * std::exp(a * std::log(std::numbers::pi) - std::lgamma(a));
}

// omega_q / omega_{q-1} = integral of (1-t^2)^{q/2-1} over [-1,1]
inline double volume_ratio(int q) {
  return std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * q) - std::lgamma(0.5 * (q + 1)));
}

inline double harmonic_dimension(int q, int l) {
  if (l == 0) return 1.0;
  // (2l+q-1)(l+q-2)! / (l! (q-1)!)
  return (2.0 * l + q - 1) * std::exp(std::lgamma(l + q - 1.0) - std::lgamma(l + 1.0) - std::lgamma(double(q)));
}

// Orthonormal p_l with respect to (1-t^2)^{q/2-1} dt on [-1,1], p_l(1) > 0.
class Ultraspherical {
 public:
  Ultraspherical(int q, int max_degree) : q_(q), max_(max_degree) {
    require(q >= 1, "sphere dimension q must be >= 1");
    require(max_degree >= 0, "max degree must be >= 0");
    const double lam = 0.5 * (q - 1);
    mu0_ = volume_ratio(q);
    p0_ = 1.0 / std::sqrt(mu0_);
    a_.assign(max_ + 3, 0.0);
    for (int l = 1; l <= max_ + 2; ++l) {
      double beta;
      if (l == 1)
        beta = 1.0 / (2.0 * (1.0 + lam));
      else
        beta = l * (l + 2.0 * lam - 1.0) / (4.0 * (l + lam) * (l + lam - 1.0));
      a_[l] = std::sqrt(beta);
    }
    at_one_.resize(max_ + 1);
    values(1.0, at_one_);
  }

  int q() const { return q_; }
  int max_degree() const { return max_; }
  double mu0() const { return mu0_; }
  double p0() const { return p0_; }
  // p_{l+1} = (t p_l - a_l p_{l-1}) / a_{l+1}
  double a(int l) const { return a_[l]; }
  double at_one(int l) const { return at_one_.at(l); }

  double operator()(int l, double t) const {
    if (l < 0 || l > max_) throw InvalidArgument("degree outside the basis");
    double pm = 0.0, p = p0_;
    for (int k = 0; k < l; ++k) {
      const double pn = (t * p - a_[k] * pm) / a_[k + 1];
      pm = p;
      p = pn;
    }
    return p;
  }

  // p_0..p_max at t
  void values(double t, std::span<double> out) const {
    double pm = 0.0, p = p0_;
    const int L = std::min<int>(max_, int(out.size()) - 1);
    for (int k = 0; k <= L; ++k) {
      out[k] = p;
      const double pn = (t * p - a_[k] * pm) / a_[k + 1];
      pm = p;
      p = pn;
    }
  }

  // sum_l c_l p_l(t), Clenshaw
  double clenshaw(std::span<const double> c, double t) const {
    const int n = int(c.size());
    if (n == 0) return 0.0;
    if (n - 1 > max_) throw InvalidArgument("coefficient count exceeds basis degree");
    double b1 = 0.0, b2 = 0.0;
    for (int k = n - 1; k >= 0; --k) {
      const double b = c[k] + (t / a_[k + 1]) * b1 - (a_[k + 1] / a_[k + 2]) * b2;
      b2 = b1;
      b1 = b;
    }
    return p0_ * b1;
  }

  // Clenshaw over a batch of arguments; loops ordered so the inner one vectorizes.
  void clenshaw(std::span<const double> c, std::span<const double> t, std::span<double> out) const {
    const int n = int(c.size());
    if (n - 1 > max_) throw InvalidArgument("coefficient count exceeds basis degree");
    const std::size_t m = t.size();
    constexpr std::size_t B = 256;
    double b1[B], b2[B];
    for (std::size_t s = 0; s < m; s += B) {
      const std::size_t e = std::min(m, s + B), w = e - s;
      std::fill(b1, b1 + w, 0.0);
      std::fill(b2, b2 + w, 0.0);
      for (int k = n - 1; k >= 0; --k) {
        const double ck = c[k], ia = 1.0 / a_[k + 1], r = a_[k + 1] / a_[k + 2];
        const double* tt = t.data() + s;
        for (std::size_t i = 0; i < w; ++i) {
          const double b = ck + tt[i] * ia * b1[i] - r * b2[i];
          b2[i] = b1[i];
          b1[i] = b;
        }
      }
      for (std::size_t i = 0; i < w; ++i) out[s + i] = p0_ * b1[i];
    }
  }

 private:
  int q_, max_;
  double mu0_, p0_;
  std::vector<double> a_, at_one_;
};

struct GaussRule {
  std::vector<double> nodes, weights;
};

// Golub-Welsch for the Jacobi weight (1-t)^alpha (1+t)^beta on [-1,1].
inline GaussRule gauss_jacobi_ab(double alpha, double beta, int m) {
  require(m >= 1, "rule size must be >= 1");
  require(alpha > -1 && beta > -1, "Jacobi parameters must exceed -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(m), off(std::max(m - 1, 0));
  for (int k = 0; k < m; ++k) {
    const double s = 2.0 * k + ab;
    if (k == 0)
      diag[k] = (beta - alpha) / (ab + 2.0);
    else
      diag[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int k = 1; k < m; ++k) {
    const double s = 2.0 * k + ab;
    double b2;
    if (k == 1)
      b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    else
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    off[k - 1] = std::sqrt(b2);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  GaussRule r;
  r.nodes.resize(m);
  r.weights.resize(m);
  if (m == 1) {
    r.nodes[0] = diag[0];
    r.weights[0] = mu0;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  for (int i = 0; i < m; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}

// m-point rule for (1-t^2)^{q/2-1}
inline GaussRule gauss_jacobi(int q, int m) {
  require(q >= 1, "sphere dimension q must be >= 1");
  const double a = 0.5 * q - 1.0;
  return gauss_jacobi_ab(a, a, m);
}

// Phi_{n,q}(t) = (omega_q/omega_{q-1}) sum_{l<n} h(l/n) p_l(1) p_l(t)
class SphericalKernel {
 public:
  SphericalKernel(int q, double n, Filter h) : q_(q), n_(n), h_(h) {
    require(n >= 1, "kernel degree n must be >= 1");
    const int L = static_cast<int>(std::ceil(n)) - 1;
    basis_ = std::make_shared<Ultraspherical>(q, std::max(L, 0));
    coeffs_.resize(L + 1);
    for (int l = 0; l <= L; ++l) coeffs_[l] = basis_->mu0() * h(l / n) * basis_->at_one(l);
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
  }

  int q() const { return q_; }
  double n() const { return n_; }
  Filter filter() const { return h_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const Ultraspherical& basis() const { return *basis_; }

  static double clamp(double t) {
    if (std::fabs(t) > 1.0 + 1e-12) throw InvalidArgument("kernel argument outside [-1,1]");
    return std::clamp(t, -1.0, 1.0);
  }

  double operator()(double t) const { return basis_->clenshaw(coeffs_, clamp(t)); }

  void eval(std::span<const double> t, std::span<double> out) const {
    for (double v : t)
      if (std::fabs(v) > 1.0 + 1e-12) throw InvalidArgument("kernel argument outside [-1,1]");
    std::vector<double> tc(t.begin(), t.end());
    for (auto& v : tc) v = std::clamp(v, -1.0, 1.0);
    basis_->clenshaw(coeffs_, tc, out);
  }

  // unchecked batch evaluation for hot loops; arguments must already lie in [-1,1]
  void eval_unchecked(std::span<const double> t, std::span<double> out) const {
    basis_->clenshaw(coeffs_, t, out);
  }

  nlohmann::json to_json() const {
    return {{"q", q_}, {"n", n_}, {"filter", h_.name()}, {"coeffs", coeffs_}};
  }

  static SphericalKernel from_json(const nlohmann::json& j) {
    SphericalKernel k(j.at("q").get<int>(), j.at("n").get<double>(),
                      Filter::parse(j.at("filter").get<std::string>()));
    const auto c = j.at("coeffs").get<std::vector<double>>();
    if (c.size() != k.coeffs_.size()) throw InvalidArgument("kernel record has wrong coefficient count");
    k.coeffs_ = c;
    return k;
  }

 private:
  int q_;
  double n_;
  Filter h_;
  std::shared_ptr<Ultraspherical> basis_;
  std::vector<double> coeffs_;
};

inline SphericalKernel kernel_build(int q, double n, Filter h) { return SphericalKernel(q, n, h); }
inline double kernel_eval(const SphericalKernel& k, double t) { return k(t); }

// Real orthonormal harmonics on S^2 for degrees l < n against the probability
// measure. Flat index l^2 + k - 1 with k = 1 for m = 0, k = 2m for cos(m phi),
// k = 2m+1 for sin(m phi).
class HarmonicBasis2 {
 public:
  explicit HarmonicBasis2(int n) : n_(n) {
    require(n >= 1, "harmonic basis needs n >= 1");
    const int L = n_ - 1;
    diag_.resize(L + 1);
    sub_.resize(L + 1);
    ra_.assign(std::size_t(L + 1) * (L + 1), 0.0);
    rb_.assign(std::size_t(L + 1) * (L + 1), 0.0);
    diag_[0] = 1.0;
    if (L >= 1) diag_[1] = std::sqrt(3.0);
    for (int m = 2; m <= L; ++m) diag_[m] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * diag_[m - 1];
    for (int m = 0; m <= L; ++m) sub_[m] = std::sqrt(2.0 * m + 3.0);
    for (int m = 0; m <= L; ++m)
      for (int l = m + 2; l <= L; ++l) {
        const double lm = double(l - m), lp = double(l + m);
        ra_[idx(l, m)] = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / (lm * lp));
        rb_[idx(l, m)] =
            std::sqrt((2.0 * l + 1.0) * (lp - 1.0) * (lm - 1.0) / (lm * lp * (2.0 * l - 3.0)));
      }
  }

  int n() const { return n_; }
  int size() const { return n_ * n_; }
  static int flat(int l, int k) { return l * l + k - 1; }

  // all n^2 values at the unit vector (x,y,z)
  void eval(double x, double y, double z, double* out) const {
    const int L = n_ - 1;
    // (x + i y)^m carries the sin^m(theta) factor of the associated functions
    double cr = 1.0, ci = 0.0;
    for (int m = 0; m <= L; ++m) {
      double pmm = diag_[m];
      double pl2 = pmm, pl1 = 0.0;
      put(out, m, m, pl2, cr, ci);
      if (m + 1 <= L) {
        pl1 = sub_[m] * z * pmm;
        put(out, m + 1, m, pl1, cr, ci);
      }
      for (int l = m + 2; l <= L; ++l) {
        const double p = ra_[idx(l, m)] * z * pl1 - rb_[idx(l, m)] * pl2;
        put(out, l, m, p, cr, ci);
        pl2 = pl1;
        pl1 = p;
      }
      const double nr = cr * x - ci * y, ni = cr * y + ci * x;
      cr = nr;
      ci = ni;
    }
  }

  double eval(int l, int k, const Eigen::Vector3d& p) const {
    if (l < 0 || l >= n_ || k < 1 || k > 2 * l + 1) throw InvalidArgument("harmonic index out of range");
    std::vector<double> v(size());
    eval(p[0], p[1], p[2], v.data());
    return v[flat(l, k)];
  }

  // Column j of out (size n^2 x cols) gets the basis at points.col(start + j).
  void eval_block(const Eigen::Ref<const Eigen::Matrix3Xd>& pts, Eigen::Index start, Eigen::Index cols,
                  Eigen::Ref<Eigen::MatrixXd> out) const {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto p = pts.col(start + j);
      eval(p[0], p[1], p[2], out.col(j).data());
    }
  }

 private:
  std::size_t idx(int l, int m) const { return std::size_t(l) * n_ + m; }

  static void put(double* out, int l, int m, double p, double cr, double ci) {
    if (m == 0) {
      out[l * l] = p;
    } else {
      out[l * l + 2 * m - 1] = p * cr;
      out[l * l + 2 * m] = p * ci;
    }
  }

  int n_;
  std::vector<double> diag_, sub_, ra_, rb_;
};

inline Eigen::Vector3d normalize(const Eigen::Vector3d& v) { return v / v.norm(); }

// Uniform points on S^{dim-1} via normalized Gaussian vectors, one per column.
inline Eigen::MatrixXd uniform_sphere(Rng& rng, Eigen::Index M, int dim = 3) {
  Eigen::MatrixXd X(dim, M);
  for (Eigen::Index j = 0; j < M; ++j) {
    double s;
    do {
      s = 0.0;
      for (int d = 0; d < dim; ++d) {
        X(d, j) = rng.normal();
        s += X(d, j) * X(d, j);
      }
    } while (s < 1e-300);
    X.col(j) /= std::sqrt(s);
  }
  return X;
}

inline double geodesic(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

// random rotation in SO(d) (QR of a Gaussian matrix with sign fix)
inline Eigen::MatrixXd random_rotation(Rng& rng, int d) {
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (R(i, i) < 0) Q.col(i) *= -1.0;
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

}  // namespace lka::sphere
