#pragma once

// Trigonometric localized kernels on T^q (q <= 3): filtered projections sigma_n,
// dyadic details tau_j, the discrete wavelet-like expansion and a local
// smoothness estimate from the decay of the details.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "lka/error.hpp"
#include "lka/filters.hpp"

namespace lka::torus {

using cplx = std::complex<double>;
using Point = std::array<double, 3>;
using MultiIndex = std::array<int, 3>;

constexpr double two_pi = 2.0 * std::numbers::pi;

inline double wrap(double x) {
  double r = std::fmod(x, two_pi);
  if (r < 0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

inline double norm2(const MultiIndex& k) {
  return std::sqrt(double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2]);
}

// All k in Z^q with |k|_2 < n, lexicographic.
inline std::vector<MultiIndex> lattice(int q, double n) {
  require(q >= 1 && q <= 3, "torus dimension must be 1, 2 or 3");
  const int r = static_cast<int>(std::ceil(n));
  std::vector<MultiIndex> out;
  const int r1 = q >= 2 ? r : 0, r2 = q >= 3 ? r : 0;
  for (int a = -r; a <= r; ++a)
    for (int b = -r1; b <= r1; ++b)
      for (int c = -r2; c <= r2; ++c) {
        MultiIndex k{a, b, c};
        if (norm2(k) < n) out.push_back(k);
      }
  return out;
}

// Per-dimension tables e^{i m x_d}, m in [-r, r].
class PhaseTable {
 public:
  PhaseTable(int q, int r) : q_(q), r_(r), t_(std::size_t(q) * (2 * r + 1)) {}

  void fill(const Point& x, double sign = 1.0) {
    for (int d = 0; d < q_; ++d) {
      cplx* row = &t_[std::size_t(d) * (2 * r_ + 1) + r_];
      row[0] = 1.0;
      const cplx e(std::cos(x[d]), sign * std::sin(x[d]));
      cplx p = 1.0;
      for (int m = 1; m <= r_; ++m) {
        // periodic resync keeps the recurrence accurate for large r
        if (m % 64 == 0)
          p = cplx(std::cos(m * x[d]), sign * std::sin(m * x[d]));
        else
          p *= e;
        row[m] = p;
        row[-m] = std::conj(p);
      }
    }
  }

  cplx operator()(const MultiIndex& k) const {
    cplx v = at(0, k[0]);
    if (q_ >= 2) v *= at(1, k[1]);
    if (q_ >= 3) v *= at(2, k[2]);
    return v;
  }

 private:
  cplx at(int d, int m) const { return t_[std::size_t(d) * (2 * r_ + 1) + r_ + m]; }
  int q_, r_;
  std::vector<cplx> t_;
};

struct FourierExpansion {
  int q = 1;
  double band = 0.0;
  std::vector<MultiIndex> k;
  std::vector<cplx> c;

  int radius() const {
    int r = 0;
    for (const auto& m : k) r = std::max({r, std::abs(m[0]), std::abs(m[1]), std::abs(m[2])});
    return r;
  }

  cplx coeff(const MultiIndex& m) const {
    for (std::size_t i = 0; i < k.size(); ++i)
      if (k[i] == m) return c[i];
    return 0.0;
  }

  cplx operator()(const Point& x) const {
    PhaseTable ph(q, radius());
    ph.fill(x);
    cplx s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += c[i] * ph(k[i]);
    return s;
  }

  std::vector<cplx> eval(const std::vector<Point>& xs) const {
    std::vector<cplx> out(xs.size());
    PhaseTable ph(q, radius());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      ph.fill(xs[j]);
      cplx s = 0.0;
      for (std::size_t i = 0; i < k.size(); ++i) s += c[i] * ph(k[i]);
      out[j] = s;
    }
    return out;
  }

  // multiply coefficients by a radial mask m(|k|)
  FourierExpansion masked(const std::function<double(double)>& m) const {
    FourierExpansion r = *this;
    for (std::size_t i = 0; i < k.size(); ++i) r.c[i] *= m(norm2(k[i]));
    return r;
  }
};

struct TorusSamples {
  int q = 1;
  std::vector<Point> points;
  std::vector<cplx> values;
  std::vector<double> weights;  // empty when absent

  std::size_t size() const { return points.size(); }
  bool has_weights() const { return !weights.empty(); }

  void check() const {
    require(q >= 1 && q <= 3, "torus dimension must be 1, 2 or 3");
    require(values.size() == points.size(), "points/values length mismatch");
    require(weights.empty() || weights.size() == points.size(), "points/weights length mismatch");
  }

  void reduce() {
    for (auto& p : points)
      for (int d = 0; d < 3; ++d) p[d] = d < q ? wrap(p[d]) : 0.0;
  }

  // Equispaced grid 2*pi*m/N, m in {0..N-1}^q, with weights N^{-q}.
  template <class F>
  static TorusSamples grid(int q, int N, F&& f) {
    require(q >= 1 && q <= 3, "torus dimension must be 1, 2 or 3");
    require(N >= 1, "grid size must be positive");
    TorusSamples s;
    s.q = q;
    const std::size_t total = q == 1 ? N : (q == 2 ? std::size_t(N) * N : std::size_t(N) * N * N);
    const double w = 1.0 / double(total);
    const int n1 = q >= 2 ? N : 1, n2 = q >= 3 ? N : 1;
    s.points.reserve(total);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < n1; ++b)
        for (int c = 0; c < n2; ++c) {
          Point x{two_pi * a / N, q >= 2 ? two_pi * b / N : 0.0, q >= 3 ? two_pi * c / N : 0.0};
          s.points.push_back(x);
          s.values.push_back(cplx(f(x)));
          s.weights.push_back(w);
        }
    return s;
  }
};

inline std::vector<Point> grid_points(int q, int N) {
  return TorusSamples::grid(q, N, [](const Point&) { return 0.0; }).points;
}

// d_k = sum_j w_j f_j e^{-i k.x_j} over the lattice |k|_2 < n.
inline FourierExpansion moments(const TorusSamples& s, double n) {
  s.check();
  require(s.has_weights(), "sigma_n needs a weighted (quadrature) measure");
  FourierExpansion e;
  e.q = s.q;
  e.band = n;
  e.k = lattice(s.q, n);
  e.c.assign(e.k.size(), 0.0);
  PhaseTable ph(s.q, static_cast<int>(std::ceil(n)));
  for (std::size_t j = 0; j < s.size(); ++j) {
    ph.fill(s.points[j], -1.0);
    const cplx a = s.weights[j] * s.values[j];
    for (std::size_t i = 0; i < e.k.size(); ++i) e.c[i] += a * ph(e.k[i]);
  }
  return e;
}

// Checks that the samples are exactly the N^q grid; returns N.
inline int grid_size(const TorusSamples& s) {
  s.check();
  const double root = std::pow(double(s.size()), 1.0 / s.q);
  const int N = static_cast<int>(std::lround(root));
  std::size_t total = 1;
  for (int d = 0; d < s.q; ++d) total *= std::size_t(N);
  if (N < 1 || total != s.size()) throw InvalidArgument("samples are not a full N^q grid");
  std::vector<char> seen(total, 0);
  for (const auto& p : s.points) {
    std::size_t idx = 0;
    for (int d = 0; d < s.q; ++d) {
      const double m = wrap(p[d]) * N / two_pi;
      long mi = std::lround(m);
      if (std::fabs(m - mi) > 1e-8) throw InvalidArgument("sample off the equispaced grid");
      mi %= N;
      idx = idx * N + std::size_t(mi);
    }
    if (seen[idx]++) throw InvalidArgument("grid point repeated");
  }
  return N;
}

// Discrete Fourier coefficients from samples on the full N^q grid.
inline FourierExpansion grid_coeffs(const TorusSamples& s, double n) {
  const int N = grid_size(s);
  require(n <= N / 2.0, "band limit n must not exceed N/2");
  TorusSamples w = s;
  w.weights.assign(s.size(), 1.0 / double(s.size()));
  return moments(w, n);
}

// Phi_n(x) = sum_{|k|<n} h(|k|/n) e^{ik.x}, real by cosine pairing.
inline double kernel_phi(int q, double n, Filter h, const Point& x) {
  require(n >= 1, "kernel degree n must be >= 1");
  double s = 0.0;
  for (const auto& k : lattice(q, n)) {
    const double hk = h(norm2(k) / n);
    if (hk == 0.0) continue;
    double dot = 0.0;
    for (int d = 0; d < q; ++d) dot += k[d] * x[d];
    s += hk * std::cos(dot);
  }
  return s;
}

// sigma_n(nu; f) held in coefficient form.
class Sigma {
 public:
  Sigma(const TorusSamples& s, Filter h, double n) {
    require(n >= 1, "sigma_n needs n >= 1");
    expansion_ = moments(s, n).masked([&](double r) { return h(r / n); });
  }
  cplx operator()(const Point& x) const { return expansion_(x); }
  std::vector<cplx> eval(const std::vector<Point>& xs) const { return expansion_.eval(xs); }
  const FourierExpansion& expansion() const { return expansion_; }

 private:
  FourierExpansion expansion_;
};

inline cplx sigma_n(const TorusSamples& s, Filter h, double n, const Point& x) {
  return Sigma(s, h, n)(x);
}

// Theorem-4.5 style estimator with equal weights 1/M.
inline TorusSamples equal_weights(TorusSamples s) {
  require(s.size() > 0, "empty data");
  s.weights.assign(s.size(), 1.0 / double(s.size()));
  return s;
}

inline cplx monte_carlo_sigma(const TorusSamples& s, Filter h, double n, const Point& x) {
  return sigma_n(equal_weights(s), h, n, x);
}

// tau_0 = sigma_1, tau_j = sigma_{2^j} - sigma_{2^{j-1}} in coefficient form.
inline FourierExpansion tau_expansion(const TorusSamples& s, Filter h, int j) {
  require(j >= 0, "level j must be >= 0");
  if (j == 0) return Sigma(s, h, 1.0).expansion();
  const double hi = std::ldexp(1.0, j), lo = hi / 2;
  return moments(s, hi).masked([&](double r) { return h(r / hi) - h(r / lo); });
}

inline cplx tau_j(const TorusSamples& s, Filter h, int j, const Point& x) {
  return tau_expansion(s, h, j)(x);
}

// Sum over levels j <= J of the details tau_j(data), each sampled on the grid of
// size 2^{j+3} and resynthesized with the g-tilde kernel (level 0 uses the h
// kernel, since g-tilde(0)=0).
class WaveletExpansion {
 public:
  WaveletExpansion(const TorusSamples& data, Filter h, int J) {
    require(J >= 0, "J must be >= 0");
    require(h.smooth(), "wavelet expansion needs a smooth filter");
    for (int j = 0; j <= J; ++j) {
      const int N = 1 << (j + 3);
      const FourierExpansion t = tau_expansion(data, h, j);
      TorusSamples nodes = TorusSamples::grid(data.q, N, [](const Point&) { return 0.0; });
      nodes.values = t.eval(nodes.points);
      const double band = j == 0 ? 1.0 : std::ldexp(1.0, j + 1);
      FourierExpansion syn = moments(nodes, band);
      const double scale = std::ldexp(1.0, j);
      if (j == 0)
        syn = syn.masked([&](double r) { return h(r); });
      else
        syn = syn.masked([&](double r) { return h.mask(Mask::g_tilde, r / scale); });
      levels_.push_back(std::move(syn));
    }
  }

  cplx operator()(const Point& x) const {
    cplx s = 0.0;
    for (const auto& l : levels_) s += l(x);
    return s;
  }

  std::vector<cplx> eval(const std::vector<Point>& xs) const {
    std::vector<cplx> out(xs.size(), 0.0);
    for (const auto& l : levels_) {
      auto v = l.eval(xs);
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] += v[i];
    }
    return out;
  }

 private:
  std::vector<FourierExpansion> levels_;
};

inline cplx wavelet_expand(const TorusSamples& data, Filter h, int J, const Point& x) {
  return WaveletExpansion(data, h, J)(x);
}

inline double wrapped_dist2(const Point& a, const Point& b, int q) {
  double s = 0.0;
  for (int d = 0; d < q; ++d) {
    double t = std::fabs(wrap(a[d]) - wrap(b[d]));
    t = std::min(t, two_pi - t);
    s += t * t;
  }
  return std::sqrt(s);
}

struct SmoothnessFit {
  double exponent = std::numeric_limits<double>::infinity();
  std::vector<int> levels;
  std::vector<double> log2_detail;
};

// Negated least-squares slope of log2 max_{|x-x0|<=r} |tau_j f(x)| over j.
inline SmoothnessFit local_smoothness_fit(const TorusSamples& s, Filter h, const Point& x0,
                                          int j_min, int j_max, double radius = 0.2) {
  require(j_max - j_min + 1 >= 4, "local smoothness needs at least 4 dyadic levels");
  require(radius > 0, "radius must be positive");
  const int q = s.q;
  const int per = q == 1 ? 129 : (q == 2 ? 33 : 11);
  std::vector<Point> probes;
  const int n1 = q >= 2 ? per : 1, n2 = q >= 3 ? per : 1;
  for (int a = 0; a < per; ++a)
    for (int b = 0; b < n1; ++b)
      for (int c = 0; c < n2; ++c) {
        const int idx[3] = {a, b, c};
        Point p{0, 0, 0};
        double r2 = 0.0;
        for (int d = 0; d < q; ++d) {
          const double off = -radius + 2.0 * radius * idx[d] / (per - 1);
          p[d] = x0[d] + off;
          r2 += off * off;
        }
        if (r2 <= radius * radius * (1 + 1e-12)) probes.push_back(p);
      }
  // details at roundoff level relative to the data are treated as vanishing
  double scale = 1.0;
  for (const auto& v : s.values) scale = std::max(scale, std::abs(v));
  SmoothnessFit fit;
  for (int j = j_min; j <= j_max; ++j) {
    const auto v = tau_expansion(s, h, j).eval(probes);
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    if (m < 1e-14 * scale) continue;
    fit.levels.push_back(j);
    fit.log2_detail.push_back(std::log2(m));
  }
  const std::size_t L = fit.levels.size();
  if (L < 2) return fit;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < L; ++i) {
    mx += fit.levels[i];
    my += fit.log2_detail[i];
  }
  mx /= L;
  my /= L;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < L; ++i) {
    sxy += (fit.levels[i] - mx) * (fit.log2_detail[i] - my);
    sxx += (fit.levels[i] - mx) * (fit.levels[i] - mx);
  }
  fit.exponent = -sxy / sxx;
  return fit;
}

inline double local_smoothness(const TorusSamples& s, Filter h, const Point& x0, int j_min,
                               int j_max, double radius = 0.2) {
  return local_smoothness_fit(s, h, x0, j_min, j_max, radius).exponent;
}

}  // namespace lka::torus
