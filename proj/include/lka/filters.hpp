#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "lka/error.hpp"

namespace lka {

enum class FilterKind { sharp, quintic, bump };

enum class Mask { g, g_star, g_tilde };

// Low-pass filter h: even, 1 on [0,1/2], 0 beyond 1 (sharp: 1 on [0,1)).
class Filter {
 public:
  constexpr Filter() = default;
  constexpr explicit Filter(FilterKind k) : kind_(k) {}

  static Filter parse(std::string_view s) {
    if (s == "sharp") return Filter(FilterKind::sharp);
    if (s == "quintic") return Filter(FilterKind::quintic);
    if (s == "bump" || s == "smooth_bump") return Filter(FilterKind::bump);
    throw InvalidArgument("unknown filter '" + std::string(s) + "'");
  }

  FilterKind kind() const { return kind_; }
  bool smooth() const { return kind_ != FilterKind::sharp; }

  std::string name() const {
    switch (kind_) {
      case FilterKind::sharp: return "sharp";
      case FilterKind::quintic: return "quintic";
      case FilterKind::bump: return "bump";
    }
    return "?";
  }

  std::string description() const {
    switch (kind_) {
      case FilterKind::sharp: return "indicator of [0,1)";
      case FilterKind::quintic: return "1 - smoothstep5(2t-1) on (1/2,1)";
      case FilterKind::bump: return "C-infinity exp(-1/u) blend on (1/2,1)";
    }
    return "";
  }

  double operator()(double t) const {
    t = std::fabs(t);
    if (kind_ == FilterKind::sharp) return t < 1.0 ? 1.0 : 0.0;
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    const double u = 2.0 * t - 1.0;
    if (kind_ == FilterKind::quintic) return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    const double a = std::exp(-1.0 / (1.0 - u));
    const double b = std::exp(-1.0 / u);
    return a / (a + b);
  }

  double mask(Mask which, double t) const {
    if (!smooth()) throw InvalidArgument("derived masks need a smooth filter");
    switch (which) {
      case Mask::g: return (*this)(t) - (*this)(2.0 * t);
      case Mask::g_star: return std::sqrt(std::fmax(0.0, (*this)(t) - (*this)(2.0 * t)));
      case Mask::g_tilde: return (*this)(0.5 * t) - (*this)(4.0 * t);
    }
    return 0.0;
  }

  friend bool operator==(Filter a, Filter b) { return a.kind_ == b.kind_; }

 private:
  FilterKind kind_ = FilterKind::quintic;
};

inline double eval_filter(Filter f, double t) { return f(t); }
inline double derived_mask(Filter f, Mask m, double t) { return f.mask(m, t); }

}  // namespace lka
