#pragma once

// Closed-form ensemble-size model: with per-key green fraction gamma and a
// boost eps on promoted tokens, E[M_n] = gamma^n, mu(n) = (eps*gamma)^n and
// the ensemble bound is exp(-C T g(n)) with g(n) = n (eps*gamma)^(2n).

#include <cmath>
#include <cstddef>
#include <vector>

#include "ensmark/core.hpp"

namespace ensmark::analysis {

struct SizeAnalysisParams {
  double gamma = 0.5;
  double eps = 1.8;
  double length = 250.0;  // T
  double c = 2.0;         // bound constant C

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::invalid_argument, "gamma must lie in (0,1)");
    if (!(eps > 0.0) || eps * gamma > 1.0 + 1e-12)
      throw Error(ErrorCode::invalid_argument, "boost must satisfy 0 < eps <= 1/gamma");
    if (!(length > 0.0)) throw Error(ErrorCode::invalid_argument, "T must be positive");
    if (!(c > 0.0)) throw Error(ErrorCode::invalid_argument, "C must be positive");
  }
};

inline double promoted_mass(double gamma, std::size_t n) { return std::pow(gamma, static_cast<double>(n)); }

inline double effective_shift(double gamma, double eps, std::size_t n) {
  return std::pow(eps * gamma, static_cast<double>(n));
}

inline double tradeoff_g(double gamma, double eps, std::size_t n) {
  return static_cast<double>(n) * std::pow(eps * gamma, 2.0 * static_cast<double>(n));
}

/// Stationary point of g: 1 / (2 ln(1/(eps*gamma))).
inline double optimal_n(double gamma, double eps) {
  const double r = eps * gamma;
  if (!(r < 1.0)) throw Error(ErrorCode::no_finite_optimum, "eps*gamma >= 1: g grows without bound");
  if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "eps*gamma must be positive");
  return 1.0 / (2.0 * std::log(1.0 / r));
}

/// Integer n in [1, n_max] maximising g (smallest on ties).
inline std::size_t argmax_g(double gamma, double eps, std::size_t n_max) {
  std::size_t best = 1;
  for (std::size_t n = 2; n <= n_max; ++n)
    if (tradeoff_g(gamma, eps, n) > tradeoff_g(gamma, eps, best)) best = n;
  return best;
}

struct BoundPoint {
  std::size_t n = 0;
  double promoted_mass = 0.0;
  double mu = 0.0;
  double g = 0.0;
  double log_bound = 0.0;  // -C T g(n); exp() underflows for realistic T
  double bound = 0.0;
};

inline std::vector<BoundPoint> p_bound_curve(const SizeAnalysisParams& p, std::size_t n_max) {
  p.validate();
  std::vector<BoundPoint> out;
  out.reserve(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    BoundPoint pt;
    pt.n = n;
    pt.promoted_mass = promoted_mass(p.gamma, n);
    pt.mu = effective_shift(p.gamma, p.eps, n);
    pt.g = tradeoff_g(p.gamma, p.eps, n);
    pt.log_bound = -p.c * p.length * pt.g;
    pt.bound = std::exp(pt.log_bound);
    out.push_back(pt);
  }
  return out;
}

}  // namespace ensmark::analysis
