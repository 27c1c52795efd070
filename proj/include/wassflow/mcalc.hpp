#pragma once

// m-calculus: deformed logarithm/exponential pair and the elementary
// inequality helpers used by the concentration estimates.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wassflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Exponent bundle. N = 1/(1-m) is the effective dimension parameter,
// negative for m > 1.
struct MParam {
  double m;
  int n;
  double N;

  bool supports_jko_equivalence() const { return m <= 2.0; }
  bool supports_concentration_lt1() const { return m > 0.5 && m < 1.0; }

  static MParam make(double m, int n = 1) {
    if (n < 1) throw std::invalid_argument("MParam: n must be >= 1");
    const double lo = static_cast<double>(n - 1) / n;
    const bool in_range =
        (n == 1) ? (m > 0.0 && m < 1.0) || m > 1.0
                 : (m >= lo && m < 1.0) || m > 1.0;
    if (!in_range)
      throw std::invalid_argument("MParam: m=" + std::to_string(m) +
                                  " outside [(n-1)/n,1) U (1,inf) for n=" +
                                  std::to_string(n));
    return MParam{m, n, 1.0 / (1.0 - m)};
  }
};

// |m-1| below this switches the scalar functions to log-domain forms.
inline constexpr double kClassicalLimitEps = 1e-3;

// ln_m(t) = (t^{m-1} - 1)/(m-1); t > 0 for m < 1, t >= 0 for m > 1.
inline double ln_m(const MParam& p, double t) {
  if (!(t > 0.0) && !(p.m > 1.0 && t == 0.0))
    throw std::invalid_argument("ln_m: t=" + std::to_string(t) +
                                " outside domain for m=" + std::to_string(p.m));
  const double mm1 = p.m - 1.0;
  if (t == 0.0) return -1.0 / mm1;
  if (std::abs(mm1) < kClassicalLimitEps)
    return std::expm1(mm1 * std::log(t)) / mm1;
  return (std::pow(t, mm1) - 1.0) / mm1;
}

// exp_m(t) = {1+(m-1)t}^{1/(m-1)}. For m > 1 values below the cutoff
// -1/(m-1) clamp to 0; for m < 1 values at or above 1/(1-m) are rejected.
inline double exp_m(const MParam& p, double t) {
  const double mm1 = p.m - 1.0;
  const double base = 1.0 + mm1 * t;
  if (p.m < 1.0) {
    if (base <= 0.0)
      throw std::invalid_argument("exp_m: t=" + std::to_string(t) +
                                  " >= 1/(1-m) for m=" + std::to_string(p.m));
  } else if (base <= 0.0) {
    return 0.0;
  }
  if (std::abs(mm1) < kClassicalLimitEps)
    return std::exp(std::log1p(mm1 * t) / mm1);
  return std::pow(base, 1.0 / mm1);
}

// e_m(t) = t ln_m(t) = (t^m - t)/(m-1), e_m(0) = 0.
inline double e_m(const MParam& p, double t) {
  if (t < 0.0) throw std::invalid_argument("e_m: t must be nonnegative");
  if (t == 0.0) return 0.0;
  return t * ln_m(p, t);
}

struct LimitCheckReport {
  double dev_ln_plus, dev_ln_minus;
  double dev_exp_plus, dev_exp_minus;
  double dev_em_plus, dev_em_minus;
  double eps;
  double max_deviation() const {
    double d = dev_ln_plus;
    for (double v : {dev_ln_minus, dev_exp_plus, dev_exp_minus, dev_em_plus,
                     dev_em_minus})
      d = std::max(d, v);
    return d;
  }
};

// Deviations of ln_m, exp_m, e_m at m = 1 +/- eps from their classical limits.
inline LimitCheckReport limit_check_m_to_1(double t, double eps) {
  if (!(t > 0.0)) throw std::invalid_argument("limit_check: t must be > 0");
  if (!(eps > 0.0 && eps < 0.1))
    throw std::invalid_argument("limit_check: eps must be in (0,0.1)");
  const MParam up = MParam::make(1.0 + eps);
  const MParam dn = MParam::make(1.0 - eps);
  const double s = std::log(t);
  LimitCheckReport r{};
  r.eps = eps;
  r.dev_ln_plus = std::abs(ln_m(up, t) - std::log(t));
  r.dev_ln_minus = std::abs(ln_m(dn, t) - std::log(t));
  r.dev_exp_plus = std::abs(exp_m(up, s) - t);
  r.dev_exp_minus = std::abs(exp_m(dn, s) - t);
  r.dev_em_plus = std::abs(e_m(up, t) - t * std::log(t));
  r.dev_em_minus = std::abs(e_m(dn, t) - t * std::log(t));
  return r;
}

struct ConcLemmaBounds {
  double lhs;
  double rhs;
  bool holds;
};

// Two-sided exp_m comparison used by the m-normal concentration proofs.
// Case m in (1/2,1):  exp_m(-(ar-1)^2+1) <= (2m-1)^{1/(m-1)} exp_m(-a^2 r^2/2).
// Case m in (1,2):    exp_m((ar-1)^2-1) >= (2/m-1)^{1/(m-1)} exp_m(a^2 r^2/2).
inline ConcLemmaBounds conc_lemma_bounds(const MParam& p, double a, double r) {
  if (!(a > 0.0 && r > 0.0))
    throw std::invalid_argument("conc_lemma_bounds: a,r must be > 0");
  const double m = p.m;
  if (m > 0.5 && m < 1.0) {
    const double lhs = exp_m(p, -(a * r - 1.0) * (a * r - 1.0) + 1.0);
    const double rhs =
        std::pow(2.0 * m - 1.0, 1.0 / (m - 1.0)) * exp_m(p, -0.5 * a * a * r * r);
    return {lhs, rhs, lhs <= rhs * (1.0 + 1e-12)};
  }
  if (m > 1.0 && m < 2.0) {
    const double lhs = exp_m(p, (a * r - 1.0) * (a * r - 1.0) - 1.0);
    const double rhs =
        std::pow(2.0 / m - 1.0, 1.0 / (m - 1.0)) * exp_m(p, 0.5 * a * a * r * r);
    return {lhs, rhs, lhs >= rhs * (1.0 - 1e-12)};
  }
  throw std::invalid_argument("conc_lemma_bounds: m must be in (1/2,1) or (1,2)");
}

}  // namespace wassflow
