#pragma once

// Verification battery: displacement-convexity profiles, Talagrand, HWI,
// log-Sobolev and Poincare inequalities, and the concentration-of-measure
// suite (raw implicit bound, m-normal bounds for both parameter ranges).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "wassflow/domain1d.hpp"
#include "wassflow/entropy.hpp"
#include "wassflow/mcalc.hpp"
#include "wassflow/measures.hpp"
#include "wassflow/transport.hpp"

namespace wassflow {

struct CheckRecord {
  std::string name;
  bool applicable = true;
  std::string hypotheses;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double tol = 0.0;
  bool pass = true;
};

// ---------------------------------------------------------------------------
// displacement convexity
// ---------------------------------------------------------------------------

struct ConvexityProfile {
  std::vector<double> t;
  std::vector<double> H;
  std::vector<double> margin;  // (1-t)H0 + tH1 - (K/2)t(1-t)W2^2 - H(t)
  double K_target = 0.0;
  double w2_dist = 0.0;
  double min_margin = 0.0;
  double tol = 0.0;
  bool vacuous = false;  // an endpoint entropy is infinite
  bool pass = true;
};

// H_m along the displacement geodesic between two quantile-represented
// measures, checked against the K-convexity chord bound at T_grid points.
inline ConvexityProfile convexity_profile(const QuantileRep& mu0,
                                          const QuantileRep& mu1,
                                          const ReferencePotential& ref,
                                          const MParam& p, const Domain1D& d,
                                          double K, int T_grid = 21) {
  for (int i = 0; i < d.size; ++i)
    if (ric_N(d, p, i) < -1e-9)
      throw std::invalid_argument("convexity_profile: Ric_N < 0 on the domain");
  if (T_grid < 3) throw std::invalid_argument("convexity_profile: T_grid < 3");

  ConvexityProfile prof;
  prof.K_target = K;
  prof.w2_dist = w2(mu0, mu1);
  const double H0 = h_m_quantile(p, mu0, ref, d);
  const double H1 = h_m_quantile(p, mu1, ref, d);
  if (!std::isfinite(H0) || !std::isfinite(H1)) {
    prof.vacuous = true;
    prof.pass = true;
    return prof;
  }
  const double W2sq = prof.w2_dist * prof.w2_dist;
  prof.min_margin = kInf;
  for (int k = 0; k < T_grid; ++k) {
    const double t = static_cast<double>(k) / (T_grid - 1);
    const auto qt = displacement(mu0, mu1, t);
    const double Ht = h_m_quantile(p, qt, ref, d);
    const double margin =
        (1.0 - t) * H0 + t * H1 - 0.5 * K * t * (1.0 - t) * W2sq - Ht;
    prof.t.push_back(t);
    prof.H.push_back(Ht);
    prof.margin.push_back(margin);
    prof.min_margin = std::min(prof.min_margin, margin);
  }
  prof.tol = 1e-4 * (1.0 + std::max(std::abs(H0), std::abs(H1)));
  prof.pass = prof.min_margin >= -prof.tol;
  return prof;
}

// ---------------------------------------------------------------------------
// functional inequalities
// ---------------------------------------------------------------------------

inline QuantileRep reference_quantile_ineq(const ReferencePotential& ref,
                                           const Domain1D& d, int J) {
  std::vector<double> rho = ref.sigma;
  return to_quantile(GridMeasure::normalized(d, std::move(rho)), d, J);
}

// W2(mu, nu) <= sqrt(2 H_m(mu|nu) / K)
inline CheckRecord talagrand_check(const GridMeasure& mu,
                                   const ReferencePotential& ref,
                                   const MParam& p, const Domain1D& d,
                                   int J = 256) {
  CheckRecord rec;
  rec.name = "talagrand";
  rec.hypotheses = "nu normalized, K > 0 (n=1 model)";
  const double K = ref.K_hat;
  if (!(K > 0.0) || std::abs(ref.mass(d) - 1.0) > 1e-6) {
    rec.applicable = false;
    return rec;
  }
  const double H = h_m(p, mu, ref, d).value;
  rec.lhs = mu.has_atoms() ? kInf : w2(to_quantile(mu, d, J),
                                       reference_quantile_ineq(ref, d, J));
  rec.rhs = std::isfinite(H) ? std::sqrt(std::max(0.0, 2.0 * H / K)) : kInf;
  rec.tol = 2.0 * (d.h + 1.0 / J);
  rec.slack = rec.rhs - rec.lhs;
  rec.pass = !std::isfinite(rec.rhs) || rec.lhs <= rec.rhs + rec.tol;
  return rec;
}

struct HwiLsiReport {
  CheckRecord hwi;
  CheckRecord lsi;
};

// HWI: H <= sqrt(I) W2 - (K/2) W2^2;  LSI: H <= I / (2K)
inline HwiLsiReport hwi_lsi_check(const GridMeasure& mu,
                                  const ReferencePotential& ref,
                                  const MParam& p, const Domain1D& d,
                                  int J = 256) {
  HwiLsiReport rep;
  rep.hwi.name = "hwi";
  rep.lsi.name = "lsi";
  rep.hwi.hypotheses = rep.lsi.hypotheses =
      "Lipschitz density, K > 0 (n=1 model)";
  const double K = ref.K_hat;
  if (!(K > 0.0) || mu.has_atoms()) {
    rep.hwi.applicable = rep.lsi.applicable = false;
    return rep;
  }
  const double H = h_m(p, mu, ref, d).value;
  const double I = fisher_i_m(p, mu, ref, d);
  const double W = w2(to_quantile(mu, d, J), reference_quantile_ineq(ref, d, J));
  const double tol = 2.0 * (d.h + 1.0 / J) * (1.0 + std::abs(H));
  rep.hwi.lhs = rep.lsi.lhs = H;
  rep.hwi.tol = rep.lsi.tol = tol;
  if (!std::isfinite(I)) {
    // vacuous: an infinite right-hand side cannot be violated
    rep.hwi.rhs = rep.lsi.rhs = kInf;
    rep.hwi.hypotheses += "; I_m infinite, vacuous";
    rep.lsi.hypotheses += "; I_m infinite, vacuous";
    rep.hwi.pass = rep.lsi.pass = true;
    return rep;
  }
  rep.hwi.rhs = std::sqrt(I) * W - 0.5 * K * W * W;
  rep.lsi.rhs = I / (2.0 * K);
  rep.hwi.slack = rep.hwi.rhs - H;
  rep.lsi.slack = rep.lsi.rhs - H;
  rep.hwi.pass = H <= rep.hwi.rhs + tol;
  rep.lsi.pass = H <= rep.lsi.rhs + tol;
  return rep;
}

// int f^2 sigma^{m-1} dnu <= (1/K) int |d/dx (f sigma^{m-1})|^2 dnu,
// with f recentred to int f dnu = 0.
inline CheckRecord poincare_check(std::vector<double> f,
                                  const ReferencePotential& ref,
                                  const MParam& p, const Domain1D& d) {
  if (static_cast<int>(f.size()) != d.size)
    throw std::invalid_argument("poincare_check: size mismatch");
  CheckRecord rec;
  rec.name = "poincare";
  rec.hypotheses = "Psi Lipschitz, K > 0 (n=1 model)";
  const double K = ref.K_hat;
  if (!(K > 0.0)) {
    rec.applicable = false;
    return rec;
  }
  const double nu_mass = ref.mass(d);
  auto dnu = [&](int i) { return ref.sigma[i] * d.weight(i) * d.h; };
  double mean = 0.0;
  for (int i = 0; i < d.size; ++i) mean += f[i] * dnu(i);
  mean /= nu_mass;
  for (auto& v : f) v -= mean;

  std::vector<double> spow(d.size), g(d.size);
  for (int i = 0; i < d.size; ++i) {
    spow[i] = (p.m > 1.0 && !ref.m0_mask[i])
                  ? 0.0
                  : std::pow(ref.sigma[i], p.m - 1.0);
    g[i] = f[i] * spow[i];
  }
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < d.size; ++i) {
    lhs += f[i] * f[i] * spow[i] * dnu(i);
    const double dg = d.deriv1(g, i);
    rhs += dg * dg * dnu(i);
  }
  rec.lhs = lhs;
  rec.rhs = rhs / K;
  rec.slack = rec.rhs - rec.lhs;
  rec.tol = 4.0 * d.h * (1.0 + std::abs(rec.rhs));
  rec.pass = rec.lhs <= rec.rhs + rec.tol;
  return rec;
}

// ---------------------------------------------------------------------------
// concentration of measure
// ---------------------------------------------------------------------------

// G_c = int sigma^c domega; for m < 1 the range c in (1/2, 1] guarantees
// finiteness under K > 0.
inline double g_c_moment(const ReferencePotential& ref, const MParam& p,
                         double c, const Domain1D& d) {
  if (p.m < 1.0 && (c <= 0.5 || c > 1.0))
    throw std::invalid_argument("g_c_moment: c outside (1/2, 1]");
  double s = 0.0;
  for (int i = 0; i < d.size; ++i)
    s += std::pow(ref.sigma[i], c) * d.weight(i) * d.h;
  if (!std::isfinite(s))
    throw std::runtime_error("g_c_moment: moment not finite");
  return s;
}

struct ConcentrationReport {
  std::vector<double> r;
  std::vector<double> alpha_lower;  // in [0, 1/2], nonincreasing
};

namespace detail {

// distance from each cell center to the set marked in `mask`
inline std::vector<double> distance_to_set(const Domain1D& d,
                                           const std::vector<char>& mask) {
  const int M = d.size;
  std::vector<double> dist(M, kInf);
  for (int i = 0; i < M; ++i)
    if (mask[i]) dist[i] = 0.0;
  const int passes = (d.kind == DomainKind::circle) ? 2 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    for (int i = 0; i < M; ++i) {
      const int prev = (i == 0) ? (d.kind == DomainKind::circle ? M - 1 : -1)
                                : i - 1;
      if (prev >= 0) dist[i] = std::min(dist[i], dist[prev] + d.h);
    }
    for (int i = M - 1; i >= 0; --i) {
      const int next = (i == M - 1)
                           ? (d.kind == DomainKind::circle ? 0 : -1)
                           : i + 1;
      if (next >= 0) dist[i] = std::min(dist[i], dist[next] + d.h);
    }
  }
  return dist;
}

}  // namespace detail

// Lower estimate of the concentration function over a structured candidate
// family: minimal half-lines (minimal arcs on circles), complements of single
// intervals, and a greedy union of highest-mass cells.
inline ConcentrationReport alpha_estimate(const ReferencePotential& ref,
                                          const MParam& p, const Domain1D& d,
                                          const std::vector<double>& r_grid) {
  (void)p;
  const int M = d.size;
  std::vector<double> nu(M);
  double total = 0.0;
  for (int i = 0; i < M; ++i) {
    nu[i] = ref.sigma[i] * d.weight(i) * d.h;
    total += nu[i];
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("alpha_estimate: nu not normalized");

  std::vector<std::vector<char>> candidates;
  // minimal prefix / suffix half-lines (arcs from every start on a circle)
  if (d.kind == DomainKind::segment) {
    {
      std::vector<char> mask(M, 0);
      double s = 0.0;
      for (int i = 0; i < M && s < 0.5; ++i) {
        mask[i] = 1;
        s += nu[i];
      }
      candidates.push_back(std::move(mask));
    }
    {
      std::vector<char> mask(M, 0);
      double s = 0.0;
      for (int i = M - 1; i >= 0 && s < 0.5; --i) {
        mask[i] = 1;
        s += nu[i];
      }
      candidates.push_back(std::move(mask));
    }
    // complements of single intervals: for each start, drop the longest
    // interval keeping nu(A) >= 1/2
    for (int i = 0; i < M; ++i) {
      double removed = 0.0;
      int j = i;
      while (j < M && removed + nu[j] <= 0.5) removed += nu[j++];
      if (j == i) continue;
      std::vector<char> mask(M, 1);
      for (int k = i; k < j; ++k) mask[k] = 0;
      candidates.push_back(std::move(mask));
    }
  } else {
    for (int i = 0; i < M; ++i) {
      std::vector<char> mask(M, 0);
      double s = 0.0;
      for (int k = 0; k < M && s < 0.5; ++k) {
        const int idx = d.wrap(i + k);
        mask[idx] = 1;
        s += nu[idx];
      }
      candidates.push_back(std::move(mask));
    }
  }
  // greedy union of highest-mass cells up to half mass
  {
    std::vector<int> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return nu[a] > nu[b]; });
    std::vector<char> mask(M, 0);
    double s = 0.0;
    for (int idx : order) {
      if (s >= 0.5) break;
      mask[idx] = 1;
      s += nu[idx];
    }
    candidates.push_back(std::move(mask));
  }

  ConcentrationReport rep;
  rep.r = r_grid;
  rep.alpha_lower.assign(r_grid.size(), 0.0);
  for (const auto& mask : candidates) {
    const auto dist = detail::distance_to_set(d, mask);
    for (size_t k = 0; k < r_grid.size(); ++k) {
      double outside = 0.0;
      for (int i = 0; i < M; ++i)
        if (dist[i] >= r_grid[k]) outside += nu[i];
      rep.alpha_lower[k] = std::max(rep.alpha_lower[k], outside);
    }
  }
  for (auto& a : rep.alpha_lower) a = std::min(a, 0.5);
  // nonincreasing by set inclusion; enforce against quadrature noise
  for (size_t k = 1; k < rep.alpha_lower.size(); ++k)
    rep.alpha_lower[k] = std::min(rep.alpha_lower[k], rep.alpha_lower[k - 1]);
  return rep;
}

struct ConcBoundReport {
  std::string name;
  bool applicable = false;
  std::string hypotheses;
  std::vector<double> r;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> slack;
  double tol = 0.0;
  bool pass = true;
};

struct ConcVerdicts {
  ConcBoundReport raw;       // implicit bound on alpha^{theta-m} ln_m(2 alpha)
  ConcBoundReport m_normal;  // explicit m-normal bound for the m-range
};

// ((2m-1)^{1/(m-1)} / 2) exp_m(-mK r^2 / (4 omega(M)^{1-m})), m in (1/2,1)
inline double m_normal_bound_lower_range(const MParam& p, double K,
                                         double omega_mass, double r) {
  const double pref = 0.5 * std::pow(2.0 * p.m - 1.0, 1.0 / (p.m - 1.0));
  return pref * exp_m(p, -p.m * K * r * r /
                             (4.0 * std::pow(omega_mass, 1.0 - p.m)));
}

// 1 / [ (2/m-1)^{1/(m-1)} exp_m(mK ||sigma||_inf^{1-m} r^2 / 4) ], m in (1,2)
inline double m_normal_bound_upper_range(const MParam& p, double K,
                                         double sigma_max, double r) {
  const double pref = std::pow(2.0 / p.m - 1.0, 1.0 / (p.m - 1.0));
  const double e = exp_m(p, p.m * K * std::pow(sigma_max, 1.0 - p.m) * r * r /
                                4.0);
  return 1.0 / (pref * e);
}

// classical normal concentration (m -> 1 limit of the lower-range bound)
inline double normal_bound_classical(double K, double r) {
  return 0.5 * std::exp(-K * r * r / 4.0 + 2.0);
}

// Checks lower estimates of alpha against the applicable upper bounds. The
// implicit bound is evaluated in its raw written form; its left-hand side is
// increasing in alpha on (0, 1/2], so lower estimates of alpha give a valid
// one-sided test.
inline ConcVerdicts conc_bound_check(const ReferencePotential& ref,
                                     const MParam& p, const Domain1D& d,
                                     const ConcentrationReport& report,
                                     double theta) {
  ConcVerdicts out;
  const double K = ref.K_hat;
  const double m = p.m;
  out.raw.name = "conc_implicit";
  out.m_normal.name = m < 1.0 ? "conc_m_normal" : "conc_m_normal_inverse";
  bool ric_ok = true;
  for (int i = 0; i < d.size; ++i)
    if (ric_N(d, p, i) < -1e-9) ric_ok = false;
  const bool range_ok =
      (m > 0.5 && m < 1.0) || (m > 1.0 && m <= 2.0);
  const double theta_max = m < 1.0 ? 2.0 * m - 1.0 : 1.0;
  if (!(K > 0.0) || !ric_ok || !range_ok || theta < 0.0 ||
      theta >= theta_max) {
    out.raw.hypotheses = out.m_normal.hypotheses =
        "hypothesis failure (K, Ric_N, m-range or theta)";
    return out;
  }
  out.raw.applicable = true;
  out.raw.hypotheses = "K > 0, Ric_N >= 0, theta in range (n=1 model)";
  out.raw.tol = 1e-9;

  double G_m_val;  // G_m = int sigma^m domega
  {
    double s = 0.0;
    for (int i = 0; i < d.size; ++i)
      s += std::pow(ref.sigma[i], m) * d.weight(i) * d.h;
    G_m_val = s;
  }
  double G_theta_val;  // G_{(m-theta)/(1-theta)}
  {
    const double c = (m - theta) / (1.0 - theta);
    double s = 0.0;
    for (int i = 0; i < d.size; ++i)
      s += std::pow(ref.sigma[i], c) * d.weight(i) * d.h;
    G_theta_val = s;
  }

  for (size_t k = 0; k < report.r.size(); ++k) {
    const double r = report.r[k];
    const double a = report.alpha_lower[k];
    if (a <= 1e-12) continue;  // vacuous at this radius
    const double lhs = std::pow(a, theta - m) * ln_m(p, 2.0 * a);
    const double br = std::sqrt(m * K / 2.0) * r - std::sqrt(G_m_val);
    const double rhs =
        -std::pow(G_theta_val, theta - 1.0) * (br * br - G_m_val);
    out.raw.r.push_back(r);
    out.raw.lhs.push_back(lhs);
    out.raw.rhs.push_back(rhs);
    out.raw.slack.push_back(rhs - lhs);
    if (lhs > rhs + out.raw.tol) out.raw.pass = false;
  }

  // explicit m-normal bound (m = 2 excluded in the upper range)
  if (m < 2.0) {
    out.m_normal.applicable = true;
    out.m_normal.tol = 1e-9;
    double omega_mass = 0.0, sigma_max = 0.0;
    for (int i = 0; i < d.size; ++i) {
      omega_mass += d.weight(i) * d.h;
      sigma_max = std::max(sigma_max, ref.sigma[i]);
    }
    out.m_normal.hypotheses =
        m < 1.0 ? "omega(M) finite (truncated domain)" : "m in (1,2)";
    for (size_t k = 0; k < report.r.size(); ++k) {
      const double r = report.r[k];
      const double a = report.alpha_lower[k];
      const double bound =
          m < 1.0 ? m_normal_bound_lower_range(p, K, omega_mass, r)
                  : m_normal_bound_upper_range(p, K, sigma_max, r);
      out.m_normal.r.push_back(r);
      out.m_normal.lhs.push_back(a);
      out.m_normal.rhs.push_back(bound);
      out.m_normal.slack.push_back(bound - a);
      if (a > bound + out.m_normal.tol) out.m_normal.pass = false;
    }
  }
  return out;
}

}  // namespace wassflow
