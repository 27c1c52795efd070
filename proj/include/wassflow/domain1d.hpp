#pragma once

// 1-D weighted model space: uniform grid on a segment or circle with weight
// psi, reference potential Psi, weighted Ricci curvature and K-convexity
// estimation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "wassflow/mcalc.hpp"

namespace wassflow {

enum class DomainKind { segment, circle };

struct Domain1D {
  DomainKind kind = DomainKind::segment;
  double a = 0.0, b = 1.0;
  int size = 0;           // number of cells M
  double h = 0.0;         // cell width
  std::vector<double> x;  // cell centers
  std::vector<double> psi;

  double length() const { return b - a; }
  double weight(int i) const { return std::exp(-psi[i]); }

  int wrap(int i) const {
    const int M = size;
    return ((i % M) + M) % M;
  }

  // geodesic distance between two points of the domain
  double dist(double u, double v) const {
    const double d = std::abs(u - v);
    if (kind == DomainKind::circle) return std::min(d, length() - d);
    return d;
  }

  // cell index containing a point (clamped on segments, wrapped on circles)
  int locate(double u) const {
    if (kind == DomainKind::circle) {
      double s = std::fmod(u - a, length());
      if (s < 0) s += length();
      return std::min(size - 1, static_cast<int>(s / h));
    }
    const int i = static_cast<int>((u - a) / h);
    return std::clamp(i, 0, size - 1);
  }

  // second-order first derivative of a nodal field
  double deriv1(const std::vector<double>& f, int i) const {
    const int M = size;
    if (kind == DomainKind::circle)
      return (f[wrap(i + 1)] - f[wrap(i - 1)]) / (2.0 * h);
    if (i == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    if (i == M - 1)
      return (3.0 * f[M - 1] - 4.0 * f[M - 2] + f[M - 3]) / (2.0 * h);
    return (f[i + 1] - f[i - 1]) / (2.0 * h);
  }

  // second-order second derivative of a nodal field
  double deriv2(const std::vector<double>& f, int i) const {
    const int M = size;
    const double h2 = h * h;
    if (kind == DomainKind::circle)
      return (f[wrap(i + 1)] - 2.0 * f[i] + f[wrap(i - 1)]) / h2;
    if (i == 0)
      return (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    if (i == M - 1)
      return (2.0 * f[M - 1] - 5.0 * f[M - 2] + 4.0 * f[M - 3] - f[M - 4]) / h2;
    return (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
  }

  static Domain1D make(DomainKind kind, double a, double b, int M,
                       const std::function<double(double)>& psi_fn = {}) {
    if (!(b > a)) throw std::invalid_argument("Domain1D: need b > a");
    if (M < 8) throw std::invalid_argument("Domain1D: need M >= 8");
    Domain1D d;
    d.kind = kind;
    d.a = a;
    d.b = b;
    d.size = M;
    d.h = (b - a) / M;
    d.x.resize(M);
    d.psi.assign(M, 0.0);
    for (int i = 0; i < M; ++i) {
      d.x[i] = a + (i + 0.5) * d.h;
      if (psi_fn) d.psi[i] = psi_fn(d.x[i]);
      if (!std::isfinite(std::exp(-d.psi[i])) || std::exp(-d.psi[i]) <= 0.0)
        throw std::invalid_argument("Domain1D: weight e^{-psi} not in (0,inf)");
    }
    return d;
  }
};

// Weighted Ricci curvature at node i: psi'' - (psi')^2/(N-n), with the
// sectional term identically zero in the 1-D model. The N = n convention
// gives -inf unless psi' vanishes.
inline double ric_N(const Domain1D& d, const MParam& p, int i) {
  const double dpsi = d.deriv1(d.psi, i);
  const double ddpsi = d.deriv2(d.psi, i);
  if (p.N == static_cast<double>(p.n))
    return std::abs(dpsi) < 1e-12 ? ddpsi : -kInf;
  return ddpsi - dpsi * dpsi / (p.N - p.n);
}

struct ReferencePotential {
  std::vector<double> Psi;
  std::vector<double> sigma;    // exp_m(-Psi)
  std::vector<char> m0_mask;    // Psi < 1/(m-1) for m > 1; all true for m < 1
  double K_hat = 0.0;

  // linear interpolation of Psi between cell centers
  double Psi_at(const Domain1D& d, double u) const {
    const int M = d.size;
    double s = (u - d.x[0]) / d.h;
    if (d.kind == DomainKind::circle) {
      s = std::fmod(s, static_cast<double>(M));
      if (s < 0) s += M;
      const int i = static_cast<int>(s);
      const double f = s - i;
      return (1.0 - f) * Psi[d.wrap(i)] + f * Psi[d.wrap(i + 1)];
    }
    if (s <= 0.0) return Psi[0] + s * (Psi[1] - Psi[0]);
    if (s >= M - 1) return Psi[M - 1] + (s - (M - 1)) * (Psi[M - 1] - Psi[M - 2]);
    const int i = static_cast<int>(s);
    const double f = s - i;
    return (1.0 - f) * Psi[i] + f * Psi[i + 1];
  }

  // exact slope of the piecewise-linear interpolant used by Psi_at
  double dPsi_at(const Domain1D& d, double u) const {
    const int M = d.size;
    double s = (u - d.x[0]) / d.h;
    if (d.kind == DomainKind::circle) {
      s = std::fmod(s, static_cast<double>(M));
      if (s < 0) s += M;
      const int i = static_cast<int>(s);
      return (Psi[d.wrap(i + 1)] - Psi[d.wrap(i)]) / d.h;
    }
    if (s <= 0.0) return (Psi[1] - Psi[0]) / d.h;
    if (s >= M - 1) return (Psi[M - 1] - Psi[M - 2]) / d.h;
    const int i = static_cast<int>(s);
    return (Psi[i + 1] - Psi[i]) / d.h;
  }

  // sigma^{m-1} = max(0, 1-(m-1)Psi), valid off-grid via Psi interpolation
  double sigma_pow_m1_at(const Domain1D& d, const MParam& p, double u) const {
    const double v = 1.0 - (p.m - 1.0) * Psi_at(d, u);
    if (p.m > 1.0) return std::max(0.0, v);
    if (v <= 0.0)
      throw std::domain_error("ReferencePotential: Psi <= -1/(1-m) for m < 1");
    return v;
  }

  // nu(M) = sum sigma e^{-psi} h
  double mass(const Domain1D& d) const {
    double s = 0.0;
    for (int i = 0; i < d.size; ++i) s += sigma[i] * d.weight(i) * d.h;
    return s;
  }

  static ReferencePotential make(const Domain1D& d, const MParam& p,
                                 const std::function<double(double)>& Psi_fn);
  static ReferencePotential from_values(const Domain1D& d, const MParam& p,
                                        std::vector<double> Psi_values);
};

// Largest K for which the discrete midpoint inequality
// Psi(mid) <= (Psi(x)+Psi(y))/2 - (K/8) d(x,y)^2 holds over node pairs in M0.
// Node pairs at even index gap are used so the midpoint is itself a node.
inline double k_modulus(const ReferencePotential& ref, const Domain1D& d) {
  const int M = d.size;
  bool any = false;
  double K = kInf;
  const int max_gap = (d.kind == DomainKind::circle) ? M / 2 : M - 1;
  for (int i = 0; i < M; ++i) {
    if (!ref.m0_mask[i]) continue;
    for (int g = 2; g <= max_gap; g += 2) {
      const int j = (d.kind == DomainKind::circle) ? d.wrap(i + g) : i + g;
      if (d.kind == DomainKind::segment && j >= M) break;
      if (!ref.m0_mask[j]) continue;
      const int mid = (d.kind == DomainKind::circle) ? d.wrap(i + g / 2)
                                                     : i + g / 2;
      if (!ref.m0_mask[mid]) continue;
      const double dist = g * d.h;  // shorter arc by construction of g
      const double gap =
          0.5 * ref.Psi[i] + 0.5 * ref.Psi[j] - ref.Psi[mid];
      K = std::min(K, 8.0 * gap / (dist * dist));
      any = true;
    }
  }
  if (!any) throw std::runtime_error("k_modulus: no admissible node pair in M0");
  return K;
}

inline ReferencePotential ReferencePotential::from_values(
    const Domain1D& d, const MParam& p, std::vector<double> Psi_values) {
  if (static_cast<int>(Psi_values.size()) != d.size)
    throw std::invalid_argument("ReferencePotential: size mismatch");
  ReferencePotential ref;
  ref.Psi = std::move(Psi_values);
  ref.sigma.resize(d.size);
  ref.m0_mask.resize(d.size);
  bool m0_nonempty = false;
  for (int i = 0; i < d.size; ++i) {
    if (p.m < 1.0 && ref.Psi[i] <= -1.0 / (1.0 - p.m))
      throw std::invalid_argument(
          "ReferencePotential: Psi <= -1/(1-m) violates standing assumption");
    ref.sigma[i] = exp_m(p, -ref.Psi[i]);
    ref.m0_mask[i] =
        (p.m < 1.0) ? 1 : (ref.Psi[i] < 1.0 / (p.m - 1.0) ? 1 : 0);
    if (ref.m0_mask[i]) m0_nonempty = true;
  }
  if (!m0_nonempty)
    throw std::invalid_argument("ReferencePotential: M0 is empty");
  ref.K_hat = k_modulus(ref, d);
  return ref;
}

inline ReferencePotential ReferencePotential::make(
    const Domain1D& d, const MParam& p,
    const std::function<double(double)>& Psi_fn) {
  std::vector<double> v(d.size);
  for (int i = 0; i < d.size; ++i) v[i] = Psi_fn(d.x[i]);
  return from_values(d, p, std::move(v));
}

struct RenormalizedReference {
  ReferencePotential ref;
  double c;  // 1/nu(M) before renormalization
};

// Different presentation of nu with unit mass: exp_m(-Psi~) = c exp_m(-Psi),
// Psi~ = c^{m-1} Psi - (c^{m-1}-1)/(m-1), K~ = c^{m-1} K.
inline RenormalizedReference renormalize_reference(
    const ReferencePotential& ref, const Domain1D& d, const MParam& p) {
  const double mass = ref.mass(d);
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::runtime_error("renormalize_reference: mass not in (0,inf)");
  const double c = 1.0 / mass;
  const double cm1 = std::pow(c, p.m - 1.0);
  std::vector<double> Psi_new(d.size);
  for (int i = 0; i < d.size; ++i)
    Psi_new[i] = cm1 * ref.Psi[i] - (cm1 - 1.0) / (p.m - 1.0);
  RenormalizedReference out{ReferencePotential::from_values(d, p,
                                                            std::move(Psi_new)),
                            c};
  return out;
}

// {(2/K)(1/(m-1) - Psi(x0))}^{1/2} with x0 the discrete minimizer of Psi.
// Only applicable for m > 1, K > 0.
inline double support_radius_bound(const ReferencePotential& ref,
                                   const Domain1D& d, const MParam& p,
                                   double K) {
  if (!(p.m > 1.0)) throw std::invalid_argument("support_radius_bound: m <= 1");
  if (!(K > 0.0)) throw std::invalid_argument("support_radius_bound: K <= 0");
  const auto it = std::min_element(ref.Psi.begin(), ref.Psi.end());
  const double Psi0 = *it;
  return std::sqrt((2.0 / K) * (1.0 / (p.m - 1.0) - Psi0));
}

}  // namespace wassflow
