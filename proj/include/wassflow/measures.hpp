#pragma once

// Probability-measure representations on a Domain1D: grid densities with
// optional atoms, quantile (inverse-CDF) samples, m-Gaussian construction
// and the conversions between representations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wassflow/domain1d.hpp"
#include "wassflow/mcalc.hpp"

namespace wassflow {

struct Atom {
  double x;
  double mass;
};

// Density values are taken with respect to omega = e^{-psi} dx, so the mass
// of cell i is rho_i e^{-psi_i} h.
struct GridMeasure {
  std::vector<double> rho;
  std::vector<Atom> atoms;
  double total_mass = 0.0;

  bool has_atoms() const { return !atoms.empty(); }
  double atom_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
  }

  double cell_mass(const Domain1D& d, int i) const {
    return rho[i] * d.weight(i) * d.h;
  }

  double ac_mass(const Domain1D& d) const {
    double s = 0.0;
    for (int i = 0; i < d.size; ++i) s += cell_mass(d, i);
    return s;
  }

  double mean(const Domain1D& d) const {
    double s = 0.0;
    for (int i = 0; i < d.size; ++i) s += d.x[i] * cell_mass(d, i);
    for (const auto& a : atoms) s += a.x * a.mass;
    return s / total_mass;
  }

  double variance(const Domain1D& d) const {
    const double mu = mean(d);
    double s = 0.0;
    for (int i = 0; i < d.size; ++i)
      s += (d.x[i] - mu) * (d.x[i] - mu) * cell_mass(d, i);
    for (const auto& a : atoms) s += (a.x - mu) * (a.x - mu) * a.mass;
    return s / total_mass;
  }

  static GridMeasure make(const Domain1D& d, std::vector<double> rho,
                          std::vector<Atom> atoms = {},
                          double mass_tol = 1e-9) {
    if (static_cast<int>(rho.size()) != d.size)
      throw std::invalid_argument("GridMeasure: size mismatch");
    GridMeasure mu;
    mu.rho = std::move(rho);
    mu.atoms = std::move(atoms);
    double mass = 0.0;
    for (int i = 0; i < d.size; ++i) {
      if (mu.rho[i] < 0.0)
        throw std::invalid_argument("GridMeasure: negative density");
      mass += mu.rho[i] * d.weight(i) * d.h;
    }
    for (const auto& a : mu.atoms) {
      if (!(a.mass > 0.0))
        throw std::invalid_argument("GridMeasure: atom mass must be > 0");
      if (a.x < d.a || a.x > d.b)
        throw std::invalid_argument("GridMeasure: atom outside domain");
      mass += a.mass;
    }
    if (std::abs(mass - 1.0) > mass_tol)
      throw std::invalid_argument("GridMeasure: total mass " +
                                  std::to_string(mass) + " != 1");
    mu.total_mass = mass;
    return mu;
  }

  // normalize arbitrary nonnegative density values into a probability measure
  static GridMeasure normalized(const Domain1D& d, std::vector<double> rho,
                                std::vector<Atom> atoms = {}) {
    double mass = 0.0;
    for (int i = 0; i < d.size; ++i) mass += rho[i] * d.weight(i) * d.h;
    double am = 0.0;
    for (const auto& a : atoms) am += a.mass;
    if (!(mass > 0.0) || am >= 1.0)
      throw std::invalid_argument("GridMeasure: cannot normalize");
    const double scale = (1.0 - am) / mass;
    for (auto& r : rho) r *= scale;
    return make(d, std::move(rho), std::move(atoms));
  }
};

// Monotone inverse-CDF samples X_j at s_j = (j-1/2)/J.
struct QuantileRep {
  std::vector<double> X;

  int J() const { return static_cast<int>(X.size()); }
  double s(int j) const { return (j + 0.5) / J(); }

  double mean() const {
    return std::accumulate(X.begin(), X.end(), 0.0) / X.size();
  }
  double variance() const {
    const double m = mean();
    double s2 = 0.0;
    for (double v : X) s2 += (v - m) * (v - m);
    return s2 / X.size();
  }

  static QuantileRep make(std::vector<double> X) {
    for (size_t j = 1; j < X.size(); ++j)
      if (!(X[j] > X[j - 1]))
        throw std::invalid_argument("QuantileRep: X not strictly increasing");
    return QuantileRep{std::move(X)};
  }
};

struct MGaussian {
  GridMeasure measure;
  ReferencePotential reference;  // implied Psi with exp_m(-Psi) = density
  double C1;                     // curvature constant of the raw profile
  double K;                      // Hess Psi of the implied quadratic potential
};

// m-Gaussian on the grid: density proportional to exp_m[-C1 (x-v)^2 / (2V)],
// with C1 chosen by bisection so the normalized measure has variance V.
inline MGaussian m_gaussian(const MParam& p, double v, double V,
                            const Domain1D& d) {
  if (!(V > 0.0)) throw std::invalid_argument("m_gaussian: V must be > 0");

  auto profile = [&](double c1) {
    std::vector<double> rho(d.size);
    for (int i = 0; i < d.size; ++i) {
      const double q = c1 * (d.x[i] - v) * (d.x[i] - v) / (2.0 * V);
      if (p.m < 1.0) {
        // heavy tail; the argument is always in range since q >= 0
        rho[i] = exp_m(p, -q);
      } else {
        rho[i] = exp_m(p, -q);  // clamps to 0 outside the bounded support
      }
    }
    return rho;
  };
  auto variance_of = [&](double c1) {
    auto rho = profile(c1);
    double mass = 0.0, m1 = 0.0;
    for (int i = 0; i < d.size; ++i) {
      const double w = rho[i] * d.weight(i) * d.h;
      mass += w;
      m1 += d.x[i] * w;
    }
    m1 /= mass;
    double m2 = 0.0;
    for (int i = 0; i < d.size; ++i)
      m2 += (d.x[i] - m1) * (d.x[i] - m1) * rho[i] * d.weight(i) * d.h;
    return m2 / mass;
  };

  // variance is decreasing in C1; bracket and bisect
  double lo = 1e-6, hi = 1.0;
  while (variance_of(hi) > V && hi < 1e8) hi *= 2.0;
  while (variance_of(lo) < V && lo > 1e-12) lo *= 0.5;
  if (variance_of(hi) > V || variance_of(lo) < V)
    throw std::invalid_argument(
        "m_gaussian: domain cannot realize the requested variance; "
        "enlarge the domain");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (variance_of(mid) > V) lo = mid; else hi = mid;
  }
  const double C1 = 0.5 * (lo + hi);

  auto rho = profile(C1);
  double mass = 0.0;
  for (int i = 0; i < d.size; ++i) mass += rho[i] * d.weight(i) * d.h;
  const double A = 1.0 / mass;  // normalization constant

  // support check: for m > 1 the bounded support must fit the domain;
  // for m < 1 the discarded tail mass must be small
  if (p.m > 1.0) {
    const double radius = std::sqrt(2.0 * V / (C1 * (p.m - 1.0)));
    if (v - radius < d.a || v + radius > d.b)
      throw std::invalid_argument(
          "m_gaussian: bounded support exceeds domain; required radius " +
          std::to_string(radius));
  } else {
    const double edge =
        std::max(rho[0] * d.weight(0), rho[d.size - 1] * d.weight(d.size - 1)) *
        d.h / mass;
    if (edge > 1e-8)
      throw std::invalid_argument(
          "m_gaussian: domain too small, boundary cell mass " +
          std::to_string(edge));
  }
  for (auto& r : rho) r *= A;

  // implied quadratic potential: A exp_m(-Q) = exp_m(-Psi) with
  // Psi = A^{m-1} Q - (A^{m-1}-1)/(m-1)  (multiplicative presentation)
  const double Am1 = std::pow(A, p.m - 1.0);
  const double shift = (Am1 - 1.0) / (p.m - 1.0);
  std::vector<double> Psi(d.size);
  for (int i = 0; i < d.size; ++i) {
    const double q = C1 * (d.x[i] - v) * (d.x[i] - v) / (2.0 * V);
    Psi[i] = Am1 * q - shift;
  }
  MGaussian out{GridMeasure::make(d, std::move(rho)),
                ReferencePotential::from_values(d, p, std::move(Psi)), C1,
                Am1 * C1 / V};
  return out;
}

// Generalized inverse CDF at s_j = (j-1/2)/J, piecewise linear within cells.
inline QuantileRep to_quantile(const GridMeasure& mu, const Domain1D& d,
                               int J) {
  if (mu.has_atoms())
    throw std::invalid_argument(
        "to_quantile: atoms present; smooth the measure first");
  if (J < 2) throw std::invalid_argument("to_quantile: J must be >= 2");
  const int M = d.size;
  std::vector<double> cdf(M + 1, 0.0);
  for (int i = 0; i < M; ++i) cdf[i + 1] = cdf[i] + mu.cell_mass(d, i);
  const double total = cdf[M];
  std::vector<double> X(J);
  int i = 0;
  for (int j = 0; j < J; ++j) {
    const double target = (j + 0.5) / J * total;
    while (i < M - 1 && cdf[i + 1] < target) ++i;
    while (i > 0 && cdf[i] > target) --i;
    const double cell = cdf[i + 1] - cdf[i];
    const double f = cell > 0.0 ? (target - cdf[i]) / cell : 0.5;
    X[j] = d.a + (i + f) * d.h;
  }
  // enforce strict monotonicity across zero-density stretches
  for (int j = 1; j < J; ++j)
    if (X[j] <= X[j - 1]) X[j] = X[j - 1] + 1e-14 * d.length();
  return QuantileRep{std::move(X)};
}

// Conservative deposit: quantile point j carries mass 1/J over the interval
// between midpoints of adjacent quantile gaps; overlap with grid cells
// distributes the mass.
inline GridMeasure to_density(const QuantileRep& q, const Domain1D& d) {
  const int J = q.J();
  const int M = d.size;
  std::vector<double> cell_mass(M, 0.0);
  auto deposit = [&](double lo, double hi, double mass) {
    lo = std::max(lo, d.a);
    hi = std::min(hi, d.b);
    if (hi <= lo) {
      // all mass into the nearest cell
      cell_mass[d.locate(0.5 * (lo + hi))] += mass;
      return;
    }
    const double inv = mass / (hi - lo);
    int i0 = d.locate(lo), i1 = d.locate(hi);
    for (int i = i0; i <= i1; ++i) {
      const double cl = d.a + i * d.h, cr = cl + d.h;
      const double ov = std::min(hi, cr) - std::max(lo, cl);
      if (ov > 0.0) cell_mass[i] += inv * ov;
    }
  };
  for (int j = 0; j < J; ++j) {
    const double gl = (j == 0) ? q.X[1] - q.X[0] : q.X[j] - q.X[j - 1];
    const double gr = (j == J - 1) ? q.X[J - 1] - q.X[J - 2]
                                   : q.X[j + 1] - q.X[j];
    deposit(q.X[j] - 0.5 * gl, q.X[j] + 0.5 * gr, 1.0 / J);
  }
  std::vector<double> rho(M);
  for (int i = 0; i < M; ++i) rho[i] = cell_mass[i] / (d.weight(i) * d.h);
  GridMeasure mu;
  mu.rho = std::move(rho);
  mu.total_mass = std::accumulate(cell_mass.begin(), cell_mass.end(), 0.0);
  return mu;
}

inline std::string to_csv(const GridMeasure& mu, const Domain1D& d) {
  std::ostringstream os;
  os.precision(17);
  os << "x,rho\n";
  for (int i = 0; i < d.size; ++i) os << d.x[i] << "," << mu.rho[i] << "\n";
  return os.str();
}

}  // namespace wassflow
