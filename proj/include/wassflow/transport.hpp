#pragma once

// Exact 1-D L^2-Wasserstein machinery: quantile-coordinate distance,
// displacement geodesics, monotone couplings and a brute-force min-cost-flow
// oracle for tiny discrete instances.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wassflow/domain1d.hpp"
#include "wassflow/measures.hpp"

namespace wassflow {

// W2 in quantile coordinates: plain L^2 distance between inverse CDFs.
inline double w2(const QuantileRep& mu, const QuantileRep& nu) {
  if (mu.J() != nu.J()) throw std::invalid_argument("w2: mismatched J");
  double s = 0.0;
  for (int j = 0; j < mu.J(); ++j) {
    const double dd = mu.X[j] - nu.X[j];
    s += dd * dd;
  }
  return std::sqrt(s / mu.J());
}

// Circle W2: optimal cyclic shift found by scanning all J shifts; the shifted
// quantile sequence is unwrapped by the domain circumference.
inline double w2_circle(const QuantileRep& mu, const QuantileRep& nu,
                        double circumference) {
  const int J = mu.J();
  if (J != nu.J()) throw std::invalid_argument("w2_circle: mismatched J");
  double best = kInf;
  for (int k = 0; k < J; ++k) {
    double s = 0.0;
    for (int j = 0; j < J; ++j) {
      const int jj = (j + k) % J;
      const double y = nu.X[jj] + (j + k >= J ? circumference : 0.0);
      double dd = mu.X[j] - y;
      // the matched pair may also be reached going the other way round
      dd = std::min(std::abs(dd), circumference - std::abs(dd));
      s += dd * dd;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best / J);
}

struct DiscreteMeasure {
  std::vector<double> x;
  std::vector<double> mass;  // positive, sums to 1

  static DiscreteMeasure make(std::vector<double> x, std::vector<double> mass) {
    if (x.size() != mass.size() || x.empty())
      throw std::invalid_argument("DiscreteMeasure: bad sizes");
    double s = 0.0;
    for (double m : mass) {
      if (!(m > 0.0))
        throw std::invalid_argument("DiscreteMeasure: masses must be > 0");
      s += m;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("DiscreteMeasure: mass != 1");
    return DiscreteMeasure{std::move(x), std::move(mass)};
  }
};

struct Coupling {
  struct Pair {
    double x, y, w;
  };
  std::vector<Pair> support;

  double cost() const {
    double s = 0.0;
    for (const auto& p : support) s += p.w * (p.x - p.y) * (p.x - p.y);
    return s;
  }
};

// Monotone (north-west) coupling; optimal in 1-D for convex costs.
inline Coupling monotone_coupling(const DiscreteMeasure& mu,
                                  const DiscreteMeasure& nu) {
  std::vector<int> oa(mu.x.size()), ob(nu.x.size());
  for (size_t i = 0; i < oa.size(); ++i) oa[i] = static_cast<int>(i);
  for (size_t i = 0; i < ob.size(); ++i) ob[i] = static_cast<int>(i);
  std::sort(oa.begin(), oa.end(),
            [&](int a, int b) { return mu.x[a] < mu.x[b]; });
  std::sort(ob.begin(), ob.end(),
            [&](int a, int b) { return nu.x[a] < nu.x[b]; });
  Coupling pi;
  size_t i = 0, j = 0;
  double ra = mu.mass[oa[0]], rb = nu.mass[ob[0]];
  while (true) {
    const double w = std::min(ra, rb);
    if (w > 0.0) pi.support.push_back({mu.x[oa[i]], nu.x[ob[j]], w});
    ra -= w;
    rb -= w;
    if (ra <= 1e-15) {
      if (++i >= oa.size()) break;
      ra = mu.mass[oa[i]];
    }
    if (rb <= 1e-15) {
      if (++j >= ob.size()) break;
      rb = nu.mass[ob[j]];
    }
  }
  return pi;
}

// Exact transportation cost for tiny instances via successive shortest
// augmenting paths with node potentials (Bellman-Ford on the residual graph).
// Each augmentation saturates a supply or demand node, so at most n+m rounds.
inline double w2_lp_oracle(const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu) {
  const int n = static_cast<int>(mu.x.size());
  const int m = static_cast<int>(nu.x.size());
  if (n > 12 || m > 12)
    throw std::invalid_argument("w2_lp_oracle: support too large (oracle only)");
  std::vector<double> supply = mu.mass, demand = nu.mass;
  std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
  auto cost = [&](int i, int j) {
    const double dd = mu.x[i] - nu.x[j];
    return dd * dd;
  };

  // Node potentials keep all residual reduced costs nonnegative (clamped at
  // zero to absorb floating-point noise), so the Bellman-Ford predecessor
  // tree cannot contain a cycle.
  const int V = n + m;
  std::vector<double> pot(V, 0.0);
  double remaining = 1.0;
  int rounds = 0;
  while (remaining > 1e-13) {
    if (++rounds > 4 * V + 16)
      throw std::runtime_error("w2_lp_oracle: too many augmentations");
    // shortest path distances from the set of unsaturated sources; nodes are
    // sources 0..n-1 and sinks n..n+m-1; residual arcs: i->j always (cost c),
    // j->i when flow[i][j] > 0 (cost -c); all costs reduced by potentials
    std::vector<double> dist(V, kInf);
    std::vector<int> prev(V, -1);
    for (int i = 0; i < n; ++i)
      if (supply[i] > 1e-13) dist[i] = 0.0;
    auto rc_fwd = [&](int i, int j) {
      return std::max(0.0, cost(i, j) + pot[i] - pot[n + j]);
    };
    auto rc_bwd = [&](int i, int j) {
      return std::max(0.0, -cost(i, j) + pot[n + j] - pot[i]);
    };
    for (int it = 0; it < V; ++it) {
      bool changed = false;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          if (dist[i] + rc_fwd(i, j) < dist[n + j]) {
            dist[n + j] = dist[i] + rc_fwd(i, j);
            prev[n + j] = i;
            changed = true;
          }
          if (flow[i][j] > 1e-13 && dist[n + j] + rc_bwd(i, j) < dist[i]) {
            dist[i] = dist[n + j] + rc_bwd(i, j);
            prev[i] = n + j;
            changed = true;
          }
        }
      if (!changed) break;
    }
    // pick the cheapest reachable unsaturated sink
    int best = -1;
    for (int j = 0; j < m; ++j)
      if (demand[j] > 1e-13 &&
          (best < 0 || dist[n + j] < dist[n + best]))
        best = j;
    if (best < 0 || !std::isfinite(dist[n + best]))
      throw std::runtime_error("w2_lp_oracle: no augmenting path");
    for (int v = 0; v < V; ++v)
      if (std::isfinite(dist[v])) pot[v] += dist[v];
    // bottleneck along the path
    double bottleneck = demand[best];
    int v = n + best;
    while (prev[v] >= 0) {
      const int u = prev[v];
      if (u < n && v >= n) {
        // forward arc, unlimited residual
      } else {
        bottleneck = std::min(bottleneck, flow[v][u - n]);
      }
      v = u;
    }
    bottleneck = std::min(bottleneck, supply[v]);
    // augment
    v = n + best;
    while (prev[v] >= 0) {
      const int u = prev[v];
      if (u < n && v >= n)
        flow[u][v - n] += bottleneck;
      else
        flow[v][u - n] -= bottleneck;
      v = u;
    }
    supply[v] -= bottleneck;
    demand[best] -= bottleneck;
    remaining -= bottleneck;
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) total += flow[i][j] * cost(i, j);
  return std::sqrt(std::max(0.0, total));
}

// Displacement interpolation: linear in quantile coordinates.
inline QuantileRep displacement(const QuantileRep& mu, const QuantileRep& nu,
                                double t) {
  if (mu.J() != nu.J()) throw std::invalid_argument("displacement: mismatched J");
  if (t < 0.0 || t > 1.0)
    throw std::invalid_argument("displacement: t outside [0,1]");
  std::vector<double> X(mu.J());
  for (int j = 0; j < mu.J(); ++j)
    X[j] = (1.0 - t) * mu.X[j] + t * nu.X[j];
  return QuantileRep{std::move(X)};
}

}  // namespace wassflow
