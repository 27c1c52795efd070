#pragma once

// Wasserstein gradient flow of H_m: JKO minimizing-movement steps in quantile
// coordinates, a well-balanced finite-volume solver for the porous-medium /
// fast-diffusion equation with drift, the weak-form residual test, the
// contraction test and the slope identity.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "wassflow/domain1d.hpp"
#include "wassflow/entropy.hpp"
#include "wassflow/expr.hpp"
#include "wassflow/measures.hpp"
#include "wassflow/transport.hpp"

namespace wassflow {

struct JkoConfig {
  double delta = 1e-3;        // time step
  double inner_tol = 1e-8;    // sup-norm gradient tolerance
  int max_inner_iters = 800;
  double eps_x = 1e-12;       // monotonicity floor for quantile increments
};

struct FlowTrace {
  std::vector<double> times;
  std::vector<GridMeasure> measures;
  std::vector<double> H;          // H_m(mu_k | nu)
  std::vector<double> I;          // m-relative Fisher information
  std::vector<double> W2_to_ref;
  std::vector<double> step_w2;    // W2(mu_k, mu_{k+1})
  std::vector<double> mass;
  std::vector<double> mean;
  std::vector<double> variance;
};

namespace detail {

// H_m(X | nu) + (1/2 delta) (1/J) sum (X_j - Xk_j)^2 in quantile coordinates,
// with analytic gradient. Matches h_m_quantile exactly.
struct JkoObjective {
  const MParam& p;
  const ReferencePotential& ref;
  const Domain1D& d;
  const std::vector<double>& Xk;
  double delta;
  double sigma_m_term;  // (1/m) int sigma^m domega, X-independent

  double dpsi_mid(double u) const { return dpsi_at(d, u); }

  // Same objective with the (tridiagonal) Hessian. The cross-term curvature
  // Psi'' vanishes almost everywhere for the piecewise-linear interpolant and
  // is omitted; the W2 term keeps the matrix positive definite for small
  // delta, and the line search guards the rest.
  double value_grad_hess(const std::vector<double>& X,
                         std::vector<double>& grad,
                         std::vector<double>& h_lower,
                         std::vector<double>& h_diag,
                         std::vector<double>& h_upper) const {
    const double m = p.m;
    const int J = static_cast<int>(X.size());
    const double cm = 1.0 / (m * (m - 1.0));
    grad.assign(J, 0.0);
    h_lower.assign(J, 0.0);
    h_diag.assign(J, 1.0 / (delta * J));  // W2 term
    h_upper.assign(J, 0.0);
    double internal = 0.0;
    for (int g = 0; g < J - 1; ++g) {
      const double gap = X[g + 1] - X[g];
      const double mid = 0.5 * (X[g] + X[g + 1]);
      const double wpsi = std::exp(-psi_at(d, mid));
      const double wmass = (g == 0 || g == J - 2) ? 1.5 / J : 1.0 / J;
      const double term = cm * wmass * std::pow(J * gap * wpsi, 1.0 - m);
      internal += term;
      const double dpsi = dpsi_mid(mid);
      const double f_gap = term * (1.0 - m) / gap;
      const double f_mid = term * (1.0 - m) * (-dpsi);
      grad[g] += -f_gap + 0.5 * f_mid;
      grad[g + 1] += f_gap + 0.5 * f_mid;
      const double f_gg = -m * (1.0 - m) * term / (gap * gap);
      const double f_gm = (1.0 - m) * f_mid / gap;
      const double f_mm = (1.0 - m) * (1.0 - m) * term * dpsi * dpsi;
      h_diag[g] += f_gg - f_gm + 0.25 * f_mm;
      h_diag[g + 1] += f_gg + f_gm + 0.25 * f_mm;
      const double off = -f_gg + 0.25 * f_mm;
      h_upper[g] += off;
      h_lower[g + 1] += off;
    }
    double cross = 0.0;
    for (int j = 0; j < J; ++j) {
      const double s = ref.sigma_pow_m1_at(d, p, X[j]);
      cross += s;
      if (s > 0.0 || m < 1.0) grad[j] += ref.dPsi_at(d, X[j]) / J;
    }
    cross *= -1.0 / ((m - 1.0) * J);
    double w2term = 0.0;
    for (int j = 0; j < J; ++j) {
      const double dd = X[j] - Xk[j];
      w2term += dd * dd;
      grad[j] += dd / (delta * J);
    }
    w2term /= 2.0 * delta * J;
    return internal + cross + sigma_m_term + w2term;
  }
};

// Thomas solve; for circles the periodic corner terms are folded in via
// Sherman-Morrison.
inline std::vector<double> solve_tridiag(std::vector<double> lower,
                                         std::vector<double> diag,
                                         std::vector<double> upper,
                                         std::vector<double> rhs,
                                         double corner_lo = 0.0,
                                         double corner_hi = 0.0) {
  const int n = static_cast<int>(diag.size());
  auto thomas = [&](std::vector<double> dl, std::vector<double> dd,
                    std::vector<double> du, std::vector<double> b) {
    for (int i = 1; i < n; ++i) {
      const double w = dl[i] / dd[i - 1];
      dd[i] -= w * du[i - 1];
      b[i] -= w * b[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = b[n - 1] / dd[n - 1];
    for (int i = n - 2; i >= 0; --i)
      x[i] = (b[i] - du[i] * x[i + 1]) / dd[i];
    return x;
  };
  if (corner_lo == 0.0 && corner_hi == 0.0)
    return thomas(lower, diag, upper, rhs);
  // periodic: A = T + u v^T with u = (gamma,0,..,corner_lo/gamma*... )
  const double gamma = -diag[0];
  std::vector<double> dmod = diag;
  dmod[0] -= gamma;
  dmod[n - 1] -= corner_lo * corner_hi / gamma;
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = corner_lo;
  std::vector<double> v(n, 0.0);
  v[0] = 1.0;
  v[n - 1] = corner_hi / gamma;
  auto y = thomas(lower, dmod, upper, rhs);
  auto z = thomas(lower, dmod, upper, u);
  double vy = 0.0, vz = 0.0;
  for (int i = 0; i < n; ++i) {
    vy += v[i] * y[i];
    vz += v[i] * z[i];
  }
  const double fac = vy / (1.0 + vz);
  for (int i = 0; i < n; ++i) y[i] -= fac * z[i];
  return y;
}


}  // namespace detail

// One minimizing-movement step: argmin_X H_m(X|nu) + W2(X, Xk)^2 / (2 delta),
// solved by damped Newton iterations on the tridiagonal Hessian with a
// fraction-to-boundary rule preserving strict monotonicity.
inline QuantileRep jko_step(const QuantileRep& mu_k,
                            const ReferencePotential& ref, const MParam& p,
                            const Domain1D& d, const JkoConfig& cfg) {
  const int J = mu_k.J();
  double sig_m = 0.0;
  for (int i = 0; i < d.size; ++i)
    sig_m += std::pow(ref.sigma[i], p.m) * d.weight(i) * d.h;
  detail::JkoObjective obj{p, ref, d, mu_k.X, cfg.delta, sig_m / p.m};

  std::vector<double> X = mu_k.X;
  // For m > 1 the admissible region M0 = {sigma > 0} is a bounded interval
  // and the theory restricts measures to its closure; without this constraint
  // the discrete functional is unbounded below as tail quantiles escape the
  // support (no restoring force outside). Project and constrain the iterate.
  double x_lo = -kInf, x_hi = kInf;
  if (p.m > 1.0 && d.kind == DomainKind::segment) {
    int i0 = -1, i1 = -1;
    for (int i = 0; i < d.size; ++i)
      if (ref.m0_mask[i]) {
        if (i0 < 0) i0 = i;
        i1 = i;
      }
    x_lo = d.x[i0] - 0.5 * d.h;
    x_hi = d.x[i1] + 0.5 * d.h;
    if (X.front() < x_lo - d.h || X.back() > x_hi + d.h)
      throw std::invalid_argument(
          "jko_step: initial data not supported in the closure of the "
          "admissible region (m > 1)");
    // nudge grid-scale overshoots inside, preserving strict monotonicity
    const double tiny = 0.25 * d.h / J;
    for (int j = J - 1; j >= 0; --j) {
      X[j] = std::max(X[j], x_lo + (j + 1) * tiny);
      X[j] = std::min(X[j], x_hi - (J - j) * tiny);
    }
    for (int j = 1; j < J; ++j)
      if (X[j] <= X[j - 1]) X[j] = X[j - 1] + tiny;
  }
  std::vector<double> g, hl, hd, hu, step(J), X_new(J), g_new;
  double f = obj.value_grad_hess(X, g, hl, hd, hu);
  const double f0 = f;
  bool converged = false;
  double gmax = 0.0;
  int stagnant = 0;
  double x_scale = 1.0;
  for (double v : X) x_scale = std::max(x_scale, std::abs(v));
  for (int it = 0; it < cfg.max_inner_iters; ++it) {
    gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax < cfg.inner_tol) {
      converged = true;
      break;
    }
    // Levenberg-damped tridiagonal Newton direction
    double lam = 0.0;
    bool have_dir = false;
    for (int attempt = 0; attempt < 12 && !have_dir; ++attempt) {
      std::vector<double> dd = hd;
      if (lam > 0.0)
        for (auto& v : dd) v += lam;
      std::vector<double> rhs(J);
      for (int j = 0; j < J; ++j) rhs[j] = -g[j];
      step = detail::solve_tridiag(hl, dd, hu, rhs);
      double gd = 0.0;
      bool finite = true;
      for (int j = 0; j < J; ++j) {
        if (!std::isfinite(step[j])) finite = false;
        gd += g[j] * step[j];
      }
      if (finite && gd < 0.0) {
        have_dir = true;
      } else {
        lam = lam == 0.0 ? 1.0 / (cfg.delta * J) : 10.0 * lam;
      }
    }
    if (!have_dir)
      for (int j = 0; j < J; ++j) step[j] = -g[j];
    // fraction-to-boundary: keep every gap at least 10% of its current size
    // and stay strictly inside the admissible box
    double t_max = 1.0;
    for (int j = 0; j + 1 < J; ++j) {
      const double dgap = step[j + 1] - step[j];
      const double gap = X[j + 1] - X[j];
      if (dgap < 0.0) t_max = std::min(t_max, -0.9 * gap / dgap);
    }
    if (std::isfinite(x_lo)) {
      for (int j = 0; j < J; ++j) {
        if (step[j] < 0.0)
          t_max = std::min(t_max, 0.9 * (X[j] - x_lo) / (-step[j]));
        else if (step[j] > 0.0)
          t_max = std::min(t_max, 0.9 * (x_hi - X[j]) / step[j]);
      }
    }
    if (!(t_max > 0.0)) {  // pinned against the admissible box
      converged = true;
      break;
    }
    double gd = 0.0;
    for (int j = 0; j < J; ++j) gd += g[j] * step[j];
    double t = t_max;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 50; ++ls) {
      for (int j = 0; j < J; ++j) X_new[j] = X[j] + t * step[j];
      bool ok = true;
      for (int j = 0; j + 1 < J; ++j)
        if (!(X_new[j + 1] > X_new[j])) ok = false;
      if (ok) {
        try {
          f_new = obj.value_grad_hess(X_new, g_new, hl, hd, hu);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (ok && std::isfinite(f_new) && f_new <= f + 1e-4 * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // 50 halvings exhausted: pinned at machine precision. The piecewise
      // linear interpolation of Psi makes the objective piecewise smooth, so
      // the minimizer may sit at a kink where the one-sided gradient stays
      // O(K h / J); accept the point as critical.
      converged = true;
      break;
    }
    // negligible progress or negligible motion: critical up to kink scale
    double move = 0.0;
    for (int j = 0; j < J; ++j) move = std::max(move, std::abs(t * step[j]));
    if (f - f_new <= 4e-16 * (1.0 + std::abs(f)) || move <= 1e-13 * x_scale)
      ++stagnant;
    else
      stagnant = 0;
    X.swap(X_new);
    g.swap(g_new);
    f = f_new;
    if (stagnant >= 3) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // final gradient check: the loop may exit at max_inner_iters converged
    gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax >= cfg.inner_tol) {
      std::ostringstream os;
      os << "jko_step: no convergence after " << cfg.max_inner_iters
         << " iterations, |grad|_inf = " << gmax;
      throw std::runtime_error(os.str());
    }
  }
  if (f > f0 + 1e-12 * (1.0 + std::abs(f0)))
    return mu_k;  // descent contract: never accept an ascent
  return QuantileRep{std::move(X)};
}

inline QuantileRep reference_quantile(const ReferencePotential& ref,
                                      const Domain1D& d, int J) {
  std::vector<double> rho = ref.sigma;
  return to_quantile(GridMeasure::normalized(d, std::move(rho)), d, J);
}

// Repeated JKO stepping with trace recording and invariant enforcement.
inline FlowTrace jko_trajectory(const QuantileRep& mu0,
                                const ReferencePotential& ref, const MParam& p,
                                const Domain1D& d, const JkoConfig& cfg,
                                double T, int record_every = 1) {
  FlowTrace tr;
  const auto q_ref = reference_quantile(ref, d, mu0.J());
  QuantileRep q = mu0;
  const int steps = static_cast<int>(std::ceil(T / cfg.delta));
  auto record = [&](double t, const QuantileRep& cur) {
    tr.times.push_back(t);
    GridMeasure gm = to_density(cur, d);
    tr.H.push_back(h_m_quantile(p, cur, ref, d));
    tr.I.push_back(fisher_i_m(p, gm, ref, d));
    tr.W2_to_ref.push_back(w2(cur, q_ref));
    tr.mass.push_back(gm.total_mass);
    tr.mean.push_back(cur.mean());
    tr.variance.push_back(cur.variance());
    tr.measures.push_back(std::move(gm));
  };
  record(0.0, q);
  for (int k = 1; k <= steps; ++k) {
    QuantileRep next = jko_step(q, ref, p, d, cfg);
    const double dW = w2(q, next);
    q = std::move(next);
    if (k % record_every == 0 || k == steps) {
      tr.step_w2.push_back(dW);
      record(k * cfg.delta, q);
      const size_t n = tr.H.size();
      if (tr.H[n - 1] > tr.H[n - 2] + 1e-10 * (1.0 + std::abs(tr.H[n - 2])))
        throw std::runtime_error("jko_trajectory: energy descent violated");
      if (std::abs(tr.mass.back() - 1.0) > 1e-8)
        throw std::runtime_error("jko_trajectory: mass drift");
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Finite-volume PDE solver for d rho/dt = (1/m) Lap_omega(rho^m) +
// div_omega(rho grad Psi). Fluxes use the gradient form
//   J_{i+1/2} = -e^{-psi} rho_up d/dx[(rho^{m-1} - sigma^{m-1})/(m-1)]
// which vanishes identically at rho = sigma (well-balanced) and upwinds the
// mobility for nonnegativity.
// ---------------------------------------------------------------------------

enum class PdeMode { explicit_euler, semi_implicit };

namespace detail {

inline std::vector<double> potential_phi(const MParam& p,
                                         const std::vector<double>& rho,
                                         const ReferencePotential& ref) {
  const double m = p.m;
  std::vector<double> phi(rho.size());
  for (size_t i = 0; i < rho.size(); ++i) {
    const double rp = rho[i] > 0.0 ? std::pow(rho[i], m - 1.0)
                                   : (m > 1.0 ? 0.0 : kInf);
    const double sp = std::pow(ref.sigma[i], m - 1.0);
    phi[i] = (rp - sp) / (m - 1.0);
  }
  return phi;
}


}  // namespace detail

// Suggested stable explicit step for the current state.
inline double pde_stable_dt(const MParam& p, const GridMeasure& mu,
                            const ReferencePotential& ref, const Domain1D& d,
                            double c_stab = 0.2) {
  double dmax = 0.0, vmax = 0.0;
  for (int i = 0; i < d.size; ++i) {
    if (mu.rho[i] > 1e-10)
      dmax = std::max(dmax, std::pow(mu.rho[i], p.m - 1.0));
    vmax = std::max(vmax, std::abs(ref.dPsi_at(d, d.x[i])));
  }
  double dt = kInf;
  if (dmax > 0.0) dt = std::min(dt, c_stab * d.h * d.h / dmax);
  if (vmax > 0.0) dt = std::min(dt, 0.5 * d.h / vmax);
  return dt;
}

inline GridMeasure pde_step(const GridMeasure& mu, const ReferencePotential& ref,
                            const MParam& p, const Domain1D& d, double dt,
                            PdeMode mode = PdeMode::semi_implicit) {
  const int M = d.size;
  const double m = p.m;
  const bool periodic = d.kind == DomainKind::circle;
  const auto& rho = mu.rho;
  const auto phi = detail::potential_phi(p, rho, ref);

  const int n_if = periodic ? M : M - 1;  // interface k sits between k, k+1
  auto wgt_if = [&](int k) {
    const int r = periodic ? d.wrap(k + 1) : k + 1;
    return 0.5 * (d.weight(k) + d.weight(r));
  };

  std::vector<double> cell_mass(M);
  for (int i = 0; i < M; ++i) cell_mass[i] = mu.cell_mass(d, i);

  if (mode == PdeMode::explicit_euler) {
    const double dt_ok = pde_stable_dt(p, mu, ref, d);
    if (dt > dt_ok) {
      std::ostringstream os;
      os << "pde_step: explicit step " << dt << " unstable; suggested dt <= "
         << dt_ok;
      throw std::invalid_argument(os.str());
    }
    std::vector<double> flux(n_if, 0.0);
    for (int k = 0; k < n_if; ++k) {
      const int r = periodic ? d.wrap(k + 1) : k + 1;
      if (rho[k] <= 0.0 && rho[r] <= 0.0) continue;
      double dphi = phi[r] - phi[k];
      if (!std::isfinite(dphi)) {
        // fast-diffusion vacuum interface: no mass to move
        if (rho[k] <= 0.0 || rho[r] <= 0.0) continue;
      }
      const double up = dphi <= 0.0 ? rho[k] : rho[r];  // donor cell
      flux[k] = -wgt_if(k) * up * dphi / d.h;
    }
    for (int k = 0; k < n_if; ++k) {
      const int r = periodic ? d.wrap(k + 1) : k + 1;
      cell_mass[k] -= dt * flux[k];
      cell_mass[r] += dt * flux[k];
    }
  } else {
    // semi-implicit: phi linearized around the current state, mobility and
    // the Jacobian dphi/drho frozen; final update through the solved fluxes
    // so mass telescopes exactly.
    std::vector<double> c(M);  // dphi/drho = rho^{m-2}
    for (int i = 0; i < M; ++i) {
      // floor only to keep pow finite; for m < 1 the true Jacobian blows up
      // near vacuum and must be kept, or the tail modes go unstable
      const double re = std::max(rho[i], 1e-250);
      c[i] = std::pow(re, m - 2.0);
    }
    std::vector<double> Dif(n_if, 0.0), dphi0(n_if, 0.0);
    for (int k = 0; k < n_if; ++k) {
      const int r = periodic ? d.wrap(k + 1) : k + 1;
      const double rint = 0.5 * (rho[k] + rho[r]);
      Dif[k] = dt * wgt_if(k) * rint / d.h;
      double dp = phi[r] - phi[k];
      if (!std::isfinite(dp)) dp = 0.0;
      dphi0[k] = dp;
    }
    std::vector<double> lower(M, 0.0), diag(M, 0.0), upper(M, 0.0), rhs(M, 0.0);
    double corner_lo = 0.0, corner_hi = 0.0;
    for (int i = 0; i < M; ++i) {
      const double DL = (i == 0) ? (periodic ? Dif[M - 1] : 0.0) : Dif[i - 1];
      const double DR = (i == M - 1) ? (periodic ? Dif[M - 1] : 0.0)
                                     : (periodic || i < M - 1 ? Dif[i] : 0.0);
      diag[i] = d.weight(i) * d.h + (DL + DR) * c[i];
      if (i > 0) lower[i] = -DL * c[i - 1];
      if (i < M - 1) upper[i] = -DR * c[i + 1];
      const double dphiL = (i == 0) ? (periodic ? dphi0[M - 1] : 0.0)
                                    : dphi0[i - 1];
      const double dphiR = (i == M - 1) ? (periodic ? dphi0[M - 1] : 0.0)
                                        : dphi0[i];
      rhs[i] = DR * dphiR - DL * dphiL;
    }
    if (periodic) {
      corner_lo = -Dif[M - 1] * c[M - 1];  // A[0][M-1]
      corner_hi = -Dif[M - 1] * c[0];      // A[M-1][0]
    }
    const auto drho =
        detail::solve_tridiag(lower, diag, upper, rhs, corner_lo, corner_hi);
    for (int k = 0; k < n_if; ++k) {
      const int r = periodic ? d.wrap(k + 1) : k + 1;
      const double dphi_new = dphi0[k] + c[r] * drho[r] - c[k] * drho[k];
      const double fl = -(Dif[k] / dt) * dphi_new;  // w rint dphi / h
      cell_mass[k] -= dt * fl;
      cell_mass[r] += dt * fl;
    }
  }

  // conservative nonnegativity repair: clamp tiny negatives, rescale the rest
  double neg = 0.0, pos = 0.0;
  for (double& cm : cell_mass) {
    if (cm < 0.0) {
      neg -= cm;
      cm = 0.0;
    } else {
      pos += cm;
    }
  }
  if (neg > 0.0 && pos > 0.0) {
    const double scale = (pos - neg) / pos;
    for (double& cm : cell_mass) cm *= scale;
  }

  GridMeasure out;
  out.rho.resize(M);
  double total = 0.0;
  for (int i = 0; i < M; ++i) {
    out.rho[i] = cell_mass[i] / (d.weight(i) * d.h);
    total += cell_mass[i];
  }
  out.atoms = mu.atoms;
  out.total_mass = total + mu.atom_mass();
  return out;
}

inline FlowTrace pde_run(const GridMeasure& mu0, const ReferencePotential& ref,
                         const MParam& p, const Domain1D& d, double dt,
                         double T, PdeMode mode = PdeMode::semi_implicit,
                         int record_every = 1) {
  FlowTrace tr;
  const auto q_ref = reference_quantile(ref, d, 256);
  GridMeasure mu = mu0;
  const int steps = static_cast<int>(std::ceil(T / dt));
  auto record = [&](double t, const GridMeasure& cur) {
    tr.times.push_back(t);
    tr.H.push_back(h_m(p, cur, ref, d).value);
    tr.I.push_back(fisher_i_m(p, cur, ref, d));
    tr.W2_to_ref.push_back(w2(to_quantile(cur, d, 256), q_ref));
    tr.mass.push_back(cur.total_mass);
    tr.mean.push_back(cur.mean(d));
    tr.variance.push_back(cur.variance(d));
    tr.measures.push_back(cur);
  };
  record(0.0, mu);
  for (int k = 1; k <= steps; ++k) {
    mu = pde_step(mu, ref, p, d, dt, mode);
    if (k % record_every == 0 || k == steps) record(k * dt, mu);
  }
  return tr;
}

// ---------------------------------------------------------------------------

// Absolute residual of the weak formulation
//   int phi_t1 dmu_t1 - int phi_t0 dmu_t0
//   = int int { d_t phi + (1/m) rho^{m-1} Lap_omega phi
//               + 1/(m-1) <d_x phi, d_x sigma^{m-1}> } dmu_t dt
// evaluated on a recorded trace with a smooth test function phi(t,x).
inline double weak_residual(const FlowTrace& tr, const ReferencePotential& ref,
                            const MParam& p, const Domain1D& d,
                            const Expr& phi) {
  if (tr.measures.size() < 2)
    throw std::invalid_argument("weak_residual: trace too short");
  const double m = p.m;
  const int M = d.size;
  // grid derivative of sigma^{m-1}
  std::vector<double> spow(M), dspow(M);
  for (int i = 0; i < M; ++i)
    spow[i] = (m > 1.0 && !ref.m0_mask[i]) ? 0.0
                                           : std::pow(ref.sigma[i], m - 1.0);
  for (int i = 0; i < M; ++i) dspow[i] = d.deriv1(spow, i);

  const double eps_t = 1e-5;
  auto integrand = [&](size_t k) {
    const double t = tr.times[k];
    const auto& mu = tr.measures[k];
    double s = 0.0;
    for (int i = 0; i < M; ++i) {
      const double r = mu.rho[i];
      if (r <= 0.0) continue;
      const double x = d.x[i];
      const double hphi = d.h;  // spatial FD step tied to the grid
      const double phx =
          (phi(x + hphi, t) - phi(x - hphi, t)) / (2.0 * hphi);
      const double phxx =
          (phi(x + hphi, t) - 2.0 * phi(x, t) + phi(x - hphi, t)) /
          (hphi * hphi);
      const double pht = (phi(x, t + eps_t) - phi(x, t - eps_t)) / (2.0 * eps_t);
      const double lap_w = phxx - phx * d.deriv1(d.psi, i);
      const double val = pht + std::pow(r, m - 1.0) * lap_w / m +
                         phx * dspow[i] / (m - 1.0);
      s += val * r * d.weight(i) * d.h;
    }
    return s;
  };
  auto moment = [&](size_t k) {
    const auto& mu = tr.measures[k];
    double s = 0.0;
    for (int i = 0; i < M; ++i)
      s += phi(d.x[i], tr.times[k]) * mu.rho[i] * d.weight(i) * d.h;
    for (const auto& a : mu.atoms) s += phi(a.x, tr.times[k]) * a.mass;
    return s;
  };
  const double lhs = moment(tr.measures.size() - 1) - moment(0);
  double rhs = 0.0;
  for (size_t k = 0; k + 1 < tr.measures.size(); ++k) {
    const double dt = tr.times[k + 1] - tr.times[k];
    rhs += 0.5 * dt * (integrand(k) + integrand(k + 1));
  }
  return std::abs(lhs - rhs);
}

struct ContractionReport {
  bool applicable = false;
  std::vector<double> times;
  std::vector<double> w2_measured;
  std::vector<double> w2_bound;  // e^{-(K - eps) t} W2(0)
  double measured_rate = 0.0;    // least-squares slope of log W2(t)
  bool holds = false;
};

// W2 between two JKO trajectories against the e^{-Kt} contraction bound.
inline ContractionReport contraction_check(const QuantileRep& mu0_a,
                                           const QuantileRep& mu0_b,
                                           const ReferencePotential& ref,
                                           const MParam& p, const Domain1D& d,
                                           const JkoConfig& cfg, double T) {
  ContractionReport rep;
  for (int i = 0; i < d.size; ++i)
    if (std::abs(d.psi[i]) > 1e-12) return rep;  // requires psi == 0
  rep.applicable = true;
  const double K = ref.K_hat;
  const double eps_tol = 0.05 * std::abs(K) + 2.0 * cfg.delta;

  QuantileRep qa = mu0_a, qb = mu0_b;
  const double w0 = w2(qa, qb);
  const int steps = static_cast<int>(std::ceil(T / cfg.delta));
  rep.times.push_back(0.0);
  rep.w2_measured.push_back(w0);
  rep.w2_bound.push_back(w0);
  rep.holds = true;
  const int stride = std::max(1, steps / 200);
  for (int k = 1; k <= steps; ++k) {
    qa = jko_step(qa, ref, p, d, cfg);
    qb = jko_step(qb, ref, p, d, cfg);
    if (k % stride != 0 && k != steps) continue;
    const double t = k * cfg.delta;
    const double wt = w2(qa, qb);
    const double bound = std::exp(-(K - eps_tol) * t) * w0;
    rep.times.push_back(t);
    rep.w2_measured.push_back(wt);
    rep.w2_bound.push_back(bound);
    if (wt > bound + 1e-12) rep.holds = false;
  }
  // least-squares decay rate of log W2
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  int n = 0;
  for (size_t i = 0; i < rep.times.size(); ++i) {
    if (rep.w2_measured[i] <= 1e-14) continue;
    const double t = rep.times[i], l = std::log(rep.w2_measured[i]);
    st += t;
    sl += l;
    stt += t * t;
    stl += t * l;
    ++n;
  }
  if (n >= 2 && stt * n - st * st > 0.0)
    rep.measured_rate = -(n * stl - st * sl) / (n * stt - st * st);
  return rep;
}

struct SlopeIdentityReport {
  double sqrt_fisher = 0.0;
  double metric_slope = 0.0;
  double rel_gap = 0.0;
  bool holds = false;
};

// sqrt(I_m) against the metric-slope estimate sup_delta (H - H^delta)/W2.
inline SlopeIdentityReport slope_identity_check(const GridMeasure& mu,
                                                const ReferencePotential& ref,
                                                const MParam& p,
                                                const Domain1D& d,
                                                const JkoConfig& cfg,
                                                int J = 512,
                                                double rel_tol = 0.05) {
  SlopeIdentityReport rep;
  rep.sqrt_fisher = std::sqrt(fisher_i_m(p, mu, ref, d));
  const auto q0 = to_quantile(mu, d, J);
  const double H0 = h_m_quantile(p, q0, ref, d);
  double slope = 0.0;
  for (double delta : {cfg.delta, 0.5 * cfg.delta, 0.25 * cfg.delta}) {
    JkoConfig c = cfg;
    c.delta = delta;
    const auto q1 = jko_step(q0, ref, p, d, c);
    const double dist = w2(q0, q1);
    if (dist < 1e-14) continue;
    slope = std::max(slope, (H0 - h_m_quantile(p, q1, ref, d)) / dist);
  }
  rep.metric_slope = slope;
  const double scale = std::max({rep.sqrt_fisher, rep.metric_slope, 1e-9});
  rep.rel_gap = std::abs(rep.sqrt_fisher - rep.metric_slope) / scale;
  const double abs_floor = 10.0 * d.h;
  rep.holds = rep.rel_gap <= rel_tol ||
              std::abs(rep.sqrt_fisher - rep.metric_slope) <= abs_floor;
  return rep;
}

struct ClosureReport {
  bool applicable = true;
  std::vector<double> times;
  std::vector<double> residual_l1;  // L1 gap to the fitted m-Gaussian
  std::vector<double> fitted_mean;
  std::vector<double> fitted_variance;
  double max_residual = 0.0;
  bool holds = false;
};

// PDE evolution started from an m-Gaussian stays m-Gaussian: fit by moment
// matching at each recorded time and measure the L1 residual.
inline ClosureReport m_gaussian_closure_check(double v0, double V0,
                                              const ReferencePotential& ref,
                                              const MParam& p,
                                              const Domain1D& d, double dt,
                                              double T,
                                              double threshold = 5e-2) {
  ClosureReport rep;
  const auto init = m_gaussian(p, v0, V0, d);
  const auto tr = pde_run(init.measure, ref, p, d, dt, T,
                          PdeMode::semi_implicit,
                          std::max(1, static_cast<int>(T / dt) / 50));
  rep.holds = true;
  for (size_t k = 0; k < tr.measures.size(); ++k) {
    const auto& mu = tr.measures[k];
    const double mean = mu.mean(d);
    const double var = mu.variance(d);
    double res = kInf;
    try {
      const auto fit = m_gaussian(p, mean, var, d);
      res = 0.0;
      for (int i = 0; i < d.size; ++i)
        res += std::abs(mu.rho[i] - fit.measure.rho[i]) * d.weight(i) * d.h;
    } catch (const std::exception&) {
      rep.holds = false;  // fit failure; raw moments still reported
    }
    rep.times.push_back(tr.times[k]);
    rep.residual_l1.push_back(res);
    rep.fitted_mean.push_back(mean);
    rep.fitted_variance.push_back(var);
    if (std::isfinite(res)) rep.max_residual = std::max(rep.max_residual, res);
    if (!(res <= threshold)) rep.holds = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Self-similar benchmark solution of d rho/dt = (1/m) Lap(rho^m) on the line
// (m > 1, psi = 0, Psi = const). The standard source solution
//   B(x,t) = t^{-alpha} (C - kappa x^2 / t^{2 alpha})_+^{1/(m-1)},
//   alpha = 1/(m+1), kappa = (m-1) alpha / (2m),
// solves d u/dt = Lap(u^m); the 1/m factor is absorbed by the time rescale
// t -> t/m. C is fixed by unit mass.
// ---------------------------------------------------------------------------

inline double barenblatt_constant(const MParam& p) {
  if (!(p.m > 1.0))
    throw std::invalid_argument("barenblatt_constant: requires m > 1");
  const double m = p.m;
  const double alpha = 1.0 / (m + 1.0);
  const double kappa = (m - 1.0) * alpha / (2.0 * m);
  auto mass_of = [&](double C) {
    // int (C - kappa y^2)_+^{1/(m-1)} dy by midpoint quadrature
    const double ye = std::sqrt(C / kappa);
    const int n = 20000;
    const double dy = 2.0 * ye / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = -ye + (i + 0.5) * dy;
      s += std::pow(std::max(0.0, C - kappa * y * y), 1.0 / (m - 1.0)) * dy;
    }
    return s;
  };
  double lo = 1e-8, hi = 1.0;
  while (mass_of(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass_of(mid) < 1.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double barenblatt_density(const MParam& p, double C, double x,
                                 double t) {
  const double m = p.m;
  const double alpha = 1.0 / (m + 1.0);
  const double kappa = (m - 1.0) * alpha / (2.0 * m);
  const double tau = t / m;  // time rescale for the 1/m diffusion factor
  if (!(tau > 0.0))
    throw std::invalid_argument("barenblatt_density: need t > 0");
  const double ta = std::pow(tau, alpha);
  const double arg = C - kappa * (x / ta) * (x / ta);
  return arg > 0.0 ? std::pow(arg, 1.0 / (m - 1.0)) / ta : 0.0;
}

inline std::string trace_to_csv(const FlowTrace& tr) {
  std::ostringstream os;
  os.precision(17);
  os << "k,t,H_m,I_m,W2_to_ref,mass,mean,variance\n";
  for (size_t k = 0; k < tr.times.size(); ++k)
    os << k << "," << tr.times[k] << "," << tr.H[k] << "," << tr.I[k] << ","
       << tr.W2_to_ref[k] << "," << tr.mass[k] << "," << tr.mean[k] << ","
       << tr.variance[k] << "\n";
  return os.str();
}

}  // namespace wassflow
