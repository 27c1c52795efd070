// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion is self-contained and states its tolerance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "wassflow/inequalities.hpp"
#include "wassflow/flow.hpp"

using namespace wassflow;

namespace {

int g_failures = 0;

void report(int id, bool pass, const char* what, double seconds) {
  std::printf("ACCEPTANCE %2d: %s — %s (%.1f s)\n", id,
              pass ? "PASS" : "FAIL", what, seconds);
  if (!pass) ++g_failures;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

struct Setup {
  MParam p;
  Domain1D d;
  MGaussian ref;
};

Setup make_setup(double m, double R, int M, double V = 0.5) {
  MParam p = MParam::make(m);
  Domain1D d = Domain1D::make(DomainKind::segment, -R, R, M);
  MGaussian g = m_gaussian(p, 0.0, V, d);
  return Setup{p, std::move(d), std::move(g)};
}

Setup make_setup(double m) {
  return make_setup(m, m < 1.0 ? 40.0 : 6.0, 512);
}

// smooth positive perturbation of the reference density, supported exactly
// on the reference support so all functionals stay finite in both m-ranges
GridMeasure random_perturbed(const Setup& s, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int nb = 1 + static_cast<int>(3.0 * U(rng));
  std::vector<double> amp(nb), ctr(nb), wid(nb);
  for (int b = 0; b < nb; ++b) {
    amp[b] = 0.2 + 1.5 * U(rng);
    ctr[b] = -1.0 + 2.0 * U(rng);
    wid[b] = 0.3 + 0.7 * U(rng);
  }
  std::vector<double> rho(s.d.size);
  for (int i = 0; i < s.d.size; ++i) {
    double f = 0.2;
    for (int b = 0; b < nb; ++b) {
      const double z = (s.d.x[i] - ctr[b]) / wid[b];
      f += amp[b] * std::exp(-0.5 * z * z);
    }
    rho[i] = f * s.ref.reference.sigma[i];
  }
  return GridMeasure::normalized(s.d, std::move(rho));
}

// -------------------------------------------------------------------------
// 1. m-calculus: round-trip, monotonicity, convexity, classical limit, and
//    the full 50^3 grid of the two-sided exp_m comparison lemma.
// -------------------------------------------------------------------------
void criterion_1() {
  Timer tm;
  bool pass = true;
  for (double m : {0.6, 0.75, 1.5, 2.0}) {
    const MParam p = MParam::make(m);
    double prev_ln = -kInf;
    for (int k = 0; k < 400; ++k) {
      const double t = 1e-3 + 0.05 * k;
      const double l = ln_m(p, t);
      pass = pass && std::abs(exp_m(p, l) - t) <= 1e-10 * (1.0 + t);
      pass = pass && l > prev_ln;  // strict monotonicity
      prev_ln = l;
    }
    // convexity of e_m: second differences on a positive grid
    const double h = 0.01;
    for (int k = 1; k < 300; ++k) {
      const double t = 0.05 + k * h;
      const double d2 =
          e_m(p, t + h) - 2.0 * e_m(p, t) + e_m(p, t - h);
      pass = pass && d2 >= -1e-12;
    }
  }
  for (double t : {0.1, 0.5, 1.0, 2.0, 10.0})
    pass = pass && limit_check_m_to_1(t, 1e-4).max_deviation() <
                       50.0 * 1e-4 * (1.0 + t);
  // 50^3 lemma grid: 50 m-values split across both ranges, 50 log-spaced
  // values each for a and r
  for (int im = 0; im < 50; ++im) {
    const double m = im < 25 ? 0.51 + 0.48 * im / 24.0
                             : 1.01 + 0.97 * (im - 25) / 24.0;
    const MParam p = MParam::make(m);
    for (int ia = 0; ia < 50; ++ia) {
      const double a = std::pow(10.0, -2.0 + 4.0 * ia / 49.0);
      for (int ir = 0; ir < 50; ++ir) {
        const double r = std::pow(10.0, -2.0 + 4.0 * ir / 49.0);
        if (!conc_lemma_bounds(p, a, r).holds) pass = false;
      }
    }
  }
  pass = pass && tm.elapsed() < 10.0;
  report(1, pass, "m-calculus round-trip/monotone/convex/limit + 50^3 lemma "
                  "grid, < 10 s", tm.elapsed());
}

// -------------------------------------------------------------------------
// 2. quantile W2 against the LP oracle on 200 random small instances
// -------------------------------------------------------------------------
void criterion_2() {
  Timer tm;
  bool pass = true;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> NA(1, 8);
  for (int t = 0; t < 200; ++t) {
    const int na = NA(rng), nb = NA(rng);
    std::vector<double> xa(na), wa(na), xb(nb), wb(nb);
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < na; ++i) {
      xa[i] = -5.0 + 10.0 * U(rng);
      wa[i] = 0.1 + U(rng);
      sa += wa[i];
    }
    for (int i = 0; i < nb; ++i) {
      xb[i] = -5.0 + 10.0 * U(rng);
      wb[i] = 0.1 + U(rng);
      sb += wb[i];
    }
    for (auto& w : wa) w /= sa;
    for (auto& w : wb) w /= sb;
    const auto mu = DiscreteMeasure::make(xa, wa);
    const auto nu = DiscreteMeasure::make(xb, wb);
    const double lp = w2_lp_oracle(mu, nu);
    const double mono = std::sqrt(monotone_coupling(mu, nu).cost());
    if (std::abs(lp - mono) > 1e-6 * (1.0 + std::max(lp, mono))) pass = false;
  }
  pass = pass && tm.elapsed() < 30.0;
  report(2, pass, "monotone-coupling W2 vs LP oracle, 200 instances, "
                  "rel err <= 1e-6, < 30 s", tm.elapsed());
}

// -------------------------------------------------------------------------
// 3. entropy ground state, strict positivity, and closed-form values
// -------------------------------------------------------------------------
void criterion_3() {
  Timer tm;
  bool pass = true;
  for (double m : {0.6, 0.75, 1.5, 2.0}) {
    const MParam p = MParam::make(m);
    // exactly-normalized uniform reference: ground state is exactly zero
    const auto d = Domain1D::make(DomainKind::segment, 0.0, 2.0, 512);
    const double s0 = 0.5;
    const auto ref = ReferencePotential::make(
        d, p, [&](double) { return -ln_m(p, s0); });
    std::vector<double> srho(d.size, s0);
    const auto nu_bar = GridMeasure::make(d, std::move(srho));
    if (!(std::abs(h_m(p, nu_bar, ref, d).value) <= 1e-9)) pass = false;
    std::mt19937 rng(static_cast<unsigned>(1000.0 * m));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> rho(d.size);
      const double c = 1.0 + U(rng), w = 0.2 + U(rng), a = 0.3 + 1.4 * U(rng);
      for (int i = 0; i < d.size; ++i) {
        const double z = (d.x[i] - a) / w;
        rho[i] = 1.0 + c * std::exp(-0.5 * z * z);
      }
      const auto mu = GridMeasure::normalized(d, std::move(rho));
      if (!(h_m(p, mu, ref, d).value > 0.0)) pass = false;
    }
  }
  // uniform[0,1] against uniform[0,2] closed forms at M = 2048
  {
    const auto d = Domain1D::make(DomainKind::segment, 0.0, 2.0, 2048);
    auto uniform_pair = [&](double m) {
      const MParam p = MParam::make(m);
      const auto ref = ReferencePotential::make(
          d, p, [&](double) { return -ln_m(p, 0.5); });
      std::vector<double> rho(d.size, 0.0);
      for (int i = 0; i < d.size; ++i)
        if (d.x[i] < 1.0) rho[i] = 1.0;
      const auto mu = GridMeasure::make(d, std::move(rho));
      return h_m(p, mu, ref, d).value;
    };
    if (std::abs(uniform_pair(2.0) - 0.25) > 1e-3) pass = false;
    if (std::abs(uniform_pair(0.5) - (4.0 * std::sqrt(2.0) - 4.0)) > 1e-3)
      pass = false;
  }
  report(3, pass, "entropy ground state <= 1e-9, H_m > 0 on 1000 "
                  "perturbations x 4 m-values, closed forms within 1e-3",
         tm.elapsed());
}

// -------------------------------------------------------------------------
// 4. displacement convexity: 100 geodesics pass at the estimated modulus,
//    the +0.5 sharpness probe fails >= 90%, double-well caught at K = 0
// -------------------------------------------------------------------------
void criterion_4() {
  Timer tm;
  bool pass = true;
  int probe_fail = 0, probe_total = 0;
  for (double m : {0.75, 1.5}) {
    const auto s = make_setup(m);
    const double K = k_modulus(s.ref.reference, s.d);
    std::mt19937 rng(m < 1.0 ? 61 : 67);
    std::uniform_real_distribution<double> U(0.4, 0.8);
    for (int t = 0; t < 50; ++t) {
      const auto q0 = to_quantile(random_perturbed(s, rng), s.d, 128);
      const auto q1 = to_quantile(random_perturbed(s, rng), s.d, 128);
      const auto prof =
          convexity_profile(q0, q1, s.ref.reference, s.p, s.d, K);
      if (!prof.pass) pass = false;
      // probe with a translate pair (no internal-energy surplus)
      std::vector<double> Xs = q0.X;
      const double a = U(rng);
      for (auto& v : Xs) v += a;
      const auto sharp = convexity_profile(
          q0, QuantileRep::make(std::move(Xs)), s.ref.reference, s.p, s.d,
          K + 0.5);
      ++probe_total;
      if (!sharp.pass) ++probe_fail;
    }
  }
  if (probe_fail * 10 < probe_total * 9) pass = false;
  {
    const MParam p = MParam::make(0.75);
    const auto d = Domain1D::make(DomainKind::segment, -3.0, 3.0, 512);
    const auto ref = ReferencePotential::make(d, p, [](double x) {
      const double u = x * x - 1.0;
      return 2.0 * u * u;
    });
    auto bump = [&](double c) {
      std::vector<double> rho(d.size);
      for (int i = 0; i < d.size; ++i) {
        const double z = (d.x[i] - c) / 0.15;
        rho[i] = std::exp(-0.5 * z * z);
      }
      return to_quantile(GridMeasure::normalized(d, std::move(rho)), d, 128);
    };
    const auto prof =
        convexity_profile(bump(-1.0), bump(1.0), ref, p, d, 0.0);
    if (prof.pass) pass = false;  // violation must be detected
  }
  pass = pass && tm.elapsed() < 120.0;
  report(4, pass, "100 geodesics pass at K = k_modulus, probe at K+0.5 fails "
                  ">= 90%, double-well caught, < 2 min", tm.elapsed());
}

// -------------------------------------------------------------------------
// 5. Talagrand / HWI / LSI / Poincare: 1000 randomized cases per suite
//    across m in {0.75, 1.5}, zero violations
// -------------------------------------------------------------------------
void criterion_5() {
  Timer tm;
  bool pass = true;
  for (double m : {0.75, 1.5}) {
    const auto s = make_setup(m);
    std::mt19937 rng(m < 1.0 ? 401 : 409);
    for (int t = 0; t < 500; ++t) {
      const auto mu = random_perturbed(s, rng);
      const auto ta = talagrand_check(mu, s.ref.reference, s.p, s.d);
      if (!ta.applicable || !ta.pass) pass = false;
      const auto hl = hwi_lsi_check(mu, s.ref.reference, s.p, s.d);
      if (!hl.hwi.applicable || !hl.hwi.pass) pass = false;
      if (!hl.lsi.applicable || !hl.lsi.pass) pass = false;
    }
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      const double c0 = U(rng), c1 = U(rng), c2 = U(rng), c3 = U(rng);
      std::vector<double> f(s.d.size);
      for (int i = 0; i < s.d.size; ++i) {
        const double x = s.d.x[i] / (m < 1.0 ? 10.0 : 1.0);
        f[i] = c0 + x * (c1 + x * (c2 + x * c3));
      }
      const auto po = poincare_check(std::move(f), s.ref.reference, s.p, s.d);
      if (!po.applicable || !po.pass) pass = false;
    }
  }
  report(5, pass, "Talagrand/HWI/LSI/Poincare randomized suites (1000 cases "
                  "each across m in {0.75, 1.5}), zero violations",
         tm.elapsed());
}

// -------------------------------------------------------------------------
// 6. JKO vs finite-volume PDE trajectories, plus the self-similar benchmark
// -------------------------------------------------------------------------
double equivalence_gap(double m, int M, double delta, double dt, int J) {
  const MParam p = MParam::make(m);
  const double R = m < 1.0 ? 40.0 : 6.0;
  const auto d = Domain1D::make(DomainKind::segment, -R, R, M);
  const auto g = m_gaussian(p, 0.0, 0.5, d);
  const auto mu0 = m_gaussian(p, 0.25, 0.2, d).measure;
  const double T = 0.3;
  JkoConfig cfg;
  cfg.delta = delta;
  const int everyJ = std::max(1, static_cast<int>(std::round(0.05 / delta)));
  const auto trj = jko_trajectory(to_quantile(mu0, d, J), g.reference, p, d,
                                  cfg, T, everyJ);
  const int everyP = std::max(1, static_cast<int>(std::round(0.05 / dt)));
  const auto trp = pde_run(mu0, g.reference, p, d, dt, T,
                           PdeMode::semi_implicit, everyP);
  double sup = 0.0;
  for (size_t k = 0; k < trj.times.size(); ++k) {
    size_t best = 0;
    for (size_t q = 0; q < trp.times.size(); ++q)
      if (std::abs(trp.times[q] - trj.times[k]) <
          std::abs(trp.times[best] - trj.times[k]))
        best = q;
    if (std::abs(trp.times[best] - trj.times[k]) > 0.5 * delta * everyJ)
      continue;
    double gap = 0.0;
    for (int i = 0; i < d.size; ++i)
      gap += std::abs(trj.measures[k].rho[i] - trp.measures[best].rho[i]) *
             d.weight(i) * d.h;
    sup = std::max(sup, gap);
  }
  return sup;
}

void criterion_6() {
  Timer tm;
  bool pass = true;
  for (double m : {0.75, 1.5, 2.0}) {
    Timer per;
    const double g1 = equivalence_gap(m, 512, 1e-3, 1e-4, 256);
    if (!(g1 <= 5e-2)) pass = false;
    // refine every discretization scale: delta, h and the Lagrangian 1/J
    const double g2 = equivalence_gap(m, 1024, 5e-4, 5e-5, 512);
    if (!(g2 <= 0.7 * g1)) pass = false;
    if (!(per.elapsed() < 300.0)) pass = false;
  }
  {
    const MParam p = MParam::make(2.0);
    const auto d = Domain1D::make(DomainKind::segment, -3.0, 3.0, 512);
    const auto ref =
        ReferencePotential::make(d, p, [](double) { return 0.0; });
    const double C = barenblatt_constant(p);
    const double t0 = 0.05, t1 = 1.0, dt = 2e-4;
    std::vector<double> rho(d.size);
    for (int i = 0; i < d.size; ++i)
      rho[i] = barenblatt_density(p, C, d.x[i], t0);
    auto mu = GridMeasure::normalized(d, std::move(rho));
    const int steps = static_cast<int>(std::round((t1 - t0) / dt));
    for (int k = 0; k < steps; ++k)
      mu = pde_step(mu, ref, p, d, dt, PdeMode::semi_implicit);
    double l1 = 0.0;
    for (int i = 0; i < d.size; ++i)
      l1 += std::abs(mu.rho[i] - barenblatt_density(p, C, d.x[i], t1)) * d.h;
    if (!(l1 <= 3e-2)) pass = false;
  }
  report(6, pass, "JKO vs PDE sup-L1 gap <= 5e-2 for m in {0.75, 1.5, 2}, "
                  "gap shrinks under refinement, self-similar L1 <= 3e-2",
         tm.elapsed());
}

// -------------------------------------------------------------------------
// 7. contraction of translated pairs at the e^{-Kt} rate, K = 1 quadratic
// -------------------------------------------------------------------------
void criterion_7() {
  Timer tm;
  bool pass = true;
  for (double m : {0.75, 1.5}) {
    const MParam p = MParam::make(m);
    // fine grids: the decay rate sees the potential only through its grid
    // interpolant, so h must be small against the 10% rate budget
    const double R = m < 1.0 ? 20.0 : 6.0;
    const auto d =
        Domain1D::make(DomainKind::segment, -R, R, m < 1.0 ? 1024 : 384);
    const auto ref = ReferencePotential::make(
        d, p, [](double x) { return 0.5 * x * x; });
    // two exact quantile-space translates of one narrow profile inside the
    // admissible region: their gap contracts at exactly the e^{-Kt} rate
    const auto qa = to_quantile(m_gaussian(p, 0.25, 0.15, d).measure, d, 64);
    std::vector<double> Xb = qa.X;
    for (auto& v : Xb) v -= 0.5;
    const auto qb = QuantileRep::make(std::move(Xb));
    JkoConfig cfg;
    cfg.delta = 0.01;
    const auto rep = contraction_check(qa, qb, ref, p, d, cfg, 3.0);
    if (!rep.applicable || !rep.holds) pass = false;
    if (std::abs(rep.measured_rate - 1.0) > 0.10) pass = false;
  }
  report(7, pass, "translated pairs contract at rate within 10% of K = 1 "
                  "over t in [0, 3]", tm.elapsed());
}

// -------------------------------------------------------------------------
// 8. weak-form residual: phi = 1 exact, phi in {x, x^2} small and shrinking
// -------------------------------------------------------------------------
void criterion_8() {
  Timer tm;
  bool pass = true;
  const MParam p = MParam::make(1.5);
  auto run = [&](double dt, int M) {
    const auto d = Domain1D::make(DomainKind::segment, -6.0, 6.0, M);
    const auto g = m_gaussian(p, 0.0, 0.5, d);
    const auto init = m_gaussian(p, 0.3, 0.3, d).measure;
    return std::tuple{pde_run(init, g.reference, p, d, dt, 0.2,
                              PdeMode::semi_implicit, 1),
                      d, g};
  };
  const auto [tr, d, g] = run(1e-3, 256);
  const double r1 = weak_residual(tr, g.reference, p, d, Expr::parse("1"));
  const double rx = weak_residual(tr, g.reference, p, d, Expr::parse("x"));
  const double rxx = weak_residual(tr, g.reference, p, d, Expr::parse("x^2"));
  if (!(r1 <= 1e-10)) pass = false;
  if (!(rx <= 1.0 * (d.h + 1e-3))) pass = false;   // O(h + dt) with C = 1
  if (!(rxx <= 2.0 * (d.h + 1e-3))) pass = false;  // O(h + dt) with C = 2
  const auto [tr2, d2, g2] = run(5e-4, 512);
  const double rx2 = weak_residual(tr2, g2.reference, p, d2, Expr::parse("x"));
  if (!(rx2 <= 0.75 * rx + 1e-12)) pass = false;  // empirically first order
  report(8, pass, "weak residual: phi=1 <= 1e-10, phi in {x,x^2} = O(h+dt) "
                  "and shrinking under refinement", tm.elapsed());
}

// -------------------------------------------------------------------------
// 9. slope identity: sqrt(I_m) vs JKO metric slope on 50 smooth cases
// -------------------------------------------------------------------------
void criterion_9() {
  Timer tm;
  bool pass = true;
  JkoConfig cfg;
  cfg.delta = 1e-3;
  // compactly supported range: the heavy reference tails of m < 1 make the
  // Lagrangian slope converge too slowly in J for a 5% desk-scale budget
  for (double m : {1.5, 2.0}) {
    const auto s = make_setup(m);
    std::mt19937 rng(m < 2.0 ? 701 : 709);
    for (int t = 0; t < 25; ++t) {
      const auto mu = random_perturbed(s, rng);
      const auto rep =
          slope_identity_check(mu, s.ref.reference, s.p, s.d, cfg, 512, 0.05);
      if (!rep.holds) pass = false;
    }
  }
  report(9, pass, "sqrt(Fisher) vs JKO metric slope within 5% on 50 smooth "
                  "cases", tm.elapsed());
}

// -------------------------------------------------------------------------
// 10. concentration: implicit and explicit bounds on their ranges,
//     classical-limit agreement, curvature sweep trend
// -------------------------------------------------------------------------
void criterion_10() {
  Timer tm;
  bool pass = true;
  std::vector<double> r_grid;
  for (double r = 0.25; r <= 4.0; r += 0.25) r_grid.push_back(r);
  {
    const auto s = make_setup(0.75, 40.0, 1024);
    const auto rep = alpha_estimate(s.ref.reference, s.p, s.d, r_grid);
    const auto v = conc_bound_check(s.ref.reference, s.p, s.d, rep, 0.0);
    if (!v.raw.applicable || !v.raw.pass) pass = false;
    if (!v.m_normal.applicable || !v.m_normal.pass) pass = false;
  }
  {
    const auto s = make_setup(1.5, 6.0, 512);
    const auto rep = alpha_estimate(s.ref.reference, s.p, s.d, r_grid);
    const auto v = conc_bound_check(s.ref.reference, s.p, s.d, rep, 0.0);
    if (!v.raw.applicable || !v.raw.pass) pass = false;
    if (!v.m_normal.applicable || !v.m_normal.pass) pass = false;
  }
  {
    const MParam p = MParam::make(0.999);
    const auto d = Domain1D::make(DomainKind::segment, -20.0, 20.0, 1024);
    double omega_mass = 0.0;
    for (int i = 0; i < d.size; ++i) omega_mass += d.weight(i) * d.h;
    for (double r = 0.0; r <= 3.0; r += 0.1) {
      const double b = m_normal_bound_lower_range(p, 1.0, omega_mass, r);
      const double gcl = normal_bound_classical(1.0, r);
      if (std::abs(b - gcl) > 0.05 * gcl) pass = false;
    }
  }
  {
    double prev = kInf;
    for (double V : {0.8, 0.5, 0.3, 0.2}) {
      const auto s = make_setup(0.75, 40.0, 1024, V);
      const auto rep = alpha_estimate(s.ref.reference, s.p, s.d, {1.0});
      if (!(rep.alpha_lower[0] < prev)) pass = false;
      prev = rep.alpha_lower[0];
    }
  }
  report(10, pass, "concentration bounds pass on hypothesis ranges, "
                   "classical limit within 5% at m = 0.999, alpha(1) falls "
                   "along the curvature sweep", tm.elapsed());
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures == 0)
    std::printf("ACCEPTANCE: all 10 criteria PASS\n");
  else
    std::printf("ACCEPTANCE: %d criteria FAILED\n", g_failures);
  return g_failures;
}
