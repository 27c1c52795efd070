#pragma once

// Scenario schema, parsing and batch execution. Scenarios are JSON; runs
// write a manifest, CSV traces and JSON verdicts into an output directory.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wassflow/report.hpp"

namespace wassflow {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  json raw;
  DomainKind kind = DomainKind::segment;
  double a = 0.0, b = 1.0;
  int M = 256;
  double m = 0.0;
  int n = 1;
  std::string psi_expr = "0";
  std::string Psi_expr;
  json initial;
  json initial2;  // optional second measure
  std::string task;
  json params;
  unsigned seed = 1;

  static Scenario parse(const json& j);
};

namespace detail {

template <typename T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key))
    throw SchemaError("scenario: missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("scenario: field '" + key + "': " + e.what());
  }
}

template <typename T>
T optional(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("scenario: field '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline Scenario Scenario::parse(const json& j) {
  Scenario sc;
  sc.raw = j;
  const json dom = detail::require<json>(j, "domain");
  const std::string kind = detail::require<std::string>(dom, "kind");
  if (kind == "segment")
    sc.kind = DomainKind::segment;
  else if (kind == "circle")
    sc.kind = DomainKind::circle;
  else
    throw SchemaError("scenario: domain.kind must be 'segment' or 'circle'");
  sc.a = detail::require<double>(dom, "a");
  sc.b = detail::require<double>(dom, "b");
  sc.M = detail::require<int>(dom, "M");
  if (!(sc.b > sc.a) || sc.M < 8)
    throw SchemaError("scenario: need b > a and M >= 8");
  sc.m = detail::require<double>(j, "m");
  sc.n = detail::optional<int>(j, "n", 1);
  sc.psi_expr = detail::optional<std::string>(j, "psi", "0");
  sc.Psi_expr = detail::require<std::string>(j, "Psi");
  sc.task = detail::require<std::string>(j, "task");
  static const std::vector<std::string> tasks = {
      "flow", "pde", "compare", "convexity", "ineq", "conc", "calculus"};
  if (std::find(tasks.begin(), tasks.end(), sc.task) == tasks.end())
    throw SchemaError("scenario: unknown task '" + sc.task + "'");
  sc.params = detail::optional<json>(j, "params", json::object());
  sc.seed = detail::optional<unsigned>(j, "seed", 1u);
  sc.initial = detail::optional<json>(j, "initial", json());
  sc.initial2 = detail::optional<json>(j, "initial2", json());
  try {
    MParam::make(sc.m, sc.n);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("scenario: ") + e.what());
  }
  try {
    Expr::parse(sc.psi_expr);
    Expr::parse(sc.Psi_expr);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("scenario: bad expression: ") + e.what());
  }
  return sc;
}

// ---------------------------------------------------------------------------

struct RunContext {
  MParam p;
  Domain1D d;
  ReferencePotential ref;
};

inline RunContext build_context(const Scenario& sc) {
  const MParam p = MParam::make(sc.m, sc.n);
  const Expr psi = Expr::parse(sc.psi_expr);
  Domain1D d = Domain1D::make(sc.kind, sc.a, sc.b, sc.M,
                              [&](double x) { return psi(x); });
  const Expr Psi = Expr::parse(sc.Psi_expr);
  // Psi_scale lets sweeps vary the convexity modulus K without rewriting
  // the potential expression
  const double scale = detail::optional<double>(sc.params, "Psi_scale", 1.0);
  ReferencePotential ref = ReferencePotential::make(
      d, p, [&](double x) { return scale * Psi(x); });
  // the inequality and concentration checkers assume a unit-mass reference
  if (detail::optional<bool>(sc.params, "normalize_reference", false))
    ref = renormalize_reference(ref, d, p).ref;
  return RunContext{p, std::move(d), std::move(ref)};
}

inline GridMeasure build_measure(const json& spec, const RunContext& ctx) {
  if (spec.is_null())
    throw SchemaError("scenario: task requires an 'initial' measure");
  const std::string type = detail::require<std::string>(spec, "type");
  if (type == "m_gaussian") {
    const double mean = detail::require<double>(spec, "mean");
    const double variance = detail::require<double>(spec, "variance");
    return m_gaussian(ctx.p, mean, variance, ctx.d).measure;
  }
  if (type == "density") {
    const Expr e = Expr::parse(detail::require<std::string>(spec, "expr"));
    std::vector<double> rho(ctx.d.size);
    for (int i = 0; i < ctx.d.size; ++i) rho[i] = std::max(0.0, e(ctx.d.x[i]));
    return GridMeasure::normalized(ctx.d, std::move(rho));
  }
  if (type == "reference") {
    std::vector<double> rho = ctx.ref.sigma;
    return GridMeasure::normalized(ctx.d, std::move(rho));
  }
  throw SchemaError("scenario: unknown initial.type '" + type + "'");
}

// deterministic smooth random measure: mixture of bump perturbations of the
// reference density
inline GridMeasure random_measure(const RunContext& ctx, std::mt19937& rng,
                                  double amplitude = 0.5) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& d = ctx.d;
  std::vector<double> rho(d.size);
  const double span = d.length();
  // perturb within the reference support to keep H_m finite for m > 1
  double lo = d.a, hi = d.b;
  if (ctx.p.m > 1.0) {
    lo = d.b;
    hi = d.a;
    for (int i = 0; i < d.size; ++i)
      if (ctx.ref.m0_mask[i]) {
        lo = std::min(lo, d.x[i]);
        hi = std::max(hi, d.x[i]);
      }
  }
  const int bumps = 2 + static_cast<int>(unif(rng) * 2.0);
  std::vector<double> centers(bumps), widths(bumps), heights(bumps);
  for (int k = 0; k < bumps; ++k) {
    centers[k] = lo + (0.15 + 0.7 * unif(rng)) * (hi - lo);
    widths[k] = (0.03 + 0.1 * unif(rng)) * span;
    heights[k] = unif(rng);
  }
  for (int i = 0; i < d.size; ++i) {
    double bump = 0.0;
    for (int k = 0; k < bumps; ++k) {
      const double z = (d.x[i] - centers[k]) / widths[k];
      bump += heights[k] * std::exp(-0.5 * z * z);
    }
    rho[i] = ctx.ref.sigma[i] * (1.0 + amplitude * bump);
  }
  return GridMeasure::normalized(ctx.d, std::move(rho));
}

// ---------------------------------------------------------------------------

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 numeric failure, 2 schema violation
  json manifest;
};

namespace detail {

inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

}  // namespace detail

inline RunResult run_scenario(const Scenario& sc,
                              const std::filesystem::path& out_dir,
                              bool strict = false) {
  const double tol_scale = strict ? 0.5 : 1.0;
  std::filesystem::create_directories(out_dir);
  RunResult res;
  json& man = res.manifest;
  man["scenario"] = sc.raw;
  man["scenario_hash"] = detail::fnv1a(sc.raw.dump());
  man["strict"] = strict;
  json verdicts = json::array();
  std::vector<std::string> artifacts;
  bool all_pass = true;

  const RunContext ctx = build_context(sc);
  man["K_hat"] = ctx.ref.K_hat;
  std::mt19937 rng(sc.seed);

  auto emit = [&](const std::string& name, const std::string& content) {
    detail::write_file(out_dir / name, content);
    artifacts.push_back(name);
  };
  auto push_verdict = [&](json v, bool pass) {
    verdicts.push_back(std::move(v));
    all_pass = all_pass && pass;
  };

  const auto& pr = sc.params;

  if (sc.task == "flow") {
    JkoConfig cfg;
    cfg.delta = detail::optional<double>(pr, "delta", 1e-3);
    const int J = detail::optional<int>(pr, "J", 256);
    const double T = detail::optional<double>(pr, "T", 0.5);
    const auto mu0 = build_measure(sc.initial, ctx);
    const auto tr = jko_trajectory(to_quantile(mu0, ctx.d, J), ctx.ref, ctx.p,
                                   ctx.d, cfg, T,
                                   detail::optional<int>(pr, "record_every", 1));
    emit("trace.csv", trace_to_csv(tr));
    json v = trace_summary(tr);
    v["name"] = "jko_flow";
    bool pass = true;
    if (pr.contains("assert_H_below")) {
      const double thr = pr.at("assert_H_below").get<double>() * tol_scale;
      for (double Hk : tr.H) pass = pass && Hk < thr;
      v["assert_H_below"] = thr;
    }
    v["verdict"] = pass ? "pass" : "fail";
    push_verdict(std::move(v), pass);
  } else if (sc.task == "pde") {
    const double dt = detail::optional<double>(pr, "dt", 1e-4);
    const double T = detail::optional<double>(pr, "T", 0.5);
    const auto mode = detail::optional<std::string>(pr, "mode", "semi_implicit")
                              == "explicit"
                          ? PdeMode::explicit_euler
                          : PdeMode::semi_implicit;
    const auto mu0 = build_measure(sc.initial, ctx);
    const auto tr =
        pde_run(mu0, ctx.ref, ctx.p, ctx.d, dt, T, mode,
                detail::optional<int>(pr, "record_every", 10));
    emit("trace.csv", trace_to_csv(tr));
    emit("final_density.csv", to_csv(tr.measures.back(), ctx.d));
    json v = trace_summary(tr);
    v["name"] = "pde_run";
    bool pass = true;
    if (pr.contains("assert_H_below")) {
      const double thr = pr.at("assert_H_below").get<double>() * tol_scale;
      for (double Hk : tr.H) pass = pass && Hk < thr;
      v["assert_H_below"] = thr;
    }
    if (pr.contains("barenblatt")) {
      // compare the final profile against the self-similar solution started
      // from the same profile at offset t0
      const double t0 = pr.at("barenblatt").at("t0").get<double>();
      const double thr =
          detail::optional<double>(pr.at("barenblatt"), "l1_threshold", 3e-2) *
          tol_scale;
      const double C = barenblatt_constant(ctx.p);
      double err = 0.0;
      const auto& fin = tr.measures.back();
      for (int i = 0; i < ctx.d.size; ++i)
        err += std::abs(fin.rho[i] -
                        barenblatt_density(ctx.p, C, ctx.d.x[i],
                                           tr.times.back() + t0)) *
               ctx.d.weight(i) * ctx.d.h;
      v["barenblatt_l1_error"] = err;
      v["barenblatt_threshold"] = thr;
      pass = pass && err <= thr;
    }
    v["verdict"] = pass ? "pass" : "fail";
    push_verdict(std::move(v), pass);
  } else if (sc.task == "compare") {
    JkoConfig cfg;
    cfg.delta = detail::optional<double>(pr, "delta", 1e-3);
    const int J = detail::optional<int>(pr, "J", 256);
    const double dt = detail::optional<double>(pr, "dt", 1e-4);
    const double T = detail::optional<double>(pr, "T", 0.3);
    const double thr =
        detail::optional<double>(pr, "l1_threshold", 5e-2) * tol_scale;
    const auto mu0 = build_measure(sc.initial, ctx);
    const int every = std::max(1, static_cast<int>(0.05 / cfg.delta));
    const auto trj = jko_trajectory(to_quantile(mu0, ctx.d, J), ctx.ref, ctx.p,
                                    ctx.d, cfg, T, every);
    const auto trp = pde_run(mu0, ctx.ref, ctx.p, ctx.d, dt, T,
                             PdeMode::semi_implicit,
                             std::max(1, static_cast<int>(0.05 / dt)));
    double sup_gap = 0.0;
    std::ostringstream gaps;
    gaps.precision(17);
    gaps << "t,l1_gap\n";
    for (size_t k = 0; k < trj.times.size(); ++k) {
      // find the matching PDE sample
      size_t best = 0;
      for (size_t q = 0; q < trp.times.size(); ++q)
        if (std::abs(trp.times[q] - trj.times[k]) <
            std::abs(trp.times[best] - trj.times[k]))
          best = q;
      if (std::abs(trp.times[best] - trj.times[k]) > 0.5 * cfg.delta * every)
        continue;
      double gap = 0.0;
      for (int i = 0; i < ctx.d.size; ++i)
        gap += std::abs(trj.measures[k].rho[i] - trp.measures[best].rho[i]) *
               ctx.d.weight(i) * ctx.d.h;
      gaps << trj.times[k] << "," << gap << "\n";
      sup_gap = std::max(sup_gap, gap);
    }
    emit("l1_gap.csv", gaps.str());
    json v;
    v["name"] = "jko_pde_compare";
    v["sup_l1_gap"] = sup_gap;
    v["threshold"] = thr;
    const bool pass = sup_gap <= thr;
    v["verdict"] = pass ? "pass" : "fail";
    push_verdict(std::move(v), pass);
  } else if (sc.task == "convexity") {
    const int J = detail::optional<int>(pr, "J", 128);
    const int cases = detail::optional<int>(pr, "cases", 20);
    const double K = detail::optional<double>(pr, "K", ctx.ref.K_hat);
    bool pass = true;
    for (int c = 0; c < cases; ++c) {
      const auto q0 = to_quantile(random_measure(ctx, rng), ctx.d, J);
      const auto q1 = to_quantile(random_measure(ctx, rng), ctx.d, J);
      const auto prof = convexity_profile(q0, q1, ctx.ref, ctx.p, ctx.d, K);
      push_verdict(to_json(prof), prof.pass);
      pass = pass && prof.pass;
    }
    (void)pass;
  } else if (sc.task == "ineq") {
    const int cases = detail::optional<int>(pr, "cases", 50);
    const int J = detail::optional<int>(pr, "J", 256);
    for (int c = 0; c < cases; ++c) {
      const auto mu = random_measure(ctx, rng);
      const auto ta = talagrand_check(mu, ctx.ref, ctx.p, ctx.d, J);
      push_verdict(to_json(ta), !ta.applicable || ta.pass);
      const auto hl = hwi_lsi_check(mu, ctx.ref, ctx.p, ctx.d, J);
      push_verdict(to_json(hl.hwi), !hl.hwi.applicable || hl.hwi.pass);
      push_verdict(to_json(hl.lsi), !hl.lsi.applicable || hl.lsi.pass);
    }
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int c = 0; c < cases; ++c) {
      std::vector<double> f(ctx.d.size);
      const double c0 = unif(rng), c1 = unif(rng), c2 = unif(rng);
      for (int i = 0; i < ctx.d.size; ++i) {
        const double x = ctx.d.x[i];
        f[i] = c0 + c1 * x + c2 * x * x;
      }
      const auto po = poincare_check(f, ctx.ref, ctx.p, ctx.d);
      push_verdict(to_json(po), !po.applicable || po.pass);
    }
  } else if (sc.task == "conc") {
    std::vector<double> r_grid =
        detail::optional<std::vector<double>>(pr, "r_grid", {});
    if (r_grid.empty())
      for (int k = 1; k <= 20; ++k)
        r_grid.push_back(0.15 * k * std::sqrt(ctx.d.length()));
    const double theta = detail::optional<double>(pr, "theta", 0.0);
    const auto rep = alpha_estimate(ctx.ref, ctx.p, ctx.d, r_grid);
    push_verdict(to_json(rep), true);
    const auto ver = conc_bound_check(ctx.ref, ctx.p, ctx.d, rep, theta);
    push_verdict(to_json(ver.raw), !ver.raw.applicable || ver.raw.pass);
    push_verdict(to_json(ver.m_normal),
                 !ver.m_normal.applicable || ver.m_normal.pass);
    std::ostringstream cs;
    cs.precision(17);
    cs << "r,alpha_lower\n";
    for (size_t k = 0; k < rep.r.size(); ++k)
      cs << rep.r[k] << "," << rep.alpha_lower[k] << "\n";
    emit("alpha.csv", cs.str());
  } else if (sc.task == "calculus") {
    const double eps = detail::optional<double>(pr, "eps", 1e-3);
    bool pass = true;
    std::ostringstream cs;
    cs.precision(17);
    cs << "t,max_deviation\n";
    for (double t : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      const auto lim = limit_check_m_to_1(t, eps);
      cs << t << "," << lim.max_deviation() << "\n";
      pass = pass && lim.max_deviation() < 50.0 * eps * (1.0 + t);
    }
    emit("limits.csv", cs.str());
    if (ctx.p.m > 0.5 && ctx.p.m < 2.0 && ctx.p.m != 1.0) {
      for (double a : {0.2, 1.0, 3.0})
        for (double r : {0.1, 1.0, 4.0})
          pass = pass && conc_lemma_bounds(ctx.p, a, r).holds;
    }
    json v;
    v["name"] = "calculus";
    v["verdict"] = pass ? "pass" : "fail";
    push_verdict(std::move(v), pass);
  }

  man["verdicts"] = verdicts;
  man["artifacts"] = artifacts;
  man["all_pass"] = all_pass;
  res.exit_code = all_pass ? 0 : 1;
  detail::write_file(out_dir / "manifest.json", man.dump(2) + "\n");
  return res;
}

}  // namespace wassflow
