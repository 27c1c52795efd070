#pragma once

// JSON verdict records for the inequality checkers and run manifests.

#include <string>

#include "json.hpp"
#include "wassflow/flow.hpp"
#include "wassflow/inequalities.hpp"

namespace wassflow {

using json = nlohmann::json;

inline json to_json(const CheckRecord& rec) {
  json j;
  j["name"] = rec.name;
  j["hypotheses"] = rec.hypotheses;
  j["applicable"] = rec.applicable;
  j["lhs"] = rec.lhs;
  j["rhs"] = rec.rhs;
  j["slack"] = rec.slack;
  j["tolerance"] = rec.tol;
  j["verdict"] = !rec.applicable ? "non-applicable"
                                 : (rec.pass ? "pass" : "fail");
  return j;
}

inline json to_json(const ConvexityProfile& prof) {
  json j;
  j["name"] = "convexity_profile";
  j["K_target"] = prof.K_target;
  j["w2"] = prof.w2_dist;
  j["t"] = prof.t;
  j["H"] = prof.H;
  j["margin"] = prof.margin;
  j["min_margin"] = prof.min_margin;
  j["tolerance"] = prof.tol;
  j["vacuous"] = prof.vacuous;
  j["verdict"] = prof.pass ? "pass" : "fail";
  return j;
}

inline json to_json(const ConcBoundReport& rep) {
  json j;
  j["name"] = rep.name;
  j["hypotheses"] = rep.hypotheses;
  j["applicable"] = rep.applicable;
  j["r"] = rep.r;
  j["lhs"] = rep.lhs;
  j["rhs"] = rep.rhs;
  j["slack"] = rep.slack;
  j["tolerance"] = rep.tol;
  j["verdict"] = !rep.applicable ? "non-applicable"
                                 : (rep.pass ? "pass" : "fail");
  return j;
}

inline json to_json(const ConcentrationReport& rep) {
  json j;
  j["name"] = "alpha_estimate";
  j["r"] = rep.r;
  j["alpha_lower"] = rep.alpha_lower;
  return j;
}

inline json trace_summary(const FlowTrace& tr) {
  json j;
  j["steps"] = tr.times.size();
  if (!tr.times.empty()) {
    j["t_final"] = tr.times.back();
    j["H_initial"] = tr.H.front();
    j["H_final"] = tr.H.back();
    j["W2_to_ref_final"] = tr.W2_to_ref.back();
    j["mass_final"] = tr.mass.back();
    j["mean_final"] = tr.mean.back();
    j["variance_final"] = tr.variance.back();
  }
  return j;
}

}  // namespace wassflow
