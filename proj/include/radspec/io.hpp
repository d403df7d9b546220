#ifndef RADSPEC_IO_HPP
#define RADSPEC_IO_HPP

//
// JSON documents for profiles and reports, plus CSV mirrors of tabular
// reports. Doubles are written in shortest round-trip form, so a profile read
// back from its own document is bit-identical.
//

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessel.hpp"
#include "decomposition.hpp"
#include "eigenvalues.hpp"
#include "errors.hpp"
#include "radial_core.hpp"
#include "resolvent.hpp"
#include "spectral_measure.hpp"

namespace radspec {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json &j) {
  if (j.is_number())
    return {j.get<double>(), 0.0};
  detail::require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(),
                  "complex value must be a number or [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

struct ProfileDocument {
  RadialProfile profile;
  Dimension d;
};

inline json profile_to_json(const RadialProfile &v, Dimension d) {
  const auto &rule = v.rule();
  json vals = json::array();
  for (cplx x : v.values())
    vals.push_back(to_json(x));
  return json{{"label", v.label()},
              {"d", d.value()},
              {"r_max", rule.r_max()},
              {"panels", rule.panel_count()},
              {"nodes_per_panel", rule.nodes_per_panel()},
              {"breakpoints",
               std::vector<double>(rule.breakpoints().begin(), rule.breakpoints().end())},
              {"support_radius", v.support_radius()},
              {"values", std::move(vals)}};
}

inline ProfileDocument profile_from_json(const json &j) {
  detail::require(j.is_object(), "profile document must be an object");
  for (const char *key : {"d", "r_max", "panels", "nodes_per_panel", "values"})
    detail::require(j.contains(key), std::string("profile document lacks '") + key + "'");
  const Dimension d(j.at("d").get<int>());
  const double r_max = j.at("r_max").get<double>();
  const int panels = j.at("panels").get<int>();
  const int npp = j.at("nodes_per_panel").get<int>();
  QuadratureRule rule = j.contains("breakpoints")
                            ? QuadratureRule(j.at("breakpoints").get<std::vector<double>>(), npp)
                            : make_rule(r_max, panels, npp);
  detail::require(rule.panel_count() == panels && rule.r_max() == r_max,
                  "breakpoints disagree with r_max / panels");
  const auto &jv = j.at("values");
  detail::require(jv.is_array() && jv.size() == rule.size(),
                  "profile needs panels * nodes_per_panel values");
  std::vector<cplx> vals;
  vals.reserve(jv.size());
  for (const auto &x : jv)
    vals.push_back(complex_from_json(x));
  const double support = j.value("support_radius", r_max);
  return {RadialProfile(std::move(rule), std::move(vals), support, j.value("label", "")), d};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const Theorem3Certificate &c, const std::vector<double> &lambda_grid) {
  json ratios = json::array(), alt = json::array(), norms = json::array(),
       tails = json::array(), kused = json::array();
  for (const auto &r : c.rows) {
    ratios.push_back(r.ratio);
    alt.push_back(r.ratio_alt);
    norms.push_back(r.norm);
    tails.push_back(r.tail_bound);
    kused.push_back(r.k_max_used);
  }
  return json{{"q", c.q},
              {"p", c.p},
              {"d", c.d},
              {"covariant", c.covariant},
              {"lambda_grid", lambda_grid},
              {"norms", std::move(norms)},
              {"ratios", std::move(ratios)},
              {"ratio_alt", std::move(alt)},
              {"k_max_used", std::move(kused)},
              {"tail_bounds", std::move(tails)},
              {"variation", c.variation},
              {"tolerance", c.tolerance},
              {"flagged", c.flagged}};
}

inline std::string certificate_csv(const Theorem3Certificate &c) {
  std::string out = "lambda,norm,tail_bound,k_max_used,ratio,ratio_alt\n";
  char buf[256];
  for (const auto &r : c.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", r.lambda, r.norm,
                  r.tail_bound, r.k_max_used, r.ratio, r.ratio_alt);
    out += buf;
  }
  return out;
}

inline json to_json(const UniformScan &s) {
  json theta = json::array(), ratios = json::array(), failures = json::array(),
       kused = json::array(), tails = json::array(), norms = json::array();
  for (const auto &r : s.rows) {
    theta.push_back(r.theta);
    norms.push_back(r.norm);
    ratios.push_back(r.ratio);
    tails.push_back(r.tail_bound);
    kused.push_back(r.k_max_used);
    failures.push_back(r.failure);
  }
  return json{{"q", s.q},
              {"p", s.p},
              {"d", s.d},
              {"theta_grid", std::move(theta)},
              {"norms", std::move(norms)},
              {"ratios", std::move(ratios)},
              {"failures", std::move(failures)},
              {"k_max_used", std::move(kused)},
              {"tail_bounds", std::move(tails)},
              {"max_over_min", s.max_over_min},
              {"growth", s.growth},
              {"growth_flag", s.growth_flag}};
}

inline std::string scan_csv(const UniformScan &s) {
  std::string out = "theta,re_z,im_z,norm,tail_bound,k_max_used,ratio,failure\n";
  char buf[320];
  for (const auto &r : s.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,", r.theta,
                  r.z.real(), r.z.imag(), r.norm, r.tail_bound, r.k_max_used, r.ratio);
    out += buf;
    out += "\"" + r.failure + "\"\n";
  }
  return out;
}

inline json to_json(const SimpleFunction &w) {
  json pieces = json::array();
  for (const auto &p : w.pieces()) {
    json support = json::array();
    for (const auto &iv : p.support)
      support.push_back(json::array({iv.a, iv.b}));
    pieces.push_back(
        json{{"value", p.value}, {"support", std::move(support)}, {"measure", p.d_measure}});
  }
  return pieces;
}

inline json to_json(const DecompositionTree &t) {
  json layers = json::array();
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    const auto &layer = t.layers[l];
    const auto &sp = t.sparse[l];
    json families = json::array();
    for (const auto &f : sp.families) {
      json members = json::array();
      for (const auto &m : f.members) {
        json frags = json::array();
        for (const auto &fr : m.fragments)
          frags.push_back(json{{"value", fr.value}, {"support", json::array({fr.iv.a, fr.iv.b})}});
        members.push_back(json{{"center", m.center}, {"fragments", std::move(frags)}});
      }
      families.push_back(json{{"level", f.level},
                              {"radius", f.radius},
                              {"separation", f.separation},
                              {"members", std::move(members)}});
    }
    const auto &c = sp.counts;
    layers.push_back(json{{"i", layer.i},
                          {"H", layer.H},
                          {"H_next", layer.H_next},
                          {"measure", layer.layer.measure()},
                          {"pieces", to_json(layer.layer)},
                          {"counts",
                           {{"N", c.n},
                            {"K", c.families},
                            {"R", c.radius},
                            {"C1", c.C1},
                            {"C2", c.C2},
                            {"N_bound", c.N_bound},
                            {"K_bound", c.K_bound},
                            {"R_bound", c.R_bound},
                            {"R_over_2_pow_i_gamma_K", c.R_reference_scale},
                            {"n_ok", c.n_ok},
                            {"k_ok", c.k_ok},
                            {"r_ok", c.r_ok}}},
                          {"families", std::move(families)}});
  }
  return json{{"K", t.K}, {"gamma", t.gamma}, {"cell", t.cell}, {"layers", std::move(layers)}};
}

inline json to_json(const TreeAudit &a) {
  return json{{"reconstruction", a.reconstruction},
              {"layer_measure", a.layer_measure},
              {"separation", a.separation},
              {"counts", a.counts},
              {"pass", a.all()}};
}

inline json to_json(const SearchBox &b) {
  return json::array({b.re_min, b.re_max, b.im_min, b.im_max});
}

inline json to_json(const EigenvalueSet &s) {
  json eig = json::array(), unres = json::array(), excl = json::array();
  for (const auto &e : s.eigenvalues)
    eig.push_back(json{{"k", e.k},
                       {"z", to_json(e.z)},
                       {"residual", e.residual},
                       {"winding", e.winding},
                       {"dim", e.dim}});
  for (const auto &u : s.unresolved)
    unres.push_back(json{{"k", u.k}, {"box", to_json(u.box)}, {"reason", u.reason}});
  for (const auto &b : s.excluded)
    excl.push_back(to_json(b));
  return json{{"eigenvalues", std::move(eig)},
              {"unresolved", std::move(unres)},
              {"excluded", std::move(excl)},
              {"k_searched", s.k_searched},
              {"sector_capped", s.capped},
              {"evaluations", s.evaluations},
              {"multiplicity", "winding number times dim H_k"}};
}

inline json to_json(const ScanPoint &s) {
  return json{{"params", s.params},
              {"lhs", s.lhs},
              {"vq", s.vq},
              {"ratio", s.ratio},
              {"eigenvalue_count", s.eigenvalue_count},
              {"complete", s.complete},
              {"failure", s.failure}};
}

inline json to_json(const SharpnessReport &r) {
  json trace = json::array(), ascent = json::array();
  for (const auto &s : r.trace)
    trace.push_back(to_json(s));
  for (const auto &s : r.ascent)
    ascent.push_back(to_json(s));
  return json{{"beta", r.beta},
              {"trace", std::move(trace)},
              {"ascent", std::move(ascent)},
              {"best", to_json(r.best)},
              {"max_over_min", r.max_over_min},
              {"trend_slope", r.trend_slope}};
}

inline std::string sharpness_csv(const SharpnessReport &r) {
  std::string out = "kind,param0,lhs,vq,ratio,eigenvalue_count,complete\n";
  char buf[256];
  auto row = [&](const char *kind, const ScanPoint &s) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%d,%d\n", kind,
                  s.params.empty() ? 0.0 : s.params[0], s.lhs, s.vq, s.ratio,
                  s.eigenvalue_count, s.complete ? 1 : 0);
    out += buf;
  };
  for (const auto &s : r.trace)
    row("trace", s);
  for (const auto &s : r.ascent)
    row("ascent", s);
  return out;
}

} // namespace radspec

#endif // RADSPEC_IO_HPP
