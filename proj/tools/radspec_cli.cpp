#include "cli_support.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>

using namespace radspec;
using cli::ConfigError;
using cli::Params;

namespace {

struct Outcome {
  json report;
  std::vector<std::pair<std::string, std::string>> csvs;
  int exit_code;
};

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

int exit_for(bool pass) { return pass ? cli::ok : cli::accuracy_failure; }

ExponentConfig exponents(Params &p, ExponentConfig::Mode mode) {
  const Dimension d(p.integer("d", 3));
  return ExponentConfig(p.num("q"), p.num("p"), d, mode);
}

ExponentConfig::Mode mode_param(Params &p, const std::string &fallback) {
  const auto m = p.str("mode", fallback);
  if (m == "strict")
    return ExponentConfig::Mode::strict;
  if (m == "relaxed")
    return ExponentConfig::Mode::relaxed;
  throw ConfigError("'mode' must be 'strict' or 'relaxed'");
}

std::pair<RadialProfile, RadialProfile> weights(Params &p) {
  const auto w1 = cli::profile_param(p, "w1");
  if (!p.has("w2")) {
    p.note("w2", "w1");
    return {w1, w1};
  }
  return {w1, cli::profile_param(p, "w2")};
}

double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome verify_spectral_measure(Params &p, std::uint64_t seed) {
  const auto cfg = exponents(p, mode_param(p, "relaxed"));
  const auto [w1, w2] = weights(p);
  const auto grid = p.list("lambda_grid", std::vector<double>{0.5, 1.0, 2.0, 4.0});
  const int k_max = p.integer("k_max", 16);
  const bool covariant = p.flag("covariant", true);
  const double tol = p.num("tolerance", 1e-7);
  TailControl ctl;
  ctl.rel_tol = p.num("tail_rel_tol", 1e-6);
  p.finish();
  const auto c = theorem3_certificate(w1, w2, cfg, grid, k_max, covariant, tol, ctl);
  const bool pass = !c.flagged;
  return {cli::report("verify-spectral-measure", seed, p, verdict(pass), to_json(c, grid)),
          {{"", certificate_csv(c)}},
          exit_for(pass)};
}

Outcome verify_resolvent(Params &p, std::uint64_t seed) {
  const auto cfg = exponents(p, mode_param(p, "strict"));
  const auto [w1, w2] = weights(p);
  std::vector<cplx> zs{cplx(-1.0, 1.0), cplx(3.0, 1.0), cplx(-2.0, -0.5)};
  if (auto j = p.raw("z_list")) {
    if (!j->is_array() || j->empty())
      throw ConfigError("'z_list' must be a nonempty array of [re, im]");
    zs.clear();
    for (const auto &x : *j)
      zs.push_back(complex_from_json(x));
  } else {
    json dz = json::array();
    for (cplx z : zs)
      dz.push_back(to_json(z));
    p.note("z_list", dz);
  }
  const auto lambdas = p.list("lambdas", std::vector<double>{0.5, 2.0, 4.0});
  const int k_max = p.integer("k_max", 16);
  ResolventOptions opt;
  opt.rel_tol = p.num("tail_rel_tol", 1e-3);
  const double tol = p.num("tolerance", 1e-7);
  p.finish();

  json rows = json::array();
  std::string csv = "re_z,im_z,lambda,norm,scaled_norm,rel_error,k_max_used,tail_bound\n";
  bool pass = true;
  for (cplx z : zs) {
    const auto a = resolvent_schatten(w1, w2, cfg, SpectralPoint(z), k_max, opt);
    for (double L : lambdas) {
      detail::require(L > 0.0, "lambdas must be positive");
      const auto b = resolvent_schatten(dilate(w1, L), dilate(w2, L), cfg,
                                        SpectralPoint(z / (L * L)), k_max, opt);
      const double scaled = b.norm / (L * L);
      const double err = std::abs(a.norm - scaled) / a.norm;
      pass = pass && err < tol;
      rows.push_back(json{{"z", to_json(z)},
                          {"lambda", L},
                          {"norm", a.norm},
                          {"scaled_norm", scaled},
                          {"rel_error", err},
                          {"k_max_used", a.k_max_used},
                          {"tail_bound", a.tail_bound}});
      char buf[256];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.6e,%d,%.17g\n", z.real(),
                    z.imag(), L, a.norm, scaled, err, a.k_max_used, a.tail_bound);
      csv += buf;
    }
  }
  return {cli::report("verify-resolvent", seed, p, verdict(pass), json{{"rows", rows}}),
          {{"", csv}},
          exit_for(pass)};
}

Outcome scan_z(Params &p, std::uint64_t seed) {
  const auto cfg = exponents(p, mode_param(p, "strict"));
  const auto [w1, w2] = weights(p);
  const auto theta =
      p.list("theta_grid", std::vector<double>{std::numbers::pi, 1.0, 1e-1, 1e-2, 1e-3, 1e-4});
  const int k_max = p.integer("k_max", 32);
  ResolventOptions opt;
  opt.rel_tol = p.num("tail_rel_tol", 1e-3);
  const double limit = p.num("max_over_min_limit", 3.0);
  p.finish();
  const auto s = uniform_bound_scan(w1, w2, cfg, theta, k_max, opt);
  bool failures = false;
  for (const auto &r : s.rows)
    failures = failures || !r.failure.empty();
  const bool pass = !failures && s.max_over_min < limit && !s.growth_flag;
  return {cli::report("scan-z", seed, p, verdict(pass), to_json(s)),
          {{"", scan_csv(s)}},
          failures ? cli::accuracy_failure : exit_for(pass)};
}

Outcome bessel_lemma(Params &p, std::uint64_t seed) {
  const double pe = p.num("p"), rho = p.num("rho");
  const auto mus = p.list("mu_grid", std::vector<double>{2, 4, 8, 16, 32, 64, 128});
  const double s_max = p.num("s_max", 200.0);
  const double limit = p.num("slope_limit", 0.05);
  const bool with_log = p.flag("log_factor", false);
  p.finish();
  json rows = json::array();
  std::string csv = "mu,integral,tail_bound,envelope,ratio\n";
  std::vector<double> lx, ly;
  for (double mu : mus) {
    const BesselLemmaParams par{mu, pe, rho};
    const auto m = bessel_moment_integral(par, s_max);
    const double env = with_log ? lemma_envelope_with_log(par) : lemma_envelope(par);
    const double ratio = m.upper() / env;
    lx.push_back(std::log(mu));
    ly.push_back(std::log(ratio));
    rows.push_back(json{{"mu", mu},
                        {"integral", m.integral},
                        {"tail_bound", m.tail_bound},
                        {"envelope", env},
                        {"ratio", ratio}});
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", mu, m.integral,
                  m.tail_bound, env, ratio);
    csv += buf;
  }
  const double slope = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;
  const bool pass = slope <= limit;
  return {cli::report("bessel-lemma", seed, p, verdict(pass),
                      json{{"rows", rows}, {"slope", slope}}),
          {{"", csv}},
          exit_for(pass)};
}

Outcome decompose_cmd(Params &p, std::uint64_t seed) {
  const Dimension d(p.integer("d", 3));
  const int K = p.integer("K", 3);
  const double gamma = p.num("gamma", 2.0);
  const double cell = p.num("cell", 1.0 / 16);
  std::optional<SimpleFunction> w;
  if (p.has("edges") || p.has("levels")) {
    w = SimpleFunction::from_steps(d, p.list("edges"), p.list("levels"));
  } else {
    const int runs = p.integer("max_runs", 24), levels = p.integer("max_levels", 6);
    p.note("source", "random_simple_function(seed)");
    w = random_simple_function(d, seed, cell, runs, levels);
  }
  const double lq = p.num("lorentz_q", 2.0), lr = p.num("lorentz_r", 2.0);
  p.finish();
  const auto tree = decompose(*w, K, gamma, cell);
  const auto a = audit(*w, tree);
  const auto lc = lorentz_equivalence_check(*w, lq, lr);
  return {cli::report("decompose", seed, p, verdict(a.all()),
                      json{{"function", to_json(*w)},
                           {"tree", to_json(tree)},
                           {"audit", to_json(a)},
                           {"lorentz_equivalence_check",
                            {{"lhs", lc.lhs}, {"rhs", lc.rhs}, {"ratio", lc.ratio}}}}),
          {},
          exit_for(a.all())};
}

BSConfig bs_config(Params &p) {
  BSConfig bs;
  bs.d = Dimension(p.integer("d", 3));
  bs.k_max = p.integer("k_max", 8);
  const auto b = p.list("search_box", std::vector<double>{-10.0, -1e-3, -1.0, 1.0});
  if (b.size() != 4)
    throw ConfigError("'search_box' must be [re_min, re_max, im_min, im_max]");
  bs.search_box = {b[0], b[1], b[2], b[3]};
  bs.margin = p.num("margin", bs.margin);
  bs.max_depth = p.integer("max_depth", bs.max_depth);
  bs.residual_tol = p.num("residual_tol", bs.residual_tol);
  bs.sector_cap = p.flag("sector_cap", bs.sector_cap);
  return bs;
}

Outcome eigenvalues_cmd(Params &p, std::uint64_t seed) {
  const auto v = cli::profile_param(p, "profile");
  const auto bs = bs_config(p);
  p.finish();
  const auto s = find_eigenvalues(v, bs);
  return {cli::report("eigenvalues", seed, p, s.complete() ? "PASS" : "UNRESOLVED", to_json(s)),
          {{"", eigenvalues_csv(s)}},
          s.complete() ? cli::ok : cli::unresolved};
}

Outcome theorem1_cmd(Params &p, std::uint64_t seed) {
  const auto v = cli::profile_param(p, "profile");
  const auto bs = bs_config(p);
  const ExponentConfig cfg(p.num("q"), p.num("p"), bs.d);
  const double eps = p.num("eps", 1e-3);
  const double M = p.num("M", 1.0);
  p.finish();
  const auto s = find_eigenvalues(v, bs);
  const double lhs = theorem1_lhs(s.eigenvalues, cfg);
  const double vq = std::pow(lq_norm(v, cfg.q, cfg.d), cfg.q);
  const auto fp = FrankBoundParams::from_config(cfg, eps, M);
  const auto fr = frank_functional(s.eigenvalues, fp);
  json res{{"theorem1_lhs", lhs},
           {"v_lq_q", vq},
           {"ratio", vq > 0.0 ? lhs / vq : 0.0},
           {"frank_functional",
            {{"sigma", fp.sigma}, {"lhs_exponent", fp.lhs_exponent()}, {"lhs", fr.lhs},
             {"rhs", fr.rhs}}},
           {"eigenvalues", to_json(s)}};
  return {cli::report("theorem1", seed, p, s.complete() ? "PASS" : "UNRESOLVED", res),
          {{"_eigenvalues", eigenvalues_csv(s)}},
          s.complete() ? cli::ok : cli::unresolved};
}

Outcome sharpness_cmd(Params &p, std::uint64_t seed) {
  const Dimension d(p.integer("d", 3));
  const ExponentConfig cfg(p.num("q"), p.num("p"), d);
  const auto g_grid = p.list("g_grid", std::vector<double>{1, 2, 4, 7, 10, 14, 20});
  const double alpha = p.num("alpha", std::numbers::pi - 0.5);
  const double radius = p.num("radius", 1.0);
  const double ppu = p.num("panels_per_unit", 4.0);
  const double beta = p.num("beta", 1.0);
  const int budget = p.integer("budget", 0);
  BSConfig bs;
  bs.d = d;
  bs.k_max = p.integer("k_max", 20);
  bs.margin = p.num("margin", bs.margin);
  p.finish();
  // Numerical range of -Delta + g e^{i alpha} 1_{[0,R]} bounds Im z and Re z from below.
  ProfileFamily fam{
      [=](const std::vector<double> &x) {
        return standard_profile("complex_well",
                                {{"g", x[0]}, {"alpha", alpha}, {"radius", radius},
                                 {"panels_per_unit", ppu}});
      },
      [=](const std::vector<double> &x) {
        const double g = x[0], c = g * std::cos(alpha), s = g * std::sin(alpha);
        return SearchBox{std::min(0.0, c) - 1.0, 2.0 * g + 2.0, std::min(0.0, s) - 0.5,
                         std::max(0.0, s) + 0.5};
      },
      {*std::min_element(g_grid.begin(), g_grid.end())},
      {*std::max_element(g_grid.begin(), g_grid.end())}};
  std::vector<std::vector<double>> members;
  for (double g : g_grid)
    members.push_back({g});
  const auto rep = sharpness_scan(fam, members, cfg, bs, beta, budget);
  bool complete = true;
  for (const auto &s : rep.trace)
    complete = complete && s.complete;
  return {cli::report("sharpness", seed, p, complete ? "PASS" : "UNRESOLVED", to_json(rep)),
          {{"", sharpness_csv(rep)}},
          complete ? cli::ok : cli::unresolved};
}

const std::map<std::string, std::function<Outcome(Params &, std::uint64_t)>> commands{
    {"verify-spectral-measure", verify_spectral_measure},
    {"verify-resolvent", verify_resolvent},
    {"scan-z", scan_z},
    {"bessel-lemma", bessel_lemma},
    {"decompose", decompose_cmd},
    {"eigenvalues", eigenvalues_cmd},
    {"theorem1", theorem1_cmd},
    {"sharpness", sharpness_cmd}};

int fail(const std::optional<std::string> &out_dir, const std::string &command, int code,
         const std::string &type, const std::string &msg) {
  const json err{{"schema_version", schema_version},
                 {"command", command},
                 {"status", "ERROR"},
                 {"exit_code", code},
                 {"error", {{"type", type}, {"message", msg}}}};
  std::cout << err.dump(2) << "\n";
  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    std::ofstream(std::filesystem::path(*out_dir) / "error.json") << err.dump(2) << "\n";
  }
  return code;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Radial spectral verification suite"};
  std::string command, config_path, out_dir = ".";
  std::uint64_t seed = 0;
  app.add_option("command", command, "command to run")
      ->required()
      ->check(CLI::IsMember([] {
        std::vector<std::string> names;
        for (const auto &[k, v] : commands)
          names.push_back(k);
        return names;
      }()));
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    return fail(std::nullopt, command, cli::config_error, "usage", e.what());
  }

  try {
    Params params(json::parse(cli::read_file(config_path)));
    auto out = commands.at(command)(params, seed);
    cli::emit(out_dir, command, out.report, out.csvs);
    std::cout << command << ": " << out.report["status"].get<std::string>() << "\n";
    return out.exit_code;
  } catch (const ConfigError &e) {
    return fail(out_dir, command, cli::config_error, "config", e.what());
  } catch (const json::exception &e) {
    return fail(out_dir, command, cli::config_error, "config", e.what());
  } catch (const radspec::invalid_argument &e) {
    return fail(out_dir, command, cli::config_error, "invalid_argument", e.what());
  } catch (const divergence_error &e) {
    return fail(out_dir, command, cli::config_error, "divergence", e.what());
  } catch (const accuracy_error &e) {
    return fail(out_dir, command, cli::accuracy_failure, "accuracy", e.what());
  }
}
