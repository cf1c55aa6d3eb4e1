#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/flow.hpp"
#include "cbp/invert.hpp"
#include "cbp/keyvalue.hpp"
#include "cbp/limits.hpp"
#include "cbp/mechanism.hpp"
#include "cbp/mechanism_io.hpp"
#include "cbp/montecarlo.hpp"
#include "cbp/regvar.hpp"
#include "cbp/table.hpp"

namespace cbp {

inline std::vector<std::string> const& experiment_names() {
  static const std::vector<std::string> names = {
      "flow-check", "theorem32", "theorem42", "example1", "example2", "example3",  "example4",
      "example5",   "regvar",    "mc-feller", "mc-stable", "invert-check"};
  return names;
}

inline std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(a * std::pow(b / a, static_cast<double>(k) / (n - 1)));
  return g;
}

inline std::vector<double> linear_grid(double a, double b, int n) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(a + (b - a) * k / (n - 1));
  return g;
}

struct ExperimentConfig {
  std::string experiment;
  std::optional<BranchingMechanism> mechanism;
  std::vector<double> t, theta, y;
  double x = 1;
  std::string norming = "fbar";  //!< fbar or power
  std::uint64_t seed = 1;
  std::size_t paths = 0;
  double step = 0;
  int decades = 6;
  double tolerance = 0;
  bool dump = false;
  std::string config_hash;
};

namespace detail {

inline std::vector<double> grid_key(KeyValueFile const& kv, std::string const& key,
                                    std::vector<double> fallback) {
  auto g = kv.list(key, std::move(fallback));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0) || !std::isfinite(g[i]))
      throw Error(ErrorCode::config, kv.where(key) + ": grid values must be positive and finite");
    if (i > 0 && !(g[i] > g[i - 1]))
      throw Error(ErrorCode::config, kv.where(key) + ": grid must be strictly increasing");
  }
  return g;
}

inline void require_variant(ExperimentConfig const& c, bool ok, std::string const& what) {
  if (!ok)
    throw Error(ErrorCode::config, c.experiment + " requires " + what + ", got " +
                                       (c.mechanism ? c.mechanism->name() : "no mechanism"));
}

}  // namespace detail

/*!
 * Reads the settings of `experiment` from `kv`. Keys the experiment does not
 * use are rejected. `mechanism_file` is resolved relative to `base_dir`.
 */
inline ExperimentConfig read_config(KeyValueFile const& kv, std::string const& experiment,
                                    std::optional<std::uint64_t> seed_override = {},
                                    std::filesystem::path const& base_dir = {}) {
  auto const& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    throw Error(ErrorCode::config, "unknown experiment '" + experiment + "'");
  ExperimentConfig c;
  c.experiment = experiment;
  const std::string& e = experiment;
  std::string canonical = "experiment=" + e + "\n";
  for (auto const& [k, v] : kv.entries()) canonical += k + "=" + v.value + "\n";

  if (kv.has("mechanism") && kv.has("mechanism_file"))
    throw Error(ErrorCode::config, kv.where("mechanism_file") + ": give either mechanism or mechanism_file");
  if (kv.has("mechanism")) {
    c.mechanism = read_mechanism(kv);
  } else if (kv.has("mechanism_file")) {
    auto path = base_dir / kv.string("mechanism_file");
    auto mk = KeyValueFile::load(path.string());
    c.mechanism = read_mechanism(mk);
    mk.reject_unused();
    for (auto const& [k, v] : mk.entries()) canonical += "mechanism_file." + k + "=" + v.value + "\n";
  }
  bool needs_mechanism = e != "invert-check";
  if (needs_mechanism && !c.mechanism)
    throw Error(ErrorCode::config, kv.source() + ": missing required key 'mechanism' (or mechanism_file)");

  c.seed = kv.unsigned_integer("seed", 1);
  auto thetas = log_grid(0.1, 10, 21);
  if (e == "flow-check") {
    std::vector<double> g{0.1, 0.5, 1, 5, 10};
    c.t = detail::grid_key(kv, "t", g);
    c.theta = detail::grid_key(kv, "lambda", g);
    c.tolerance = kv.number("tolerance", 1e-8);
  } else if (e == "theorem32" || e == "example1" || e == "example2" || e == "example3" ||
             e == "example4") {
    std::vector<double> tg{1e2, 1e4, 1e6};
    if (e == "example2") tg = {1e1, 1e2, 1e4, 1e6};
    if (e == "example3" || e == "example4") tg = {1e2, 1e4, 1e6, 1e8};
    c.t = detail::grid_key(kv, "t", tg);
    c.theta = detail::grid_key(kv, "theta", thetas);
    c.x = kv.number("x", 1.0);
    if (e == "theorem32") c.norming = kv.string("norming", "fbar");
    c.tolerance = kv.number("tolerance", 1e-3);
  } else if (e == "theorem42" || e == "example5") {
    c.t = detail::grid_key(kv, "t", {1e2, 1e4, 1e6, 1e8});
    c.y = detail::grid_key(kv, "y", {0.5, 1, 2});
    c.x = kv.number("x", 1.0);
    c.tolerance = kv.number("tolerance", 0.1);
  } else if (e == "regvar") {
    c.decades = static_cast<int>(kv.unsigned_integer("decades", 6));
    c.tolerance = kv.number("tolerance", 0.02);
  } else if (e == "mc-feller" || e == "mc-stable") {
    bool feller = e == "mc-feller";
    c.t = detail::grid_key(kv, "t", {feller ? 50.0 : 20.0});
    c.y = detail::grid_key(kv, "y", feller ? linear_grid(0.1, 5, 50) : log_grid(0.05, 20, 41));
    c.x = kv.number("x", 1.0);
    c.paths = kv.unsigned_integer("paths", feller ? 400000 : 100000);
    if (!feller) {
      c.step = kv.number("step", 0.05);
      c.norming = kv.string("norming", "fbar");
    }
    c.dump = kv.boolean("dump", false);
    c.tolerance = kv.number("tolerance", feller ? 0.05 : 0.08);
    if (c.paths == 0) throw Error(ErrorCode::config, kv.where("paths") + ": must be positive");
  } else {
    c.y = detail::grid_key(kv, "y", linear_grid(0.1, 10, 50));
    c.tolerance = kv.number("tolerance", 1e-6);
  }
  if (seed_override) c.seed = *seed_override;
  if (!(c.x > 0) || !std::isfinite(c.x))
    throw Error(ErrorCode::config, kv.where("x") + ": x must be positive");
  if (!(c.tolerance > 0))
    throw Error(ErrorCode::config, kv.where("tolerance") + ": tolerance must be positive");
  if (c.norming != "fbar" && c.norming != "power")
    throw Error(ErrorCode::config, kv.where("norming") + ": expected fbar or power");

  if (auto u = kv.unused(); !u.empty())
    throw Error(ErrorCode::config, kv.where(u.front()) + ": not used by experiment " + e);

  auto const& m = c.mechanism;
  using detail::require_variant;
  if (e == "example1") require_variant(c, m->as<Stable>(), "a stable mechanism");
  if (e == "example2" || e == "mc-feller") require_variant(c, m->as<Quadratic>(), "a quadratic mechanism");
  if (e == "example3") require_variant(c, m->as<ReciprocalSum>(), "a reciprocal_sum mechanism");
  if (e == "example4") require_variant(c, m->as<StableSum>(), "a stable_sum mechanism");
  if (e == "example5") require_variant(c, m->as<LogBernstein>(), "a log_bernstein mechanism");
  if (e == "mc-stable") require_variant(c, m->as<Stable>(), "a stable mechanism");
  if (e == "theorem32" && c.norming == "power")
    require_variant(c, m->as<Stable>(), "a stable mechanism for power norming");

  canonical += "seed=" + std::to_string(c.seed) + "\n";
  c.config_hash = hex64(fnv1a(canonical));
  return c;
}

struct NamedTable {
  std::string stem;
  TransformTable table;
  PlotStyle plot = PlotStyle::error_vs_t;
};

struct ExperimentResult {
  bool passed = true;
  std::vector<std::string> summary;
  std::vector<NamedTable> tables;
  std::string sample_dump;
};

namespace detail {

inline std::string trend(std::vector<std::pair<double, double>> const& err) {
  bool strict = true, weak = true;
  for (std::size_t i = 1; i < err.size(); ++i) {
    strict &= err[i].second < err[i - 1].second;
    weak &= err[i].second <= err[i - 1].second;
  }
  return strict ? "decreasing" : weak ? "nonincreasing" : "not monotone";
}

inline std::string g(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

class Runner {
 public:
  explicit Runner(ExperimentConfig const& c) : c_(c) {}

  ExperimentResult run() {
    auto const& e = c_.experiment;
    if (e == "flow-check") flow_check();
    else if (e == "theorem32") transform_study(e, c_.norming == "power");
    else if (e == "example1") transform_study(e, true);
    else if (e == "example2") example2();
    else if (e == "example3" || e == "example4") example34();
    else if (e == "theorem42") theorem42();
    else if (e == "example5") example5();
    else if (e == "regvar") regvar();
    else if (e == "mc-feller") mc_feller();
    else if (e == "mc-stable") mc_stable();
    else invert_check();
    return std::move(r_);
  }

 private:
  TransformTable table(std::string probe, std::string norming) const {
    TransformTable t;
    t.probe_name = std::move(probe);
    t.metadata = {{"artifact", kArtifactVersion},
                  {"experiment", c_.experiment},
                  {"mechanism", c_.mechanism ? c_.mechanism->name() : "none"},
                  {"norming", std::move(norming)},
                  {"x", format17(c_.x)}};
    FlowTolerances ft;
    InversionOptions io;
    t.metadata.push_back({"tolerances", "quad_rel=" + g(ft.quad_rel_tol) + " root=" +
                                            g(ft.root_tol) + " ode=" + g(ft.ode_tol) +
                                            " talbot_nodes=" + std::to_string(io.talbot_nodes) +
                                            " threshold=" + g(c_.tolerance)});
    t.metadata.push_back({"seed", std::to_string(c_.seed)});
    t.metadata.push_back({"config_hash", c_.config_hash});
    return t;
  }

  void add(std::string stem, TransformTable t, PlotStyle p = PlotStyle::error_vs_t) {
    r_.tables.push_back({std::move(stem), std::move(t), p});
  }

  void verdict(std::string const& label, bool ok, std::string const& detail) {
    r_.summary.push_back(label + ": " + detail + " -> " + (ok ? "PASS" : "FAIL"));
    r_.passed = r_.passed && ok;
  }

  //! threshold at the largest t plus a strictly decreasing sup error over t
  void convergence_verdict(std::string const& label, TransformTable const& t, double tol,
                           bool need_decrease = true) {
    auto err = t.error_by_t();
    double e = t.max_error_at_largest_t();
    auto tr = trend(err);
    bool ok = e <= tol && (!need_decrease || tr == "decreasing");
    verdict(label, ok,
            "max_error(t=" + g(err.back().first) + ")=" + g(e) + " threshold=" + g(tol) +
                " trend=" + tr);
  }

  void flow_check() {
    CumulantFlow f(*c_.mechanism);
    auto tab = table("lambda", "none");
    double worst = 0;
    for (double t : c_.t)
      for (double l : c_.theta) {
        double u = f.u(t, l);
        auto ode = f.u_ode(t, l);
        tab.add(t, l, u, ode.value);
        worst = std::max(worst, std::abs(u - ode.value) / std::abs(ode.value));
      }
    add("flow-check", tab);
    verdict("flow-check", worst <= c_.tolerance,
            "max relative |u - u_ode| = " + g(worst) + " threshold=" + g(c_.tolerance));
  }

  void transform_rows(TransformTable& tab, CumulantFlow const& f, LimitLaw const& lim,
                      bool power, double alpha) {
    for (double t : c_.t) {
      Norming n = power ? power_norming(t, alpha) : Norming{FbarNorming{}};
      ConditionalLaw law(f, t, c_.x, n);
      for (double th : c_.theta) tab.add(t, th, law.conditioned_lt(th), lim.lt(th));
    }
  }

  void transform_study(std::string const& name, bool power) {
    CumulantFlow f(*c_.mechanism);
    double a = c_.mechanism->alpha();
    if (a < AlphaZeroScheme::kAlphaTolerance)
      throw Error(ErrorCode::config, name + " needs alpha > 0; use theorem42 for alpha = 0");
    LimitLaw lim(LinnikType{a, 1.0});
    if (power) {
      auto const* s = c_.mechanism->as<Stable>();
      lim = LimitLaw::power_normed_stable(s->c, s->alpha);
    }
    auto tab = table("theta", power ? "t^(-1/alpha)" : "fbar");
    transform_rows(tab, f, lim, power, a);
    convergence_verdict(name, tab, c_.tolerance);
    add(name, std::move(tab));
  }

  void example2() {
    double b = c_.mechanism->as<Quadratic>()->b;
    CumulantFlow f(*c_.mechanism);
    // X_t / t -> exponential with rate 2 / sigma = 1 / b
    LimitLaw lim(LinnikType{1.0, b});
    auto tab = table("theta", "1/t");
    for (double t : c_.t) {
      ConditionalLaw law(f, t, c_.x, custom_norming(1 / t));
      for (double th : c_.theta) tab.add(t, th, law.conditioned_lt(th), lim.lt(th));
    }
    convergence_verdict("example2", tab, c_.tolerance);
    add("example2", std::move(tab));
  }

  void example34() {
    CumulantFlow f(*c_.mechanism);
    double a = c_.mechanism->alpha();
    auto tab = table("theta", "fbar");
    transform_rows(tab, f, LimitLaw(LinnikType{a, 1.0}), false, a);
    convergence_verdict(c_.experiment, tab, c_.tolerance);
    add(c_.experiment, std::move(tab));

    auto k = table("power", "none");
    for (double t : c_.t)
      k.add(t, 1 / a, std::exp(f.log_fbar(t) + std::log(a * t) / a), 1.0);
    std::string sym = c_.experiment == "example4" ? "gamma" : "alpha";
    convergence_verdict(c_.experiment + " F(t) (" + sym + " t)^(1/" + sym + ")", k, 0.05, false);
    add(c_.experiment + "_constant", std::move(k));
  }

  void theorem42() {
    AlphaZeroScheme s{CumulantFlow(*c_.mechanism)};
    auto tab = table("y", "L(1/F(t)) V(X_t)");
    for (double t : c_.t)
      for (double y : c_.y) tab.add(t, y, s.normalized_cdf(t, c_.x, y), -std::expm1(-y));
    convergence_verdict("theorem42", tab, c_.tolerance);
    add("theorem42", std::move(tab), PlotStyle::cdf_overlay);

    auto ts = table("probe", "none");
    for (double t : c_.t) ts.add(t, 0, s.timescale_ratio(t), 1.0);
    double last = ts.rows.back().finite_t_value;
    bool mono = true;
    for (std::size_t i = 1; i < ts.rows.size(); ++i)
      mono &= ts.rows[i].abs_error <= ts.rows[i - 1].abs_error + 1e-12;
    verdict("theorem42 V(1/F(t))/t", last >= 0.8 && last <= 1.2 && mono,
            "value(t=" + g(ts.rows.back().t) + ")=" + g(last) + " window=[0.8, 1.2] approach=" +
                (mono ? "monotone" : "not monotone"));
    add("theorem42_timescale", std::move(ts));
  }

  void example5() {
    double beta = c_.mechanism->as<LogBernstein>()->beta;
    CumulantFlow f(*c_.mechanism);
    auto tab = table("y", "log^(beta+1) X_t / ((beta+1) log^beta(1/F(t)))");
    for (double t : c_.t) {
      ConditionalLaw law(f, t, c_.x, AlphaZeroNorming{});
      double log_inv_fbar = -f.log_fbar(t);
      for (double y : c_.y) {
        double log_threshold = std::pow((beta + 1) * y * std::pow(log_inv_fbar, beta), 1 / (beta + 1));
        tab.add(t, y, law.conditional_cdf_log(log_threshold).value, -std::expm1(-y));
      }
    }
    convergence_verdict("example5", tab, c_.tolerance);
    add("example5", std::move(tab), PlotStyle::cdf_overlay);

    auto k = table("probe", "none");
    for (double t : c_.t)
      k.add(t, 0, -f.log_fbar(t) / std::pow((beta + 1) * t, 1 / (beta + 1)), 1.0);
    convergence_verdict("example5 -log F(t) / ((beta+1) t)^(1/(beta+1))", k, 0.1, false);
    add("example5_constant", std::move(k));
  }

  void regvar() {
    CumulantFlow f(*c_.mechanism);
    double a = c_.mechanism->alpha();
    if (a < AlphaZeroScheme::kAlphaTolerance)
      throw Error(ErrorCode::config, "regvar needs alpha > 0; F is not regularly varying for alpha = 0");
    auto grid = decade_grid(Endpoint::infinity, c_.decades);
    auto est = estimate_index_on_grid([&](double t) { return f.log_fbar(t); }, grid,
                                      Endpoint::infinity);
    auto tab = table("interval", "none");
    for (std::size_t i = 0; i < est.local_slopes.size(); ++i)
      tab.add(std::sqrt(grid[i] * grid[i + 1]), static_cast<double>(i), est.local_slopes[i], -1 / a);
    add("regvar", std::move(tab));
    double err = std::abs(est.index + 1 / a);
    verdict("regvar index of F", err <= c_.tolerance,
            "estimate=" + g(est.index) + " expected=" + g(-1 / a) + " error=" + g(err) +
                " threshold=" + g(c_.tolerance) + " drift=" + g(est.standard_error) +
                " global_fit=" + g(est.global_fit));

    auto const* gen = c_.mechanism->as<General>();
    if (!gen) return;
    auto d = levy_tail_diagnostic(gen->triplet, decade_grid(Endpoint::infinity, c_.decades),
                                  decade_grid(Endpoint::zero, c_.decades));
    if (d.trivial_measure) {
      r_.summary.push_back("regvar Levy tail: Lambda = 0, nothing to diagnose");
      return;
    }
    double ue = std::abs(d.U_at_infinity->index - (1 - a));
    verdict("regvar index of U at infinity", ue <= 0.05,
            "estimate=" + g(d.U_at_infinity->index) + " expected 1 - alpha=" + g(1 - a) +
                " threshold=0.05 U-hat index at 0=" + g(d.U_hat_at_zero->index));
  }

  void empirical_table(std::string const& stem, EmpiricalLaw const& law, double t,
                       std::function<double(double)> const& ref, std::string const& norming) {
    auto tab = table("y", norming);
    for (double y : c_.y) tab.add(t, y, law.cdf(y), ref(y));
    add(stem, std::move(tab), PlotStyle::cdf_overlay);
  }

  void mc_feller() {
    double b = c_.mechanism->as<Quadratic>()->b;
    CumulantFlow f(*c_.mechanism);
    std::ostringstream dump;
    for (double t : c_.t) {
      auto s = sample_feller_paths(t, c_.x, b, c_.paths, c_.seed);
      if (c_.dump) write_sample_dump(dump, s);
      auto law = empirical_conditional(s, t);
      auto ref = [b](double y) { return -std::expm1(-y / b); };
      empirical_table("mc-feller" + suffix(t), law, t, ref, "1/t");
      double ks = law.ks_distance(ref);
      survival_line("mc-feller", t, law, f.survival(t, c_.x));
      verdict("mc-feller t=" + g(t), ks <= c_.tolerance,
              "KS=" + g(ks) + " threshold=" + g(c_.tolerance) +
                  " survivors=" + std::to_string(law.surviving_paths()));
    }
    r_.sample_dump = dump.str();
  }

  void mc_stable() {
    auto const* st = c_.mechanism->as<Stable>();
    CumulantFlow f(*c_.mechanism);
    bool power = c_.norming == "power";
    LimitLaw lim = power ? LimitLaw::power_normed_stable(st->c, st->alpha)
                         : LimitLaw(LinnikType{st->alpha, 1.0});
    std::ostringstream dump;
    for (double t : c_.t) {
      auto s = sample_stable_paths(t, c_.x, st->c, st->alpha, c_.step, c_.paths, c_.seed);
      if (c_.dump) write_sample_dump(dump, s);
      double log_q = power ? -std::log(t) / st->alpha : f.log_fbar(t);
      auto law = empirical_conditional(s, std::exp(-log_q));
      auto ref = [&](double y) { return lim.cdf(y); };
      empirical_table("mc-stable" + suffix(t), law, t, ref, power ? "t^(-1/alpha)" : "fbar");
      double ks = law.ks_distance(ref);
      survival_line("mc-stable", t, law, f.survival(t, c_.x));
      verdict("mc-stable t=" + g(t), ks <= c_.tolerance,
              "KS=" + g(ks) + " threshold=" + g(c_.tolerance) + " step=" + g(c_.step) +
                  " survivors=" + std::to_string(law.surviving_paths()));
    }
    r_.sample_dump = dump.str();
  }

  void survival_line(std::string const& name, double t, EmpiricalLaw const& law, double exact) {
    r_.summary.push_back(name + " t=" + g(t) + ": survival empirical=" + g(law.survival_fraction()) +
                         " +- " + g(law.survival_standard_error()) + " exact=" + g(exact));
  }

  std::string suffix(double t) const { return c_.t.size() == 1 ? "" : "_t" + g(t); }

  void invert_check() {
    TransformHandle exp_h{[](double s) { return 1 / (1 + s); },
                          [](std::complex<double> s) { return 1.0 / (1.0 + s); }, 1.0};
    auto tab = table("y", "none");
    for (double y : c_.y) tab.add(0, y, invert_cdf(exp_h, y).value, -std::expm1(-y));
    double e = tab.max_error_at_largest_t();
    verdict("invert-check 1/(1+theta)", e <= c_.tolerance,
            "max |H - (1 - e^-y)|=" + g(e) + " threshold=" + g(c_.tolerance));
    add("invert-check", std::move(tab), PlotStyle::cdf_overlay);

    if (!c_.mechanism) return;
    double a = c_.mechanism->alpha();
    if (a < AlphaZeroScheme::kAlphaTolerance) return;
    LimitLaw lim(LinnikType{a, 1.0});
    auto h = lim.transform();
    InversionOptions st;
    st.method = InversionMethod::stehfest;
    auto lt = table("y", "none");
    for (double y : c_.y) lt.add(0, y, invert_cdf(h, y).value, invert_cdf(h, y, st).value);
    double d = lt.max_error_at_largest_t();
    verdict("invert-check limit law Talbot vs Stehfest", d <= 1e-3,
            "max difference=" + g(d) + " threshold=0.001");
    add("invert-check_limit", std::move(lt), PlotStyle::cdf_overlay);
  }

  ExperimentConfig const& c_;
  ExperimentResult r_;
};

}  // namespace detail

inline ExperimentResult run_experiment(ExperimentConfig const& config) {
  return detail::Runner(config).run();
}

//! <stem>.csv and <stem>.dat per table, plus <experiment>_samples.txt when dumped.
inline std::vector<std::string> write_outputs(ExperimentConfig const& config,
                                              ExperimentResult const& result,
                                              std::filesystem::path const& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::config, "cannot create output directory '" + dir.string() + "'");
  std::vector<std::string> written;
  for (auto const& nt : result.tables) {
    std::ostringstream csv, dat;
    write_csv(csv, nt.table);
    emit_plotdata(dat, nt.table, nt.plot);
    for (auto const& [name, text] : {std::pair{nt.stem + ".csv", csv.str()},
                                     std::pair{nt.stem + ".dat", dat.str()}}) {
      write_file((dir / name).string(), text);
      written.push_back((dir / name).string());
    }
  }
  if (config.dump && !result.sample_dump.empty()) {
    auto p = dir / (config.experiment + "_samples.txt");
    write_file(p.string(), result.sample_dump);
    written.push_back(p.string());
  }
  return written;
}

}  // namespace cbp
