#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "cbp/error.hpp"
#include "cbp/keyvalue.hpp"
#include "cbp/mechanism.hpp"

namespace cbp {

/*!
 * Mechanism from key-value settings:
 *
 *   mechanism = stable          c, alpha
 *   mechanism = stable_sum      beta, gamma
 *   mechanism = reciprocal_sum  alpha, beta
 *   mechanism = log_bernstein   beta
 *   mechanism = quadratic       b
 *   mechanism = general         drift, diffusion, and at most one of
 *                               density = pareto | shifted_pareto | exponential
 *                               (density_weight, density_exponent) or
 *                               atoms = x1:m1, x2:m2, ...
 */
inline BranchingMechanism read_mechanism(KeyValueFile const& kv) {
  std::string kind = kv.string("mechanism");
  auto build = [&]() -> BranchingMechanism {
    if (kind == "stable")
      return BranchingMechanism::stable(kv.number("c"), kv.number("alpha"));
    if (kind == "stable_sum")
      return BranchingMechanism::stable_sum(kv.number("beta"), kv.number("gamma"));
    if (kind == "reciprocal_sum")
      return BranchingMechanism::reciprocal_sum(kv.number("alpha"), kv.number("beta"));
    if (kind == "log_bernstein") return BranchingMechanism::log_bernstein(kv.number("beta"));
    if (kind == "quadratic") return BranchingMechanism::quadratic(kv.number("b"));
    if (kind == "general") {
      double drift = kv.number("drift", 0.0);
      double diffusion = kv.number("diffusion", 0.0);
      LevyTriplet::Measure measure;
      if (kv.has("density") && kv.has("atoms"))
        throw Error(ErrorCode::config, kv.where("atoms") + ": density and atoms are exclusive");
      if (kv.has("density")) {
        std::string d = kv.string("density");
        LevyDensity g;
        if (d == "pareto")
          g.kind = DensityKind::pareto;
        else if (d == "shifted_pareto")
          g.kind = DensityKind::shifted_pareto;
        else if (d == "exponential")
          g.kind = DensityKind::exponential;
        else
          throw Error(ErrorCode::config, kv.where("density") + ": unknown density '" + d +
                                             "' (pareto, shifted_pareto, exponential)");
        g.weight = kv.number("density_weight", 1.0);
        g.exponent = kv.number("density_exponent");
        measure = g;
      } else if (kv.has("atoms")) {
        std::string s = kv.string("atoms");
        for (char& ch : s)
          if (ch == ',' || ch == ':') ch = ' ';
        std::istringstream is(s);
        std::vector<LevyAtom> atoms;
        double pos, mass;
        while (is >> pos) {
          if (!(is >> mass))
            throw Error(ErrorCode::config, kv.where("atoms") + ": expected position:mass pairs");
          atoms.push_back({pos, mass});
        }
        if (!is.eof() || atoms.empty())
          throw Error(ErrorCode::config, kv.where("atoms") + ": expected position:mass pairs");
        measure = atoms;
      }
      return BranchingMechanism::general(LevyTriplet(drift, diffusion, measure));
    }
    throw Error(ErrorCode::config,
                kv.where("mechanism") + ": unknown mechanism '" + kind +
                    "' (stable, stable_sum, reciprocal_sum, log_bernstein, quadratic, general)");
  };
  try {
    return build();
  } catch (Error const& e) {
    if (e.code() == ErrorCode::config) throw;
    throw Error(ErrorCode::config, kv.where("mechanism") + ": " + e.what());
  }
}

inline BranchingMechanism read_mechanism_file(std::string const& path) {
  auto kv = KeyValueFile::load(path);
  auto m = read_mechanism(kv);
  kv.reject_unused();
  return m;
}

}  // namespace cbp
