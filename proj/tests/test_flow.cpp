#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <thread>
#include <vector>

#include "cbp/flow.hpp"

using namespace cbp;

namespace {

const std::vector<double> kGrid = {0.1, 0.5, 1, 5, 10};

std::vector<BranchingMechanism> closed_forms() {
  return {BranchingMechanism::stable(1, 1),         BranchingMechanism::stable(2, 0.5),
          BranchingMechanism::stable(1, 0.3),       BranchingMechanism::stable_sum(1, 0.5),
          BranchingMechanism::reciprocal_sum(1, 0.5), BranchingMechanism::reciprocal_sum(0.8, 0.2),
          BranchingMechanism::log_bernstein(1),      BranchingMechanism::log_bernstein(0.5),
          BranchingMechanism::quadratic(1)};
}

// phi for LogBernstein(beta) after substituting log(1 + 1/xi) = w^2
double log_bernstein_phi_oracle(double beta, double z) {
  double top = std::sqrt(std::log1p(1 / z));
  auto f = [&](double w) {
    double v = w * w;
    return 2 * std::pow(w, 2 * beta + 1) / -std::expm1(-v);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, top, 12, 1e-14);
}

double bisect_decreasing(auto g, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Phi, StableClosedForm) {
  for (double c : {0.5, 1.0, 3.0})
    for (double a : {0.3, 0.5, 1.0}) {
      CumulantFlow f(BranchingMechanism::stable(c, a));
      for (double z : {1e-3, 0.1, 1.0, 10.0, 1e3})
        EXPECT_NEAR(f.phi(z), std::pow(z, -a) / (c * a), 1e-14 * f.phi(z));
    }
  EXPECT_DOUBLE_EQ(CumulantFlow(BranchingMechanism::stable(1, 1)).phi(2), 0.5);
}

TEST(Phi, ReciprocalSum) {
  CumulantFlow f(BranchingMechanism::reciprocal_sum(1, 0.5));
  EXPECT_NEAR(f.phi(1), 3.0, 1e-13);
  EXPECT_THROW(f.phi(0), Error);
  EXPECT_THROW(f.phi(-1), Error);
}

TEST(Phi, StableSumQuadrature) {
  CumulantFlow f(BranchingMechanism::stable_sum(1, 0.5));
  for (double z : {1e-8, 1e-5, 1e-3, 0.1, 0.7, 1.0, 3.0, 1e2, 1e5, 1e8}) {
    double a = std::sqrt(z);
    double oracle = 2 * (1 / a - std::log1p(1 / a));
    EXPECT_NEAR(f.phi(z), oracle, 1e-11 * oracle) << z;
  }
}

TEST(Phi, LogBernsteinQuadrature) {
  for (double beta : {1.0, 0.5}) {
    CumulantFlow f(BranchingMechanism::log_bernstein(beta));
    for (double z : {1e-12, 1e-6, 1e-2, 0.5, 1.0, 2.0, 1e2, 1e6}) {
      double oracle = log_bernstein_phi_oracle(beta, z);
      EXPECT_NEAR(f.phi(z), oracle, 1e-11 * oracle) << beta << " " << z;
    }
  }
}

TEST(Phi, GeneralMatchesStable) {
  CumulantFlow g(BranchingMechanism::general(LevyTriplet::stable_equivalent(1, 0.5)));
  for (double z : {1e-4, 0.3, 1.0, 50.0}) {
    double exact = 2 * std::pow(z, -0.5);
    EXPECT_NEAR(g.phi(z), exact, 1e-9 * exact) << z;
  }
  double t = 1e4;
  EXPECT_NEAR(g.varphi(t), std::pow(0.5 * t, -2.0), 1e-8 * std::pow(0.5 * t, -2.0));
}

TEST(Phi, StrictlyDecreasing) {
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    double prev = num::kInf;
    for (double r = -30; r <= 30; r += 0.5) {
      double v = f.phi_at_log(r);
      EXPECT_LT(v, prev) << m.name() << " " << r;
      EXPECT_GT(v, 0);
      prev = v;
    }
  }
}

TEST(Varphi, Examples) {
  for (double a : {0.3, 0.5, 1.0}) {
    CumulantFlow f(BranchingMechanism::stable(2, a));
    for (double t : {1e-2, 1.0, 1e3, 1e8})
      EXPECT_NEAR(f.varphi(t), std::pow(2 * a * t, -1 / a), 1e-14 * f.varphi(t));
  }
  EXPECT_DOUBLE_EQ(CumulantFlow(BranchingMechanism::stable(1, 1)).varphi(4), 0.25);

  CumulantFlow lb(BranchingMechanism::log_bernstein(1));
  double oracle =
      bisect_decreasing([](double z) { return log_bernstein_phi_oracle(1, z) - 100; }, 1e-30, 1.0);
  EXPECT_NEAR(lb.varphi(100), oracle, 1e-12 * oracle);
}

TEST(Varphi, RoundTrip) {
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : {1e-3, 0.1, 1.0, 10.0, 1e3, 1e6}) {
      double r = f.log_varphi(t);
      EXPECT_NEAR(f.phi_at_log(r), t, 10 * f.tolerances().quad_rel_tol * t) << m.name() << " " << t;
    }
  }
}

TEST(Varphi, LogScaleBeyondUnderflow) {
  // varphi(1e8) ~ exp(-sqrt(2e8)) for LogBernstein(1)
  CumulantFlow f(BranchingMechanism::log_bernstein(1));
  double r = f.log_varphi(1e8);
  EXPECT_LT(r, -1.4e4);
  EXPECT_NEAR(f.phi_at_log(r), 1e8, 1e-10 * 1e8);
  EXPECT_EQ(f.varphi(1e8), 0.0);
}

TEST(U, Examples) {
  for (double a : {0.3, 0.5, 1.0}) {
    CumulantFlow f(BranchingMechanism::stable(1, a));
    for (double t : kGrid)
      for (double l : kGrid) {
        double exact = std::pow(std::pow(l, -a) + a * t, -1 / a);
        EXPECT_NEAR(f.u(t, l), exact, 1e-14 * exact);
      }
  }
  CumulantFlow q(BranchingMechanism::quadratic(0.5));
  for (double t : kGrid)
    for (double l : kGrid) EXPECT_NEAR(q.u(t, l), l / (1 + 0.5 * t * l), 1e-15);
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    EXPECT_EQ(f.u(0, 0.7), 0.7);
    EXPECT_EQ(f.u(3, 0), 0.0);
    EXPECT_NEAR(f.u(3, num::kInf), f.varphi(3), 1e-15 * f.varphi(3)) << m.name();
  }
}

TEST(U, OdeExamples) {
  CumulantFlow s(BranchingMechanism::stable(1, 1));
  EXPECT_NEAR(s.u_ode(1, 1).value, 0.5, 1e-8 * 0.5);
  EXPECT_EQ(s.u_ode(0, 1.3).value, 1.3);
  CumulantFlow q(BranchingMechanism::quadratic(1));
  EXPECT_NEAR(q.u_ode(2, 3).value, 3.0 / 7, 1e-8 * 3.0 / 7);
}

TEST(U, OracleAgreement) {
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : kGrid)
      for (double l : kGrid) {
        double a = f.u(t, l);
        auto b = f.u_ode(t, l);
        EXPECT_FALSE(b.absorbed);
        EXPECT_NEAR(a, b.value, 1e-8 * a) << m.name() << " t=" << t << " l=" << l;
      }
  }
}

TEST(U, Semigroup) {
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : kGrid)
      for (double s : kGrid)
        for (double l : kGrid) {
          double lhs = f.u(t, f.u(s, l));
          double rhs = f.u(t + s, l);
          EXPECT_NEAR(lhs, rhs, 1e-9 * (1 + rhs)) << m.name();
        }
  }
}

TEST(U, Monotonicity) {
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : kGrid) {
      double prev = 0;
      for (double l : kGrid) {
        double v = f.u(t, l);
        EXPECT_GT(v, prev);
        EXPECT_LE(v, l);
        prev = v;
      }
    }
    for (double l : kGrid) {
      double prev = l;
      for (double t : kGrid) {
        double v = f.u(t, l);
        EXPECT_LT(v, prev) << m.name();
        prev = v;
      }
    }
  }
}

TEST(U, BranchingPropertyExponentAdditivity) {
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : kGrid)
      for (double l : kGrid) {
        double u = f.u(t, l);
        for (double x : {0.3, 1.0, 2.0})
          for (double y : {0.5, 4.0}) {
            EXPECT_NEAR((x + y) * u, x * u + y * u, 4 * num::kEps * (x + y) * u);
            double joint = std::exp(-(x + y) * u);
            double split = std::exp(-x * u) * std::exp(-y * u);
            EXPECT_NEAR(joint, split, 1e-13 * joint);
          }
      }
  }
}

TEST(U, DuDlambda) {
  CumulantFlow s(BranchingMechanism::stable(1, 1));
  EXPECT_NEAR(s.du_dlambda(1, 1), 0.25, 1e-15);
  CumulantFlow q(BranchingMechanism::quadratic(1));
  EXPECT_NEAR(q.du_dlambda(1, 1), 0.25, 1e-15);
  EXPECT_EQ(q.du_dlambda(0, 2.0), 1.0);
  EXPECT_THROW(q.du_dlambda(1, 0), Error);

  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : kGrid)
      for (double l : kGrid) {
        double h = 1e-4 * l;
        double fd = (f.u(t, l + h) - f.u(t, l - h)) / (2 * h);
        double d = f.du_dlambda(t, l);
        EXPECT_NEAR(d, fd, 1e-5 * d) << m.name() << " t=" << t << " l=" << l;
      }
  }
}

TEST(Survival, Examples) {
  for (double a : {0.5, 1.0}) {
    CumulantFlow f(BranchingMechanism::stable(1.5, a));
    for (double t : {1.0, 10.0, 1e3}) {
      double exact = -std::expm1(-std::pow(1.5 * a * t, -1 / a));
      EXPECT_NEAR(f.survival(t, 1), exact, 1e-14 * exact);
    }
  }
  CumulantFlow q(BranchingMechanism::quadratic(1));
  EXPECT_NEAR(q.survival(50, 1), -std::expm1(-0.02), 1e-17);
  CumulantFlow s(BranchingMechanism::stable(1, 1));
  EXPECT_NEAR(s.fbar(100), -std::expm1(-0.01), 1e-17);
  EXPECT_NEAR(s.survival(1e-12, 1), 1.0, 1e-15);
  EXPECT_NEAR(s.fbar(1e12) / s.varphi(1e12), 1.0, 1e-12);
  // tiny x varphi keeps full relative precision
  EXPECT_NEAR(s.survival(1e10, 1e-8), 1e-18, 1e-30);
}

TEST(Survival, Monotone) {
  const std::vector<double> ts = {10, 50, 100, 1e3, 1e4};
  for (auto const& m : closed_forms()) {
    CumulantFlow f(m);
    for (double t : ts) {
      double prev = 0;
      for (double x : {0.1, 0.5, 1.0, 5.0}) {
        double v = f.survival(t, x);
        EXPECT_GT(v, prev);
        EXPECT_LT(v, 1.0);
        prev = v;
      }
    }
    double prev = 1;
    for (double t : ts) {
      double v = f.survival(t, 1);
      EXPECT_LT(v, prev);
      EXPECT_GT(v, 0);
      prev = v;
    }
  }
}

TEST(Survival, LogBernsteinTail) {
  // -log fbar(t) / sqrt(2 t) -> 1
  CumulantFlow f(BranchingMechanism::log_bernstein(1));
  double prev_err = num::kInf;
  for (double t : {1e2, 1e4, 1e6, 1e8}) {
    double ratio = -f.log_fbar(t) / std::sqrt(2 * t);
    double err = std::abs(ratio - 1);
    EXPECT_LT(err, prev_err) << t;
    prev_err = err;
  }
  EXPECT_LT(prev_err, 0.1);
}

TEST(Flow, Mean) {
  CumulantFlow f(BranchingMechanism::stable(1, 0.5));
  EXPECT_EQ(f.mean(3.0, 2.5), 2.5);
  CumulantFlow g(BranchingMechanism::general(LevyTriplet::stable_equivalent(1, 0.5)));
  EXPECT_EQ(g.mean(10.0, 1.0), 1.0);
}

TEST(Flow, Preconditions) {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (Error const& e) {
      return e.code();
    }
    return ErrorCode::config;
  };
  EXPECT_EQ(code([] { CumulantFlow(BranchingMechanism::general(LevyTriplet(1, 1))); }),
            ErrorCode::not_critical);
  EXPECT_EQ(code([] {
              CumulantFlow(BranchingMechanism::general(
                  LevyTriplet(0, 0, LevyDensity{DensityKind::exponential, 1.0, 1.0})));
            }),
            ErrorCode::grey_condition_fails);
  EXPECT_EQ(code([] { CumulantFlow(BranchingMechanism::general(LevyTriplet(0, 0))); }),
            ErrorCode::trivial_mechanism);
}

TEST(Flow, ConcurrentCallersAgree) {
  CumulantFlow f(BranchingMechanism::log_bernstein(0.5));
  std::vector<double> ts = {1e1, 1e3, 1e5, 1e7};
  std::vector<std::vector<double>> out(8);
  std::vector<std::thread> pool;
  for (int i = 0; i < 8; ++i)
    pool.emplace_back([&, i] {
      for (std::size_t k = 0; k < ts.size(); ++k)
        out[i].push_back(f.log_varphi(ts[(k + i) % ts.size()]));
      std::rotate(out[i].rbegin(), out[i].rbegin() + (i % ts.size()), out[i].rend());
    });
  for (auto& th : pool) th.join();
  CumulantFlow fresh(BranchingMechanism::log_bernstein(0.5));
  for (std::size_t k = 0; k < ts.size(); ++k) {
    double ref = fresh.log_varphi(ts[k]);
    for (auto const& o : out) EXPECT_EQ(o[k], ref);
  }
}
