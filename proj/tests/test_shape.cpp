#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cgm/rng.hpp"
#include "cgm/shape.hpp"

using namespace cgm;

namespace {
const SolvableModel kExp1 = solvable_model(WeightFamily::exponential(1.0));
const SolvableModel kGeom2 = solvable_model(WeightFamily::geometric(2.0));
}  // namespace

TEST_CASE("gamma closed form") {
  CHECK(gamma_curve(kExp1, 1.0) == 4.0);
  CHECK(gamma_curve(kExp1, 0.0) == kExp1.m);
  CHECK(gamma_curve(kGeom2, 0.0) == kGeom2.m);
  // symmetry gamma(s) = s gamma(1/s)
  CHECK(gamma_curve(kExp1, 4.0) == Catch::Approx(4.0 * gamma_curve(kExp1, 0.25)).epsilon(1e-12));
  CHECK(gamma_curve(kGeom2, 4.0) == Catch::Approx(4.0 * gamma_curve(kGeom2, 0.25)).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_curve(kExp1, -0.1), std::domain_error);
}

TEST_CASE("gamma gradient") {
  CHECK(grad_gamma(kExp1, 1.0) == 2.0);
  CHECK(std::isinf(grad_gamma(kExp1, 0.0)));
  for (double s : {0.05, 0.3, 1.0, 5.0, 40.0}) {
    CHECK(grad_gamma(kExp1, s) > kExp1.m);
    // gradient identity gamma'(s) = gamma(1/s) - (1/s) gamma'(1/s)
    const double lhs = grad_gamma(kExp1, s);
    const double rhs = gamma_curve(kExp1, 1 / s) - (1 / s) * grad_gamma(kExp1, 1 / s);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-8));
  }
  CHECK(grad_gamma(kExp1, 1e8) == Catch::Approx(kExp1.m).margin(1e-3));
}

TEST_CASE("legendre transform of the shape") {
  const ShapeCurve exp_curve{kExp1, {}, false};
  const ShapeCurve geom_curve{kGeom2, {}, false};

  SECTION("closed-form values") {
    // exponential m=1: f(a) = a/(a-1)
    CHECK(f_legendre(exp_curve, 2.0).value == Catch::Approx(2.0).margin(1e-8));
    // geometric m=2: f(a) = m(a-1)/(a-m), so f(4) = 3
    CHECK(f_legendre(geom_curve, 4.0).value == Catch::Approx(3.0).margin(1e-8));
    CHECK(f_closed(kGeom2, 4.0) == Catch::Approx(3.0).epsilon(1e-12));
  }
  SECTION("numerical legendre agrees with the closed form") {
    for (double a = 1.05; a < 12; a += 0.23) {
      CHECK(f_legendre(exp_curve, a).value == Catch::Approx(f_closed(kExp1, a)).margin(1e-6));
      if (a > 2.05)
        CHECK(f_legendre(geom_curve, a).value == Catch::Approx(f_closed(kGeom2, a)).margin(1e-6));
    }
  }
  SECTION("a <= m returns the +infinity sentinel") {
    CHECK(std::isinf(f_legendre(exp_curve, 1.0).value));
    CHECK(std::isinf(f_legendre(exp_curve, 0.5).value));
  }
  SECTION("involution f(f(a)) = a") {
    for (int i = 0; i < 50; ++i) {
      const double a = kExp1.m + 0.02 + 0.25 * i;
      const double ff = f_legendre(exp_curve, f_legendre(exp_curve, a).value).value;
      CHECK(std::abs(ff - a) < 1e-8);
    }
  }
  SECTION("f is strictly decreasing and convex on a grid") {
    std::vector<double> vals;
    for (double a = 1.1; a < 8; a += 0.1) vals.push_back(f_legendre(exp_curve, a).value);
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) CHECK(vals[i + 1] < vals[i]);
    for (std::size_t i = 0; i + 2 < vals.size(); ++i)
      CHECK(vals[i] - 2 * vals[i + 1] + vals[i + 2] > -1e-9);
  }
}

TEST_CASE("gamma from f by convex duality") {
  CHECK(gamma_from_f(kExp1, 1.0) == Catch::Approx(4.0).margin(1e-6));
  CHECK(gamma_from_f(kExp1, 0.0) == kExp1.m);
  for (int i = 0; i < 40; ++i) {
    const double s = 0.03 + 0.2 * i;
    CHECK(gamma_from_f(kExp1, s) == Catch::Approx(gamma_curve(kExp1, s)).margin(1e-6));
    CHECK(gamma_from_f(kGeom2, s) == Catch::Approx(gamma_curve(kGeom2, s)).margin(1e-6));
  }
}

TEST_CASE("tilt to velocity") {
  SECTION("exponential m=1, h = (-2,-2)") {
    const DualPoint d = tilt_to_velocity(kExp1, Vec2{-2, -2});
    CHECK(d.alpha == Catch::Approx(2.0).margin(1e-9));
    CHECK(d.t == Catch::Approx(0.0).margin(1e-9));
    CHECK(d.xi.x == Catch::Approx(0.5).margin(1e-9));
    // residual of the defining equation: f(alpha) = -h.e2 + t
    CHECK(std::abs(d.f_alpha - (2.0 + d.t)) < 1e-9);
  }
  SECTION("diagonal shifts move t and fix (alpha, xi)") {
    const DualPoint base = tilt_to_velocity(kExp1, Vec2{-1.7, -2.9});
    const DualPoint shifted = tilt_to_velocity(kExp1, Vec2{-1.7 + 0.8, -2.9 + 0.8});
    CHECK(shifted.t == Catch::Approx(base.t + 0.8).margin(1e-9));
    CHECK(shifted.alpha == Catch::Approx(base.alpha).margin(1e-9));
    CHECK(shifted.xi.x == Catch::Approx(base.xi.x).margin(1e-9));
  }
  SECTION("duality g_pp(xi) = -h.xi + t") {
    for (const auto& mo : {kExp1, kGeom2}) {
      const Vec2 h{-3.1, -2.4};
      const DualPoint d = tilt_to_velocity(mo, h);
      const double lhs = gpp(mo, d.xi);
      const double rhs = -(h.x * d.xi.x + h.y * d.xi.y) + d.t;
      CHECK(lhs == Catch::Approx(rhs).margin(1e-8));
    }
  }
  SECTION("defining residual |f(alpha) - (-h.e2 + t)| < 1e-10") {
    const Vec2 h{-2.6, -1.9};
    const DualPoint d = tilt_to_velocity(kGeom2, h);
    CHECK(std::abs(d.f_alpha - (-h.y + d.t)) < 1e-10);
    CHECK(std::abs(d.alpha - (-h.x + d.t)) < 1e-10);
  }
}

TEST_CASE("velocity to tilt and round trips") {
  SECTION("exponential m=1, xi=(1/2,1/2), t=0 gives h=(-2,-2)") {
    const Vec2 h = velocity_to_tilt(kExp1, Vec2{0.5, 0.5}, 0.0);
    CHECK(h.x == Catch::Approx(-2.0).margin(1e-12));
    CHECK(h.y == Catch::Approx(-2.0).margin(1e-12));
  }
  SECTION("boundary xi rejected") {
    CHECK_THROWS_AS(velocity_to_tilt(kExp1, Vec2{1.0, 0.0}, 0.0), std::domain_error);
  }
  SECTION("round trip on random interior points") {
    for (int i = 0; i < 30; ++i) {
      const double u = rng::uniform01(91, i, 0, rng::StreamTag::misc);
      const double t = 3.0 * rng::uniform01(91, i, 1, rng::StreamTag::misc) - 1.5;
      const Vec2 xi{0.05 + 0.9 * u, 1 - (0.05 + 0.9 * u)};
      for (const auto& mo : {kExp1, kGeom2}) {
        const Vec2 h = velocity_to_tilt(mo, xi, t);
        const DualPoint d = tilt_to_velocity(mo, h);
        CHECK(std::abs(d.t - t) < 1e-9);
        CHECK(std::abs(d.xi.x - xi.x) < 1e-9);
      }
    }
  }
  SECTION("homogeneity: grad g_pp(xi) . xi = g_pp(xi)") {
    for (const auto& mo : {kExp1, kGeom2}) {
      const Vec2 xi{0.3, 0.7};
      const Vec2 grad = grad_gpp(mo, xi);
      CHECK(grad.x * xi.x + grad.y * xi.y == Catch::Approx(gpp(mo, xi)).margin(1e-10));
    }
  }
}

TEST_CASE("empirical shape curve machinery") {
  // grid curve sampled from the exact gamma; legendre on the grid should
  // match the closed form within the reported discretization bound
  ShapeCurve grid;
  for (double s = 0.05; s <= 6.0; s += 0.05)
    grid.points.push_back({s, gamma_curve(kExp1, s), 0, 0, 0, 0});
  for (double a : {1.5, 2.0, 3.0, 4.5}) {
    const LegendreResult r = f_legendre(grid, a);
    CHECK(std::abs(r.value - f_closed(kExp1, a)) <= r.err_bound + 1e-9);
  }

  // concave projection leaves a concave sequence and never lowers the max
  ShapeCurve noisy = grid;
  for (std::size_t i = 0; i < noisy.points.size(); ++i)
    noisy.points[i].gamma_hat += (i % 3 == 0 ? -0.02 : 0.01);
  project_concave(noisy);
  CHECK(noisy.concave_projected);
  for (std::size_t i = 1; i + 1 < noisy.points.size(); ++i) {
    const auto& p = noisy.points;
    const double left = (p[i].gamma_hat - p[i - 1].gamma_hat) / (p[i].s - p[i - 1].s);
    const double right = (p[i + 1].gamma_hat - p[i].gamma_hat) / (p[i + 1].s - p[i].s);
    CHECK(left >= right - 1e-9);
  }
}

TEST_CASE("monte carlo gamma estimate, small scale") {
  const auto fam = WeightFamily::exponential(1.0);
  const ShapeCurve c = estimate_gamma_mc(fam, {1.0}, 200, 80, 2024);
  REQUIRE(c.points.size() == 1);
  // limit is 4; finite-n bias is negative
  CHECK(c.points[0].gamma_hat > 3.3);
  CHECK(c.points[0].gamma_hat < 4.0);
  CHECK(c.points[0].ci_half > 0);

  SECTION("transpose symmetry within joint confidence bands") {
    const ShapeCurve a = estimate_gamma_mc(fam, {2.0}, 150, 60, 77);
    const ShapeCurve b = estimate_gamma_mc(fam, {0.5}, 150, 60, 78);
    const double lhs = a.points[0].gamma_hat;
    const double rhs = 2.0 * b.points[0].gamma_hat;
    CHECK(std::abs(lhs - rhs) < 3 * (a.points[0].ci_half + 2 * b.points[0].ci_half) + 0.05);
  }
  SECTION("replicate spread shrinks with n (shape concentration)") {
    const ShapeCurve lo = estimate_gamma_mc(fam, {1.0}, 50, 60, 5);
    const ShapeCurve hi = estimate_gamma_mc(fam, {1.0}, 400, 60, 6);
    CHECK(hi.points[0].sd < lo.points[0].sd);
  }
  SECTION("resource guard") {
    CHECK_THROWS_AS(estimate_gamma_mc(fam, {1.0}, 100000, 1000, 1), std::invalid_argument);
  }
}

TEST_CASE("shape universality at the small-s boundary") {
  // (gamma_hat(s) - m) / (2 sigma sqrt(s)) ~ 1 for small s
  const auto fam = WeightFamily::exponential(1.0);
  const double s = 0.01;
  const ShapeCurve c = estimate_gamma_mc(fam, {s}, 2000, 60, 909);
  const double ratio = (c.points[0].gamma_hat - fam.mean) / (2 * fam.sigma() * std::sqrt(s));
  CHECK(ratio > 0.7);
  CHECK(ratio < 1.1);
}
