#include "fdkin/equilibrium.hpp"
#include "fdkin/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <variant>

using namespace fdkin;

TEST_CASE("saturation constant")
{
    const double pi = 3.14159265358979323846;
    CHECK(std::abs(kappa_sat() - 0.6 * std::cbrt(9.0 / (16.0 * pi * pi))) <= 1e-12);
}

TEST_CASE("Fermi-Dirac moments")
{
    // small a: Maxwellian limit g_0 -> a pi^(3/2), g_2 -> a (3/2) pi^(3/2)
    const double a = 1e-8, p32 = std::pow(std::numbers::pi, 1.5);
    CHECK(fd_moment(0, a) == doctest::Approx(a * p32).epsilon(1e-7));
    CHECK(fd_moment(2, a) == doctest::Approx(1.5 * a * p32).epsilon(1e-7));
    // large a approaches the ball, so the ratio tends to kappa_sat from above
    CHECK(fd_ratio(1e8) > kappa_sat());
    CHECK(fd_ratio(1e8) == doctest::Approx(kappa_sat()).epsilon(5e-3));
    const double h = 1e-5;
    const double fd = (fd_moment(2, 2.0 * std::exp(h)) - fd_moment(2, 2.0 * std::exp(-h))) / (2 * h);
    CHECK(fd_moment_dlog(2, 2.0) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("radial round trip")
{
    for (double a : {0.05, 1.0, 7.0, 300.0})
        for (double b : {0.3, 1.0, 2.5}) {
            const RegularEquilibrium eq{a, b, {0.1, -0.4, 0.2}};
            Macroscopics m = equilibrium_moments(eq);
            m.v0 = eq.v0;
            const auto spec = solve_fermi_dirac(m, 1e-10);
            REQUIRE(std::holds_alternative<RegularEquilibrium>(spec));
            const auto& r = std::get<RegularEquilibrium>(spec);
            CHECK(std::abs(r.a - a) <= 1e-8 * a);
            CHECK(std::abs(r.b - b) <= 1e-8 * b);
        }
}

TEST_CASE("grid round trip")
{
    VelocityGrid g(24, 7.0);
    const RegularEquilibrium eq{2.0, 0.8, {0.0, 0.0, 0.0}};
    const auto spec = solve_for_field(eval_equilibrium(eq, g), 1e-10);
    REQUIRE(std::holds_alternative<RegularEquilibrium>(spec));
    CHECK(std::get<RegularEquilibrium>(spec).a == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(std::get<RegularEquilibrium>(spec).b == doctest::Approx(0.8).epsilon(1e-4));
}

TEST_CASE("regimes")
{
    Macroscopics m;
    m.M0 = 2.0;
    m.M2 = kappa_sat() * std::pow(2.0, 5.0 / 3.0);
    CHECK(classify(m) == Regime::saturated);
    const auto spec = solve_fermi_dirac(m);
    REQUIRE(std::holds_alternative<SaturatedEquilibrium>(spec));
    CHECK(std::get<SaturatedEquilibrium>(spec).R == doctest::Approx(std::cbrt(3.0 * 2.0 / (4.0 * std::numbers::pi))));
    m.M2 *= 1.5;
    CHECK(classify(m) == Regime::regular);
    m.M2 *= 0.5;
    CHECK_THROWS_AS(classify(m), NumericalError);
}

TEST_CASE("discrete balls")
{
    VelocityGrid g(12, 3.0);
    const auto ball = sample_field(g, [](const Vec3& v) { return norm(v) <= 1.5 ? 1.0 : 0.0; });
    CHECK(is_discrete_ball(ball));
    CHECK(classify_field(ball) == Regime::saturated);
    auto broken = ball;
    broken.values[g.index(6, 6, 6)] = 0.0;
    CHECK_FALSE(is_discrete_ball(broken));
    const auto F = eval_equilibrium(solve_for_field(ball), g);
    CHECK(F.values == ball.values);
    CHECK_THROWS_AS(macroscopic(DensityField(g)), InvalidArgument);
}
