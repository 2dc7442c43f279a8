#include "fdkin/errors.hpp"
#include "fdkin/kernels.hpp"
#include "fdkin/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fdkin;

TEST_CASE("kernel point values")
{
    const auto ru = make_rutherford_cutoff_kernel(1.25);
    CHECK(eval_kernel(ru, 1.0, 0.0) == doctest::Approx(1.0));

    const auto coulomb = make_inverse_power_kernel(1.0);
    CHECK(std::abs(eval_kernel(coulomb, 2.0, 0.0)) < 1e-14);

    const double beta = 0.5, z = 1.0, t = 0.5;
    const double th = std::acos(t);
    const double s2 = std::pow(std::sin(th / 2), 2), c2 = std::pow(std::cos(th / 2), 2);
    const double expect = z * std::pow(std::pow(1 + z * z * s2, -beta) - std::pow(1 + z * z * c2, -beta), 2);
    CHECK(eval_kernel(make_debye_kernel(beta), z, t) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(eval_kernel(make_debye_kernel(0.7), 1.3, 0.0)) < 1e-15);
}

TEST_CASE("inverse-power exponents")
{
    const auto k25 = make_inverse_power_kernel(2.5);
    CHECK(k25.gamma == doctest::Approx(0.0));
    CHECK(k25.params.at("beta") == doctest::Approx(0.25));
    const auto k15 = make_inverse_power_kernel(1.5);
    CHECK(k15.gamma == doctest::Approx(-2.0));
    CHECK(k15.params.at("beta") == doctest::Approx(0.75));

    // Coulomb: angular / t^2 stays finite as t -> 0
    const auto k1 = make_inverse_power_kernel(1.0);
    const double r1 = eval_angular_at(k1, 1.0, 1e-3) / 1e-6;
    const double r2 = eval_angular_at(k1, 1.0, 1e-4) / 1e-8;
    CHECK(std::isfinite(r1));
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-4));
}

TEST_CASE("rutherford parameter range")
{
    CHECK_NOTHROW(make_rutherford_cutoff_kernel(1.49));
    CHECK_THROWS_AS(make_rutherford_cutoff_kernel(1.5), InvalidArgument);
    CHECK_THROWS_AS(make_rutherford_cutoff_kernel(1.0), InvalidArgument);
    const auto k = make_rutherford_cutoff_kernel(1.4);
    const auto ai = angular_integrals(k);
    CHECK(std::isfinite(ai.I_sin2));
    // int (1 + cos^2) sin^(2 - 2p) on (0, pi) by an independent adaptive rule
    auto g = [](double th) { return (1 + std::cos(th) * std::cos(th)) * std::pow(std::sin(th), 2 - 2 * 1.4); };
    const double ref = 2.0 * integrate_adaptive([&](double y) { return g(0.5 * std::numbers::pi * y * y * y * y * y) * 2.5 * std::numbers::pi * std::pow(y, 4); }, 0.0, 1.0, 1e-12).value;
    CHECK(ai.I_sin2 == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("debye classification")
{
    CHECK(make_debye_kernel(0.5).gamma == doctest::Approx(-1.0));
    CHECK(make_debye_kernel(0.2).gamma == doctest::Approx(0.2));
    const auto a = angular_integrals(make_debye_kernel(0.2));
    CHECK(a.satisfies_A2);
    const auto b = angular_integrals(make_debye_kernel(0.5));
    CHECK(b.satisfies_A3);
}

TEST_CASE("completely positive series")
{
    const auto s1 = cp_series_coefficients(1.0, 30);
    for (int n = 1; n <= 30; ++n)
        CHECK(s1.coefficients[n - 1] == doctest::Approx(4.0 * n).epsilon(1e-12));
    const auto s = cp_series_coefficients(0.75, 60);
    const double exact = std::pow(std::pow(0.5, -0.75) - std::pow(1.5, -0.75), 2);
    CHECK(std::abs(s.evaluate(0.5) - exact) <= 1e-8 * exact);
    for (double beta : {0.25, 0.5, 0.75, 1.0}) {
        const auto c = cp_series_coefficients(beta, 200);
        for (double a : c.coefficients)
            CHECK(a >= 0.0);
        for (double t = -0.9; t <= 0.9; t += 0.05) {
            const double ref = cp_closed_form(beta, t);
            if (ref > 0.0)
                CHECK(std::abs(c.evaluate(t) - ref) <= 1e-8 * ref);
        }
    }
}

TEST_CASE("angular integrability")
{
    const auto ru = angular_integrals(make_rutherford_cutoff_kernel(1.25));
    CHECK(std::isinf(ru.I_sin));
    CHECK(std::isfinite(ru.I_sin2));
    CHECK_FALSE(ru.satisfies_A2);
    CHECK(ru.satisfies_A3);

    const auto ip = angular_integrals(make_inverse_power_kernel(2.5));
    CHECK(std::isfinite(ip.I_sin));
    CHECK(std::isfinite(ip.I_sin2));

    const auto one = angular_integrals(make_monomial_kernel(0.0, {1.0}));
    CHECK(one.I_sin == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(one.I_sin2 == doctest::Approx(std::numbers::pi / 2).epsilon(1e-10));
}

TEST_CASE("reduced kernel B0")
{
    const auto cos2 = make_monomial_kernel(0.0, {0.0, 1.0});
    const auto r = reduce_to_B0(cos2);
    CHECK(eval_angular_at(r, 1.0, 0.6) == doctest::Approx(0.5 * 0.36));
    CHECK(eval_kernel(r, 100.0, 0.6) <= 1e-12);

    // domination B0 <= B
    const auto k = make_inverse_power_kernel(2.5);
    const auto b0 = reduce_to_B0(k);
    SplitMix64 rng(3);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const double z = 5.0 * rng.uniform() + 1e-6;
        const double t = 2.0 * rng.uniform() - 1.0;
        if (std::abs(t) > 1.0 - 1e-12)
            continue;
        if (eval_kernel(b0, z, t) > eval_kernel(k, z, t) * (1 + 1e-12) + 1e-300)
            ++violations;
    }
    CHECK(violations == 0);
}
