#include "fdkin/errors.hpp"
#include "fdkin/positivity.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fdkin;

TEST_CASE("J(0) anchor")
{
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 50);
    const double expect = -96.0 / (std::numbers::pi * std::numbers::pi);
    CHECK(std::abs(counterexample_J(2.0, {0, 0, 0}, q) - expect) <= 1e-3);
    // c only multiplies a vanishing integral at u = 0
    CHECK(counterexample_J(5.0, {0, 0, 0}, q) == doctest::Approx(counterexample_J(2.0, {0, 0, 0}, q)));
}

TEST_CASE("test functions")
{
    const auto h = counterexample_test_function(2.0);
    CHECK(h({0, 0, 0}) == 1.0);
    CHECK(h({1, 0, 0}) == doctest::Approx(std::exp(-2.0) * (1.0 + std::sqrt(2.0))));
    const auto a = random_test_function(4, 1.0, 3), b = random_test_function(4, 1.0, 3);
    CHECK(a({0.3, 0.2, -0.1}) == b({0.3, 0.2, -0.1}));
    const auto gauss = gaussian_test_function(0.5, {1, 0, 0});
    CHECK(gauss({1, 0, 0}) == 1.0);
}

TEST_CASE("sphere bilinear form of a monomial kernel")
{
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 50);
    const auto h = random_sphere_function(17, 3);
    for (int n : {1, 2}) {
        const auto form = sphere_bilinear_form([n](double t) { return std::pow(t, 2 * n); }, h, q, n);
        REQUIRE(form.certificate.has_value());
        CHECK(form.certified);
        CHECK(form.value >= -1e-12);
    }
}

TEST_CASE("reduced quartic integral is nonnegative for a completely positive kernel")
{
    const auto B0 = reduce_to_B0(make_inverse_power_kernel(2.5));
    ReducedResolution res{16, 16, 6, SphereRuleKind::lebedev_like, 26, 0};
    const auto rules = build_reduced_rules(1.0, B0.gamma, res);
    SplitMix64 rng(3);
    for (int i = 0; i < 5; ++i) {
        const auto r = quartic_integral_reduced(B0, random_test_function(rng.next(), 1.0, 3), rules);
        CHECK(r.value >= -1e-6 * r.abs_scale);
    }
}

TEST_CASE("reduced and grid quartic integrals agree for a Gaussian")
{
    const auto k = make_monomial_kernel(0.0, {1.0});
    const auto h = gaussian_test_function(1.0);
    const auto rules = build_reduced_rules(1.0, 0.0, ReducedResolution{});
    const double reduced = quartic_integral_reduced(k, h, rules).value;
    VelocityGrid g(14, 3.5);
    double grid = quartic_integral(k, h, g, sphere_quadrature(SphereRuleKind::lebedev_like, 14));
    // the grid sum skips v_* = v; for a Gaussian h(v')h(v_*') = h(v)^2 there
    const double h3 = g.cell_volume();
    for (std::size_t i = 0; i < g.size(); ++i)
        grid += h3 * h3 * 4.0 * std::numbers::pi * std::pow(h(g.node(i)), 4);
    CHECK(grid == doctest::Approx(reduced).epsilon(1e-6));
}
