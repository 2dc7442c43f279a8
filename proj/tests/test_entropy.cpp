#include "fdkin/entropy.hpp"
#include "fdkin/equilibrium.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fdkin;

TEST_CASE("entropy of simple fields")
{
    VelocityGrid g(4, 1.5);
    CHECK(entropy_S(DensityField(g)) == 0.0);
    CHECK(entropy_S(DensityField(g, 1.0)) == 0.0);
    CHECK(entropy_S(DensityField(g, 0.5)) == doctest::Approx(g.size() * g.cell_volume() * std::log(2.0)));
}

TEST_CASE("dissipation is nonnegative and vanishes at equilibrium")
{
    VelocityGrid g(8, 4.0);
    const auto k = make_monomial_kernel(0.0, {1.0});
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 14);
    const auto f = sample_field(g, [](const Vec3& v) {
        return std::min(0.9, 0.8 * std::exp(-norm2(v - Vec3{1, 0, 0})) + 0.8 * std::exp(-norm2(v + Vec3{1, 0, 0})));
    });
    const auto D = dissipation_D(f, k, q);
    CHECK(D.value > 0.0);
    const auto F = eval_equilibrium(RegularEquilibrium{1.0, 1.0, {0, 0, 0}}, g);
    CHECK(std::abs(dissipation_D(F, k, q).value) <= 1e-6 * D.value);
}

TEST_CASE("weighted moments")
{
    VelocityGrid g(4, 1.5);
    const DensityField ones(g, 1.0);
    double expect = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        expect += (1.0 + norm2(g.node(i))) * (1.0 + norm2(g.node(i)));
    CHECK(weighted_moment(ones, 4.0) == doctest::Approx(expect * g.cell_volume()));
    CHECK(weighted_moment(ones, 0.0) == doctest::Approx(64.0 * g.cell_volume()));
}
