#include "fdkin/collision.hpp"
#include "fdkin/equilibrium.hpp"
#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fdkin;

namespace {

DensityField two_bumps(const VelocityGrid& g)
{
    return sample_field(g, [](const Vec3& v) {
        auto bump = [&](double x0) {
            const double e = 1.5 * std::exp(-((v[0] - x0) * (v[0] - x0) + v[1] * v[1] + v[2] * v[2]));
            return e / (1.0 + e);
        };
        return std::min(0.9, bump(1.2) + bump(-1.2));
    });
}

double max_abs(const std::vector<double>& x)
{
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    return m;
}

} // namespace

TEST_CASE("trilinear interpolation")
{
    VelocityGrid g(6, 3.0);
    SplitMix64 rng(5);
    DensityField f(g);
    for (double& x : f.values)
        x = rng.uniform();
    CHECK(interpolate_field(f, g.node(2, 3, 4)) == f.values[g.index(2, 3, 4)]);
    CHECK(interpolate_field(f, {10.0, 0.0, 0.0}) == 0.0);
    DensityField c(g, 0.37);
    CHECK(interpolate_field(c, {0.3, -1.1, 2.2}) == doctest::Approx(0.37));
}

TEST_CASE("logit interpolation is exact on Fermi-Dirac profiles")
{
    VelocityGrid g(10, 4.0);
    const RegularEquilibrium eq{1.3, 0.6, {0.2, -0.1, 0.0}};
    const DensityField F = eval_equilibrium(eq, g);
    for (const Vec3 v : {Vec3{0.13, -0.77, 1.9}, Vec3{-3.1, 2.2, 0.4}, Vec3{3.9, 3.9, -3.9}}) {
        const double exact = eval_equilibrium_at(eq, v);
        CHECK(interpolate_field_logit(F, v) == doctest::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("collision integrand and Gamma")
{
    CHECK(pi_F(0.3, 0.3, 0.3, 0.3) == 0.0);
    CHECK(pi_F(0, 0, 1, 1) == 1.0);
    CHECK(pi_F_cancelled(0.2, 0.4, 0.7, 0.1) == doctest::Approx(pi_F(0.2, 0.4, 0.7, 0.1)));
    CHECK(gamma_fn(0.7, 0.7) == 0.0);
    CHECK(std::isinf(gamma_fn(1.0, 0.0)));
    CHECK(gamma_fn(std::exp(1.0), 1.0) == doctest::Approx(std::exp(1.0) - 1.0));
}

TEST_CASE("equilibrium functional equation on random quadruples")
{
    const RegularEquilibrium eq{0.8, 1.1, {0.3, 0.0, -0.2}};
    SplitMix64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()}, vs{rng.normal(), rng.normal(), rng.normal()};
        Vec3 s{rng.normal(), rng.normal(), rng.normal()};
        s = (1.0 / norm(s)) * s;
        const auto [vp, vsp] = post_collision(v, vs, s);
        worst = std::max(worst, std::abs(pi_F(eval_equilibrium_at(eq, v), eval_equilibrium_at(eq, vs),
                                              eval_equilibrium_at(eq, vp), eval_equilibrium_at(eq, vsp))));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("operator basics")
{
    VelocityGrid g(8, 4.0);
    const auto k = make_monomial_kernel(0.0, {1.0, 0.5});
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 14);
    CollisionOperator op(g, k, q);
    CHECK(max_abs(op.evaluate(DensityField(g)).Q) == 0.0);

    // a saturated cell only loses mass to states that leave the box
    const DensityField ones(g, 1.0);
    const auto t = op.evaluate(ones);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(t.Q[i] <= 1e-12);
}

TEST_CASE("equilibrium is a discrete fixed point")
{
    VelocityGrid g(10, 4.5);
    const auto k = make_monomial_kernel(0.0, {1.0});
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 26);
    CollisionOperator op(g, k, q);
    const DensityField f0 = two_bumps(g);
    const DensityField F = eval_equilibrium(solve_for_field(f0), g);
    CHECK(max_abs(op.evaluate(F).Q) <= 1e-3 * max_abs(op.evaluate(f0).Q));
}

TEST_CASE("sweep matches the pointwise reference")
{
    VelocityGrid g(7, 3.5);
    const DensityField f = two_bumps(g);
    for (auto mode : {Interpolation::trilinear, Interpolation::logit_quadratic})
        for (const auto& q : {sphere_quadrature(SphereRuleKind::lebedev_like, 14),
                              sphere_quadrature(SphereRuleKind::product_cos_phi, 4, 6)}) {
            CollisionOperator op(g, make_monomial_kernel(1.0, {1.0, 2.0}), q, mode);
            const auto t = op.evaluate(f);
            for (std::size_t node : {g.index(3, 3, 3), g.index(0, 2, 6), g.index(5, 1, 4)})
                CHECK(t.Q[node] == doctest::Approx(op.evaluate_at(f, node)).epsilon(1e-10).scale(1e-6));
        }
}

TEST_CASE("results do not depend on the thread count")
{
    VelocityGrid g(8, 4.0);
    const DensityField f = two_bumps(g);
    CollisionOperator op(g, make_inverse_power_kernel(2.5, 0.1),
                         sphere_quadrature(SphereRuleKind::jacobi_adapted, 3, 6, 0.5));
    const int saved = thread_count();
    set_thread_count(1);
    const auto a = op.evaluate(f, true);
    set_thread_count(3);
    const auto b = op.evaluate(f, true);
    set_thread_count(saved);
    CHECK(a.Q == b.Q);
    CHECK(a.dissipation == b.dissipation);
}

TEST_CASE("gain / loss decomposition with a bounded kernel")
{
    VelocityGrid g(6, 3.0);
    const DensityField f = two_bumps(g);
    const auto B0 = reduce_to_B0(make_inverse_power_kernel(2.5));
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 14);
    const auto Q = eval_Q(f, B0, q);
    const auto N = loss_rate_N(f, B0, q);
    DensityField one_minus(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        one_minus.values[i] = 1.0 - f.values[i];
    const FieldInterpolator I(f, Interpolation::logit_quadratic);
    const auto G = eval_gain([&](const Vec3& a, const Vec3& b) { return I(a) * I(b); }, &one_minus, B0, g, q);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double fi = f.values[i];
        worst = std::max(worst, std::abs(Q[i] - ((1.0 - fi) * G[i] - fi * (N[i] - G[i]))));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("gain of constants is the kernel mass")
{
    VelocityGrid g(5, 2.0);
    // constant angular part, so every rule is exact
    const auto B0 = reduce_to_B0(make_monomial_kernel(0.0, {1.0}));
    const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, 26);
    const DensityField ones(g, 1.0);
    const auto G = eval_gain([](const Vec3&, const Vec3&) { return 1.0; }, &ones, B0, g, q);
    const std::size_t v = g.index(2, 1, 3);
    double ref = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s)
        if (s != v)
            ref += g.cell_volume() * reduced_A0(B0, norm(g.node(v) - g.node(s)));
    CHECK(G[v] == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("kernel / quadrature compatibility")
{
    VelocityGrid g(4, 2.0);
    CHECK_THROWS_AS(CollisionOperator(g, make_rutherford_cutoff_kernel(1.25), sphere_quadrature(SphereRuleKind::lebedev_like, 26)),
                    ConfigError);
    CHECK_THROWS_AS(loss_rate_N(DensityField(g), make_monomial_kernel(0.0, {1.0}), sphere_quadrature(SphereRuleKind::lebedev_like, 6)),
                    ConfigError);
}

TEST_CASE("Monte Carlo oracle")
{
    VelocityGrid g(8, 4.0);
    const auto k = make_monomial_kernel(1.0, {1.0});
    const auto zero = mc_estimate_Q(DensityField(g), k, 10, 2000, 1);
    CHECK(zero.estimate == 0.0);
    CHECK(zero.std_error == 0.0);
    const DensityField f = two_bumps(g);
    const auto a = mc_estimate_Q(f, k, g.index(4, 4, 4), 20000, 9);
    const auto b = mc_estimate_Q(f, k, g.index(4, 4, 4), 20000, 9);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    CHECK_THROWS(mc_estimate_Q(f, k, 0, 10, 1));

    CollisionOperator op(g, k, sphere_quadrature(SphereRuleKind::product_cos_phi, 16, 32));
    const auto t = op.evaluate(f);
    const std::size_t node = g.index(3, 4, 5);
    const auto mc = mc_estimate_Q(f, k, node, 200000, 21);
    CHECK(std::abs(mc.estimate - t.Q[node]) <= 4.0 * mc.std_error);
}
