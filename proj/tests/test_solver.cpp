#include "fdkin/equilibrium.hpp"
#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"
#include "fdkin/solver.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace fdkin;

namespace {

DensityField bumps(const VelocityGrid& g)
{
    return sample_field(g, [](const Vec3& v) {
        return std::min(0.9, 0.8 * std::exp(-norm2(v - Vec3{1.2, 0, 0})) + 0.8 * std::exp(-norm2(v + Vec3{1.2, 0, 0})));
    });
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST_CASE("projection removes the invariant moments")
{
    VelocityGrid g(6, 3.0);
    SplitMix64 rng(8);
    std::vector<double> q(g.size()), w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        q[i] = rng.normal();
        w[i] = rng.uniform();
    }
    for (const auto& p : {conserve_project(q, g), conserve_project(q, g, w)})
        for (double m : invariant_moments(p, g))
            CHECK(std::abs(m) <= 1e-12);
    CHECK_THROWS_AS(conserve_project(q, g, std::vector<double>(g.size(), 0.0)), ConfigError);
}

TEST_CASE("schemes")
{
    CHECK(scheme_from_string("rk2") == Scheme::rk2);
    CHECK_THROWS(scheme_from_string("rk4"));
}

TEST_CASE("short runs conserve, stay in [0, 1] and produce entropy")
{
    VelocityGrid g(8, 4.0);
    for (auto scheme : {Scheme::euler, Scheme::rk2}) {
        SimulationSetup s{bumps(g),
                          CollisionOperator(g, make_monomial_kernel(0.0, {1.0}, 0.2),
                                            sphere_quadrature(SphereRuleKind::lebedev_like, 14)),
                          StepOptions{0.5, scheme}, 2.0, 1, 1e-6};
        const auto r = run_simulation(s);
        const auto& rows = r.series.rows;
        REQUIRE(rows.size() >= 2);
        for (const auto& row : rows) {
            CHECK(rel(row.M0, rows.front().M0) <= 1e-10);
            CHECK(rel(row.energy, rows.front().energy) <= 1e-10);
            CHECK(row.min_f >= 0.0);
            CHECK(row.max_f <= 1.0);
        }
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(rows[i].entropy >= rows[i - 1].entropy - 1e-6 * std::abs(rows[i - 1].entropy));
        CHECK(rows.back().dist_L12 < rows.front().dist_L12);
        CHECK(rows.back().t == doctest::Approx(2.0));
    }
}

TEST_CASE("saturated ball stays fixed")
{
    VelocityGrid g(8, 3.0);
    const auto ball = sample_field(g, [](const Vec3& v) { return norm(v) <= 1.2 ? 1.0 : 0.0; });
    SimulationSetup s{ball, CollisionOperator(g, make_monomial_kernel(0.0, {1.0}), sphere_quadrature(SphereRuleKind::lebedev_like, 6)),
                      StepOptions{}, 1.0, 1, 1e-6};
    const auto r = run_simulation(s);
    CHECK(r.stationary);
    CHECK(r.final_field.values == ball.values);
}

TEST_CASE("CSV header")
{
    TimeSeries ts;
    ts.rows.push_back({});
    std::ostringstream os;
    ts.write_csv(os);
    CHECK(os.str().rfind(kTimeSeriesHeader, 0) == 0);
}
