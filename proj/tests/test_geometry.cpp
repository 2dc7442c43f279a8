#include "fdkin/errors.hpp"
#include "fdkin/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace fdkin;

TEST_CASE("grid spacing and corner nodes")
{
    VelocityGrid g(4, 3.0);
    CHECK(g.spacing() == doctest::Approx(2.0));
    const Vec3 a = g.node(0, 0, 0), b = g.node(3, 3, 3);
    for (int d = 0; d < 3; ++d) {
        CHECK(a[d] == doctest::Approx(-3.0));
        CHECK(b[d] == doctest::Approx(3.0));
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto ijk = g.ijk(i);
        CHECK(g.index(ijk[0], ijk[1], ijk[2]) == i);
    }
    CHECK_THROWS_AS(VelocityGrid(1, 3.0), InvalidArgument);
    CHECK_THROWS_AS(VelocityGrid(4, -1.0), InvalidArgument);
}

TEST_CASE("post-collision velocities")
{
    auto [vp, vsp] = post_collision({1, 0, 0}, {-1, 0, 0}, {0, 1, 0});
    CHECK(vp[1] == doctest::Approx(1.0));
    CHECK(vsp[1] == doctest::Approx(-1.0));
    CHECK(vp[0] == doctest::Approx(0.0));

    const Vec3 v{0.3, -1.2, 0.5}, vs{-0.7, 0.4, 1.1};
    const Vec3 z = v - vs;
    const Vec3 s = (1.0 / norm(z)) * z;
    auto [a, b] = post_collision(v, vs, s);
    CHECK(norm(a - v) < 1e-14);
    CHECK(norm(b - vs) < 1e-14);
    auto [c, d] = post_collision(v, vs, -1.0 * s);
    CHECK(norm(c - vs) < 1e-14);
    CHECK(norm(d - v) < 1e-14);

    // momentum and energy
    const Vec3 sig = (1.0 / std::sqrt(3.0)) * Vec3{1, 1, -1};
    auto [e, f] = post_collision(v, vs, sig);
    CHECK(norm((e + f) - (v + vs)) < 1e-14);
    CHECK(norm2(e) + norm2(f) == doctest::Approx(norm2(v) + norm2(vs)));
}

TEST_CASE("sphere rules integrate low-degree functions")
{
    for (auto q : {sphere_quadrature(SphereRuleKind::lebedev_like, 26), sphere_quadrature(SphereRuleKind::lebedev_like, 50),
                   sphere_quadrature(SphereRuleKind::product_cos_phi, 8),
                   sphere_quadrature(SphereRuleKind::product_cos_phi, 24, 48)}) {
        double one = 0.0, n2 = 0.0, cpi = 0.0;
        const Vec3 axis = (1.0 / std::sqrt(14.0)) * Vec3{1, 2, 3};
        for (std::size_t m = 0; m < q.size(); ++m) {
            one += q.weights[m];
            n2 += q.weights[m] * std::pow(dot(axis, q.nodes[m]), 2);
            cpi += q.weights[m] * std::cos(std::numbers::pi * q.nodes[m][0]);
        }
        CHECK(one == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
        CHECK(n2 == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-12));
        if (q.size() >= 50)
            CHECK(std::abs(cpi) < 1e-2);
    }
}

TEST_CASE("jacobi-adapted rule integrates against the absorbed weight")
{
    const auto q = sphere_quadrature(SphereRuleKind::jacobi_adapted, 10, 12, 0.5);
    double acc = 0.0, plain = 0.0;
    for (std::size_t m = 0; m < q.size(); ++m) {
        acc += q.weights[m] * (1.0 + q.cos_theta[m] * q.cos_theta[m]);
        plain += q.effective_weight(m);
    }
    // 2 pi int (1 + t^2) (1 - t^2)^(-1/2) dt = 3 pi^2
    CHECK(acc == doctest::Approx(3.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-10));
    CHECK(plain == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-2));
}

TEST_CASE("snapshot round trip is exact")
{
    VelocityGrid g(5, 2.5);
    DensityField f = sample_field(g, [](const Vec3& v) { return 1.0 / (1.0 + std::exp(norm2(v) - 1.0 / 3.0)); });
    std::stringstream ss;
    write_snapshot(ss, f);
    std::string header;
    std::getline(ss, header);
    CHECK(header.rfind("fdkin-grid n=5 vmax=", 0) == 0);
    ss.seekg(0);
    const DensityField g2 = read_snapshot(ss);
    CHECK(g2.grid == g);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(g2.values[i] == f.values[i]);
    std::stringstream bad("fdkin-grid n=2 vmax=1\n0.5\n");
    CHECK_THROWS(read_snapshot(bad));
}
