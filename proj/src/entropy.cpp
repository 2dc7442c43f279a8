#include "fdkin/entropy.hpp"

#include <cmath>

namespace fdkin {

namespace {

double xlogx(double x)
{
    return x > 0.0 ? x * std::log(x) : 0.0;
}

} // namespace

double entropy_S(const DensityField& f)
{
    double s = 0.0;
    for (double x : f.values)
        s -= xlogx(1.0 - x) + xlogx(x);
    return f.grid.cell_volume() * s;
}

Dissipation dissipation_D(const DensityField& f, const CollisionKernel& kernel, const SphereQuadrature& quad)
{
    std::uint64_t skips = 0;
    const double d = CollisionOperator(f.grid, kernel, quad).dissipation(f, &skips);
    return {d, skips};
}

double weighted_moment(const DensityField& f, double s)
{
    const VelocityGrid& g = f.grid;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = std::abs(f.values[i]);
        if (x == 0.0)
            continue;
        acc += x * (s == 0.0 ? 1.0 : std::pow(1.0 + norm2(g.node(i)), 0.5 * s));
    }
    return g.cell_volume() * acc;
}

} // namespace fdkin
