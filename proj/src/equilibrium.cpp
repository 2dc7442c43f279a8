#include "fdkin/equilibrium.hpp"

#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fdkin {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogAMin = -27.631021115928547;  // log 1e-12
constexpr double kLogAMax = 27.631021115928547;

// 1 / (1 + exp(x)) without overflow.
double fermi(double x)
{
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

double radial_integral(const std::function<double(double)>& g, double log_a)
{
    // Breakpoint at the Fermi surface r^2 = log a; tail below 1e-16 relative past log a + 45.
    const double rc = std::sqrt(std::max(0.0, log_a) + 45.0);
    double total = 0.0;
    double lo = 0.0;
    if (log_a > 0.0) {
        const double rf = std::sqrt(log_a);
        const AdaptiveResult a = integrate_adaptive(g, 0.0, rf, 1e-15);
        total += a.value;
        lo = rf;
    }
    const AdaptiveResult b = integrate_adaptive(g, lo, rc, 1e-15);
    total += b.value;
    return 4.0 * kPi * total;
}

} // namespace

double kappa_sat()
{
    return 0.6 * std::cbrt(std::pow(3.0 / (4.0 * kPi), 2.0));
}

double Macroscopics::ratio() const
{
    return M2 / std::pow(M0, 5.0 / 3.0);
}

Macroscopics macroscopic(const DensityField& f)
{
    const VelocityGrid& g = f.grid;
    const double h3 = g.cell_volume();
    double m0 = 0.0;
    Vec3 mom{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = f.values[i];
        if (x == 0.0)
            continue;
        m0 += x;
        const Vec3 v = g.node(i);
        for (int d = 0; d < 3; ++d)
            mom[d] += x * v[d];
    }
    if (!(m0 > 0.0))
        throw InvalidArgument("macroscopic: the density has zero mass");
    Macroscopics m;
    m.M0 = h3 * m0;
    m.v0 = (1.0 / m0) * mom;
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = f.values[i];
        if (x != 0.0)
            e += x * norm2(g.node(i) - m.v0);
    }
    m.M2 = h3 * e;
    return m;
}

const char* to_string(Regime regime)
{
    return regime == Regime::regular ? "regular" : "saturated";
}

Regime classify(const Macroscopics& m, double tol)
{
    if (!(m.M0 > 0.0) || !(m.M2 >= 0.0))
        throw InvalidArgument("classify: invalid moments");
    const double k = kappa_sat();
    const double r = m.ratio();
    if (std::abs(r - k) <= tol * k)
        return Regime::saturated;
    if (r > k)
        return Regime::regular;
    std::ostringstream os;
    os << "inconsistent moments: M2/M0^(5/3) = " << r << " is below the saturation bound " << k;
    throw NumericalError(os.str());
}

bool is_discrete_ball(const DensityField& f)
{
    double m0 = 0.0;
    for (double x : f.values) {
        if (x != 0.0 && x != 1.0)
            return false;
        m0 += x;
    }
    if (m0 == 0.0)
        return false;
    const Vec3 v0 = macroscopic(f).v0;
    double max_in = 0.0, min_out = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = norm2(f.grid.node(i) - v0);
        if (f.values[i] == 1.0)
            max_in = std::max(max_in, d);
        else
            min_out = std::min(min_out, d);
    }
    return max_in < min_out;
}

Regime classify_field(const DensityField& f, double tol)
{
    if (is_discrete_ball(f))
        return Regime::saturated;
    return classify(macroscopic(f), tol);
}

double fd_moment(int k, double a)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw InvalidArgument("fd_moment: a must be positive and finite");
    const double la = std::log(a);
    const int p = k + 2;
    return radial_integral([=](double r) { return std::pow(r, p) * fermi(r * r - la); }, la);
}

double fd_moment_dlog(int k, double a)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw InvalidArgument("fd_moment_dlog: a must be positive and finite");
    const double la = std::log(a);
    const int p = k + 2;
    return radial_integral(
        [=](double r) {
            const double F = fermi(r * r - la);
            return std::pow(r, p) * F * fermi(la - r * r);
        },
        la);
}

double fd_ratio(double a)
{
    return fd_moment(2, a) / std::pow(fd_moment(0, a), 5.0 / 3.0);
}

Macroscopics equilibrium_moments(const RegularEquilibrium& eq)
{
    Macroscopics m;
    m.M0 = fd_moment(0, eq.a) * std::pow(eq.b, -1.5);
    m.M2 = fd_moment(2, eq.a) * std::pow(eq.b, -2.5);
    m.v0 = eq.v0;
    return m;
}

EquilibriumSpec solve_fermi_dirac(const Macroscopics& m, double tol)
{
    if (classify(m, tol) == Regime::saturated)
        return SaturatedEquilibrium{std::cbrt(3.0 * m.M0 / (4.0 * kPi)), m.v0};

    const double target = m.ratio();
    auto residual = [&](double la) { return fd_ratio(std::exp(la)) - target; };
    double lo = kLogAMin, hi = kLogAMax;
    const double r_lo = residual(lo), r_hi = residual(hi);
    if (!(r_lo >= 0.0 && r_hi <= 0.0)) {
        std::ostringstream os;
        os << "solve_fermi_dirac: root outside a in [1e-12, 1e12] (target ratio " << target << ", ratio(1e-12) "
           << r_lo + target << ", ratio(1e12) " << r_hi + target << ")";
        throw NumericalError(os.str());
    }
    // The ratio decreases in a.
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        if (residual(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double la = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double a = std::exp(la);
        const double g0 = fd_moment(0, a), g2 = fd_moment(2, a);
        const double dg0 = fd_moment_dlog(0, a), dg2 = fd_moment_dlog(2, a);
        const double ratio = g2 / std::pow(g0, 5.0 / 3.0);
        const double dratio = ratio * (dg2 / g2 - (5.0 / 3.0) * dg0 / g0);
        const double r = ratio - target;
        if (r > 0.0)
            lo = std::max(lo, la);
        else
            hi = std::min(hi, la);
        double next = la - r / dratio;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        const double step = std::abs(next - la);
        la = next;
        if (step < 1e-14 * std::max(1.0, std::abs(la)))
            break;
    }
    const double a = std::exp(la);
    const double b = std::pow(fd_moment(0, a) / m.M0, 2.0 / 3.0);
    return RegularEquilibrium{a, b, m.v0};
}

EquilibriumSpec solve_for_field(const DensityField& f, double tol)
{
    const Macroscopics m = macroscopic(f);
    if (is_discrete_ball(f))
        return SaturatedEquilibrium{std::cbrt(3.0 * m.M0 / (4.0 * kPi)), m.v0};
    return solve_fermi_dirac(m, tol);
}

double eval_equilibrium_at(const EquilibriumSpec& spec, const Vec3& v)
{
    if (const auto* r = std::get_if<RegularEquilibrium>(&spec))
        return fermi(r->b * norm2(v - r->v0) - std::log(r->a));
    const auto& s = std::get<SaturatedEquilibrium>(spec);
    return norm(v - s.v0) <= s.R ? 1.0 : 0.0;
}

DensityField eval_equilibrium(const EquilibriumSpec& spec, const VelocityGrid& grid)
{
    if (const auto* r = std::get_if<RegularEquilibrium>(&spec)) {
        if (!(r->a > 0.0 && r->b > 0.0))
            throw InvalidArgument("regular equilibrium needs a > 0 and b > 0");
    } else if (!(std::get<SaturatedEquilibrium>(spec).R > 0.0)) {
        throw InvalidArgument("saturated equilibrium needs R > 0");
    }
    DensityField F(grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        F.values[i] = eval_equilibrium_at(spec, grid.node(i));
    return F;
}

} // namespace fdkin
