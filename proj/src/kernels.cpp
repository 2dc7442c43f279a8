#include "fdkin/kernels.hpp"

#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fdkin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double power_series_t2(const std::vector<double>& coeffs, double t)
{
    const double x = t * t;
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        acc = acc * x + *it;
    return acc;
}

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x))
        throw InvalidArgument(std::string(what) + " must be finite");
}

} // namespace

const char* to_string(KernelFamily family)
{
    switch (family) {
    case KernelFamily::inverse_power:
        return "inverse_power";
    case KernelFamily::rutherford:
        return "rutherford";
    case KernelFamily::debye:
        return "debye";
    case KernelFamily::custom_monomial:
        return "custom_monomial";
    case KernelFamily::reduced:
        return "reduced";
    case KernelFamily::counterexample:
        return "counterexample";
    }
    return "?";
}

double eval_kernel(const CollisionKernel& kernel, double z_norm, double cos_theta)
{
    require_finite(z_norm, "|z|");
    require_finite(cos_theta, "cos(theta)");
    if (z_norm < 0.0)
        throw InvalidArgument("|z| must be nonnegative");
    if (std::abs(cos_theta) > 1.0)
        throw InvalidArgument("cos(theta) must lie in [-1, 1]");
    double r = z_norm;
    if (kernel.gamma < 0.0 && r < kernel.radial_cap)
        r = kernel.radial_cap;
    if (r == 0.0 && kernel.gamma < 0.0)
        throw InvalidArgument("|z| = 0 with a soft kernel and no radial cap");
    const double t = std::abs(cos_theta);
    if (kernel.separable)
        return kernel.radial(r) * kernel.angular(t);
    return kernel.joint(r, t);
}

double eval_angular_at(const CollisionKernel& kernel, double z_norm, double cos_theta)
{
    const double t = std::abs(cos_theta);
    if (kernel.separable)
        return kernel.angular(t);
    return kernel.joint(z_norm, t);
}

CollisionKernel with_radial_cap(CollisionKernel kernel, double grid_spacing)
{
    if (kernel.gamma < 0.0)
        kernel.radial_cap = 0.5 * grid_spacing;
    return kernel;
}

double cp_closed_form(double beta, double t)
{
    t = std::abs(t);
    if (t >= 1.0)
        return kInf;
    // (1-t)^-b - (1+t)^-b = (1+t)^-b * expm1(2 b atanh t)
    const double d = std::pow(1.0 + t, -beta) * std::expm1(2.0 * beta * std::atanh(t));
    return d * d;
}

double CpSeries::evaluate(double t) const
{
    const double x = t * t;
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
        acc = (acc + *it) * x;
    return acc;
}

CpSeries cp_series_coefficients(double beta, int n_max)
{
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw InvalidArgument("cp series: beta must be positive");
    if (n_max < 1)
        throw InvalidArgument("cp series: n_max must be >= 1");
    // c_i = beta (beta+1) ... (beta+2i) / (2i+1)!, built by its term ratio.
    std::vector<double> c(n_max);
    c[0] = beta;
    for (int i = 1; i < n_max; ++i)
        c[i] = c[i - 1] * (beta + 2.0 * i - 1.0) * (beta + 2.0 * i) / ((2.0 * i) * (2.0 * i + 1.0));
    CpSeries s;
    s.beta = beta;
    s.coefficients.resize(n_max);
    for (int n = 1; n <= n_max; ++n) {
        double acc = 0.0;
        for (int i = 0; i <= n - 1; ++i)
            acc += c[i] * c[n - 1 - i];
        const double a = 4.0 * acc;
        if (!std::isfinite(a))
            throw NumericalError("cp series coefficient a_" + std::to_string(n) + " is not finite");
        s.coefficients[n - 1] = a;
    }
    return s;
}

CollisionKernel make_inverse_power_kernel(double alpha, double c_alpha, int series_terms)
{
    if (!(alpha > 0.0 && alpha < 3.0))
        throw InvalidArgument("inverse-power kernel needs 0 < alpha < 3, got " + std::to_string(alpha));
    if (!(c_alpha > 0.0) || !std::isfinite(c_alpha))
        throw InvalidArgument("inverse-power kernel needs c_alpha > 0");
    const double beta = 0.5 * (3.0 - alpha);
    const double gamma = 2.0 * alpha - 5.0;
    CollisionKernel k;
    k.family = KernelFamily::inverse_power;
    k.name = "inverse_power";
    k.gamma = gamma;
    k.separable = true;
    k.radial = [gamma](double r) { return gamma == 0.0 ? 1.0 : std::pow(r, gamma); };
    k.angular = [beta, c_alpha](double t) { return c_alpha * cp_closed_form(beta, t); };
    k.bound_b_star = k.angular;
    k.bound_b_upper = k.angular;
    k.bound_phi_star = [](double) { return 1.0; };
    const CpSeries series = cp_series_coefficients(beta, series_terms);
    k.lower_series.assign(1, 0.0);
    for (double a : series.coefficients)
        k.lower_series.push_back(c_alpha * a);
    k.angular_singularity = 2.0 * beta;
    k.params = {{"alpha", alpha}, {"c_alpha", c_alpha}, {"beta", beta}, {"gamma", gamma}};
    return k;
}

CollisionKernel make_rutherford_cutoff_kernel(double p, double constant, RutherfordVariant variant,
                                              int series_terms)
{
    if (!(p > 1.0 && p < 1.5))
        throw InvalidArgument("rutherford cutoff needs 1 < p < 3/2, got " + std::to_string(p));
    if (!(constant > 0.0) || !std::isfinite(constant))
        throw InvalidArgument("rutherford cutoff needs a positive constant");
    CollisionKernel k;
    k.family = KernelFamily::rutherford;
    k.name = "rutherford";
    k.gamma = -3.0;
    k.separable = true;
    k.radial = [](double r) { return 1.0 / (r * r * r); };
    const bool full = variant == RutherfordVariant::full;
    k.angular = [p, constant, full](double t) {
        const double x = t * t;
        if (x >= 1.0)
            return kInf;
        return constant * (full ? 1.0 + x : x) * std::pow(1.0 - x, -p);
    };
    k.bound_b_star = k.angular;
    k.bound_b_upper = k.angular;
    k.bound_phi_star = [](double) { return 1.0; };
    // (1 - x)^-p = sum_k (p)_k / k! x^k
    std::vector<double> d(series_terms + 1);
    d[0] = 1.0;
    for (int n = 1; n <= series_terms; ++n)
        d[n] = d[n - 1] * (p + n - 1.0) / n;
    k.lower_series.resize(series_terms + 1);
    for (int n = 0; n <= series_terms; ++n) {
        const double prev = n > 0 ? d[n - 1] : 0.0;
        k.lower_series[n] = constant * (full ? d[n] + prev : prev);
    }
    k.angular_singularity = p;
    k.params = {{"p", p}, {"const", constant}, {"variant", full ? 0.0 : 1.0}, {"gamma", -3.0}};
    return k;
}

namespace {

// |z| ((1 + |z|^2 (1-t)/2)^-beta - (1 + |z|^2 (1+t)/2)^-beta)^2, t >= 0, cancellation-free.
double debye_value(double beta, double r, double t)
{
    const double r2 = r * r;
    const double lo = 1.0 + 0.5 * r2 * (1.0 - t);
    const double hi = 1.0 + 0.5 * r2 * (1.0 + t);
    const double d = std::pow(hi, -beta) * std::expm1(beta * std::log1p(r2 * t / lo));
    return r * d * d;
}

} // namespace

CollisionKernel make_debye_kernel(double beta)
{
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw InvalidArgument("debye kernel needs beta > 0");
    CollisionKernel k;
    k.family = KernelFamily::debye;
    k.name = "debye";
    k.gamma = 1.0 - 4.0 * beta;
    k.separable = false;
    k.joint = [beta](double r, double t) { return debye_value(beta, r, t); };
    k.params = {{"beta", beta}, {"gamma", k.gamma}};
    if (beta < 1.0) {
        const double gamma = k.gamma;
        auto phi_star = [beta](double r) {
            const double r2 = r * r;
            return std::pow(2.0 * r2 / (1.0 + r2), 2.0 * beta + 2.0);
        };
        // Sample the two ratios on a 200 x 200 log-spaced (|z|, theta) lattice.
        const int n = 200;
        double lo = kInf, hi = 0.0;
        for (int a = 0; a < n; ++a) {
            const double r = std::pow(10.0, -3.0 + 6.0 * a / (n - 1));
            const double rg = std::pow(r, gamma);
            for (int b = 0; b < n; ++b) {
                const double theta = std::pow(10.0, -4.0 + (std::log10(0.999 * std::numbers::pi / 2) + 4.0) * b / (n - 1));
                const double t = std::cos(theta);
                const double s = std::sin(theta);
                const double B = debye_value(beta, r, t);
                lo = std::min(lo, B / (rg * phi_star(r) * t * t));
                hi = std::max(hi, B * std::pow(s, 4.0 * beta) / (rg * t * t));
            }
        }
        // Sampled extrema are widened by 1% so the bounds hold between lattice points.
        const double c_beta = 0.99 * lo;
        const double C_beta = 1.01 * hi;
        k.bound_phi_star = phi_star;
        k.bound_b_star = [c_beta](double t) { return c_beta * t * t; };
        k.bound_b_upper = [C_beta, beta](double t) {
            const double x = t * t;
            if (x >= 1.0)
                return kInf;
            return C_beta * x * std::pow(1.0 - x, -2.0 * beta);
        };
        k.lower_series = {0.0, c_beta};
        k.params["c_beta"] = c_beta;
        k.params["C_beta"] = C_beta;
    }
    return k;
}

CollisionKernel make_monomial_kernel(double gamma, std::vector<double> coeffs, double constant)
{
    if (coeffs.empty())
        throw InvalidArgument("monomial kernel needs at least one coefficient");
    for (double c : coeffs)
        if (!(c >= 0.0) || !std::isfinite(c))
            throw InvalidArgument("monomial kernel coefficients must be finite and nonnegative");
    if (!(constant > 0.0))
        throw InvalidArgument("monomial kernel constant must be positive");
    require_finite(gamma, "gamma");
    CollisionKernel k;
    k.family = KernelFamily::custom_monomial;
    k.name = "custom_monomial";
    k.gamma = gamma;
    k.separable = true;
    k.radial = [gamma](double r) { return gamma == 0.0 ? 1.0 : std::pow(r, gamma); };
    for (double& c : coeffs)
        c *= constant;
    k.angular = [coeffs](double t) { return power_series_t2(coeffs, t); };
    k.bound_b_star = k.angular;
    k.bound_b_upper = k.angular;
    k.bound_phi_star = [](double) { return 1.0; };
    k.lower_series = coeffs;
    k.polynomial_angular = coeffs;
    k.params = {{"gamma", gamma}, {"const", constant}};
    return k;
}

CollisionKernel make_counterexample_kernel(double c, double beta, double gamma)
{
    require_finite(c, "c");
    require_finite(beta, "beta");
    require_finite(gamma, "gamma");
    if (!(c > 1.0))
        throw InvalidArgument("counterexample kernel needs c > 1");
    if (!(beta > 0.0))
        throw InvalidArgument("counterexample kernel needs beta > 0");
    CollisionKernel k;
    k.family = KernelFamily::counterexample;
    k.name = "counterexample";
    k.gamma = gamma;
    k.separable = true;
    k.radial = [beta, gamma](double r) {
        if (r < 1.0)
            return std::pow(r, beta);
        return gamma == 0.0 ? 1.0 : std::pow(r, gamma);
    };
    k.angular = [c](double t) { return c - t * t; };
    k.polynomial_angular = {c, -1.0};
    k.bound_b_upper = k.angular;
    k.bound_phi_star = [](double) { return 1.0; };
    k.params = {{"c", c}, {"beta", beta}, {"gamma", gamma}};
    return k;
}

namespace {

// Local power-law exponent of g at a singular endpoint, g evaluated at distance d from it.
double endpoint_exponent(const std::function<double(double)>& g)
{
    const double d1 = 1e-3, d2 = 1e-4;
    const double g1 = g(d1), g2 = g(d2);
    if (!(g1 > 0.0) || !(g2 > 0.0))
        return 2.0;
    if (!std::isfinite(g1) || !std::isfinite(g2))
        return -kInf;
    return std::log(g1 / g2) / std::log(d1 / d2);
}

struct HalfIntegral {
    double value = 0.0;
    bool finite = true;
    std::string note;
};

// int_0^{pi/2} g(d) dd with g possibly singular at d = 0.
HalfIntegral integrate_half(const std::function<double(double)>& g)
{
    HalfIntegral out;
    const double s = endpoint_exponent(g);
    if (s <= -1.0 + 1e-3) {
        out.finite = false;
        out.value = kInf;
        std::ostringstream os;
        os << "endpoint exponent " << s << " <= -1";
        out.note = os.str();
        return out;
    }
    // d = (pi/2) y^m makes the integrand behave like y^(m(s+1)-1) with m(s+1)-1 >= 2.
    const double half = 0.5 * std::numbers::pi;
    const double m = std::clamp(std::ceil(3.0 / (1.0 + s)), 1.0, 60.0);
    // Below d0, cos(d) is too close to 1 for b(cos d) to resolve; continue the power law instead.
    const double d0 = 1e-4;
    const double g0 = g(d0);
    auto mapped = [&](double y) {
        if (y <= 0.0)
            return 0.0;
        const double d = half * std::pow(y, m);
        const double gd = d < d0 ? g0 * std::pow(d / d0, s) : g(d);
        return gd * half * m * std::pow(y, m - 1.0);
    };
    const AdaptiveResult r = integrate_adaptive(mapped, 0.0, 1.0, 1e-12);
    out.value = r.value;
    out.finite = r.finite;
    if (!r.finite)
        out.note = "adaptive quadrature did not converge";
    return out;
}

} // namespace

AngularIntegrals angular_integrals(const CollisionKernel& kernel)
{
    if (!kernel.bound_b_upper)
        throw ConfigError("angular_integrals: kernel has no upper angular bound b^*");
    const auto& b = kernel.bound_b_upper;
    AngularIntegrals out;
    auto integral = [&](int sin_power, std::string& note) {
        double total = 0.0;
        bool finite = true;
        // theta in [0, pi/2] measured from 0, and [pi/2, pi] measured from pi.
        for (int side = 0; side < 2; ++side) {
            auto g = [&, side](double d) {
                const double theta = side == 0 ? d : std::numbers::pi - d;
                const double sn = std::sin(d);
                return b(std::cos(theta)) * (sin_power == 1 ? sn : sn * sn);
            };
            const HalfIntegral h = integrate_half(g);
            if (!h.finite) {
                finite = false;
                if (note.empty())
                    note = h.note;
            }
            total += h.value;
        }
        return finite ? total : kInf;
    };
    std::string note1, note2;
    out.I_sin = integral(1, note1);
    out.I_sin2 = integral(2, note2);
    const double g = kernel.gamma;
    out.satisfies_A2 = std::isfinite(out.I_sin) && g >= 0.0 && g <= 1.0;
    out.satisfies_A3 = std::isfinite(out.I_sin2) && g >= -4.0 && g < 0.0;
    if (!note1.empty())
        out.diagnostic += "I_sin: " + note1;
    if (!note2.empty())
        out.diagnostic += std::string(out.diagnostic.empty() ? "" : "; ") + "I_sin2: " + note2;
    return out;
}

CollisionKernel reduce_to_B0(const CollisionKernel& kernel, double coeff_cap_base)
{
    if (kernel.lower_series.empty() || !kernel.bound_phi_star)
        throw ConfigError("reduce_to_B0: kernel needs a completely positive lower bound b_* and Phi_*");
    if (!(coeff_cap_base > 0.0 && coeff_cap_base < 1.0))
        throw InvalidArgument("reduce_to_B0: coefficient cap base must lie in (0, 1)");
    std::vector<double> capped(kernel.lower_series.size());
    double cap = 1.0;
    for (std::size_t n = 0; n < capped.size(); ++n) {
        capped[n] = std::min(kernel.lower_series[n], cap);
        cap *= coeff_cap_base;
    }
    while (capped.size() > 1 && capped.back() == 0.0)
        capped.pop_back();
    const double gamma = kernel.gamma;
    const auto phi_star = kernel.bound_phi_star;
    CollisionKernel k;
    k.family = KernelFamily::reduced;
    k.name = "B0(" + kernel.name + ")";
    k.gamma = gamma;
    k.separable = true;
    k.radial = [gamma, phi_star](double r) {
        const double r6 = std::pow(r, 6.0);
        if (r == 0.0)
            return gamma > 0.0 ? 0.0 : 1.0;
        const double rg = gamma == 0.0 ? 1.0 : std::pow(r, gamma);
        return std::min(rg * phi_star(r), 1.0) / (1.0 + r6);
    };
    k.angular = [capped](double t) { return power_series_t2(capped, t); };
    k.bound_b_star = k.angular;
    k.bound_b_upper = k.angular;
    k.bound_phi_star = phi_star;
    k.lower_series = capped;
    k.polynomial_angular = capped;
    k.bounded = true;
    k.params = kernel.params;
    k.params["cap_base"] = coeff_cap_base;
    return k;
}

double reduced_angular_mass(const CollisionKernel& reduced)
{
    if (reduced.lower_series.empty())
        throw ConfigError("reduced_angular_mass: kernel carries no series");
    double s = 0.0;
    for (std::size_t n = 0; n < reduced.lower_series.size(); ++n)
        s += reduced.lower_series[n] * 2.0 / (2.0 * n + 1.0);
    return 2.0 * std::numbers::pi * s;
}

double reduced_A0(const CollisionKernel& reduced, double z_norm)
{
    return reduced_angular_mass(reduced) * reduced.radial(z_norm);
}

} // namespace fdkin
