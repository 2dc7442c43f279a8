#pragma once

#include "fdkin/geometry.hpp"
#include "fdkin/kernels.hpp"
#include "fdkin/numerics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fdkin {

/// Real-valued test function h on R^3, either closed form or a grid field (trilinear, 0 outside).
struct TestFunction {
    enum class Kind { closed_form, grid_field };
    Kind kind = Kind::closed_form;
    std::string name;
    double lambda = 0.0;  ///< Gaussian envelope rate e^(-lambda |v|^2), 0 if none
    std::function<double(const Vec3&)> fn;
    std::optional<DensityField> field;

    double operator()(const Vec3& v) const;
};

/// h(v) = e^(-lambda |v|^2) (1 + sqrt(2) sin(pi/2 <v/|v|, e1>)), h(0) = 1.
TestFunction counterexample_test_function(double lambda);

/// h(v) = e^(-lambda |v - center|^2).
TestFunction gaussian_test_function(double lambda, const Vec3& center = {0.0, 0.0, 0.0});

/// h(v) = e^(-lambda |v|^2) P(v) with P a polynomial of total degree <= degree, standard normal
/// coefficients drawn from splitmix64(seed). Sign-changing for generic draws.
TestFunction random_test_function(std::uint64_t seed, double lambda, int degree = 3);

/// Grid values taken as a trilinear interpolant (no clamping), 0 outside the box.
TestFunction grid_test_function(const DensityField& values);

/// sum_{v, v_*} h^6 sum_m w_m B h(v) h(v_*) h(v') h(v_*') on the grid, v_* = v skipped.
double quartic_integral(const CollisionKernel& kernel, const TestFunction& h, const VelocityGrid& grid,
                        const SphereQuadrature& quad);

/// Quadratures for the (r, u, omega, sigma) form of the quartic integral.
struct ReducedRules {
    Rule1D radial;
    std::vector<Vec3> u_nodes;
    std::vector<double> u_weights;
    SphereQuadrature sphere;
};

struct ReducedResolution {
    int n_r_inner = 24;  ///< Gauss-Legendre nodes on [0, 1]
    int n_r_outer = 32;  ///< Gauss-Legendre nodes on [1, r_cut]
    int n_u = 10;        ///< Gauss-Hermite nodes per u axis
    SphereRuleKind sphere_kind = SphereRuleKind::lebedev_like;
    int sphere_order = 50;
    int sphere_n_phi = 0;
};

/// r_cut is where e^(-lambda r^2) r^(5 + gamma) falls below 1e-16 of its peak (at least 1.5);
/// the u rule is a tensor Gauss-Hermite rule matched to e^(-lambda |u|^2).
ReducedRules build_reduced_rules(double lambda, double gamma, const ReducedResolution& res);

struct ReducedResult {
    double value = 0.0;
    double abs_scale = 0.0;  ///< the same sum with |B H H|, or an upper bound of it
    double min_inner = 0.0;  ///< smallest double-sphere form over the (r, u) samples
    double max_inner_abs = 0.0;
};

/// 1/8 int r^2 dr int du int int B(r, <omega, sigma>) H(omega) H(sigma),
/// H(sigma) = h((u + r sigma)/2) h((u - r sigma)/2).
ReducedResult quartic_integral_reduced(const CollisionKernel& kernel, const TestFunction& h, const ReducedRules& rules);

/// S(r_i) = 1/8 r_i^2 int du int int b(<omega, sigma>) H H for a separable kernel's angular part,
/// so that the reduced integral is sum_i w_i radial(r_i) S(r_i).
std::vector<double> reduced_radial_profile(const CollisionKernel& kernel, const TestFunction& h,
                                           const ReducedRules& rules);

struct BilinearForm {
    double value = 0.0;
    std::optional<double> certificate;  ///< sum over index tuples of squared moments, monomial kernels only
    bool certified = false;             ///< certificate present and equal to value within 1e-10
};

/// sum_{a,b} w_a w_b B(<sigma_a, sigma_b>) h(sigma_a) h(sigma_b). When monomial_power = n the
/// kernel is taken to be t^(2n) and the moment-tensor sum over (2n)-tuples is computed as well.
BilinearForm sphere_bilinear_form(const std::function<double(double)>& angular,
                                  const std::function<double(const Vec3&)>& h_on_sphere,
                                  const SphereQuadrature& quad, std::optional<int> monomial_power = std::nullopt);

/// Random polynomial on the sphere of degree <= degree (a finite spherical-harmonic combination).
std::function<double(const Vec3&)> random_sphere_function(std::uint64_t seed, int degree);

/// J(u) = int int (c - <omega, sigma>^2) g_u(omega) g_u(sigma) with
/// g_u(sigma) = (1 + sqrt(2) sin(pi/2 <(u + sigma)/|u + sigma|, e1>)) (1 + sqrt(2) sin(pi/2 <(u - sigma)/|u - sigma|, e1>)).
/// g_0(sigma) = cos(pi sigma_1), so J(0) = -96 / pi^2 for every c.
double counterexample_J(double c, const Vec3& u, const SphereQuadrature& quad);

struct CounterexampleConfig {
    double c = 2.0;
    double gamma = 0.0;
    std::vector<double> lambdas{1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<double> betas{2.0, 4.0, 8.0, 16.0, 32.0};
    int j0_order = 50;
    ReducedResolution low{24, 32, 10, SphereRuleKind::lebedev_like, 50, 0};
    ReducedResolution high{40, 48, 12, SphereRuleKind::product_cos_phi, 12, 24};
};

struct ScanEntry {
    double lambda = 0.0;
    double beta = 0.0;
    double I = 0.0;
    double I_error = 0.0;
};

struct CounterexampleReport {
    double c = 0.0;
    double gamma = 0.0;
    double J0 = 0.0;
    int J0_nodes = 0;
    double lambda = 0.0;
    double beta = 0.0;
    double I = 0.0;
    double I_error = 0.0;
    bool I_negative = false;  ///< I < 0 with |I| >= 3 I_error
    std::vector<ScanEntry> scan;
};

/// I for one (lambda, beta) at two resolutions; I_error is their difference.
ScanEntry counterexample_point(double c, double gamma, double lambda, double beta, const CounterexampleConfig& cfg);

/// J(0) on the j0_order Lebedev rule, then the (lambda, beta) scan; reports the entry whose I is
/// most negative relative to its error (or the most negative I when none is significant).
CounterexampleReport counterexample_suite(const CounterexampleConfig& cfg);

} // namespace fdkin
