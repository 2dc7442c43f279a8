#pragma once

#include "fdkin/geometry.hpp"
#include "fdkin/kernels.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fdkin {

/// Trilinear interpolation of the zero-extended nodal field, clamped to [0, 1].
/// Exact at nodes; 0 once v is more than one cell outside the box.
double interpolate_field(const DensityField& f, const Vec3& v);

/// Logit field log(f / (1 - f)) on a grid padded by `pad` cells on every side.
/// Logits are limited to +-log(1e30). Past the box each axis line is continued by the quadratic
/// through its three outermost nodes, clamped so it never rises above the boundary value.
struct PaddedLogit {
    PaddedLogit(const DensityField& f, int pad_cells);

    int pad = 0;
    int P = 0;
    double h = 0.0;
    double vmax = 0.0;
    std::vector<double> L;
    std::vector<char> row_active;  ///< (i, j) rows holding a value above the floor

    /// Quadratic Lagrange interpolation on the 27 nodes around the nearest node, mapped back
    /// through the logistic function; 0 when all 27 sit at the floor or v leaves the padding.
    double operator()(const Vec3& v) const;
};

/// Padding used by the collision operator for an n^3 grid.
int collision_pad(int n);

/// PaddedLogit interpolation of f at v. Exact on Fermi-Dirac profiles, whose logit is quadratic.
double interpolate_field_logit(const DensityField& f, const Vec3& v);

/// How the collision operator reads f off the grid at v' and v_*'.
enum class Interpolation { trilinear, logit_quadratic };

const char* to_string(Interpolation mode);
Interpolation interpolation_from_string(const std::string& name);

/// Reusable interpolant of one field (builds the padded logit field once).
class FieldInterpolator {
public:
    FieldInterpolator(const DensityField& f, Interpolation mode);
    double operator()(const Vec3& v) const;

private:
    const DensityField* f_;
    Interpolation mode_;
    std::optional<PaddedLogit> logit_;
};

/// Dispatches to interpolate_field or interpolate_field_logit.
double interpolate(const DensityField& f, const Vec3& v, Interpolation mode);

/// Fermi-Dirac collision integrand f'f_*'(1-f)(1-f_*) - f f_*(1-f')(1-f_*').
double pi_F(double f, double f_star, double f_prime, double f_star_prime);

/// Same value with the quartic terms cancelled: f'f_*'(1-f-f_*) - f f_*(1-f'-f_*').
double pi_F_cancelled(double f, double f_star, double f_prime, double f_star_prime);

struct PiParts {
    double plus = 0.0;   ///< f'f_*'(1-f)(1-f_*)
    double minus = 0.0;  ///< f f_*(1-f')(1-f_*')
};
PiParts pi_F_parts(double f, double f_star, double f_prime, double f_star_prime);

/// Gamma(a, b) = (a - b) log(a / b), Gamma(0, 0) = 0, +inf when exactly one argument is 0.
double gamma_fn(double a, double b);

/// Nodewise pieces of the collision operator for one field.
struct CollisionTerms {
    std::vector<double> Q;     ///< Q(f)
    std::vector<double> gain;  ///< Q+(f (x) f | 1 - f) = sum B f'f_*'(1 - f_*)
    std::vector<double> rate;  ///< N(f) = sum B (f'f_*' + f_*(1 - f' - f_*'))
    double dissipation = 0.0;  ///< D(f) when requested
    std::uint64_t floor_skips = 0;  ///< terms dropped by the Gamma floor
};

/// Discrete collision operator on a velocity grid.
///
/// For every node v the sum runs over grid nodes v_* != v and the nodes sigma_m of the
/// sphere rule, with the post-collision values taken from the chosen interpolant. Axis-aligned
/// rules are oriented along the lexicographically positive one of +-(v - v_*), so each unordered
/// pair is visited once and feeds both nodes. Offsets are split into fixed chunks whose partial
/// sums are added in chunk order: results do not depend on the thread count.
class CollisionOperator {
public:
    CollisionOperator(const VelocityGrid& grid, const CollisionKernel& kernel, const SphereQuadrature& quad,
                      Interpolation mode = Interpolation::logit_quadratic);

    const VelocityGrid& grid() const { return grid_; }
    const CollisionKernel& kernel() const { return kernel_; }
    const SphereQuadrature& quadrature() const { return quad_; }
    Interpolation interpolation() const { return mode_; }

    CollisionTerms evaluate(const DensityField& f, bool with_dissipation = false) const;

    /// D(f) = 1/4 sum B Gamma(Pi+, Pi-) h^6 w_m, terms below the 1e-30 floor skipped and counted.
    double dissipation(const DensityField& f, std::uint64_t* floor_skips = nullptr) const;

    /// Q(f)(v) at one node, summed pair by pair without the sweep tables (reference path).
    double evaluate_at(const DensityField& f, std::size_t node) const;

    /// Sum over v_* nodes of h^3 sum_m w_m B (the integrand bound of |Q(f)(v)|).
    double kernel_mass_at(std::size_t node) const;

private:
    VelocityGrid grid_;
    CollisionKernel kernel_;
    SphereQuadrature quad_;
    Interpolation mode_;
    int pad_ = 0;
    int padded_ = 0;
    int offsets_per_axis_ = 0;
    // h^3 w_m B(|z|, t_m) for every offset z (index units) and node m.
    std::vector<double> weights_;

    std::size_t offset_index(int dx, int dy, int dz) const;
};

/// Checks that a sphere rule can resolve the kernel's angular part; throws ConfigError if not.
void check_kernel_quadrature(const CollisionKernel& kernel, const SphereQuadrature& quad);

/// Q(f) on every node.
std::vector<double> eval_Q(const DensityField& f, const CollisionKernel& kernel, const SphereQuadrature& quad,
                           Interpolation mode = Interpolation::logit_quadratic);

/// N(f) on every node, for a bounded kernel.
std::vector<double> loss_rate_N(const DensityField& f, const CollisionKernel& kernel_B0, const SphereQuadrature& quad,
                                Interpolation mode = Interpolation::logit_quadratic);

/// Pair function Psi(v', v_*').
using PairFunction = std::function<double(const Vec3&, const Vec3&)>;

/// Q+(Psi)(v) = sum_{v_*} h^3 sum_m w_m B0 Psi(v', v_*') and, when `weight` is given,
/// Q+(Psi | F)(v) with the extra factor F(v_*). Requires a bounded kernel.
std::vector<double> eval_gain(const PairFunction& psi, const DensityField* weight, const CollisionKernel& kernel_B0,
                              const VelocityGrid& grid, const SphereQuadrature& quad);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of Q(f)(v): v_* uniform over the grid nodes other than v (each carrying
/// volume h^3), sigma uniform on the sphere, or cos(theta) importance-sampled from a 1024-bin
/// tabulation of the angular part when it is singular. Deterministic for a fixed seed.
McEstimate mc_estimate_Q(const DensityField& f, const CollisionKernel& kernel, std::size_t node,
                         std::uint64_t n_samples, std::uint64_t seed,
                         Interpolation mode = Interpolation::logit_quadratic);

} // namespace fdkin
