#pragma once

#include "fdkin/geometry.hpp"

#include <variant>

namespace fdkin {

/// Mass, mean velocity and centred energy of a density.
struct Macroscopics {
    double M0 = 0.0;
    Vec3 v0{0.0, 0.0, 0.0};
    double M2 = 0.0;

    /// M2 / M0^(5/3); never below kappa_sat for admissible data.
    double ratio() const;
};

/// Smallest admissible M2 / M0^(5/3): (3/5) (3 / (4 pi))^(2/3), attained by ball indicators.
double kappa_sat();

/// Riemann sums h^3 sum f, h^3 sum v f / M0, h^3 sum |v - v0|^2 f. Throws InvalidArgument for zero mass.
Macroscopics macroscopic(const DensityField& f);

enum class Regime { regular, saturated };

const char* to_string(Regime regime);

/// Saturated when |ratio - kappa_sat| <= tol * kappa_sat, regular above, NumericalError below.
Regime classify(const Macroscopics& m, double tol = 1e-6);

/// Like classify, but a grid field that is a discrete ball (0/1 valued, every 1-node closer to v0
/// than every 0-node) is saturated regardless of the Riemann-sum ratio.
Regime classify_field(const DensityField& f, double tol = 1e-6);

/// True when f is 0/1 valued and its 1-nodes are exactly the nodes nearest to its mean velocity.
bool is_discrete_ball(const DensityField& f);

struct RegularEquilibrium {
    double a = 0.0;
    double b = 0.0;
    Vec3 v0{0.0, 0.0, 0.0};
};

struct SaturatedEquilibrium {
    double R = 0.0;
    Vec3 v0{0.0, 0.0, 0.0};
};

using EquilibriumSpec = std::variant<RegularEquilibrium, SaturatedEquilibrium>;

/// g_k(a) = 4 pi int_0^inf r^(k+2) a e^(-r^2) / (1 + a e^(-r^2)) dr for k in {0, 2}.
double fd_moment(int k, double a);

/// d g_k / d log a = 4 pi int_0^inf r^(k+2) F (1 - F) dr.
double fd_moment_dlog(int k, double a);

/// g_2(a) / g_0(a)^(5/3).
double fd_ratio(double a);

/// Exact moments of a regular profile: M0 = g_0(a) b^(-3/2), M2 = g_2(a) b^(-5/2).
Macroscopics equilibrium_moments(const RegularEquilibrium& eq);

/// Fermi-Dirac parameters with the given moments. Saturated data returns R = (3 M0 / (4 pi))^(1/3).
/// NumericalError when the root leaves [1e-12, 1e12] or the moments are infeasible.
EquilibriumSpec solve_fermi_dirac(const Macroscopics& m, double tol = 1e-6);

/// Same as solve_fermi_dirac with the regime taken from classify_field.
EquilibriumSpec solve_for_field(const DensityField& f, double tol = 1e-6);

double eval_equilibrium_at(const EquilibriumSpec& spec, const Vec3& v);
DensityField eval_equilibrium(const EquilibriumSpec& spec, const VelocityGrid& grid);

} // namespace fdkin
