#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fdkin {

enum class KernelFamily { inverse_power, rutherford, debye, custom_monomial, reduced, counterexample };

const char* to_string(KernelFamily family);

/// Collision kernel B(|z|, cos theta).
///
/// Separable kernels are radial(|z|) * angular(cos theta) where `radial` already
/// contains the |z|^gamma factor; non-separable kernels evaluate `joint`.
/// The optional bound functions are the lower/upper pair (b_*, b^*) and Phi_* of the
/// standing kernel assumptions; `lower_series` holds the coefficients c_n of
/// b_*(t) = sum_n c_n t^(2n), n = 0..N, when b_* is known to be completely positive.
struct CollisionKernel {
    KernelFamily family = KernelFamily::custom_monomial;
    std::string name;
    double gamma = 0.0;
    bool separable = true;
    std::function<double(double)> radial;
    std::function<double(double)> angular;
    std::function<double(double, double)> joint;

    std::function<double(double)> bound_b_star;
    std::function<double(double)> bound_b_upper;
    std::function<double(double)> bound_phi_star;
    std::vector<double> lower_series;
    /// Coefficients d_n with angular(t) = sum_n d_n t^(2n) exactly, when the angular part is a
    /// polynomial (signs unrestricted); empty otherwise.
    std::vector<double> polynomial_angular;

    /// |z| below this value is evaluated at this value (only used when gamma < 0).
    double radial_cap = 0.0;
    /// p such that angular(t) * (1 - t^2)^p stays bounded as |t| -> 1; 0 for bounded angular parts.
    double angular_singularity = 0.0;
    /// True for kernels bounded on R^3 x S^2 (the reduced kernels).
    bool bounded = false;

    /// Family parameters, used for serialization and reports.
    std::map<std::string, double> params;
};

/// B(|z|, cos theta). Non-finite input, negative |z| or |cos theta| > 1 throw InvalidArgument.
/// At |cos theta| = 1 a singular angular part evaluates to +infinity.
double eval_kernel(const CollisionKernel& kernel, double z_norm, double cos_theta);

/// Angular factor at fixed |z| for non-separable kernels, the angular part otherwise.
double eval_angular_at(const CollisionKernel& kernel, double z_norm, double cos_theta);

/// Sets radial_cap to h/2 for soft kernels (gamma < 0); a no-op otherwise.
CollisionKernel with_radial_cap(CollisionKernel kernel, double grid_spacing);

/// Inverse-power-law interaction |x|^-alpha: B = |z|^(2 alpha - 5) c_alpha ((1-t)^-beta - (1+t)^-beta)^2,
/// beta = (3 - alpha) / 2, with b_* = b^* = b and Phi_* = 1.
CollisionKernel make_inverse_power_kernel(double alpha, double c_alpha = 1.0, int series_terms = 200);

enum class RutherfordVariant { full, cos2 };

/// Rutherford kernel with the weaker angular cutoff, gamma = -3:
/// full: const (1 + t^2)(1 - t^2)^-p, cos2: const t^2 (1 - t^2)^-p, 1 < p < 3/2.
CollisionKernel make_rutherford_cutoff_kernel(double p, double constant = 1.0,
                                              RutherfordVariant variant = RutherfordVariant::full,
                                              int series_terms = 200);

/// Weak-coupling kernel for the potential with Fourier transform (1 + |xi|^2)^-beta:
/// B = |z| ((1 + |z|^2 sin^2(theta/2))^-beta - (1 + |z|^2 cos^2(theta/2))^-beta)^2, gamma = 1 - 4 beta.
/// For 0 < beta < 1 the bound functions Phi_*, b_* = c_beta t^2, b^* = C_beta t^2 (1-t^2)^(-2 beta)
/// are attached, with c_beta and C_beta found by lattice sampling.
CollisionKernel make_debye_kernel(double beta);

/// B = constant |z|^gamma sum_n coeffs[n] t^(2n). Completely positive by construction.
CollisionKernel make_monomial_kernel(double gamma, std::vector<double> coeffs, double constant = 1.0);

/// Kernel with a sign-indefinite quartic form: B = Phi(|z|) (c - t^2),
/// Phi(r) = r^beta for r < 1 and r^gamma for r >= 1, c > 1.
CollisionKernel make_counterexample_kernel(double c, double beta, double gamma);

/// Completely-positive expansion ((1-t)^-beta - (1+t)^-beta)^2 = sum_{n>=1} a_n t^(2n).
struct CpSeries {
    std::vector<double> coefficients;  ///< a_1 .. a_N
    double beta = 0.0;

    /// sum_{n=1}^{N} a_n t^(2n).
    double evaluate(double t) const;
};

CpSeries cp_series_coefficients(double beta, int n_max);

/// ((1-t)^-beta - (1+t)^-beta)^2 evaluated without cancellation near t = 0.
double cp_closed_form(double beta, double t);

struct AngularIntegrals {
    double I_sin = 0.0;   ///< int_0^pi b^*(cos theta) sin theta d theta (+inf when divergent)
    double I_sin2 = 0.0;  ///< int_0^pi b^*(cos theta) sin^2 theta d theta (+inf when divergent)
    bool satisfies_A2 = false;
    bool satisfies_A3 = false;
    std::string diagnostic;
};

/// Integrability of the upper angular bound b^*. Requires bound_b_upper.
/// satisfies_A2 means gamma in [0, 1] and I_sin finite; satisfies_A3 means gamma in [-4, 0) and
/// I_sin2 finite.
AngularIntegrals angular_integrals(const CollisionKernel& kernel);

/// Reduced kernel B_0 = min(|z|^gamma Phi_*(|z|), 1) / (1 + |z|^6) * sum_n min(c_n, base^n) t^(2n).
/// Needs lower_series and bound_phi_star on the input kernel.
CollisionKernel reduce_to_B0(const CollisionKernel& kernel, double coeff_cap_base = 0.5);

/// 2 pi int_{-1}^{1} b(t) dt for a reduced kernel's angular part (its series is integrated exactly).
double reduced_angular_mass(const CollisionKernel& reduced);

/// A_0(|z|) = int_{S^2} B_0 d sigma.
double reduced_A0(const CollisionKernel& reduced, double z_norm);

} // namespace fdkin
