#pragma once

#include "fdkin/collision.hpp"
#include "fdkin/equilibrium.hpp"
#include "fdkin/geometry.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fdkin {

/// Collision invariants psi_k in {1, v1, v2, v3, |v|^2}.
using MomentVector = std::array<double, 5>;

/// h^3 sum q psi_k for the five collision invariants.
MomentVector invariant_moments(const std::vector<double>& q, const VelocityGrid& grid);

/// q - sum_k lambda_k w psi_k with lambda from the 5x5 Gram system, so that all five moments of
/// the result vanish. `weight` must be nonnegative; ConfigError when the Gram matrix is singular.
std::vector<double> conserve_project(const std::vector<double>& q, const VelocityGrid& grid,
                                     const std::vector<double>& weight);

/// Projection with the uniform weight 1.
std::vector<double> conserve_project(const std::vector<double>& q, const VelocityGrid& grid);

enum class Scheme { euler, rk2 };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct StepOptions {
    double dt_max = 0.5;
    Scheme scheme = Scheme::euler;
    double safety = 0.9;
    double clamp_tolerance = 1e-10;
    int max_retries = 20;
};

struct SolverState {
    double t = 0.0;
    DensityField f;
    MomentVector moments0{};  ///< invariants of the initial data
    bool stationary = false;  ///< discrete saturated ball: held fixed

    explicit SolverState(DensityField f0);
};

struct StepReport {
    double dt = 0.0;
    double clamped_mass = 0.0;
    int rejections = 0;
};

/// One explicit step of df/dt = Q(f) with the invariants projected out of Q (weight f(1 - f)).
/// dt = min(dt_max, safety / max N(f)). Values are clamped to [0, 1]; a step whose clamped mass
/// exceeds clamp_tolerance is retried with dt halved. When clamping happened the invariants are
/// restored to their initial values by a weighted correction of f.
/// rk2 is the two-stage convex combination f_new = (f + E(E(f))) / 2 of Euler steps E.
/// `first_stage` may carry op.evaluate(state.f) already computed by the caller.
StepReport step(SolverState& state, const CollisionOperator& op, const StepOptions& opt,
                const CollisionTerms* first_stage = nullptr);

/// h^3 sum |f - F| (1 + |v|^2).
double distance_to_equilibrium(const DensityField& f, const DensityField& F);

struct TimeSeriesRow {
    double t = 0.0;
    double M0 = 0.0;
    Vec3 v0{0.0, 0.0, 0.0};
    double energy = 0.0;  ///< h^3 sum |v|^2 f
    double entropy = 0.0;
    double dissipation = 0.0;
    double dist_L12 = 0.0;
    double time_avg_dist = 0.0;
    double min_f = 0.0;
    double max_f = 0.0;
    double dt = 0.0;
    // not in the CSV
    double moment4 = 0.0;
    double clamped_mass = 0.0;
    std::uint64_t floor_skips = 0;
};

struct TimeSeries {
    std::vector<TimeSeriesRow> rows;

    void write_csv(std::ostream& os) const;
};

inline constexpr const char* kTimeSeriesHeader =
    "t,M0,v0x,v0y,v0z,energy,entropy,dissipation,dist_L12,time_avg_dist,min_f,max_f,dt";

struct SimulationSetup {
    DensityField initial;
    CollisionOperator op;
    StepOptions step;
    double T = 20.0;
    int output_every = 1;
    double equilibrium_tol = 1e-6;
};

struct SimulationResult {
    TimeSeries series;
    DensityField final_field;
    EquilibriumSpec equilibrium;
    DensityField equilibrium_field;
    int steps = 0;
    int rejections = 0;
    double max_clamped_mass = 0.0;
    double entropy_production = 0.0;  ///< trapezoid integral of D over the recorded rows
    bool stationary = false;
};

/// Integrates to T, recording a row every output_every steps and at T.
SimulationResult run_simulation(const SimulationSetup& setup);

} // namespace fdkin
