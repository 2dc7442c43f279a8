#include "fdkin/solver.hpp"

#include "fdkin/entropy.hpp"
#include "fdkin/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace fdkin {

namespace {

std::array<double, 5> psi(const Vec3& v)
{
    return {1.0, v[0], v[1], v[2], norm2(v)};
}

// Solves G lambda = rhs for the weighted Gram matrix; nullopt when singular.
std::optional<Eigen::Matrix<double, 5, 1>> gram_solve(const VelocityGrid& grid, const std::vector<double>& weight,
                                                      const MomentVector& rhs)
{
    Eigen::Matrix<double, 5, 5> G = Eigen::Matrix<double, 5, 5>::Zero();
    const double h3 = grid.cell_volume();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = weight[i];
        if (w == 0.0)
            continue;
        const auto p = psi(grid.node(i));
        for (int k = 0; k < 5; ++k)
            for (int l = 0; l < 5; ++l)
                G(k, l) += h3 * w * p[k] * p[l];
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(G);
    lu.setThreshold(1e-13);
    if (lu.rank() < 5)
        return std::nullopt;
    Eigen::Matrix<double, 5, 1> b;
    for (int k = 0; k < 5; ++k)
        b(k) = rhs[k];
    return lu.solve(b);
}

void add_correction(std::vector<double>& q, const VelocityGrid& grid, const std::vector<double>& weight,
                    const Eigen::Matrix<double, 5, 1>& lambda, double sign)
{
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (weight[i] == 0.0)
            continue;
        const auto p = psi(grid.node(i));
        double c = 0.0;
        for (int k = 0; k < 5; ++k)
            c += lambda(k) * p[k];
        q[i] += sign * weight[i] * c;
    }
}

std::vector<double> pauli_weight(const DensityField& f)
{
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        w[i] = f.values[i] * (1.0 - f.values[i]);
    return w;
}

// Clamps to [0, 1]; returns h^3 sum of the removed excess.
double clamp_field(DensityField& f)
{
    double removed = 0.0;
    for (double& x : f.values) {
        const double c = std::clamp(x, 0.0, 1.0);
        removed += std::abs(c - x);
        x = c;
    }
    return f.grid.cell_volume() * removed;
}

// Weighted correction of f so its invariants equal `target`.
void restore_moments(DensityField& f, const MomentVector& target)
{
    for (int pass = 0; pass < 3; ++pass) {
        const MomentVector now = invariant_moments(f.values, f.grid);
        MomentVector diff;
        for (int k = 0; k < 5; ++k)
            diff[k] = target[k] - now[k];
        const auto w = pauli_weight(f);
        const auto lambda = gram_solve(f.grid, w, diff);
        if (!lambda)
            throw NumericalError("cannot restore invariants after clamping: degenerate weight");
        add_correction(f.values, f.grid, w, *lambda, 1.0);
        clamp_field(f);
    }
}

double max_rate(const CollisionTerms& t)
{
    double m = 0.0;
    for (double x : t.rate)
        m = std::max(m, x);
    return m;
}

} // namespace

MomentVector invariant_moments(const std::vector<double>& q, const VelocityGrid& grid)
{
    MomentVector m{};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (q[i] == 0.0)
            continue;
        const auto p = psi(grid.node(i));
        for (int k = 0; k < 5; ++k)
            m[k] += q[i] * p[k];
    }
    for (double& x : m)
        x *= grid.cell_volume();
    return m;
}

std::vector<double> conserve_project(const std::vector<double>& q, const VelocityGrid& grid,
                                     const std::vector<double>& weight)
{
    if (q.size() != grid.size() || weight.size() != grid.size())
        throw InvalidArgument("conserve_project: field size does not match the grid");
    std::vector<double> out = q;
    // Second pass removes the round-off left by the first.
    for (int pass = 0; pass < 2; ++pass) {
        const auto lambda = gram_solve(grid, weight, invariant_moments(out, grid));
        if (!lambda)
            throw ConfigError("conserve_project: singular Gram matrix (weight supported on too few nodes)");
        add_correction(out, grid, weight, *lambda, -1.0);
    }
    return out;
}

std::vector<double> conserve_project(const std::vector<double>& q, const VelocityGrid& grid)
{
    return conserve_project(q, grid, std::vector<double>(grid.size(), 1.0));
}

const char* to_string(Scheme scheme)
{
    return scheme == Scheme::euler ? "euler" : "rk2";
}

Scheme scheme_from_string(const std::string& name)
{
    if (name == "euler")
        return Scheme::euler;
    if (name == "rk2")
        return Scheme::rk2;
    throw InvalidArgument("unknown time scheme '" + name + "' (expected euler or rk2)");
}

SolverState::SolverState(DensityField f0) : f(std::move(f0))
{
    if (!f.pauli_bounded())
        throw InvalidArgument("initial data violates 0 <= f <= 1");
    moments0 = invariant_moments(f.values, f.grid);
    bool any = false;
    for (double x : f.values)
        any = any || x != 0.0;
    stationary = any && is_discrete_ball(f);
}

StepReport step(SolverState& state, const CollisionOperator& op, const StepOptions& opt,
                const CollisionTerms* first_stage)
{
    if (!(opt.dt_max > 0.0))
        throw InvalidArgument("step: dt_max must be positive");
    StepReport rep;
    if (state.stationary) {
        rep.dt = opt.dt_max;
        state.t += rep.dt;
        return rep;
    }
    CollisionTerms own;
    if (!first_stage) {
        own = op.evaluate(state.f);
        first_stage = &own;
    }
    const double rate0 = max_rate(*first_stage);
    if (rate0 == 0.0) {
        rep.dt = opt.dt_max;
        state.t += rep.dt;
        return rep;
    }
    const VelocityGrid& grid = state.f.grid;
    const std::vector<double> q0 = conserve_project(first_stage->Q, grid, pauli_weight(state.f));

    double dt = std::min(opt.dt_max, opt.safety / rate0);
    std::optional<std::vector<double>> q1;
    DensityField f1(grid);
    for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
        f1 = state.f;
        for (std::size_t i = 0; i < grid.size(); ++i)
            f1.values[i] += dt * q0[i];
        double clamped = clamp_field(f1);
        bool ok = clamped <= opt.clamp_tolerance;
        DensityField next = f1;
        if (ok && opt.scheme == Scheme::rk2) {
            const CollisionTerms t1 = op.evaluate(f1);
            // The second stage only needs dt * rate <= 1 to stay inside [0, 1]; the safety margin is
            // applied once, to the first stage.
            if (dt * max_rate(t1) > 1.0) {
                ok = false;
            } else {
                const std::vector<double> qs = conserve_project(t1.Q, grid, pauli_weight(f1));
                DensityField f2 = f1;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    f2.values[i] += dt * qs[i];
                const double c2 = clamp_field(f2);
                clamped += c2;
                ok = c2 <= opt.clamp_tolerance;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    next.values[i] = 0.5 * (state.f.values[i] + f2.values[i]);
            }
        }
        if (ok) {
            if (clamped > 0.0)
                restore_moments(next, state.moments0);
            state.f = std::move(next);
            state.t += dt;
            rep.dt = dt;
            rep.clamped_mass = clamped;
            return rep;
        }
        ++rep.rejections;
        dt *= 0.5;
    }
    std::ostringstream os;
    os << "step rejected " << opt.max_retries << " times at t = " << state.t << " (last dt " << 2.0 * dt << ")";
    throw NumericalError(os.str());
}

double distance_to_equilibrium(const DensityField& f, const DensityField& F)
{
    if (!(f.grid == F.grid))
        throw InvalidArgument("distance_to_equilibrium: fields live on different grids");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += std::abs(f.values[i] - F.values[i]) * (1.0 + norm2(f.grid.node(i)));
    return f.grid.cell_volume() * acc;
}

void TimeSeries::write_csv(std::ostream& os) const
{
    os << kTimeSeriesHeader << '\n';
    os.precision(17);
    for (const TimeSeriesRow& r : rows)
        os << r.t << ',' << r.M0 << ',' << r.v0[0] << ',' << r.v0[1] << ',' << r.v0[2] << ',' << r.energy << ','
           << r.entropy << ',' << r.dissipation << ',' << r.dist_L12 << ',' << r.time_avg_dist << ',' << r.min_f
           << ',' << r.max_f << ',' << r.dt << '\n';
}

namespace {

TimeSeriesRow diagnostics(const SolverState& s, const DensityField& F, double D, std::uint64_t skips)
{
    TimeSeriesRow r;
    const DensityField& f = s.f;
    r.t = s.t;
    double m0 = 0.0, e = 0.0;
    Vec3 mom{0.0, 0.0, 0.0};
    r.min_f = 1.0;
    r.max_f = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.values[i];
        const Vec3 v = f.grid.node(i);
        m0 += x;
        mom = mom + x * v;
        e += x * norm2(v);
        r.min_f = std::min(r.min_f, x);
        r.max_f = std::max(r.max_f, x);
    }
    const double h3 = f.grid.cell_volume();
    r.M0 = h3 * m0;
    r.v0 = m0 > 0.0 ? (1.0 / m0) * mom : Vec3{0.0, 0.0, 0.0};
    r.energy = h3 * e;
    r.entropy = entropy_S(f);
    r.dissipation = D;
    r.floor_skips = skips;
    r.dist_L12 = distance_to_equilibrium(f, F);
    r.moment4 = weighted_moment(f, 4.0);
    return r;
}

} // namespace

SimulationResult run_simulation(const SimulationSetup& setup)
{
    if (!(setup.T > 0.0))
        throw ConfigError("simulation horizon T must be positive");
    if (setup.output_every < 1)
        throw ConfigError("output.every must be >= 1");
    if (!(setup.initial.grid == setup.op.grid()))
        throw ConfigError("initial data grid differs from the operator grid");

    SimulationResult res{TimeSeries{}, setup.initial, solve_for_field(setup.initial, setup.equilibrium_tol),
                         setup.initial, 0, 0, 0.0, 0.0, false};
    res.equilibrium_field = eval_equilibrium(res.equilibrium, setup.initial.grid);

    SolverState state(setup.initial);
    res.stationary = state.stationary;
    double dist_integral = 0.0;

    auto record = [&](const CollisionTerms* terms, double dt, double clamped) {
        const double D = terms ? terms->dissipation : 0.0;
        TimeSeriesRow row = diagnostics(state, res.equilibrium_field, D, terms ? terms->floor_skips : 0);
        row.dt = dt;
        row.clamped_mass = clamped;
        if (!res.series.rows.empty()) {
            const TimeSeriesRow& prev = res.series.rows.back();
            const double span = row.t - prev.t;
            dist_integral += 0.5 * span * (prev.dist_L12 + row.dist_L12);
            res.entropy_production += 0.5 * span * (prev.dissipation + row.dissipation);
            row.time_avg_dist = dist_integral / row.t;
        } else {
            row.time_avg_dist = row.dist_L12;
        }
        res.series.rows.push_back(row);
    };

    // Rows carry D, so a recording step evaluates the operator with dissipation fused in.
    CollisionTerms terms;
    const bool live = !state.stationary;
    if (live)
        terms = setup.op.evaluate(state.f, true);
    record(live ? &terms : nullptr, 0.0, 0.0);

    const double eps = 1e-12 * setup.T;
    while (state.t < setup.T - eps) {
        StepOptions opt = setup.step;
        opt.dt_max = std::min(opt.dt_max, setup.T - state.t);
        const StepReport rep = step(state, setup.op, opt, live ? &terms : nullptr);
        ++res.steps;
        res.rejections += rep.rejections;
        res.max_clamped_mass = std::max(res.max_clamped_mass, rep.clamped_mass);
        const bool at_end = state.t >= setup.T - eps;
        const bool recording = at_end || res.steps % setup.output_every == 0;
        if (live) {
            // The next step needs Q at the new state; D is added only on recorded rows.
            terms = setup.op.evaluate(state.f, recording);
        }
        if (recording)
            record(live ? &terms : nullptr, rep.dt, rep.clamped_mass);
    }
    res.final_field = state.f;
    return res;
}

} // namespace fdkin
