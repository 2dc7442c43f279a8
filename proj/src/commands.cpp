#include "fdkin/commands.hpp"

#include "fdkin/entropy.hpp"
#include "fdkin/equilibrium.hpp"
#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"
#include "fdkin/positivity.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fdkin {

namespace {

Json vec_json(const Vec3& v)
{
    return Json::array({v[0], v[1], v[2]});
}

Json spec_json(const EquilibriumSpec& spec)
{
    Json j;
    if (const auto* r = std::get_if<RegularEquilibrium>(&spec)) {
        j["variant"] = "regular";
        j["a"] = r->a;
        j["b"] = r->b;
        j["v0"] = vec_json(r->v0);
    } else {
        const auto& s = std::get<SaturatedEquilibrium>(spec);
        j["variant"] = "saturated";
        j["R"] = s.R;
        j["v0"] = vec_json(s.v0);
    }
    return j;
}

double rel(double x, double ref)
{
    return std::fabs(x - ref) / std::max(std::fabs(ref), 1e-300);
}

std::string join(const std::string& dir, const std::string& name)
{
    return (std::filesystem::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

} // namespace

SimulationSetup simulation_setup(const RunConfig& cfg)
{
    const VelocityGrid grid = build_grid(cfg);
    const CollisionKernel kernel = build_kernel(cfg.kernel);
    const SphereQuadrature quad = build_quadrature(cfg, kernel);
    StepOptions opt;
    opt.dt_max = cfg.dt_max;
    opt.scheme = scheme_from_string(cfg.scheme);
    return SimulationSetup{build_initial(cfg, grid),
                           CollisionOperator(grid, kernel, quad, interpolation_from_string(cfg.interpolation)),
                           opt,
                           cfg.T,
                           cfg.output.every,
                           cfg.equilibrium_tol};
}

Json simulation_summary(const RunConfig& cfg, const SimulationResult& r)
{
    const auto& rows = r.series.rows;
    const TimeSeriesRow& first = rows.front();
    const TimeSeriesRow& last = rows.back();
    Json j;
    j["T"] = cfg.T;
    j["steps"] = r.steps;
    j["rejections"] = r.rejections;
    j["stationary"] = r.stationary;
    j["equilibrium"] = spec_json(r.equilibrium);

    // Momentum drift is measured against the thermal momentum scale M0 * sqrt(energy / M0).
    double d_mass = 0.0, d_mom = 0.0, d_energy = 0.0, min_f = 1.0, max_f = 0.0, max_clamp = r.max_clamped_mass;
    const double p_scale = first.M0 * std::sqrt(std::max(first.energy, 1e-300) / std::max(first.M0, 1e-300));
    double worst_drop = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        d_mass = std::max(d_mass, rel(row.M0, first.M0));
        double dp = 0.0;
        for (int d = 0; d < 3; ++d)
            dp = std::max(dp, std::fabs(row.M0 * row.v0[d] - first.M0 * first.v0[d]));
        d_mom = std::max(d_mom, dp / std::max(p_scale, 1e-300));
        d_energy = std::max(d_energy, rel(row.energy, first.energy));
        min_f = std::min(min_f, row.min_f);
        max_f = std::max(max_f, row.max_f);
        max_clamp = std::max(max_clamp, row.clamped_mass);
        if (i > 0)
            worst_drop = std::max(worst_drop, (rows[i - 1].entropy - row.entropy) / std::fabs(row.entropy));
    }
    j["conservation"] = {{"mass_rel_drift", d_mass},
                         {"momentum_rel_drift", d_mom},
                         {"energy_rel_drift", d_energy},
                         {"max_clamped_mass", max_clamp}};
    j["pauli"] = {{"min_f", min_f}, {"max_f", max_f}, {"bounded", min_f >= 0.0 && max_f <= 1.0}};

    const double dS = last.entropy - first.entropy;
    j["entropy"] = {{"S0", first.entropy},
                    {"S_final", last.entropy},
                    {"delta_S", dS},
                    {"integral_D", r.entropy_production},
                    {"identity_residual", dS != 0.0 ? std::fabs(dS - r.entropy_production) / std::fabs(dS) : 0.0},
                    {"max_relative_drop", worst_drop}};

    j["distance"] = {{"initial", first.dist_L12},
                     {"final", last.dist_L12},
                     {"ratio", first.dist_L12 > 0.0 ? last.dist_L12 / first.dist_L12 : 0.0},
                     {"max_over_M0", [&] {
                          double m = 0.0;
                          for (const auto& row : rows)
                              m = std::max(m, row.dist_L12 / row.M0);
                          return m;
                      }()}};

    // Running average over the final half: largest relative rise between recorded rows.
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i - 1].t >= 0.5 * last.t && rows[i - 1].time_avg_dist > 0.0)
            worst_rise = std::max(worst_rise, (rows[i].time_avg_dist - rows[i - 1].time_avg_dist) /
                                                  rows[i - 1].time_avg_dist);
    j["time_average"] = {{"final", last.time_avg_dist}, {"max_relative_rise_final_half", worst_rise}};

    // L^1_4 moment against C (1 + t), C fitted on the first quarter of the run.
    double C = 0.0, worst_ratio = 0.0;
    for (const auto& row : rows)
        if (row.t <= 0.25 * last.t)
            C = std::max(C, row.moment4 / (1.0 + row.t));
    for (const auto& row : rows)
        if (row.t > 0.25 * last.t && C > 0.0)
            worst_ratio = std::max(worst_ratio, row.moment4 / (C * (1.0 + row.t)));
    j["moment4"] = {{"initial", first.moment4}, {"final", last.moment4}, {"fit_C", C}, {"max_ratio_after_fit", worst_ratio}};
    return j;
}

Json equilibrium_report(const RunConfig& cfg)
{
    const VelocityGrid grid = build_grid(cfg);
    const DensityField f = build_initial(cfg, grid);
    const Macroscopics m = macroscopic(f);
    Json j;
    j["moments"] = {{"M0", m.M0}, {"v0", vec_json(m.v0)}, {"M2", m.M2}, {"ratio", m.ratio()}};
    const double kappa_ref = 0.6 * std::pow(3.0 / (4.0 * std::numbers::pi), 2.0 / 3.0);
    j["kappa_sat"] = kappa_sat();
    j["kappa_sat_check"] = rel(kappa_sat(), kappa_ref);
    const Regime regime = classify_field(f, cfg.equilibrium_tol);
    j["regime"] = to_string(regime);
    const EquilibriumSpec spec = solve_for_field(f, cfg.equilibrium_tol);
    j["spec"] = spec_json(spec);
    const Macroscopics mF = macroscopic(eval_equilibrium(spec, grid));
    j["residuals"] = {{"M0", rel(mF.M0, m.M0)},
                      {"v0", norm(mF.v0 - m.v0) / std::sqrt(m.M2 / m.M0)},
                      {"M2", rel(mF.M2, m.M2)}};
    if (cfg.init.preset == "equilibrium") {
        const RegularEquilibrium truth{cfg.init.a, cfg.init.b, {0.0, 0.0, 0.0}};
        const auto exact = solve_fermi_dirac(equilibrium_moments(truth), 1e-12);
        Json rt;
        if (const auto* e = std::get_if<RegularEquilibrium>(&exact))
            rt["radial"] = {{"a", e->a}, {"b", e->b}, {"a_rel_error", rel(e->a, truth.a)}, {"b_rel_error", rel(e->b, truth.b)}};
        if (const auto* g = std::get_if<RegularEquilibrium>(&spec))
            rt["grid"] = {{"a", g->a}, {"b", g->b}, {"a_rel_error", rel(g->a, truth.a)}, {"b_rel_error", rel(g->b, truth.b)}};
        j["round_trip"] = rt;
    }
    return j;
}

Json positivity_report(const RunConfig& cfg)
{
    const PositivityConfig& p = cfg.positivity;
    const CounterexampleReport rep = counterexample_suite(p.suite);
    Json j;
    j["J0"] = rep.J0;
    j["J0_expected"] = -96.0 / (std::numbers::pi * std::numbers::pi);
    j["J0_nodes"] = rep.J0_nodes;
    j["I"] = rep.I;
    j["I_error"] = rep.I_error;
    j["I_negative"] = rep.I_negative;
    j["params"] = {{"c", rep.c}, {"gamma", rep.gamma}, {"lambda", rep.lambda}, {"beta", rep.beta}};
    Json scan = Json::array();
    for (const auto& e : rep.scan)
        scan.push_back({{"lambda", e.lambda}, {"beta", e.beta}, {"I", e.I}, {"I_error", e.I_error}});
    j["scan"] = scan;

    // Reduced kernel of the inverse-power family against random sign-changing test functions.
    const CollisionKernel B0 = reduce_to_B0(make_inverse_power_kernel(p.cp_alpha));
    const double lambda = 1.0;
    const ReducedRules rules = build_reduced_rules(lambda, B0.gamma, p.suite.low);
    SplitMix64 rng(cfg.seed);
    double worst = INFINITY;
    int sign_changing = 0;
    for (int t = 0; t < p.cp_trials; ++t) {
        const TestFunction h = random_test_function(rng.next(), lambda, 3);
        const ReducedResult r = quartic_integral_reduced(B0, h, rules);
        worst = std::min(worst, r.value / std::max(r.abs_scale, 1e-300));
        bool pos = false, neg = false;
        for (int k = 0; k < 256 && !(pos && neg); ++k) {
            const Vec3 x{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
            const double hx = h((2.0 / std::sqrt(lambda)) * x);
            pos = pos || hx > 0.0;
            neg = neg || hx < 0.0;
        }
        sign_changing += pos && neg;
    }
    j["cp_check"] = {{"alpha", p.cp_alpha},
                     {"trials", p.cp_trials},
                     {"sign_changing_detected", sign_changing},
                     {"min_value_over_scale", worst},
                     {"nonnegative", worst >= -1e-6}};
    return j;
}

Json kernel_report(const RunConfig& cfg)
{
    const CollisionKernel k = build_kernel(cfg.kernel);
    Json j;
    j["family"] = to_string(k.family);
    j["name"] = k.name;
    j["gamma"] = k.gamma;
    j["separable"] = k.separable;
    j["angular_singularity"] = k.angular_singularity;
    j["completely_positive_lower_bound"] = !k.lower_series.empty();
    Json params = Json::object();
    for (const auto& [key, v] : k.params)
        params[key] = v;
    j["params"] = params;
    if (k.bound_b_upper) {
        const AngularIntegrals ai = angular_integrals(k);
        j["I_sin"] = std::isfinite(ai.I_sin) ? Json(ai.I_sin) : Json("inf");
        j["I_sin2"] = std::isfinite(ai.I_sin2) ? Json(ai.I_sin2) : Json("inf");
        j["satisfies_A2"] = ai.satisfies_A2;
        j["satisfies_A3"] = ai.satisfies_A3;
        j["diagnostic"] = ai.diagnostic;
    } else {
        j["satisfies_A2"] = nullptr;
        j["satisfies_A3"] = nullptr;
        j["diagnostic"] = "no upper angular bound attached";
    }
    // Series expansion of the inverse-power angular factor on |t| <= 0.9.
    Json series = Json::array();
    for (double beta : {0.25, 0.5, 0.75, 1.0}) {
        const CpSeries s = cp_series_coefficients(beta, cfg.kernel.series_terms);
        double worst = 0.0;
        for (int i = 1; i <= 180; ++i) {
            const double t = 0.9 * i / 180.0;
            worst = std::max(worst, rel(s.evaluate(t), cp_closed_form(beta, t)));
        }
        const bool nonneg = std::all_of(s.coefficients.begin(), s.coefficients.end(), [](double a) { return a >= 0.0; });
        series.push_back({{"beta", beta}, {"terms", cfg.kernel.series_terms}, {"max_rel_error", worst}, {"nonnegative", nonneg}});
    }
    j["cp_series"] = series;
    return j;
}

Json oracle_report(const RunConfig& cfg)
{
    const VelocityGrid grid = build_grid(cfg);
    const CollisionKernel kernel = build_kernel(cfg.kernel);
    const SphereQuadrature quad = build_quadrature(cfg, kernel);
    const Interpolation mode = interpolation_from_string(cfg.interpolation);
    const DensityField f = build_initial(cfg, grid);
    const CollisionOperator op(grid, kernel, quad, mode);
    const CollisionTerms terms = op.evaluate(f, false);

    // Nodes are drawn among those carrying a non-negligible share of the distribution.
    const double fmax = *std::max_element(f.values.begin(), f.values.end());
    std::vector<std::size_t> candidates;
    for (std::size_t v = 0; v < grid.size(); ++v)
        if (f.values[v] >= 1e-3 * fmax)
            candidates.push_back(v);
    if (candidates.empty())
        throw NumericalError("oracle: initial field is identically zero");
    SplitMix64 rng(cfg.seed);
    Json nodes = Json::array();
    double worst_z = 0.0;
    int agree = 0;
    for (int i = 0; i < cfg.oracle.nodes; ++i) {
        const std::size_t node = candidates[rng.below(candidates.size())];
        const McEstimate mc = mc_estimate_Q(f, op.kernel(), node, static_cast<std::uint64_t>(cfg.oracle.samples),
                                            rng.next(), mode);
        const double z = std::fabs(terms.Q[node] - mc.estimate) / std::max(mc.std_error, 1e-300);
        worst_z = std::max(worst_z, z);
        agree += z <= 3.0;
        nodes.push_back({{"node", node},
                         {"v", vec_json(grid.node(node))},
                         {"Q", terms.Q[node]},
                         {"mc", mc.estimate},
                         {"std_error", mc.std_error},
                         {"z", z}});
    }
    Json j;
    j["kernel"] = op.kernel().name;
    j["quadrature"] = {{"kind", to_string(quad.kind)}, {"nodes", quad.size()}};
    j["interpolation"] = to_string(mode);
    j["samples"] = cfg.oracle.samples;
    j["nodes"] = nodes;
    j["max_z"] = worst_z;
    j["agree"] = agree;
    j["all_within_3se"] = agree == cfg.oracle.nodes;
    return j;
}

Json execute(const std::string& command, const RunConfig& cfg, const std::string& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    const std::string& prefix = cfg.output.prefix;
    Json j;
    std::string name;
    if (command == "simulate") {
        const SimulationResult r = run_simulation(simulation_setup(cfg));
        std::ostringstream csv;
        r.series.write_csv(csv);
        write_text(join(out_dir, prefix + ".csv"), csv.str());
        write_snapshot_file(join(out_dir, prefix + "_final.snap"), r.final_field);
        j = simulation_summary(cfg, r);
        name = prefix + "_summary.json";
    } else if (command == "equilibrium") {
        j = equilibrium_report(cfg);
    } else if (command == "positivity") {
        j = positivity_report(cfg);
    } else if (command == "kernel") {
        j = kernel_report(cfg);
    } else if (command == "oracle") {
        j = oracle_report(cfg);
    } else {
        throw ConfigError("unknown subcommand '" + command + "'");
    }
    if (name.empty())
        name = prefix + "_" + command + ".json";
    write_text(join(out_dir, name), j.dump(2) + "\n");
    return j;
}

} // namespace fdkin
