// One PASS/FAIL line per acceptance criterion. Artifacts go to argv[1] (default: acceptance_out).
#include "fdkin/collision.hpp"
#include "fdkin/commands.hpp"
#include "fdkin/config.hpp"
#include "fdkin/equilibrium.hpp"
#include "fdkin/numerics.hpp"
#include "fdkin/positivity.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <string>

using namespace fdkin;

namespace {

const std::string kConfigDir = FDKIN_CONFIG_DIR;
std::string out_dir = "acceptance_out";
int failures = 0;

RunConfig load(const std::string& name)
{
    return parse_config_file(kConfigDir + "/" + name);
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

void criterion(int id, const char* title, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main(int argc, char** argv)
{
    if (argc > 1)
        out_dir = argv[1];

    Json positivity;
    double positivity_secs = 0.0;
    auto run_positivity = [&] {
        if (positivity.is_null()) {
            const auto t0 = std::chrono::steady_clock::now();
            positivity = execute("positivity", load("positivity.cfg"), out_dir);
            positivity_secs = seconds_since(t0);
        }
    };

    criterion(1, "J(0) anchor", [] {
        const RunConfig cfg = load("positivity.cfg");
        const auto t0 = std::chrono::steady_clock::now();
        const auto q = sphere_quadrature(SphereRuleKind::lebedev_like, cfg.positivity.suite.j0_order);
        const double J0 = counterexample_J(cfg.positivity.suite.c, {0.0, 0.0, 0.0}, q);
        const double secs = seconds_since(t0);
        const double err = std::abs(J0 + 96.0 / (std::numbers::pi * std::numbers::pi));
        return Outcome{q.size() >= 38 && err <= 1e-3 && secs < 1.0,
                       fmt("J0=%.6f |err|=%.2e, %g nodes", J0, err, double(q.size())) + fmt(", %.3f s", secs)};
    });

    criterion(2, "counterexample sign", [&] {
        run_positivity();
        const double I = positivity["I"], err = positivity["I_error"];
        const bool neg = positivity["I_negative"];
        return Outcome{neg && I < 0.0 && std::abs(I) >= 3.0 * err && positivity_secs < 120.0,
                       fmt("I=%.3e err=%.1e at lambda=%g", I, err, positivity["params"]["lambda"].get<double>()) +
                           fmt(" beta=%g, suite %.1f s", positivity["params"]["beta"].get<double>(), positivity_secs)};
    });

    criterion(3, "CP nonnegativity", [&] {
        run_positivity();
        const auto& cp = positivity["cp_check"];
        const double worst = cp["min_value_over_scale"];
        const int trials = cp["trials"], sc = cp["sign_changing_detected"];
        return Outcome{trials == 50 && sc == trials && worst >= -1e-6 && positivity_secs < 300.0,
                       fmt("min I/scale=%.3e over %g trials (%g sign-changing)", worst, trials, sc)};
    });

    criterion(4, "CP series", [] {
        const Json k = execute("kernel", load("kernel_rutherford.cfg"), out_dir);
        double worst = 0.0;
        bool ok = k["cp_series"].size() == 4;
        for (const auto& s : k["cp_series"]) {
            worst = std::max(worst, s["max_rel_error"].get<double>());
            ok = ok && s["terms"].get<int>() == 200;
        }
        return Outcome{ok && worst <= 1e-8, fmt("max rel error %.2e (N=200, |t|<=0.9)", worst)};
    });

    criterion(5, "equilibrium round trip", [] {
        const Json e = execute("equilibrium", load("equilibrium.cfg"), out_dir);
        const auto& rt = e["round_trip"];
        const double ra = rt["radial"]["a_rel_error"], rb = rt["radial"]["b_rel_error"];
        const double ga = rt["grid"]["a_rel_error"], gb = rt["grid"]["b_rel_error"];
        const double k = e["kappa_sat_check"];
        return Outcome{std::max(ra, rb) <= 1e-8 && std::max(ga, gb) <= 1e-4 && k <= 1e-12,
                       fmt("radial %.1e, grid %.1e, kappa_sat %.1e", std::max(ra, rb), std::max(ga, gb), k)};
    });

    criterion(6, "equilibrium functional equation", [] {
        const RunConfig cfg = load("equilibrium.cfg");
        SplitMix64 rng(cfg.seed);
        const RegularEquilibrium eq{cfg.init.a, cfg.init.b, {0.3, -0.2, 0.1}};
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
            const Vec3 vs{rng.normal(), rng.normal(), rng.normal()};
            Vec3 s{rng.normal(), rng.normal(), rng.normal()};
            s = (1.0 / norm(s)) * s;
            const auto [vp, vsp] = post_collision(v, vs, s);
            worst = std::max(worst, std::abs(pi_F(eval_equilibrium_at(eq, v), eval_equilibrium_at(eq, vs),
                                                  eval_equilibrium_at(eq, vp), eval_equilibrium_at(eq, vsp))));
        }
        return Outcome{worst <= 1e-12, fmt("max |Pi_F| = %.2e over 10^4 quadruples", worst)};
    });

    criterion(7, "oracle agreement", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const Json o = execute("oracle", load("oracle.cfg"), out_dir);
        const double secs = seconds_since(t0);
        const bool ok = o["all_within_3se"] && o["nodes"].size() == 10 && o["samples"].get<long>() == 1000000;
        return Outcome{ok && secs < 300.0, fmt("max z = %.2f at %g/10 nodes within 3 se", o["max_z"].get<double>(),
                                               o["agree"].get<double>())};
    });

    Json hard;
    double hard_secs = 0.0;
    auto run_hard = [&] {
        if (hard.is_null()) {
            const auto t0 = std::chrono::steady_clock::now();
            hard = execute("simulate", load("hard_potential.cfg"), out_dir);
            hard_secs = seconds_since(t0);
        }
    };

    criterion(8, "conservation and Pauli bounds", [&] {
        run_hard();
        const auto& c = hard["conservation"];
        const double d = std::max({c["mass_rel_drift"].get<double>(), c["momentum_rel_drift"].get<double>(),
                                   c["energy_rel_drift"].get<double>()});
        const bool pauli = hard["pauli"]["bounded"];
        return Outcome{d <= 1e-10 && pauli, fmt("max drift %.1e, f in [%.2e, %.4f]", d, hard["pauli"]["min_f"].get<double>(),
                                                hard["pauli"]["max_f"].get<double>())};
    });

    criterion(9, "H-theorem", [&] {
        run_hard();
        const double drop = hard["entropy"]["max_relative_drop"], res = hard["entropy"]["identity_residual"];
        return Outcome{drop <= 1e-6 && res <= 0.05, fmt("max relative drop %.1e, identity residual %.2f%%", drop, 100.0 * res)};
    });

    criterion(10, "convergence (hard potential)", [&] {
        run_hard();
        const double ratio = hard["distance"]["ratio"];
        return Outcome{ratio <= 0.1 && hard_secs < 1800.0,
                       fmt("dist(T)/dist(0) = %.4f, run %.0f s", ratio, hard_secs)};
    });

    Json soft;
    auto run_soft = [&] {
        if (soft.is_null())
            soft = execute("simulate", load("soft_potential.cfg"), out_dir);
    };

    criterion(11, "time-averaged convergence (soft potential)", [&] {
        run_soft();
        const double rise = soft["time_average"]["max_relative_rise_final_half"];
        return Outcome{rise <= 0.01 && soft["T"].get<double>() == 50.0, fmt("max rise over final half %.2e", rise)};
    });

    criterion(12, "moment growth (soft potential)", [&] {
        run_soft();
        const double r = soft["moment4"]["max_ratio_after_fit"];
        return Outcome{r <= 1.1, fmt("max ||f||_{L1_4} / C(1+t) after fit = %.3f", r)};
    });

    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
