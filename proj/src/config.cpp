#include "fdkin/config.hpp"

#include "fdkin/equilibrium.hpp"
#include "fdkin/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace fdkin {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s)
{
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(x))
        throw ConfigError("expected a finite number, got '" + t + "'");
    return x;
}

long to_long(const std::string& s)
{
    const std::string t = trim(s);
    long x = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        // accept integral values written as 1e6
        const double d = to_double(t);
        if (d != std::floor(d) || std::fabs(d) > 9e15)
            throw ConfigError("expected an integer, got '" + t + "'");
        return static_cast<long>(d);
    }
    return x;
}

int to_int(const std::string& s)
{
    const long x = to_long(s);
    if (x < -2147483647L || x > 2147483647L)
        throw ConfigError("integer out of range: '" + trim(s) + "'");
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& s)
{
    const std::string t = trim(s);
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("expected an unsigned 64-bit integer, got '" + t + "'");
    return x;
}

std::vector<double> to_list(const std::string& s)
{
    std::string t = trim(s);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']')
        t = t.substr(1, t.size() - 2);
    std::vector<double> out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(item));
    if (out.empty())
        throw ConfigError("expected a comma-separated list of numbers");
    return out;
}

std::string to_word(const std::string& s)
{
    std::string t = trim(s);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"')
        t = t.substr(1, t.size() - 2);
    if (t.empty())
        throw ConfigError("empty value");
    return t;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> m;
        m["seed"] = [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); };
        m["T"] = [](RunConfig& c, const std::string& v) { c.T = to_double(v); };
        m["scheme"] = [](RunConfig& c, const std::string& v) { c.scheme = to_word(v); };
        m["dt_max"] = [](RunConfig& c, const std::string& v) { c.dt_max = to_double(v); };
        m["init"] = [](RunConfig& c, const std::string& v) { c.init.preset = to_word(v); };

        m["kernel.family"] = [](RunConfig& c, const std::string& v) { c.kernel.family = to_word(v); };
        m["kernel.alpha"] = [](RunConfig& c, const std::string& v) { c.kernel.alpha = to_double(v); };
        m["kernel.const"] = [](RunConfig& c, const std::string& v) { c.kernel.constant = to_double(v); };
        m["kernel.p"] = [](RunConfig& c, const std::string& v) { c.kernel.p = to_double(v); };
        m["kernel.variant"] = [](RunConfig& c, const std::string& v) { c.kernel.variant = to_word(v); };
        m["kernel.beta"] = [](RunConfig& c, const std::string& v) { c.kernel.beta = to_double(v); };
        m["kernel.gamma"] = [](RunConfig& c, const std::string& v) { c.kernel.gamma = to_double(v); };
        m["kernel.coeffs"] = [](RunConfig& c, const std::string& v) { c.kernel.coeffs = to_list(v); };
        m["kernel.c"] = [](RunConfig& c, const std::string& v) { c.kernel.c = to_double(v); };
        m["kernel.series_terms"] = [](RunConfig& c, const std::string& v) { c.kernel.series_terms = to_int(v); };

        m["quad.kind"] = [](RunConfig& c, const std::string& v) { c.quad.kind = to_word(v); };
        m["quad.order"] = [](RunConfig& c, const std::string& v) { c.quad.order = to_int(v); };
        m["quad.n_phi"] = [](RunConfig& c, const std::string& v) { c.quad.n_phi = to_int(v); };
        m["quad.absorbed"] = [](RunConfig& c, const std::string& v) { c.quad.absorbed = to_double(v); };
        m["collision.interpolation"] = [](RunConfig& c, const std::string& v) { c.interpolation = to_word(v); };

        m["grid.n"] = [](RunConfig& c, const std::string& v) { c.grid.n = to_int(v); };
        m["grid.vmax"] = [](RunConfig& c, const std::string& v) { c.grid.vmax = to_double(v); };

        m["init.amplitude"] = [](RunConfig& c, const std::string& v) { c.init.amplitude = to_double(v); };
        m["init.width"] = [](RunConfig& c, const std::string& v) { c.init.width = to_double(v); };
        m["init.separation"] = [](RunConfig& c, const std::string& v) { c.init.separation = to_double(v); };
        m["init.cap"] = [](RunConfig& c, const std::string& v) { c.init.cap = to_double(v); };
        m["init.radius"] = [](RunConfig& c, const std::string& v) { c.init.radius = to_double(v); };
        m["init.peak"] = [](RunConfig& c, const std::string& v) { c.init.peak = to_double(v); };
        m["init.temperature"] = [](RunConfig& c, const std::string& v) { c.init.temperature = to_double(v); };
        m["init.anisotropy"] = [](RunConfig& c, const std::string& v) { c.init.anisotropy = to_double(v); };
        m["init.path"] = [](RunConfig& c, const std::string& v) { c.init.path = to_word(v); };
        m["init.a"] = [](RunConfig& c, const std::string& v) { c.init.a = to_double(v); };
        m["init.b"] = [](RunConfig& c, const std::string& v) { c.init.b = to_double(v); };

        m["output.every"] = [](RunConfig& c, const std::string& v) { c.output.every = to_int(v); };
        m["output.prefix"] = [](RunConfig& c, const std::string& v) { c.output.prefix = to_word(v); };
        m["equilibrium.tol"] = [](RunConfig& c, const std::string& v) { c.equilibrium_tol = to_double(v); };
        m["oracle.nodes"] = [](RunConfig& c, const std::string& v) { c.oracle.nodes = to_int(v); };
        m["oracle.samples"] = [](RunConfig& c, const std::string& v) { c.oracle.samples = to_long(v); };

        m["positivity.c"] = [](RunConfig& c, const std::string& v) { c.positivity.suite.c = to_double(v); };
        m["positivity.gamma"] = [](RunConfig& c, const std::string& v) { c.positivity.suite.gamma = to_double(v); };
        m["positivity.lambdas"] = [](RunConfig& c, const std::string& v) { c.positivity.suite.lambdas = to_list(v); };
        m["positivity.betas"] = [](RunConfig& c, const std::string& v) { c.positivity.suite.betas = to_list(v); };
        m["positivity.j0_order"] = [](RunConfig& c, const std::string& v) { c.positivity.suite.j0_order = to_int(v); };
        m["positivity.cp_trials"] = [](RunConfig& c, const std::string& v) { c.positivity.cp_trials = to_int(v); };
        m["positivity.cp_alpha"] = [](RunConfig& c, const std::string& v) { c.positivity.cp_alpha = to_double(v); };
        for (const char* level : {"low", "high"}) {
            const std::string pre = std::string("positivity.") + level + ".";
            auto res = [level](RunConfig& c) -> ReducedResolution& {
                return std::string(level) == "low" ? c.positivity.suite.low : c.positivity.suite.high;
            };
            m[pre + "n_r_inner"] = [res](RunConfig& c, const std::string& v) { res(c).n_r_inner = to_int(v); };
            m[pre + "n_r_outer"] = [res](RunConfig& c, const std::string& v) { res(c).n_r_outer = to_int(v); };
            m[pre + "n_u"] = [res](RunConfig& c, const std::string& v) { res(c).n_u = to_int(v); };
            m[pre + "sphere_kind"] = [res](RunConfig& c, const std::string& v) {
                try {
                    res(c).sphere_kind = sphere_rule_kind_from_string(to_word(v));
                } catch (const InvalidArgument& e) {
                    throw ConfigError(e.what());
                }
            };
            m[pre + "sphere_order"] = [res](RunConfig& c, const std::string& v) { res(c).sphere_order = to_int(v); };
            m[pre + "sphere_n_phi"] = [res](RunConfig& c, const std::string& v) { res(c).sphere_n_phi = to_int(v); };
        }
        return m;
    }();
    return table;
}

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ConfigError("invalid configuration: " + what);
}

void validate(RunConfig& c)
{
    const KernelConfig& k = c.kernel;
    static const std::set<std::string> families{"inverse_power", "rutherford", "debye", "custom_monomial", "counterexample"};
    require(families.count(k.family) == 1, "kernel.family must be one of inverse_power, rutherford, debye, "
                                           "custom_monomial, counterexample (got '" + k.family + "')");
    require(k.constant > 0.0, "kernel.const must be positive");
    require(k.series_terms >= 1, "kernel.series_terms must be >= 1");
    if (k.family == "inverse_power")
        require(k.alpha > 0.0 && k.alpha < 3.0, "kernel.alpha must lie in (0, 3) for inverse_power");
    if (k.family == "rutherford") {
        require(k.p > 1.0 && k.p < 1.5, "kernel.p must lie in (1, 3/2) for rutherford");
        require(k.variant == "full" || k.variant == "cos2", "kernel.variant must be full or cos2");
    }
    if (k.family == "debye")
        require(k.beta > 0.0, "kernel.beta must be positive for debye");
    if (k.family == "custom_monomial")
        require(std::all_of(k.coeffs.begin(), k.coeffs.end(), [](double x) { return x >= 0.0; }),
                "kernel.coeffs must be nonnegative");
    if (k.family == "counterexample")
        require(k.c > 1.0 && k.beta > 0.0, "counterexample kernel needs kernel.c > 1 and kernel.beta > 0");

    require(c.grid.n >= 2, "grid.n must be >= 2");
    require(c.grid.vmax > 0.0, "grid.vmax must be positive");
    require(c.T >= 0.0, "T must be nonnegative");
    require(c.dt_max > 0.0, "dt_max must be positive");
    require(c.scheme == "euler" || c.scheme == "rk2", "scheme must be euler or rk2");
    require(c.interpolation == "trilinear" || c.interpolation == "logit_quadratic",
            "collision.interpolation must be trilinear or logit_quadratic");
    require(c.output.every >= 1, "output.every must be >= 1");
    require(c.equilibrium_tol > 0.0, "equilibrium.tol must be positive");
    require(c.oracle.nodes >= 1, "oracle.nodes must be >= 1");
    require(c.oracle.samples >= 1000, "oracle.samples must be >= 1000");

    static const std::set<std::string> presets{"two_bump", "ball", "dilute_gauss", "equilibrium", "snapshot"};
    const InitConfig& in = c.init;
    require(presets.count(in.preset) == 1, "init must be one of two_bump, ball, dilute_gauss, equilibrium, snapshot");
    require(in.amplitude > 0.0 && in.width > 0.0 && in.separation >= 0.0, "two_bump parameters must be positive");
    require(in.cap > 0.0 && in.cap <= 1.0, "init.cap must lie in (0, 1]");
    require(in.radius > 0.0, "init.radius must be positive");
    require(in.peak > 0.0 && in.peak <= 1.0, "init.peak must lie in (0, 1]");
    require(in.temperature > 0.0 && in.anisotropy > 0.0, "init.temperature and init.anisotropy must be positive");
    require(in.a > 0.0 && in.b > 0.0, "init.a and init.b must be positive");
    require(in.preset != "snapshot" || !in.path.empty(), "init = snapshot needs init.path");

    const PositivityConfig& p = c.positivity;
    require(p.suite.c > 1.0, "positivity.c must exceed 1");
    require(p.suite.j0_order >= 38, "positivity.j0_order must be >= 38");
    require(std::all_of(p.suite.lambdas.begin(), p.suite.lambdas.end(), [](double x) { return x > 0.0; }) &&
                std::all_of(p.suite.betas.begin(), p.suite.betas.end(), [](double x) { return x > 0.0; }),
            "positivity.lambdas and positivity.betas must be positive");
    require(p.cp_trials >= 1, "positivity.cp_trials must be >= 1");
    require(p.cp_alpha > 1.0 && p.cp_alpha < 3.0, "positivity.cp_alpha must lie in (1, 3)");

    // Cross-field: singular angular parts need the adapted rule.
    const bool singular = k.family == "inverse_power" || k.family == "rutherford";
    if (c.quad.kind.empty())
        c.quad.kind = singular ? "jacobi_adapted" : "lebedev_like";
    require(c.quad.kind == "lebedev_like" || c.quad.kind == "product_cos_phi" || c.quad.kind == "jacobi_adapted",
            "quad.kind must be lebedev_like, product_cos_phi or jacobi_adapted");
    require(!singular || c.quad.kind == "jacobi_adapted",
            "kernel family " + k.family + " has a singular angular part and needs quad.kind = jacobi_adapted");
    if (c.quad.order == 0)
        c.quad.order = c.quad.kind == "lebedev_like" ? 26 : 8;
    require(c.quad.order >= 1 && c.quad.n_phi >= 0, "quad.order and quad.n_phi must be positive");
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source)
{
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = line.substr(eq + 1);
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(where + ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError(where + ": duplicate key '" + key + "'");
        try {
            it->second(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": key '" + key + "': " + e.what());
        }
        c.keys_set.push_back(key);
    }
    validate(c);
    return c;
}

RunConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

CollisionKernel build_kernel(const KernelConfig& k)
{
    if (k.family == "inverse_power")
        return make_inverse_power_kernel(k.alpha, k.constant, k.series_terms);
    if (k.family == "rutherford")
        return make_rutherford_cutoff_kernel(k.p, k.constant,
                                             k.variant == "cos2" ? RutherfordVariant::cos2 : RutherfordVariant::full,
                                             k.series_terms);
    if (k.family == "debye")
        return make_debye_kernel(k.beta);
    if (k.family == "custom_monomial")
        return make_monomial_kernel(k.gamma, k.coeffs, k.constant);
    if (k.family == "counterexample")
        return make_counterexample_kernel(k.c, k.beta, k.gamma);
    throw ConfigError("unknown kernel family '" + k.family + "'");
}

SphereQuadrature build_quadrature(const RunConfig& cfg, const CollisionKernel& kernel)
{
    SphereQuadrature q;
    try {
        double absorbed = cfg.quad.absorbed;
        if (absorbed < 0.0) {
            const double s = kernel.angular_singularity;
            absorbed = s < 1.0 ? s : s - 0.5;
        }
        if (cfg.quad.kind != "jacobi_adapted")
            absorbed = 0.0;
        q = sphere_quadrature(sphere_rule_kind_from_string(cfg.quad.kind), cfg.quad.order, cfg.quad.n_phi, absorbed);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("quadrature: ") + e.what());
    }
    check_kernel_quadrature(kernel, q);
    return q;
}

VelocityGrid build_grid(const RunConfig& cfg)
{
    return VelocityGrid(cfg.grid.n, cfg.grid.vmax);
}

DensityField build_initial(const RunConfig& cfg, const VelocityGrid& grid)
{
    const InitConfig& in = cfg.init;
    if (in.preset == "two_bump") {
        const double cx = 0.5 * in.separation;
        const double w2 = in.width * in.width;
        return sample_field(grid, [&](const Vec3& v) {
            auto bump = [&](double x0) {
                const double r2 = (v[0] - x0) * (v[0] - x0) + v[1] * v[1] + v[2] * v[2];
                const double e = in.amplitude * std::exp(-r2 / w2);
                return e / (1.0 + e);
            };
            return std::min(in.cap, bump(cx) + bump(-cx));
        });
    }
    if (in.preset == "ball")
        return sample_field(grid, [&](const Vec3& v) { return norm(v) <= in.radius ? 1.0 : 0.0; });
    if (in.preset == "dilute_gauss") {
        const double tx = in.temperature * in.anisotropy, t = in.temperature;
        return sample_field(grid, [&](const Vec3& v) {
            return in.peak * std::exp(-v[0] * v[0] / (2.0 * tx) - (v[1] * v[1] + v[2] * v[2]) / (2.0 * t));
        });
    }
    if (in.preset == "equilibrium")
        return eval_equilibrium(RegularEquilibrium{in.a, in.b, {0.0, 0.0, 0.0}}, grid);
    if (in.preset == "snapshot") {
        DensityField f = read_snapshot_file(in.path);
        if (!(f.grid == grid))
            throw ConfigError("snapshot '" + in.path + "' does not match grid.n / grid.vmax");
        return f;
    }
    throw ConfigError("unknown init preset '" + in.preset + "'");
}

} // namespace fdkin
