#pragma once

#include "fdkin/collision.hpp"
#include "fdkin/geometry.hpp"
#include "fdkin/kernels.hpp"
#include "fdkin/positivity.hpp"
#include "fdkin/solver.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fdkin {

struct KernelConfig {
    std::string family = "inverse_power";
    double alpha = 2.5;
    double constant = 1.0;
    double p = 1.25;
    std::string variant = "full";
    double beta = 0.5;
    double gamma = 0.0;
    std::vector<double> coeffs{1.0};
    double c = 2.0;
    int series_terms = 200;
};

struct QuadConfig {
    std::string kind;  ///< empty: jacobi_adapted for singular kernels, lebedev_like otherwise
    int order = 0;     ///< 0: 26 for lebedev_like, 8 for the product rules
    int n_phi = 0;
    double absorbed = -1.0;  ///< < 0: p for p < 1, p - 1/2 otherwise
};

struct GridConfig {
    int n = 16;
    double vmax = 6.0;
};

/// Initial data. two_bump: e/(1+e) bumps with e = amplitude exp(-|v - c|^2 / width^2) at
/// c = (+-separation/2, 0, 0), summed and capped. ball: indicator of |v| <= radius.
/// dilute_gauss: peak exp(-|v|^2 / (2 temperature)) with the x-axis temperature scaled by anisotropy.
/// equilibrium: the regular profile with parameters a, b. snapshot: read from path.
struct InitConfig {
    std::string preset = "two_bump";
    double amplitude = 1.5;
    double width = 1.0;
    double separation = 3.0;
    double cap = 0.9;
    double radius = 1.5;
    double peak = 0.05;
    double temperature = 1.0;
    double anisotropy = 1.0;
    std::string path;
    double a = 1.0;
    double b = 1.0;
};

struct OutputConfig {
    int every = 1;
    std::string prefix = "run";
};

struct OracleConfig {
    int nodes = 10;
    long samples = 1000000;
};

struct PositivityConfig {
    CounterexampleConfig suite;
    int cp_trials = 50;
    double cp_alpha = 2.5;
};

struct RunConfig {
    std::uint64_t seed = 1;
    double T = 20.0;
    std::string scheme = "euler";
    double dt_max = 0.5;
    KernelConfig kernel;
    QuadConfig quad;
    std::string interpolation = "logit_quadratic";
    GridConfig grid;
    InitConfig init;
    OutputConfig output;
    double equilibrium_tol = 1e-6;
    OracleConfig oracle;
    PositivityConfig positivity;
    /// Keys present in the source text, in order.
    std::vector<std::string> keys_set;
};

/// Parses `key = value` lines (`#` starts a comment). Unknown keys, malformed values and violated
/// cross-field constraints raise ConfigError naming the line or key.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
/// Reads and parses a file; an unreadable file raises IoError.
RunConfig parse_config_file(const std::string& path);

CollisionKernel build_kernel(const KernelConfig& k);
SphereQuadrature build_quadrature(const RunConfig& cfg, const CollisionKernel& kernel);
VelocityGrid build_grid(const RunConfig& cfg);
DensityField build_initial(const RunConfig& cfg, const VelocityGrid& grid);

} // namespace fdkin
