#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace fdkin {

/// One-dimensional quadrature rule: nodes and weights.
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
Rule1D gauss_legendre(int n);

/// n-point Gauss rule for the weight (1 - t^2)^exponent on [-1, 1], exponent > -1
/// (symmetric Jacobi / Gegenbauer family; exponent = 0 is Gauss-Legendre).
Rule1D gauss_jacobi_symmetric(int n, double exponent);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
Rule1D gauss_hermite(int n);

/// Gauss-Legendre rule mapped onto [a, b].
Rule1D gauss_legendre_on(int n, double a, double b);

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
    bool finite = true;     ///< false when panel sums blew past the divergence threshold or refinement stalled
    bool converged = true;  ///< false when some panel hit the depth limit above tolerance
    int panels = 0;
};

/// Adaptive Gauss-Legendre integration with bisection refinement.
/// Refines a panel until its 1-panel and 2-half estimates agree to
/// max(abs_tol, rel_tol * scale), scale being a coarse estimate of the integral of |f|.
/// A panel whose magnitude exceeds divergence_threshold, or a panel still unresolved
/// at max_depth (non-integrable endpoint), marks the integral as infinite.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double rel_tol = 1e-12, double abs_tol = 1e-300,
                                  int max_depth = 60, double divergence_threshold = 1e12);

/// splitmix64 generator. State update: s += 0x9E3779B97F4A7C15; output is the
/// standard xor-shift-multiply finalizer of s. Uniform doubles use the top 53 bits.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

    /// Standard normal via Box-Muller (one variate per call, no caching).
    double normal();

private:
    std::uint64_t state_;
};

/// Number of worker threads used by the parallel operator evaluations.
/// Defaults to FDKIN_THREADS when set, else 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) split into contiguous chunks across thread_count() threads.
/// Each index is processed by exactly one thread; results written per index are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace fdkin
