#include "fdkin/numerics.hpp"

#include "fdkin/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <thread>

namespace fdkin {

namespace {

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix built from
// the monic recurrence p_{k+1} = t p_k - offdiag_k^2 p_{k-1}.
Rule1D golub_welsch(const std::vector<double>& diag, const std::vector<double>& offdiag_sq, double mu0)
{
    const int n = static_cast<int>(diag.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        J(i, i) = diag[i];
        if (i + 1 < n) {
            J(i, i + 1) = std::sqrt(offdiag_sq[i]);
            J(i + 1, i) = J(i, i + 1);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
    if (solver.info() != Eigen::Success)
        throw NumericalError("Golub-Welsch eigen-decomposition failed");
    Rule1D rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

// Symmetrize nodes/weights so that node i and node n-1-i are exact negatives.
void symmetrize(Rule1D& rule)
{
    const std::size_t n = rule.nodes.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
        const std::size_t j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
}

} // namespace

Rule1D gauss_jacobi_symmetric(int n, double exponent)
{
    if (n < 1)
        throw InvalidArgument("quadrature order must be positive");
    if (!(exponent > -1.0))
        throw InvalidArgument("Jacobi weight exponent must exceed -1");
    const double a = exponent;
    std::vector<double> diag(n, 0.0);
    std::vector<double> off(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) {
        const double kk = k;
        off[k - 1] = (k == 1) ? 1.0 / (3.0 + 2.0 * a)
                              : kk * (kk + 2.0 * a) / ((2.0 * kk + 2.0 * a + 1.0) * (2.0 * kk + 2.0 * a - 1.0));
    }
    const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(a + 1.0) / std::tgamma(a + 1.5);
    Rule1D rule = golub_welsch(diag, off, mu0);
    symmetrize(rule);
    return rule;
}

Rule1D gauss_legendre(int n) { return gauss_jacobi_symmetric(n, 0.0); }

Rule1D gauss_hermite(int n)
{
    if (n < 1)
        throw InvalidArgument("quadrature order must be positive");
    std::vector<double> diag(n, 0.0);
    std::vector<double> off(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k)
        off[k - 1] = 0.5 * k;
    Rule1D rule = golub_welsch(diag, off, std::sqrt(std::numbers::pi));
    symmetrize(rule);
    return rule;
}

Rule1D gauss_legendre_on(int n, double a, double b)
{
    Rule1D rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

namespace {

const Rule1D& panel_rule()
{
    static const Rule1D rule = gauss_legendre(10);
    return rule;
}

double panel(const std::function<double(double)>& f, double a, double b)
{
    const Rule1D& r = panel_rule();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
}

struct AdaptiveState {
    const std::function<double(double)>& f;
    double tol;
    int max_depth;
    double divergence_threshold;
    AdaptiveResult result;
};

void refine(AdaptiveState& st, double a, double b, double whole, int depth)
{
    if (!st.result.finite)
        return;
    const double mid = 0.5 * (a + b);
    const double left = panel(st.f, a, mid);
    const double right = panel(st.f, mid, b);
    const double both = left + right;
    if (!std::isfinite(both) || std::abs(both) > st.divergence_threshold) {
        st.result.finite = false;
        return;
    }
    const double diff = std::abs(both - whole);
    const bool exhausted = depth >= st.max_depth || mid == a || mid == b;
    if (diff <= st.tol || exhausted) {
        if (exhausted && diff > st.tol)
            st.result.converged = false;
        st.result.value += both;
        st.result.error += diff;
        st.result.panels += 2;
        return;
    }
    refine(st, a, mid, left, depth + 1);
    refine(st, mid, b, right, depth + 1);
}

} // namespace

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                                  double abs_tol, int max_depth, double divergence_threshold)
{
    // A coarse pass fixes the scale used for the relative tolerance.
    double scale = 0.0;
    const int coarse = 16;
    for (int i = 0; i < coarse; ++i) {
        const double x0 = a + (b - a) * i / coarse;
        const double x1 = a + (b - a) * (i + 1) / coarse;
        scale += std::abs(panel(f, x0, x1));
    }
    AdaptiveState st{f, std::max(abs_tol, rel_tol * scale), max_depth, divergence_threshold, {}};
    if (!std::isfinite(scale) || scale > divergence_threshold) {
        st.result.finite = false;
        st.result.value = std::numeric_limits<double>::infinity();
        return st.result;
    }
    for (int i = 0; i < coarse && st.result.finite; ++i) {
        const double x0 = a + (b - a) * i / coarse;
        const double x1 = a + (b - a) * (i + 1) / coarse;
        refine(st, x0, x1, panel(f, x0, x1), 4);
    }
    if (st.result.finite && (!st.result.converged || !(std::abs(st.result.value) <= divergence_threshold)))
        st.result.finite = false;
    if (!st.result.finite)
        st.result.value = std::numeric_limits<double>::infinity();
    return st.result;
}

double SplitMix64::normal()
{
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

int initial_thread_count()
{
    if (const char* env = std::getenv("FDKIN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    return 1;
}

int& thread_setting()
{
    static int n = initial_thread_count();
    return n;
}

} // namespace

int thread_count() { return thread_setting(); }

void set_thread_count(int n)
{
    if (n < 1)
        throw InvalidArgument("thread count must be positive");
    thread_setting() = n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        pool.emplace_back([&body, begin, end] {
            for (std::size_t i = begin; i < end; ++i)
                body(i);
        });
    }
    for (auto& t : pool)
        t.join();
}

} // namespace fdkin
