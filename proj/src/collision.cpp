#include "fdkin/collision.hpp"

#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace fdkin {

namespace {

constexpr double kGammaFloor = 1e-30;

double pairwise_sum(const double* x, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

} // namespace

double interpolate_field(const DensityField& f, const Vec3& v)
{
    const VelocityGrid& g = f.grid;
    const int n = g.n();
    const double h = g.spacing();
    double idx[3];
    int base[3];
    for (int d = 0; d < 3; ++d) {
        idx[d] = (v[d] + g.vmax()) / h;
        if (!(idx[d] > -1.0 && idx[d] < n))
            return 0.0;
        base[d] = static_cast<int>(std::floor(idx[d]));
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        int ijk[3];
        double w = 1.0;
        bool inside = true;
        for (int d = 0; d < 3; ++d) {
            const int bit = (c >> (2 - d)) & 1;
            ijk[d] = base[d] + bit;
            const double fr = idx[d] - base[d];
            w *= bit ? fr : 1.0 - fr;
            inside = inside && ijk[d] >= 0 && ijk[d] < n;
        }
        if (inside && w != 0.0)
            acc += w * f.values[g.index(ijk[0], ijk[1], ijk[2])];
    }
    return std::clamp(acc, 0.0, 1.0);
}

namespace {

const double kLogitMax = std::log(1e30);

double logit(double x)
{
    x = std::max(x, 1e-30);
    return std::clamp(std::log(x) - std::log1p(-x), -kLogitMax, kLogitMax);
}

double logistic(double L)
{
    return 1.0 / (1.0 + std::exp(-L));
}

// Lagrange weights on nodes -1, 0, 1 at offset th from the centre node.
void quadratic_weights(double th, double* w)
{
    w[0] = 0.5 * th * (th - 1.0);
    w[1] = 1.0 - th * th;
    w[2] = 0.5 * th * (th + 1.0);
}

// Centre node of the quadratic stencil. Points within 1e-9 cells of a midpoint are snapped
// onto it and resolved upwards, so pointwise and sweep evaluation pick the same stencil.
int stencil_centre(double x)
{
    const double twice = std::round(2.0 * x);
    if (std::abs(2.0 * x - twice) < 2e-9)
        x = 0.5 * twice;
    return static_cast<int>(std::floor(x + 0.5));
}

} // namespace

PaddedLogit::PaddedLogit(const DensityField& f, int pad_cells) : pad(pad_cells), h(f.grid.spacing()), vmax(f.grid.vmax())
{
    const int n = f.grid.n();
    P = n + 2 * pad;
    const long sx = static_cast<long>(P) * P;
    const double floor_value = logit(0.0);
    L.assign(static_cast<std::size_t>(P) * P * P, floor_value);
    auto at = [&](int i, int j, int k) -> double& { return L[i * sx + static_cast<long>(j) * P + k]; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                at(i + pad, j + pad, k + pad) = logit(f.values[f.grid.index(i, j, k)]);

    // Quadratic continuation through the three outermost nodes of a line, never rising
    // above the boundary value.
    auto extend = [&](auto&& get) {
        const double a0 = get(pad), a1 = get(pad + 1), a2 = get(pad + 2);
        const double b0 = get(pad + n - 1), b1 = get(pad + n - 2), b2 = get(pad + n - 3);
        for (int d = 1; d <= pad; ++d) {
            const double x = -d;  // offset from the boundary node, outward
            const double lo = 0.5 * (x - 1.0) * (x - 2.0) * a0 - x * (x - 2.0) * a1 + 0.5 * x * (x - 1.0) * a2;
            const double hi = 0.5 * (x - 1.0) * (x - 2.0) * b0 - x * (x - 2.0) * b1 + 0.5 * x * (x - 1.0) * b2;
            get(pad - d) = std::clamp(lo, floor_value, a0);
            get(pad + n - 1 + d) = std::clamp(hi, floor_value, b0);
        }
    };
    // Axis by axis so that corners see values already continued along earlier axes.
    for (int j = pad; j < pad + n; ++j)
        for (int k = pad; k < pad + n; ++k)
            extend([&](int i) -> double& { return at(i, j, k); });
    for (int i = 0; i < P; ++i)
        for (int k = pad; k < pad + n; ++k)
            extend([&](int j) -> double& { return at(i, j, k); });
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j)
            extend([&](int k) -> double& { return at(i, j, k); });

    row_active.assign(static_cast<std::size_t>(P) * P, 0);
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j)
            for (int k = 0; k < P; ++k)
                if (at(i, j, k) > floor_value) {
                    row_active[i * P + j] = 1;
                    break;
                }
}

double PaddedLogit::operator()(const Vec3& v) const
{
    int c[3];
    double w[3][3];
    for (int d = 0; d < 3; ++d) {
        const double idx = (v[d] + vmax) / h + pad;
        c[d] = stencil_centre(idx);
        if (c[d] < 1 || c[d] > P - 2)
            return 0.0;
        quadratic_weights(idx - c[d], w[d]);
    }
    const double floor_value = logit(0.0);
    const long sx = static_cast<long>(P) * P;
    double acc = 0.0;
    bool any = false;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int e = 0; e < 3; ++e) {
                const double x = L[(c[0] + a - 1) * sx + static_cast<long>(c[1] + b - 1) * P + (c[2] + e - 1)];
                any = any || x > floor_value;
                acc += w[0][a] * w[1][b] * w[2][e] * x;
            }
    return any ? logistic(acc) : 0.0;
}

int collision_pad(int n)
{
    return static_cast<int>(std::ceil(std::sqrt(3.0) * (n - 1) / 2.0)) + 3;
}

double interpolate_field_logit(const DensityField& f, const Vec3& v)
{
    return PaddedLogit(f, collision_pad(f.grid.n()))(v);
}

const char* to_string(Interpolation mode)
{
    return mode == Interpolation::trilinear ? "trilinear" : "logit_quadratic";
}

Interpolation interpolation_from_string(const std::string& name)
{
    if (name == "trilinear")
        return Interpolation::trilinear;
    if (name == "logit_quadratic")
        return Interpolation::logit_quadratic;
    throw InvalidArgument("unknown interpolation '" + name + "' (expected trilinear or logit_quadratic)");
}

FieldInterpolator::FieldInterpolator(const DensityField& f, Interpolation mode) : f_(&f), mode_(mode)
{
    if (mode_ == Interpolation::logit_quadratic)
        logit_.emplace(f, collision_pad(f.grid.n()));
}

double FieldInterpolator::operator()(const Vec3& v) const
{
    return logit_ ? (*logit_)(v) : interpolate_field(*f_, v);
}

double interpolate(const DensityField& f, const Vec3& v, Interpolation mode)
{
    return FieldInterpolator(f, mode)(v);
}

double pi_F(double f, double f_star, double f_prime, double f_star_prime)
{
    return f_prime * f_star_prime * (1.0 - f) * (1.0 - f_star) - f * f_star * (1.0 - f_prime) * (1.0 - f_star_prime);
}

double pi_F_cancelled(double f, double f_star, double f_prime, double f_star_prime)
{
    return f_prime * f_star_prime * (1.0 - f - f_star) - f * f_star * (1.0 - f_prime - f_star_prime);
}

PiParts pi_F_parts(double f, double f_star, double f_prime, double f_star_prime)
{
    return {f_prime * f_star_prime * (1.0 - f) * (1.0 - f_star), f * f_star * (1.0 - f_prime) * (1.0 - f_star_prime)};
}

double gamma_fn(double a, double b)
{
    if (a < 0.0 || b < 0.0 || std::isnan(a) || std::isnan(b))
        throw InvalidArgument("Gamma(a, b) needs a, b >= 0");
    if (a == 0.0 && b == 0.0)
        return 0.0;
    if (a == 0.0 || b == 0.0)
        return std::numeric_limits<double>::infinity();
    if (a == b)
        return 0.0;
    return (a - b) * std::log(a / b);
}

void check_kernel_quadrature(const CollisionKernel& kernel, const SphereQuadrature& quad)
{
    const double p = kernel.angular_singularity;
    if (p <= 0.0)
        return;
    if (quad.kind != SphereRuleKind::jacobi_adapted)
        throw ConfigError(std::string("kernel '") + kernel.name + "' has a singular angular part (exponent " +
                          std::to_string(p) + "); use the jacobi_adapted sphere rule, not " + to_string(quad.kind));
    if (quad.absorbed_exponent < p - 0.5 - 1e-12)
        throw ConfigError("jacobi_adapted rule absorbs (1-t^2)^-" + std::to_string(quad.absorbed_exponent) +
                          " but the kernel needs at least " + std::to_string(p - 0.5));
}

namespace {

// Per (offset, node) data for the sweep: integer floor shift and fractional part of
// v' and v_*' relative to v, in index units.
struct SweepTerm {
    double weight;
    int o1[3], o2[3];
    double fr1[3], fr2[3];
};

struct Frame {
    Vec3 e1, e2, axis;
};

Frame frame_for(const Vec3& axis)
{
    const auto [e1, e2] = orthonormal_complement(axis);
    return {e1, e2, axis};
}

Vec3 node_direction(const SphereQuadrature& quad, const Frame& fr, std::size_t m)
{
    const Vec3& s = quad.nodes[m];
    if (!quad.axis_aligned())
        return s;
    return s[0] * fr.e1 + s[1] * fr.e2 + s[2] * fr.axis;
}

double node_cos(const SphereQuadrature& quad, const Vec3& axis, const Vec3& sigma, std::size_t m)
{
    return quad.axis_aligned() ? quad.cos_theta[m] : std::clamp(dot(axis, sigma), -1.0, 1.0);
}

// Floor and fraction (trilinear) or nearest node and signed offset (quadratic).
void split_shift(const double* shift, int* o, double* fr, Interpolation mode)
{
    for (int d = 0; d < 3; ++d) {
        const double fl = mode == Interpolation::trilinear ? std::floor(shift[d]) : stencil_centre(shift[d]);
        o[d] = static_cast<int>(fl);
        fr[d] = shift[d] - fl;
    }
}

// Interpolated row: out[k] for k in [k0, k1], from the padded field at x-y cell (px, py),
// z offset oz, fractions fr. Returns false (out untouched) when all four source rows are zero.
bool interp_row(const std::vector<double>& F, const std::vector<char>& row_nonzero, int P, int px, int py,
                int oz, const double* fr, int k0, int k1, double* tmp, double* out)
{
    const long sx = static_cast<long>(P) * P;
    const int rows[4] = {px * P + py, px * P + py + 1, (px + 1) * P + py, (px + 1) * P + py + 1};
    if (!(row_nonzero[rows[0]] | row_nonzero[rows[1]] | row_nonzero[rows[2]] | row_nonzero[rows[3]]))
        return false;
    const double wx0 = 1.0 - fr[0], wx1 = fr[0], wy0 = 1.0 - fr[1], wy1 = fr[1];
    const double w00 = wx0 * wy0, w01 = wx0 * wy1, w10 = wx1 * wy0, w11 = wx1 * wy1;
    const double* r00 = F.data() + px * sx + static_cast<long>(py) * P + oz;
    const double* r01 = r00 + P;
    const double* r10 = r00 + sx;
    const double* r11 = r10 + P;
    for (int k = k0; k <= k1 + 1; ++k)
        tmp[k] = w00 * r00[k] + w01 * r01[k] + w10 * r10[k] + w11 * r11[k];
    const double wz0 = 1.0 - fr[2], wz1 = fr[2];
    for (int k = k0; k <= k1; ++k)
        out[k] = std::clamp(wz0 * tmp[k] + wz1 * tmp[k + 1], 0.0, 1.0);
    return true;
}

// Quadratic counterpart of interp_row on the padded logit field, centred at (px, py, oz + k).
bool interp_row_logit(const std::vector<double>& Lf, const std::vector<char>& row_nonzero, int P, int px, int py,
                      int oz, const double* th, int k0, int k1, double* tmp, double* out, double* logit_out)
{
    bool any = false;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            any = any || row_nonzero[(px + a) * P + py + b];
    if (!any)
        return false;
    const long sx = static_cast<long>(P) * P;
    double wx[3], wy[3], wz[3];
    quadratic_weights(th[0], wx);
    quadratic_weights(th[1], wy);
    quadratic_weights(th[2], wz);
    // tmp is indexed from k0 - 1
    double* t = tmp - (k0 - 1);
    for (int k = k0 - 1; k <= k1 + 1; ++k)
        t[k] = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double w = wx[a] * wy[b];
            const double* row = Lf.data() + (px + a - 1) * sx + static_cast<long>(py + b - 1) * P + oz;
            for (int k = k0 - 1; k <= k1 + 1; ++k)
                t[k] += w * row[k];
        }
    for (int k = k0; k <= k1; ++k) {
        const double Lk = wz[0] * t[k - 1] + wz[1] * t[k] + wz[2] * t[k + 1];
        out[k] = logistic(Lk);
        if (logit_out)
            logit_out[k] = Lk;
    }
    return true;
}

} // namespace

namespace {

// The sphere rule of a node pair is oriented along the canonical one of +-z, so both
// orderings of the pair share nodes, weights and post-collision points.
bool canonical(int dx, int dy, int dz)
{
    return dx > 0 || (dx == 0 && (dy > 0 || (dy == 0 && dz > 0)));
}

Vec3 canonical_axis(int dx, int dy, int dz)
{
    const double s = canonical(dx, dy, dz) ? 1.0 : -1.0;
    const Vec3 zi{s * dx, s * dy, s * dz};
    return (1.0 / norm(zi)) * zi;
}

constexpr std::size_t kChunks = 32;

} // namespace

CollisionOperator::CollisionOperator(const VelocityGrid& grid, const CollisionKernel& kernel,
                                     const SphereQuadrature& quad, Interpolation mode)
    : grid_(grid), kernel_(with_radial_cap(kernel, grid.spacing())), quad_(quad), mode_(mode)
{
    check_kernel_quadrature(kernel_, quad_);
    const int n = grid_.n();
    pad_ = collision_pad(n);
    padded_ = n + 2 * pad_;
    offsets_per_axis_ = 2 * n - 1;
    const std::size_t n_off = static_cast<std::size_t>(offsets_per_axis_) * offsets_per_axis_ * offsets_per_axis_;
    const std::size_t M = quad_.size();
    weights_.assign(n_off * M, 0.0);
    const double h = grid_.spacing();
    const double h3 = grid_.cell_volume();
    for (int dx = -(n - 1); dx <= n - 1; ++dx)
        for (int dy = -(n - 1); dy <= n - 1; ++dy)
            for (int dz = -(n - 1); dz <= n - 1; ++dz) {
                if (dx == 0 && dy == 0 && dz == 0)
                    continue;
                const double zn = std::sqrt(double(dx * dx + dy * dy + dz * dz));
                const Vec3 axis = canonical_axis(dx, dy, dz);
                const Frame fr = frame_for(axis);
                const std::size_t base = offset_index(dx, dy, dz) * M;
                for (std::size_t m = 0; m < M; ++m) {
                    const Vec3 s = node_direction(quad_, fr, m);
                    const double t = node_cos(quad_, axis, s, m);
                    weights_[base + m] = h3 * quad_.effective_weight(m) * eval_kernel(kernel_, zn * h, t);
                }
            }
}

std::size_t CollisionOperator::offset_index(int dx, int dy, int dz) const
{
    const int n = grid_.n();
    const auto A = static_cast<std::size_t>(offsets_per_axis_);
    return (static_cast<std::size_t>(dx + n - 1) * A + static_cast<std::size_t>(dy + n - 1)) * A +
           static_cast<std::size_t>(dz + n - 1);
}

CollisionTerms CollisionOperator::evaluate(const DensityField& f, bool with_dissipation) const
{
    if (!(f.grid == grid_))
        throw InvalidArgument("collision operator: field grid does not match operator grid");
    const int n = grid_.n();
    const int P = padded_;
    const long sx = static_cast<long>(P) * P;
    const std::size_t M = quad_.size();
    const std::size_t N = grid_.size();

    const bool quadratic = mode_ == Interpolation::logit_quadratic;
    std::vector<double> F(static_cast<std::size_t>(P) * P * P, 0.0);
    std::vector<char> row_nonzero(static_cast<std::size_t>(P) * P, 0);
    std::vector<char> node_row_nonzero(static_cast<std::size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double x = f.values[grid_.index(i, j, k)];
                F[(i + pad_) * sx + static_cast<long>(j + pad_) * P + (k + pad_)] = x;
                if (x != 0.0) {
                    row_nonzero[(i + pad_) * P + (j + pad_)] = 1;
                    node_row_nonzero[i * n + j] = 1;
                }
            }
    std::optional<PaddedLogit> ext;
    std::vector<double> node_logit;
    if (quadratic) {
        ext.emplace(f, pad_);
        node_logit.resize(N);
        for (std::size_t v = 0; v < N; ++v)
            node_logit[v] = logit(f.values[v]);
    }

    std::vector<std::array<int, 3>> offsets;
    for (int dx = 0; dx <= n - 1; ++dx)
        for (int dy = -(n - 1); dy <= n - 1; ++dy)
            for (int dz = -(n - 1); dz <= n - 1; ++dz)
                if (canonical(dx, dy, dz))
                    offsets.push_back({dx, dy, dz});

    const std::size_t chunks = std::min(kChunks, offsets.size());
    std::vector<std::vector<double>> Gc(chunks), Lc(chunks), Dc(chunks);
    std::vector<std::uint64_t> skips(chunks, 0);

    // Fixed chunks of offsets, each with private accumulators summed in chunk order below,
    // so the result does not depend on the thread count.
    parallel_for(chunks, [&](std::size_t c) {
        std::vector<double>& G = Gc[c];
        std::vector<double>& L = Lc[c];
        std::vector<double>& D = Dc[c];
        G.assign(N, 0.0);
        L.assign(N, 0.0);
        if (with_dissipation)
            D.assign(N, 0.0);
        std::vector<SweepTerm> terms(M);
        std::vector<double> tmp(static_cast<std::size_t>(n) + 2), fp(n), fsp(n), lp(n), lsp(n);
        std::uint64_t local_skips = 0;
        const std::size_t first = c * offsets.size() / chunks, last = (c + 1) * offsets.size() / chunks;

        auto fill_row = [&](const SweepTerm& tm, bool second, int px, int py, int k0, int k1) {
            const int* o = second ? tm.o2 : tm.o1;
            const double* fr = second ? tm.fr2 : tm.fr1;
            double* out = second ? fsp.data() : fp.data();
            double* lout = second ? lsp.data() : lp.data();
            if (quadratic)
                return interp_row_logit(ext->L, ext->row_active, P, px + o[0], py + o[1], pad_ + o[2], fr, k0, k1,
                                        tmp.data(), out, with_dissipation ? lout : nullptr);
            return interp_row(F, row_nonzero, P, px + o[0], py + o[1], pad_ + o[2], fr, k0, k1, tmp.data(), out);
        };

        for (std::size_t oi = first; oi < last; ++oi) {
            const int dx = offsets[oi][0], dy = offsets[oi][1], dz = offsets[oi][2];
            const Vec3 zi{double(dx), double(dy), double(dz)};
            const double zn = norm(zi);
            const Frame fr = frame_for((1.0 / zn) * zi);
            const double* W = &weights_[offset_index(dx, dy, dz) * M];
            for (std::size_t m = 0; m < M; ++m) {
                const Vec3 s = node_direction(quad_, fr, m);
                // v' = v - (z - |z| s)/2, v_*' = v - (z + |z| s)/2
                double sh1[3], sh2[3];
                for (int d = 0; d < 3; ++d) {
                    sh1[d] = -0.5 * (zi[d] - zn * s[d]);
                    sh2[d] = -0.5 * (zi[d] + zn * s[d]);
                }
                terms[m].weight = W[m];
                split_shift(sh1, terms[m].o1, terms[m].fr1, mode_);
                split_shift(sh2, terms[m].o2, terms[m].fr2, mode_);
            }
            const int i0 = std::max(0, dx), i1 = std::min(n - 1, n - 1 + dx);
            const int j0 = std::max(0, dy), j1 = std::min(n - 1, n - 1 + dy);
            const int k0 = std::max(0, dz), k1 = std::min(n - 1, n - 1 + dz);
            for (int i = i0; i <= i1; ++i)
                for (int j = j0; j <= j1; ++j) {
                    const bool quiet = !node_row_nonzero[i * n + j] && !node_row_nonzero[(i - dx) * n + (j - dy)];
                    const std::size_t vrow = grid_.index(i, j, 0);
                    const std::size_t srow = grid_.index(i - dx, j - dy, 0);
                    const double* Fv = f.values.data() + vrow;
                    const double* Fs = f.values.data() + srow - dz;
                    double* Gv = G.data() + vrow;
                    double* Lv = L.data() + vrow;
                    double* Gs = G.data() + srow - dz;
                    double* Ls = L.data() + srow - dz;
                    const int px = i + pad_, py = j + pad_;
                    for (std::size_t m = 0; m < M; ++m) {
                        const SweepTerm& tm = terms[m];
                        if (tm.weight == 0.0)
                            continue;
                        const bool has1 = fill_row(tm, false, px, py, k0, k1);
                        if (!has1 && quiet)
                            continue;
                        const bool has2 = fill_row(tm, true, px, py, k0, k1);
                        if (!has2 && quiet)
                            continue;
                        if (!has1)
                            std::fill(fp.begin() + k0, fp.begin() + k1 + 1, 0.0);
                        if (!has2)
                            std::fill(fsp.begin() + k0, fsp.begin() + k1 + 1, 0.0);
                        const double w = tm.weight;
                        for (int k = k0; k <= k1; ++k) {
                            const double g = w * fp[k] * fsp[k];
                            const double l = w * (1.0 - fp[k]) * (1.0 - fsp[k]);
                            const double fv = Fv[k], fs = Fs[k];
                            Gv[k] += g * (1.0 - fs);
                            Lv[k] += l * fs;
                            Gs[k] += g * (1.0 - fv);
                            Ls[k] += l * fv;
                        }
                        if (!with_dissipation)
                            continue;
                        double* Dv = D.data() + vrow;
                        for (int k = k0; k <= k1; ++k) {
                            const double fv = Fv[k], fs = Fs[k];
                            const double plus = fp[k] * fsp[k] * (1.0 - fv) * (1.0 - fs);
                            const double minus = fv * fs * (1.0 - fp[k]) * (1.0 - fsp[k]);
                            if (std::max(plus, minus) < kGammaFloor)
                                continue;
                            if (std::min(plus, minus) < kGammaFloor) {
                                local_skips += 2;
                                continue;
                            }
                            const double log_ratio =
                                quadratic && has1 && has2
                                    ? lp[k] + lsp[k] - node_logit[vrow + k] - node_logit[srow + k - dz]
                                    : std::log(plus / minus);
                            // both orderings of the pair
                            Dv[k] += 2.0 * w * (plus - minus) * log_ratio;
                        }
                    }
                }
        }
        skips[c] = local_skips;
    });

    CollisionTerms out;
    out.Q.resize(N);
    out.gain.assign(N, 0.0);
    out.rate.resize(N);
    std::vector<double> L(N, 0.0);
    for (std::size_t c = 0; c < chunks; ++c)
        for (std::size_t v = 0; v < N; ++v) {
            out.gain[v] += Gc[c][v];
            L[v] += Lc[c][v];
        }
    for (std::size_t v = 0; v < N; ++v) {
        const double fv = f.values[v];
        out.Q[v] = (1.0 - fv) * out.gain[v] - fv * L[v];
        out.rate[v] = out.gain[v] + L[v];
    }
    if (with_dissipation) {
        std::vector<double> partial(chunks);
        for (std::size_t c = 0; c < chunks; ++c)
            partial[c] = pairwise_sum(Dc[c].data(), N);
        out.dissipation = 0.25 * grid_.cell_volume() * pairwise_sum(partial.data(), chunks);
        for (auto s : skips)
            out.floor_skips += s;
    }
    return out;
}

double CollisionOperator::dissipation(const DensityField& f, std::uint64_t* floor_skips) const
{
    const CollisionTerms t = evaluate(f, true);
    if (floor_skips)
        *floor_skips = t.floor_skips;
    return t.dissipation;
}

double CollisionOperator::evaluate_at(const DensityField& f, std::size_t node) const
{
    if (!(f.grid == grid_))
        throw InvalidArgument("collision operator: field grid does not match operator grid");
    const Vec3 v = grid_.node(node);
    const auto [vi, vj, vk] = grid_.ijk(node);
    const double fv = f.values[node];
    const std::size_t M = quad_.size();
    const double h3 = grid_.cell_volume();
    const FieldInterpolator interp(f, mode_);
    double acc = 0.0;
    for (std::size_t s = 0; s < grid_.size(); ++s) {
        if (s == node)
            continue;
        const auto [si, sj, sk] = grid_.ijk(s);
        const Vec3 vs = grid_.node(s);
        const double zn = norm(v - vs);
        const Vec3 axis = canonical_axis(vi - si, vj - sj, vk - sk);
        const Frame fr = frame_for(axis);
        const Vec3 center = 0.5 * (v + vs);
        const double fs = f.values[s];
        for (std::size_t m = 0; m < M; ++m) {
            const Vec3 sig = node_direction(quad_, fr, m);
            const double t = node_cos(quad_, axis, sig, m);
            const double B = eval_kernel(kernel_, zn, t);
            const Vec3 shift = (0.5 * zn) * sig;
            const double fp = interp(center + shift);
            const double fsp = interp(center - shift);
            acc += h3 * quad_.effective_weight(m) * B * pi_F(fv, fs, fp, fsp);
        }
    }
    return acc;
}

double CollisionOperator::kernel_mass_at(std::size_t node) const
{
    const auto [i, j, k] = grid_.ijk(node);
    const int n = grid_.n();
    const std::size_t M = quad_.size();
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                if (a == i && b == j && c == k)
                    continue;
                const double* W = &weights_[offset_index(i - a, j - b, k - c) * M];
                for (std::size_t m = 0; m < M; ++m)
                    acc += W[m];
            }
    return acc;
}

std::vector<double> eval_Q(const DensityField& f, const CollisionKernel& kernel, const SphereQuadrature& quad,
                           Interpolation mode)
{
    return CollisionOperator(f.grid, kernel, quad, mode).evaluate(f).Q;
}

std::vector<double> loss_rate_N(const DensityField& f, const CollisionKernel& kernel_B0, const SphereQuadrature& quad,
                                Interpolation mode)
{
    if (!kernel_B0.bounded)
        throw ConfigError("loss_rate_N expects a bounded (reduced) kernel");
    return CollisionOperator(f.grid, kernel_B0, quad, mode).evaluate(f).rate;
}

std::vector<double> eval_gain(const PairFunction& psi, const DensityField* weight, const CollisionKernel& kernel_B0,
                              const VelocityGrid& grid, const SphereQuadrature& quad)
{
    if (!kernel_B0.bounded)
        throw ConfigError("eval_gain expects a bounded (reduced) kernel");
    if (weight && !(weight->grid == grid))
        throw InvalidArgument("eval_gain: weight field grid mismatch");
    check_kernel_quadrature(kernel_B0, quad);
    const std::size_t N = grid.size();
    const std::size_t M = quad.size();
    const double h3 = grid.cell_volume();
    std::vector<double> out(N, 0.0);
    parallel_for(N, [&](std::size_t vi) {
        const Vec3 v = grid.node(vi);
        double acc = 0.0;
        for (std::size_t s = 0; s < N; ++s) {
            if (s == vi)
                continue;
            const double Fs = weight ? weight->values[s] : 1.0;
            const Vec3 vs = grid.node(s);
            const Vec3 z = v - vs;
            const double zn = norm(z);
            const Vec3 axis = (1.0 / zn) * z;
            const Frame fr = frame_for(axis);
            const Vec3 center = 0.5 * (v + vs);
            for (std::size_t m = 0; m < M; ++m) {
                const Vec3 sig = node_direction(quad, fr, m);
                const double t = node_cos(quad, axis, sig, m);
                const Vec3 shift = (0.5 * zn) * sig;
                acc += h3 * quad.effective_weight(m) * eval_kernel(kernel_B0, zn, t) * psi(center + shift, center - shift) * Fs;
            }
        }
        out[vi] = acc;
    });
    return out;
}

namespace {

// Tabulated proposal for cos(theta): 1024 bins equal in theta, mass from the angular part
// times (1 - t^2)^s, s chosen so the proposal is integrable.
struct CosThetaTable {
    std::vector<double> t_edges;  // increasing in t
    std::vector<double> cdf;      // cumulative normalized mass, size bins + 1
};

CosThetaTable build_table(const CollisionKernel& kernel)
{
    const int bins = 1024;
    const double p = kernel.angular_singularity;
    const double s = p < 1.0 ? 0.0 : p - 0.5;
    CosThetaTable tab;
    tab.t_edges.resize(bins + 1);
    tab.cdf.assign(bins + 1, 0.0);
    std::vector<double> theta(bins + 1);
    for (int b = 0; b <= bins; ++b)
        theta[b] = std::numbers::pi * (bins - b) / bins;  // t increasing
    for (int b = 0; b <= bins; ++b)
        tab.t_edges[b] = std::cos(theta[b]);
    tab.t_edges.front() = -1.0;
    tab.t_edges.back() = 1.0;
    auto density_theta = [&](double th) {
        const double t = std::cos(th);
        const double sn = std::sin(th);
        if (sn <= 0.0)
            return 0.0;
        return kernel.angular(std::abs(t)) * std::pow(sn * sn, s) * sn;
    };
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        const AdaptiveResult r = integrate_adaptive(density_theta, theta[b + 1], theta[b], 1e-10);
        if (!r.finite)
            throw NumericalError("importance table: angular part not integrable against the proposal");
        total += r.value;
        tab.cdf[b + 1] = total;
    }
    for (double& c : tab.cdf)
        c /= total;
    return tab;
}

} // namespace

McEstimate mc_estimate_Q(const DensityField& f, const CollisionKernel& kernel_in, std::size_t node,
                         std::uint64_t n_samples, std::uint64_t seed, Interpolation mode)
{
    if (n_samples < 1000)
        throw InvalidArgument("mc_estimate_Q needs at least 1000 samples");
    const VelocityGrid& grid = f.grid;
    if (node >= grid.size())
        throw InvalidArgument("mc_estimate_Q: node index out of range");
    const CollisionKernel kernel = with_radial_cap(kernel_in, grid.spacing());
    const bool importance = kernel.angular_singularity > 0.0;
    if (importance && !kernel.separable)
        throw ConfigError("importance sampling needs a separable kernel");
    CosThetaTable table;
    if (importance)
        table = build_table(kernel);

    const Vec3 v = grid.node(node);
    const double fv = f.values[node];
    const FieldInterpolator interp(f, mode);
    const std::uint64_t others = grid.size() - 1;
    const double volume = static_cast<double>(others) * grid.cell_volume();
    SplitMix64 rng(seed);
    double mean = 0.0, m2 = 0.0;
    for (std::uint64_t s = 0; s < n_samples; ++s) {
        std::uint64_t pick = rng.below(others);
        if (pick >= node)
            ++pick;
        const Vec3 vs = grid.node(pick);
        const Vec3 z = v - vs;
        const double zn = norm(z);
        const Vec3 axis = (1.0 / zn) * z;
        double t, inv_pdf;
        const double u = rng.uniform();
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        if (importance) {
            const auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), u);
            std::size_t b = static_cast<std::size_t>(std::distance(table.cdf.begin(), it));
            b = std::clamp<std::size_t>(b, 1, table.cdf.size() - 1) - 1;
            const double mass = table.cdf[b + 1] - table.cdf[b];
            const double lo = table.t_edges[b], hi = table.t_edges[b + 1];
            const double frac = mass > 0.0 ? (u - table.cdf[b]) / mass : 0.5;
            t = lo + std::clamp(frac, 0.0, 1.0) * (hi - lo);
            const double pdf_t = mass / (hi - lo);
            inv_pdf = 2.0 * std::numbers::pi / pdf_t;
        } else {
            t = 2.0 * u - 1.0;
            inv_pdf = 4.0 * std::numbers::pi;
        }
        const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
        const auto [e1, e2] = orthonormal_complement(axis);
        const Vec3 sig = (st * std::cos(phi)) * e1 + (st * std::sin(phi)) * e2 + t * axis;
        const Vec3 center = 0.5 * (v + vs);
        const Vec3 shift = (0.5 * zn) * sig;
        const double fp = interp(center + shift);
        const double fsp = interp(center - shift);
        const double pi = pi_F(fv, f.values[pick], fp, fsp);
        double x = 0.0;
        if (pi != 0.0)
            x = volume * inv_pdf * eval_kernel(kernel, zn, t) * pi;
        // Welford update
        const double delta = x - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (x - mean);
    }
    McEstimate out;
    out.estimate = mean;
    const double var = n_samples > 1 ? m2 / static_cast<double>(n_samples - 1) : 0.0;
    out.std_error = std::sqrt(var / static_cast<double>(n_samples));
    return out;
}

} // namespace fdkin
