#include "fdkin/geometry.hpp"

#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fdkin {

VelocityGrid::VelocityGrid(int n, double vmax) : n_(n), vmax_(vmax), h_(0.0)
{
    if (n < 4)
        throw InvalidArgument("grid needs at least 4 points per axis, got " + std::to_string(n));
    if (!(vmax > 0.0) || !std::isfinite(vmax))
        throw InvalidArgument("grid half-width vmax must be positive and finite");
    h_ = 2.0 * vmax / (n - 1);
}

Vec3 VelocityGrid::node(std::size_t index) const
{
    const auto [i, j, k] = ijk(index);
    return node(i, j, k);
}

std::array<int, 3> VelocityGrid::ijk(std::size_t index) const
{
    const auto nn = static_cast<std::size_t>(n_);
    return {static_cast<int>(index / (nn * nn)), static_cast<int>((index / nn) % nn), static_cast<int>(index % nn)};
}

VelocityGrid build_grid(int n, double vmax) { return VelocityGrid(n, vmax); }

DensityField::DensityField(const VelocityGrid& g, std::vector<double> v) : grid(g), values(std::move(v))
{
    if (values.size() != grid.size())
        throw InvalidArgument("field size does not match grid");
}

bool DensityField::pauli_bounded() const
{
    return std::all_of(values.begin(), values.end(), [](double x) { return x >= 0.0 && x <= 1.0; });
}

void write_snapshot(std::ostream& out, const DensityField& f)
{
    out << "fdkin-grid n=" << f.grid.n() << " vmax=" << std::setprecision(17) << f.grid.vmax() << '\n';
    out << std::setprecision(17);
    for (double x : f.values)
        out << x << '\n';
}

DensityField read_snapshot(std::istream& in)
{
    std::string header;
    if (!std::getline(in, header))
        throw IoError("snapshot: missing header line");
    std::istringstream hs(header);
    std::string magic, n_tok, v_tok;
    hs >> magic >> n_tok >> v_tok;
    if (magic != "fdkin-grid" || n_tok.rfind("n=", 0) != 0 || v_tok.rfind("vmax=", 0) != 0)
        throw IoError("snapshot: malformed header '" + header + "'");
    int n = 0;
    double vmax = 0.0;
    try {
        n = std::stoi(n_tok.substr(2));
        vmax = std::stod(v_tok.substr(5));
    } catch (const std::exception&) {
        throw IoError("snapshot: malformed header '" + header + "'");
    }
    DensityField f(VelocityGrid(n, vmax));
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(in >> f.values[i]))
            throw IoError("snapshot: expected " + std::to_string(f.size()) + " values, got " + std::to_string(i));
    }
    return f;
}

void write_snapshot_file(const std::string& path, const DensityField& f)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    write_snapshot(out, f);
    if (!out)
        throw IoError("failed writing '" + path + "'");
}

DensityField read_snapshot_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    return read_snapshot(in);
}

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma)
{
    const Vec3 center = 0.5 * (v + v_star);
    const double half_gap = 0.5 * norm(v - v_star);
    const Vec3 shift = half_gap * sigma;
    return {center + shift, center - shift};
}

const char* to_string(SphereRuleKind kind)
{
    switch (kind) {
    case SphereRuleKind::lebedev_like:
        return "lebedev_like";
    case SphereRuleKind::product_cos_phi:
        return "product_cos_phi";
    case SphereRuleKind::jacobi_adapted:
        return "jacobi_adapted";
    }
    return "?";
}

SphereRuleKind sphere_rule_kind_from_string(const std::string& name)
{
    if (name == "lebedev_like")
        return SphereRuleKind::lebedev_like;
    if (name == "product_cos_phi")
        return SphereRuleKind::product_cos_phi;
    if (name == "jacobi_adapted")
        return SphereRuleKind::jacobi_adapted;
    throw InvalidArgument("unknown sphere rule kind '" + name + "'");
}

double SphereQuadrature::effective_weight(std::size_t m) const
{
    if (absorbed_exponent == 0.0)
        return weights[m];
    const double t = cos_theta[m];
    return weights[m] * std::pow(1.0 - t * t, absorbed_exponent);
}

std::pair<Vec3, Vec3> orthonormal_complement(const Vec3& axis)
{
    // Pick the coordinate axis least aligned with `axis` as the seed.
    Vec3 seed{0.0, 0.0, 0.0};
    const double ax = std::abs(axis[0]), ay = std::abs(axis[1]), az = std::abs(axis[2]);
    if (ax <= ay && ax <= az)
        seed[0] = 1.0;
    else if (ay <= az)
        seed[1] = 1.0;
    else
        seed[2] = 1.0;
    Vec3 e1 = seed - dot(seed, axis) * axis;
    e1 = (1.0 / norm(e1)) * e1;
    const Vec3 e2{axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2],
                  axis[0] * e1[1] - axis[1] * e1[0]};
    return {e1, e2};
}

std::vector<Vec3> SphereQuadrature::oriented(const Vec3& axis) const
{
    if (!axis_aligned())
        return nodes;
    const auto [e1, e2] = orthonormal_complement(axis);
    std::vector<Vec3> out(nodes.size());
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        const Vec3& s = nodes[m];
        out[m] = s[0] * e1 + s[1] * e2 + s[2] * axis;
    }
    return out;
}

SphereQuadrature SphereQuadrature::reflected() const
{
    SphereQuadrature r = *this;
    for (auto& s : r.nodes)
        s = -s;
    for (auto& t : r.cos_theta)
        t = -t;
    return r;
}

namespace {

void add_orbit(SphereQuadrature& q, const std::vector<Vec3>& pts, double w)
{
    for (const auto& p : pts) {
        q.nodes.push_back(p);
        q.weights.push_back(4.0 * std::numbers::pi * w);
    }
}

// All sign/permutation images of the generator (a, b, c), without duplicates.
std::vector<Vec3> orbit(double a, double b, double c)
{
    std::vector<Vec3> out;
    std::array<double, 3> base{a, b, c};
    std::sort(base.begin(), base.end());
    do {
        for (int s = 0; s < 8; ++s) {
            Vec3 p{base[0], base[1], base[2]};
            for (int d = 0; d < 3; ++d)
                if (s & (1 << d))
                    p[d] = -p[d];
            bool dup = false;
            for (const auto& q : out)
                if (q == p)
                    dup = true;
            if (!dup)
                out.push_back(p);
        }
    } while (std::next_permutation(base.begin(), base.end()));
    return out;
}

SphereQuadrature lebedev(int count)
{
    const double r2 = 1.0 / std::sqrt(2.0);
    const double r3 = 1.0 / std::sqrt(3.0);
    SphereQuadrature q;
    q.kind = SphereRuleKind::lebedev_like;
    const auto a1 = orbit(0.0, 0.0, 1.0);
    const auto a2 = orbit(0.0, r2, r2);
    const auto a3 = orbit(r3, r3, r3);
    switch (count) {
    case 6:
        q.degree = 3;
        add_orbit(q, a1, 1.0 / 6.0);
        break;
    case 14:
        q.degree = 5;
        add_orbit(q, a1, 1.0 / 15.0);
        add_orbit(q, a3, 3.0 / 40.0);
        break;
    case 26:
        q.degree = 7;
        add_orbit(q, a1, 1.0 / 21.0);
        add_orbit(q, a2, 4.0 / 105.0);
        add_orbit(q, a3, 9.0 / 280.0);
        break;
    case 38: {
        q.degree = 9;
        const double p = 0.4597008433809831;
        add_orbit(q, a1, 1.0 / 105.0);
        add_orbit(q, a3, 9.0 / 280.0);
        add_orbit(q, orbit(0.0, p, std::sqrt(1.0 - p * p)), 1.0 / 35.0);
        break;
    }
    case 50: {
        q.degree = 11;
        const double l = 1.0 / std::sqrt(11.0);
        add_orbit(q, a1, 4.0 / 315.0);
        add_orbit(q, a2, 64.0 / 2835.0);
        add_orbit(q, a3, 27.0 / 1280.0);
        add_orbit(q, orbit(l, l, 3.0 * l), 14641.0 / 725760.0);
        break;
    }
    default:
        throw InvalidArgument("lebedev_like rule supports 6, 14, 26, 38 or 50 nodes, got " + std::to_string(count));
    }
    return q;
}

SphereQuadrature product(SphereRuleKind kind, int n_t, int n_phi, double absorbed)
{
    if (n_t < 1)
        throw InvalidArgument("product rule needs at least one cos(theta) node");
    if (n_phi == 0)
        n_phi = n_t;
    if (n_phi < 2 || n_phi % 2 != 0)
        throw InvalidArgument("product rule needs an even azimuthal node count >= 2");
    if (kind == SphereRuleKind::product_cos_phi)
        absorbed = 0.0;
    else if (!(absorbed >= 0.0 && absorbed < 1.0))
        throw InvalidArgument("jacobi_adapted absorbed exponent must lie in [0, 1)");
    const Rule1D rt = gauss_jacobi_symmetric(n_t, -absorbed);
    SphereQuadrature q;
    q.kind = kind;
    q.absorbed_exponent = absorbed;
    q.degree = std::min(2 * n_t - 1, n_phi - 1);
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    for (int a = 0; a < n_t; ++a) {
        const double t = rt.nodes[a];
        const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
        for (int b = 0; b < n_phi; ++b) {
            const double phi = (b + 0.5) * dphi;
            q.nodes.push_back({s * std::cos(phi), s * std::sin(phi), t});
            q.weights.push_back(rt.weights[a] * dphi);
            q.cos_theta.push_back(t);
        }
    }
    return q;
}

} // namespace

SphereQuadrature sphere_quadrature(SphereRuleKind kind, int order, int n_phi, double absorbed_exponent)
{
    if (kind == SphereRuleKind::lebedev_like)
        return lebedev(order);
    return product(kind, order, n_phi, absorbed_exponent);
}

} // namespace fdkin
