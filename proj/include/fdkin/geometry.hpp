#pragma once

#include "fdkin/vec3.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace fdkin {

/// Uniform node-centred cubic velocity grid over [-vmax, vmax]^3, boundary nodes included.
class VelocityGrid {
public:
    VelocityGrid(int n, double vmax);

    int n() const { return n_; }
    double vmax() const { return vmax_; }
    double spacing() const { return h_; }
    double cell_volume() const { return h_ * h_ * h_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }

    double coordinate(int i) const { return -vmax_ + i * h_; }
    Vec3 node(int i, int j, int k) const { return {coordinate(i), coordinate(j), coordinate(k)}; }
    Vec3 node(std::size_t index) const;

    std::size_t index(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    std::array<int, 3> ijk(std::size_t index) const;

    bool operator==(const VelocityGrid& other) const { return n_ == other.n_ && vmax_ == other.vmax_; }

private:
    int n_;
    double vmax_;
    double h_;
};

VelocityGrid build_grid(int n, double vmax);

/// Nodal values of a distribution on a VelocityGrid, row-major (i, j, k).
struct DensityField {
    VelocityGrid grid;
    std::vector<double> values;

    explicit DensityField(const VelocityGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
    DensityField(const VelocityGrid& g, std::vector<double> v);

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    /// True when every value lies in [0, 1] (the Pauli constraint).
    bool pauli_bounded() const;
};

/// Samples fn at every node.
template <class Fn>
DensityField sample_field(const VelocityGrid& grid, Fn&& fn)
{
    DensityField f(grid);
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        f.values[idx] = fn(grid.node(idx));
    return f;
}

/// Snapshot text format: header `fdkin-grid n=<n> vmax=<float>` then n^3 values, one per line.
void write_snapshot(std::ostream& out, const DensityField& f);
DensityField read_snapshot(std::istream& in);
void write_snapshot_file(const std::string& path, const DensityField& f);
DensityField read_snapshot_file(const std::string& path);

/// Post-collision velocities in the sigma-representation.
std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma);

enum class SphereRuleKind { lebedev_like, product_cos_phi, jacobi_adapted };

const char* to_string(SphereRuleKind kind);
SphereRuleKind sphere_rule_kind_from_string(const std::string& name);

/// Node/weight set on the unit sphere.
///
/// lebedev_like rules carry global nodes. The product kinds are defined in a local
/// frame whose polar axis is e3; `oriented` rotates them onto a caller-given axis, and
/// `cos_theta[m]` is the polar cosine of node m in that frame. For jacobi_adapted the
/// weights absorb (1 - cos^2)^(-absorbed_exponent); `effective_weight` removes it again.
struct SphereQuadrature {
    SphereRuleKind kind = SphereRuleKind::lebedev_like;
    int degree = 0;
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    std::vector<double> cos_theta;
    double absorbed_exponent = 0.0;

    std::size_t size() const { return nodes.size(); }
    bool axis_aligned() const { return kind != SphereRuleKind::lebedev_like; }
    double effective_weight(std::size_t m) const;

    /// Nodes rotated so that the local e3 axis maps onto `axis` (unit vector).
    std::vector<Vec3> oriented(const Vec3& axis) const;
    /// The rule with every node negated, order preserved.
    SphereQuadrature reflected() const;
};

/// Builds a sphere rule.
/// lebedev_like: order is the node count (6, 14, 26, 38 or 50; degrees 3, 5, 7, 9, 11).
/// product_cos_phi / jacobi_adapted: order is the number of cos(theta) nodes, n_phi the
/// number of azimuthal nodes (even; 0 means n_phi = order).
SphereQuadrature sphere_quadrature(SphereRuleKind kind, int order, int n_phi = 0, double absorbed_exponent = 0.0);

/// Orthonormal frame (e1, e2, axis) used to orient the product rules.
std::pair<Vec3, Vec3> orthonormal_complement(const Vec3& axis);

} // namespace fdkin
