#pragma once

#include "fdkin/collision.hpp"
#include "fdkin/geometry.hpp"
#include "fdkin/kernels.hpp"

#include <cstdint>

namespace fdkin {

/// S(f) = h^3 sum [-(1 - f) log(1 - f) - f log f], integrand 0 at f in {0, 1}.
double entropy_S(const DensityField& f);

struct Dissipation {
    double value = 0.0;
    std::uint64_t floor_skips = 0;  ///< terms with one of Pi+/Pi- below 1e-30 and the other not
};

/// D(f) = 1/4 sum_{v, v_*} h^6 sum_m w_m B Gamma(Pi+, Pi-).
Dissipation dissipation_D(const DensityField& f, const CollisionKernel& kernel, const SphereQuadrature& quad);

/// h^3 sum |f| (1 + |v|^2)^(s/2).
double weighted_moment(const DensityField& f, double s);

} // namespace fdkin
