#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

// Finite-difference oracle shared by the gradient tests. The analytic
// backward passes are checked against central differences of the scalar
// loss; the oracle never calls any backward code.

namespace fdcheck {

// d f / d slot via central difference, evaluated at the slot's current
// value. The slot is restored before returning.
inline double central(const std::function<double()>& f, double& slot, double h) {
    const double saved = slot;
    slot = saved + h;
    const double hi = f();
    slot = saved - h;
    const double lo = f();
    slot = saved;
    return (hi - lo) / (2.0 * h);
}

inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace fdcheck
