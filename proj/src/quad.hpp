#pragma once

#include <cmath>
#include <functional>

namespace cansys::detail {

// Adaptive Gauss-Kronrod (31 point) over [lo,hi]; hi may be +inf.  Finite
// ranges longer than `chunk` are split so rapidly growing integrands keep
// their relative accuracy.
double gk(const std::function<double(double)>& f, double lo, double hi,
          double rel_tol = 1e-12, double chunk = 0.0);

inline double logplus(double u) { return u > 1.0 ? std::log(u) : 0.0; }

}  // namespace cansys::detail
