#include "quad.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace cansys::detail {

double gk(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
          double chunk) {
    using boost::math::quadrature::gauss_kronrod;
    if (!(hi > lo)) return 0.0;
    if (std::isinf(hi) || chunk <= 0.0 || hi - lo <= chunk)
        return gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, rel_tol);
    int pieces = static_cast<int>(std::ceil((hi - lo) / chunk));
    double h = (hi - lo) / pieces, sum = 0.0;
    for (int k = 0; k < pieces; ++k) {
        double x0 = lo + k * h, x1 = (k + 1 == pieces) ? hi : lo + (k + 1) * h;
        sum += gauss_kronrod<double, 31>::integrate(f, x0, x1, 15, rel_tol);
    }
    return sum;
}

}  // namespace cansys::detail
