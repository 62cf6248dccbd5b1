#include "cansys/dyadic.hpp"

#include <cmath>
#include <sstream>

#include "cansys/errors.hpp"

namespace cansys {

namespace {

void require_normalized(const Hamiltonian& H) {
    if (!H.normalized()) throw PreconditionError("dyadic construction requires int_a^b h1 < inf");
}

void require_live_tail(const Hamiltonian& H) {
    if (auto* t = H.table()) {
        if (t->cells.back().h1 <= 0.0)
            throw DegenerateTailError(
                "h1 vanishes on a terminal interval; the spectrum is then governed by "
                "int sqrt(det H) alone and the dyadic scales are undefined");
    }
}

}  // namespace

std::vector<Point> dyadic_points(const Hamiltonian& H, int depth) {
    require_normalized(H);
    require_live_tail(H);
    if (depth < 1) throw InputError("depth must be >= 1");
    double total = tail_h1(H, H.start());
    if (!(total > 0.0)) throw DegenerateTailError("h1 vanishes identically");
    std::vector<Point> c{H.start()};
    for (int n = 1; n <= depth; ++n) {
        Point p = invert_tail(H, std::ldexp(total, -n));
        bool increasing = H.b_infinite() ? p.t > c.back().t : p.gap < c.back().gap;
        if (!increasing)
            throw DegenerateTailError("dyadic points stopped increasing at level " +
                                      std::to_string(n) + " (flat or underresolved h1 tail)");
        c.push_back(p);
    }
    return c;
}

DyadicProfile dyadic_profile(const Hamiltonian& H, int depth) {
    DyadicProfile p;
    p.depth = depth;
    p.points = dyadic_points(H, depth);
    p.mass = tail_h1(H, H.start());
    p.provenance = "kappa = sqrt(h1), phi = sqrt(h2) of " + H.describe();
    double k = std::sqrt(p.mass);
    for (int n = 1; n <= depth; ++n) {
        double m2 = integral(H, Entry::H2, p.points[n - 1], p.points[n]);
        p.cell_h2.push_back(m2);
        p.omega.push_back(k * std::sqrt(std::ldexp(m2, -n)));
    }
    return p;
}

RealSequence omega_sequence(const Hamiltonian& H, int depth, OmegaNorm norm) {
    auto p = dyadic_profile(H, depth);
    if (norm == OmegaNorm::without_kappa) {
        double k = std::sqrt(p.mass);
        for (auto& w : p.omega) w /= k;
    }
    return p.omega;
}

Point chi_point(const Hamiltonian& H, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("chi needs u in [0,1]");
    require_normalized(H);
    if (u == 1.0) return H.start();
    double total = tail_h1(H, H.start());
    if (u == 0.0) {
        // left edge of a terminal flat region, or b
        if (auto* t = H.table()) {
            size_t i = t->cells.size();
            while (i > 0 && t->cells[i - 1].h1 <= 0.0) --i;
            return H.at(t->t[i]);
        }
        return H.b_infinite() ? Point{kInf, kInf} : Point{H.b(), 0.0};
    }
    return invert_tail(H, u * total);
}

double chi(const Hamiltonian& H, double u) { return chi_point(H, u).t; }

std::string profile_csv(const DyadicProfile& p) {
    std::ostringstream os;
    os.precision(17);
    os << "n,c_n,omega_n\n";
    os << 0 << "," << p.points[0].t << ",\n";
    for (int n = 1; n <= p.depth; ++n) os << n << "," << p.points[n].t << "," << p.omega[n - 1] << "\n";
    return os.str();
}

ExponentEstimate omega_exponent(const Hamiltonian& H, int depth) {
    auto w = rearrange_desc(omega_sequence(H, depth));
    RealSequence inv;
    for (double x : w) {
        if (!(x > 0.0)) break;
        inv.push_back(1.0 / x);
    }
    return conv_exponent(inv);
}

}  // namespace cansys
