#pragma once

#include <string>
#include <vector>

#include "cansys/growth.hpp"
#include "cansys/hamiltonian.hpp"

namespace cansys {

struct DyadicProfile {
    int depth = 0;
    std::vector<Point> points;   // c_0 = a, c_1, ..., c_N
    RealSequence omega;          // omega_1..omega_N, including the ||kappa|| factor
    RealSequence cell_h2;        // int over J_n of h2
    double mass = 0;             // ||kappa||^2 = int_a^b h1
    std::string provenance;      // which H produced it (kappa = sqrt h1, phi = sqrt h2)
};

enum class OmegaNorm {
    with_kappa,     // ||kappa|| 2^{-n/2} (int_{J_n} h2)^{1/2}, the canonical form
    without_kappa,  // 2^{-n/2} (int_{J_n} h2)^{1/2}
};

// c_n with tail_h1(c_n) = 2^{-n} tail_h1(a), n = 0..N.
std::vector<Point> dyadic_points(const Hamiltonian& H, int depth);
RealSequence omega_sequence(const Hamiltonian& H, int depth, OmegaNorm norm = OmegaNorm::with_kappa);
DyadicProfile dyadic_profile(const Hamiltonian& H, int depth);

// Right inverse of the normalized tail: tail_h1(t)/tail_h1(a) = u.
double chi(const Hamiltonian& H, double u);
Point chi_point(const Hamiltonian& H, double u);

std::string profile_csv(const DyadicProfile& p);

// conv_exponent of 1/omega*_n, the exponent the omega-criteria assign to H when
// they apply (growth of order > 1).
ExponentEstimate omega_exponent(const Hamiltonian& H, int depth);

}  // namespace cansys
