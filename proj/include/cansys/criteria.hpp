#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cansys/growth.hpp"
#include "cansys/hamiltonian.hpp"
#include "json.hpp"

namespace cansys {

enum class Verdict { holds, fails, inconclusive };
enum class Method { continuous, sequential, both };
std::string to_string(Verdict v);
std::string to_string(Method m);

using Trajectory = std::vector<std::pair<double, double>>;

struct CriterionReport {
    std::string criterion;
    Verdict verdict = Verdict::inconclusive;
    Method method = Method::both;
    Trajectory trajectory;             // continuous: (c_n, value)
    Trajectory sequential_trajectory;  // (n, value)
    std::string continuous_class, sequential_class;
    std::optional<bool> agreement;
    std::vector<std::string> notes;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const;
};

inline constexpr int kDefaultDepth = 40;

// P(t) = int_t^b h1 * int_a^t h2
double product_P(const Hamiltonian& H, const Point& t);

CriterionReport discreteness(const Hamiltonian& H, int depth = kDefaultDepth);
CriterionReport bounded_invertibility(const Hamiltonian& H, int depth = kDefaultDepth);
CriterionReport summability(const Hamiltonian& H, const GrowthFunction& g, int depth = kDefaultDepth);
// Verdict refers to item (i), limsup < inf; extra["vanishing"] carries item (ii).
CriterionReport limsup_distribution(const Hamiltonian& H, const GrowthFunction& g,
                                    int depth = kDefaultDepth);

// F(t,lambda) = int_t^b h1 e^{2 lambda m3} * int_a^t h2 e^{-2 lambda m3}.
double kac_F(const Hamiltonian& H, double t, double lambda);
double kac_F(const Hamiltonian& H, const Point& t, double lambda);

enum class KacMembership { in_A, in_B, neither, inconclusive };
std::string to_string(KacMembership k);

struct KacReport {
    KacMembership membership = KacMembership::inconclusive;
    double threshold = 0;          // K / lambda^2
    double max_A = 0, max_B = 0;   // final-third maxima of F for H and for J H J^T
    Trajectory trajectory_A, trajectory_B;
    nlohmann::json to_json() const;
};
KacReport kac_membership(const Hamiltonian& H, double lambda, double K, int depth = kDefaultDepth);

}  // namespace cansys
