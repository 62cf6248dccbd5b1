#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cansys/growth.hpp"
#include "cansys/hamiltonian.hpp"
#include "json.hpp"

namespace cansys {

// How an expected convergence exponent is measured.
//   oracle:   eigenvalues of the problem truncated at 1 - 2^{-k}
//   dyadic:   conv_exponent of 1/omega*_n (valid in the order > 1 regime)
//   operator: -1 / (singular-value decay slope of K_H)
enum class Estimator { oracle, dyadic, operator_slope };
std::string to_string(Estimator e);

struct ExponentCheck {
    Estimator estimator = Estimator::oracle;
    double lo = 0, hi = 0;   // band, when diverges is false
    bool diverges = false;   // infinite exponent: estimate > 4 and increasing with depth
};

struct ExampleCase {
    std::string id;
    std::string family;
    nlohmann::json params;
    std::function<Hamiltonian()> build;
    std::optional<bool> discrete, invertible;
    double exponent = 0;     // expected value; +inf for the divergent case, 0 when none
    std::vector<ExponentCheck> exponent_checks;
    std::optional<GrowthFunction> limsup_growth;  // expected bounded and non-vanishing
    // |slope(H) - slope(diag H)|: below `agree_below` or above `split_above`
    std::optional<double> agree_below, split_above;
    std::string note;
    std::string basis;       // "analytic" or "numerical"

    nlohmann::json expected_json() const;
};

const std::vector<ExampleCase>& registry();
const ExampleCase& registry_case(const std::string& id);

struct RegvarReport {
    RealSequence ratios;     // omega_n / (2^{-n} phi(1 - 2^{-n})), n = 1..N
    double min = 0, max = 0; // over n in [4, N]
    double band_lo = 0, band_hi = 0;
    bool within_band = false;
    nlohmann::json to_json() const;
};

// kappa = 1 on [0,1), phi regularly varying of index rho at 1.  phi receives a
// Point so that it can be evaluated from the gap 1 - t.
RegvarReport regvar_check(const std::function<double(const Point&)>& phi, double rho, int N);

struct GalleryConfig {
    int depth = 40;
    int grid = 1024;          // operator_lab cells
    double window = 1e4;      // oracle window R
    int truncation = 12;      // oracle truncation c = 1 - 2^{-truncation}
};

struct CaseResult {
    std::string id;
    nlohmann::json expected, observed;
    std::vector<std::string> failures;
    bool pass = false;
};

CaseResult run_case(const ExampleCase& ec, const GalleryConfig& cfg = {});
std::vector<CaseResult> run_all(const GalleryConfig& cfg = {});
nlohmann::json gallery_json(const std::vector<CaseResult>& results);

}  // namespace cansys
