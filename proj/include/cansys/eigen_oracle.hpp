#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cansys/growth.hpp"
#include "cansys/hamiltonian.hpp"
#include "json.hpp"

namespace cansys {

struct TransferMatrix {
    double m[2][2] = {{1, 0}, {0, 1}};
    double z = 0;
    double a = 0, c = 0;

    double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
};

// exp(z len J H) for constant H.
TransferMatrix transfer_matrix(const MatrixValue& h, double len, double z);

// H on [a, c] as a chain of constant cells.  Tables are cut at c, constant
// families give a single cell, other families are resampled at cell midpoints
// on clustered_grid(H, c, cells).
struct CellChain {
    double a = 0, c = 0;
    std::vector<double> len;
    std::vector<MatrixValue> cells;

    double sqrt_det_integral() const;
};

inline constexpr int kDefaultMonodromyCells = 2048;

CellChain truncate(const Hamiltonian& H, const Point& c, int cells = kDefaultMonodromyCells);

TransferMatrix monodromy(const CellChain& chain, double z);
TransferMatrix monodromy(const Hamiltonian& H, const Point& c, double z, int cells = kDefaultMonodromyCells);

// (cos b, sin b) W(c,z) (0,1)^T
double char_value(const CellChain& chain, double z, double beta = std::numbers::pi / 2);
double char_value(const Hamiltonian& H, const Point& c, double z, double beta = std::numbers::pi / 2);

struct SpectrumEstimate {
    double c = 0, beta = 0, window = 0, step = 0;
    double sqrt_det_integral = 0;
    RealSequence eigenvalues;   // sorted by modulus, ties negative first
    RealSequence tangencies;    // scan points where |char| touched 0 without a sign change
    ExponentEstimate exponent;  // conv_exponent of |lambda_n|, when >= 16 eigenvalues

    std::vector<std::pair<double, size_t>> counting() const;  // (r, n(r)) at each |lambda_n|
    nlohmann::json to_json() const;
};

inline constexpr double kRootTol = 1e-10;

SpectrumEstimate eigenvalues(const CellChain& chain, double R, double beta = std::numbers::pi / 2);
SpectrumEstimate eigenvalues(const Hamiltonian& H, const Point& c, double R, double beta = std::numbers::pi / 2,
                             int cells = kDefaultMonodromyCells);

struct CountingReport {
    std::vector<std::pair<double, size_t>> n_of_r;
    ExponentEstimate exponent;
    double plus_tail_mean = 0, minus_tail_mean = 0;  // lambda_n^+/n, |lambda_n^-|/n over the final third
    size_t plus_count = 0, minus_count = 0;
    std::optional<double> kdb_density;               // pi / int sqrt(det H), when the integral is > 0
    std::vector<std::string> flags;
    // with a growth function
    RealSequence partial_sums;                       // sum 1/g(|lambda_n|)
    RealSequence limsup_trajectory;                  // n / g(|lambda_n|)
    std::optional<TrendReport> limsup_trend;
    std::optional<SeriesReport> series;

    nlohmann::json to_json() const;
};

CountingReport counting_report(const SpectrumEstimate& est, const GrowthFunction* g = nullptr);

// lambda_n^+ / n for the n-th positive eigenvalue (1-based).
double plus_ratio(const SpectrumEstimate& est, size_t n);

std::string spectrum_csv(const SpectrumEstimate& est);
std::string counting_csv(const SpectrumEstimate& est);

}  // namespace cansys
