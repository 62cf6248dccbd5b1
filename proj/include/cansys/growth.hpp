#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace cansys {

using RealSequence = std::vector<double>;

// g(r) = r^rho * (log r)^beta1 * (log log r)^beta2 * ... for r >= r0, continued
// below r0 by g(r0) (r/r0)^rho; or a monotone table interpolated in log-log
// coordinates (monotone cubic) and continued by its end slopes.
class GrowthFunction {
public:
    static GrowthFunction lindelof(double rho, std::vector<double> betas = {}, double r0 = 0.0);
    static GrowthFunction table(std::vector<double> r, std::vector<double> g);

    bool is_table() const { return kind_ == Kind::table; }
    double rho() const { return rho_; }
    const std::vector<double>& betas() const { return betas_; }
    double r0() const { return r0_; }
    // Order rho_g = lim log g(r) / log r.
    double order() const;
    std::string describe() const;
    nlohmann::json to_json() const;

    double operator()(double r) const;

private:
    enum class Kind { lindelof, table };
    GrowthFunction() = default;
    double log_g(double logr) const;
    double lindelof_core(double logr) const;

    Kind kind_ = Kind::lindelof;
    double rho_ = 1.0, r0_ = 1.0, log_g_r0_ = 0.0;
    std::vector<double> betas_;
    std::vector<double> logr_, logg_;
    std::shared_ptr<const void> interp_;
};

GrowthFunction growth_from_json(const nlohmann::json& j);
// "rho=2,betas=[-1,0.5],r0=20" or a path to a JSON file.
GrowthFunction parse_growth(const std::string& spec_or_path);

double g_eval(const GrowthFunction& g, double r);
double g_inverse(const GrowthFunction& g, double y);
// M(t) = g(1) / g(1/t), so that M(1) = 1.
double orlicz_M(const GrowthFunction& g, double t);

RealSequence rearrange_desc(const RealSequence& s);

struct ExponentEstimate {
    double slope = 0, intercept = 0, residual = 0;
    size_t fitted = 0;
};
// Least-squares slope of log n against log s_n over the top half; s sorted
// ascending, n = first_index, first_index + 1, ...
ExponentEstimate conv_exponent(const RealSequence& s, size_t first_index = 1);

enum class Trend { bounded, vanishing, divergent, inconclusive };
std::string to_string(Trend t);

struct TrendReport {
    Trend trend = Trend::inconclusive;
    double tail_sup = 0, peak = 0, median = 0, slope = 0;
};
// Classifies the behaviour of v_n (n = index[i]) from the final third.
TrendReport classify_trend(const RealSequence& v, const std::vector<double>& index);

struct LimsupReport {
    RealSequence ratios;        // r_n = n / g(1/s_n)
    RealSequence running_max;   // over the final third
    TrendReport trend;
};
LimsupReport limsup_ratio(const RealSequence& s, const GrowthFunction& g);

enum class SeriesClass { converges, diverges, inconclusive };
std::string to_string(SeriesClass c);

struct SeriesReport {
    SeriesClass cls = SeriesClass::inconclusive;
    double raabe = 0, bertrand = 0;
    RealSequence partial_sums;
};
// Raabe/Bertrand tests on the final third of the positive terms a_n.
SeriesReport classify_series(const RealSequence& a, const std::vector<double>& index);

}  // namespace cansys
