#include "cansys/growth.hpp"

#include <algorithm>
#include <cmath>
#include <math.h>  // pchip.hpp calls unqualified isnan

#include <boost/math/interpolators/pchip.hpp>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "cansys/errors.hpp"

namespace cansys {

using nlohmann::json;
using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

namespace {

// log of the k-th iterated logarithm product, or NaN when some iterate < 1
double iterated_log_sum(double logr, const std::vector<double>& betas) {
    double s = 0.0, L = logr;  // L = log r, then log log r, ...
    for (double beta : betas) {
        if (!(L > 0.0)) return std::nan("");
        if (beta != 0.0) s += beta * std::log(L);
        L = std::log(L);
    }
    return s;
}

double default_r0(size_t m) {
    double r = 1.0;
    for (size_t k = 0; k < m; ++k) r = std::exp(r);
    return r;
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept,
                    double* residual) {
    size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    double slope = sxx > 0 ? sxy / sxx : 0.0;
    double b = my - slope * mx;
    if (intercept) *intercept = b;
    if (residual) {
        double ss = 0;
        for (size_t i = 0; i < n; ++i) ss += std::pow(y[i] - slope * x[i] - b, 2);
        *residual = std::sqrt(ss / n);
    }
    return slope;
}

}  // namespace

GrowthFunction GrowthFunction::lindelof(double rho, std::vector<double> betas, double r0) {
    if (!(rho > 0.0)) throw InputError("growth function needs rho > 0");
    GrowthFunction g;
    g.kind_ = Kind::lindelof;
    g.rho_ = rho;
    g.betas_ = std::move(betas);
    while (!g.betas_.empty() && g.betas_.back() == 0.0) g.betas_.pop_back();
    double rmin = default_r0(g.betas_.size());
    g.r0_ = r0 > 0.0 ? r0 : rmin;
    if (g.r0_ < rmin) throw InputError("r0 must be at least the point where all iterated logs are >= 1");
    double lr0 = std::log(g.r0_);
    g.log_g_r0_ = g.lindelof_core(lr0);
    // g must increase from r0 on
    double prev = g.log_g_r0_;
    for (int k = 1; k <= 400; ++k) {
        double lr = lr0 + 0.1 * k * std::max(1.0, lr0);
        double cur = g.lindelof_core(lr);
        if (!(cur > prev)) throw InputError("growth function is not increasing beyond r0");
        prev = cur;
    }
    return g;
}

GrowthFunction GrowthFunction::table(std::vector<double> r, std::vector<double> gv) {
    if (r.size() != gv.size() || r.size() < 2) throw InputError("growth table needs >= 2 samples");
    GrowthFunction g;
    g.kind_ = Kind::table;
    for (size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || !(gv[i] > 0.0)) throw InputError("growth table entries must be positive");
        if (i > 0 && (!(r[i] > r[i - 1]) || !(gv[i] > gv[i - 1])))
            throw InputError("growth table must be strictly increasing");
        g.logr_.push_back(std::log(r[i]));
        g.logg_.push_back(std::log(gv[i]));
    }
    g.r0_ = r.front();
    size_t n = g.logr_.size();
    g.rho_ = (g.logg_[n - 1] - g.logg_[n - 2]) / (g.logr_[n - 1] - g.logr_[n - 2]);
    if (n >= 4) {
        auto x = g.logr_, y = g.logg_;
        g.interp_ = std::make_shared<Pchip>(std::move(x), std::move(y));
    }
    return g;
}

double GrowthFunction::lindelof_core(double logr) const {
    return rho_ * logr + iterated_log_sum(logr, betas_);
}

double GrowthFunction::log_g(double logr) const {
    if (kind_ == Kind::lindelof) {
        double lr0 = std::log(r0_);
        if (logr >= lr0) return lindelof_core(logr);
        return log_g_r0_ + rho_ * (logr - lr0);
    }
    size_t n = logr_.size();
    if (logr <= logr_.front()) {
        double s = (logg_[1] - logg_[0]) / (logr_[1] - logr_[0]);
        return logg_[0] + s * (logr - logr_[0]);
    }
    if (logr >= logr_.back()) return logg_[n - 1] + rho_ * (logr - logr_[n - 1]);
    if (interp_) return (*static_cast<const Pchip*>(interp_.get()))(logr);
    auto it = std::upper_bound(logr_.begin(), logr_.end(), logr);
    size_t i = static_cast<size_t>(it - logr_.begin()) - 1;
    double s = (logg_[i + 1] - logg_[i]) / (logr_[i + 1] - logr_[i]);
    return logg_[i] + s * (logr - logr_[i]);
}

double GrowthFunction::operator()(double r) const {
    if (!(r > 0.0)) throw DomainError("growth function evaluated at r <= 0");
    return std::exp(log_g(std::log(r)));
}

double GrowthFunction::order() const { return rho_; }

std::string GrowthFunction::describe() const {
    std::ostringstream os;
    if (kind_ == Kind::table) {
        os << "table growth function (" << logr_.size() << " samples)";
        return os.str();
    }
    os << "r^" << rho_;
    const char* names[] = {"log r", "log log r", "log log log r"};
    for (size_t k = 0; k < betas_.size(); ++k) {
        if (betas_[k] == 0.0) continue;
        os << " (" << (k < 3 ? names[k] : "iterated log") << ")^" << betas_[k];
    }
    return os.str();
}

json GrowthFunction::to_json() const {
    if (kind_ == Kind::table) {
        json r = json::array(), g = json::array();
        for (size_t i = 0; i < logr_.size(); ++i) {
            r.push_back(std::exp(logr_[i]));
            g.push_back(std::exp(logg_[i]));
        }
        return {{"kind", "table"}, {"r", r}, {"g", g}};
    }
    return {{"kind", "lindelof"}, {"rho", rho_}, {"betas", betas_}, {"r0", r0_}};
}

GrowthFunction growth_from_json(const json& j) {
    if (!j.is_object()) throw InputError("growth function spec must be a JSON object");
    std::string kind = j.value("kind", "lindelof");
    try {
        if (kind == "lindelof") {
            std::vector<double> betas = j.value("betas", std::vector<double>{});
            return GrowthFunction::lindelof(j.at("rho").get<double>(), betas, j.value("r0", 0.0));
        }
        if (kind == "table")
            return GrowthFunction::table(j.at("r").get<std::vector<double>>(),
                                         j.at("g").get<std::vector<double>>());
    } catch (const json::exception& e) {
        throw InputError(std::string("bad growth function spec: ") + e.what());
    }
    throw InputError("growth kind must be \"lindelof\" or \"table\"");
}

GrowthFunction parse_growth(const std::string& spec) {
    std::ifstream in(spec);
    if (in) {
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw InputError("malformed growth JSON in " + spec + ": " + e.what());
        }
        return growth_from_json(j);
    }
    // inline form: rho=2,betas=[-1,0.5],r0=20
    json j = {{"kind", "lindelof"}};
    std::regex kv(R"(\s*(\w+)\s*=\s*(\[[^\]]*\]|[^,]+)\s*,?)");
    auto begin = std::sregex_iterator(spec.begin(), spec.end(), kv);
    bool any = false;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        std::string key = (*it)[1], val = (*it)[2];
        try {
            j[key] = json::parse(val);
        } catch (const json::exception&) {
            throw InputError("cannot parse growth value '" + val + "'");
        }
        any = true;
    }
    if (!any || !j.contains("rho")) throw InputError("growth spec needs rho=..., or a readable file");
    return growth_from_json(j);
}

double g_eval(const GrowthFunction& g, double r) { return g(r); }

double g_inverse(const GrowthFunction& g, double y) {
    if (!(y > 0.0) || !std::isfinite(y)) throw RangeError("g_inverse needs a finite y > 0");
    double lo = 0.0, hi = 0.0;
    auto f = [&](double lr) { return std::log(g(std::exp(lr))); };
    double ly = std::log(y);
    double step = 1.0;
    while (f(lo) > ly) {
        lo -= step;
        step *= 2;
        if (lo < -700.0) throw RangeError("g_inverse: value not bracketable");
    }
    step = 1.0;
    hi = lo + step;
    while (f(hi) < ly) {
        hi += step;
        step *= 2;
        if (hi > 700.0) throw RangeError("g_inverse: value not bracketable");
    }
    for (int it = 0; it < 300; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < ly) lo = mid; else hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) break;
    }
    return std::exp(0.5 * (lo + hi));
}

double orlicz_M(const GrowthFunction& g, double t) {
    if (!(t > 0.0)) throw DomainError("M(t) needs t > 0");
    return g(1.0) / g(1.0 / t);
}

RealSequence rearrange_desc(const RealSequence& s) {
    RealSequence r(s.size());
    std::transform(s.begin(), s.end(), r.begin(), [](double x) { return std::abs(x); });
    std::sort(r.begin(), r.end(), std::greater<double>());
    return r;
}

ExponentEstimate conv_exponent(const RealSequence& s, size_t first_index) {
    if (s.size() < 16) throw LengthError("convergence exponent needs at least 16 values");
    std::vector<double> x, y;
    for (size_t i = s.size() / 2; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) throw InputError("convergence exponent needs positive values");
        x.push_back(std::log(s[i]));
        y.push_back(std::log(static_cast<double>(first_index + i)));
    }
    ExponentEstimate e;
    e.slope = linear_slope(x, y, &e.intercept, &e.residual);
    e.fitted = x.size();
    return e;
}

std::string to_string(Trend t) {
    switch (t) {
        case Trend::bounded: return "bounded";
        case Trend::vanishing: return "vanishing";
        case Trend::divergent: return "divergent";
        case Trend::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

TrendReport classify_trend(const RealSequence& v, const std::vector<double>& index) {
    TrendReport r;
    if (v.size() < 3 || v.size() != index.size()) return r;
    size_t start = v.size() - (v.size() + 2) / 3;
    r.peak = *std::max_element(v.begin(), v.end());
    r.tail_sup = *std::max_element(v.begin() + start, v.end());
    std::vector<double> tail(v.begin() + start, v.end());
    std::vector<double> sorted = tail;
    std::sort(sorted.begin(), sorted.end());
    r.median = sorted[sorted.size() / 2];
    for (double x : v)
        if (!std::isfinite(x)) {
            r.trend = Trend::divergent;
            return r;
        }
    if (r.tail_sup <= 0.0 || r.tail_sup <= r.peak / 10.0) {
        r.trend = Trend::vanishing;
        return r;
    }
    std::vector<double> x, y;
    for (size_t i = start; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) continue;
        x.push_back(std::log(index[i]));
        y.push_back(std::log(v[i]));
    }
    if (x.size() >= 2) {
        r.slope = linear_slope(x, y, nullptr, nullptr);
        if (r.slope < -0.1) { r.trend = Trend::vanishing; return r; }
        if (r.slope > 0.1) { r.trend = Trend::divergent; return r; }
    }
    bool band = r.median > 0.0 && std::all_of(tail.begin(), tail.end(), [&](double q) {
        return q >= r.median / 4.0 && q <= 4.0 * r.median;
    });
    r.trend = band ? Trend::bounded : Trend::inconclusive;
    return r;
}

LimsupReport limsup_ratio(const RealSequence& s, const GrowthFunction& g) {
    LimsupReport rep;
    std::vector<double> idx;
    for (size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0)) throw InputError("limsup ratio needs positive values");
        if (i > 0 && s[i] > s[i - 1]) throw InputError("limsup ratio needs a nonincreasing sequence");
        double n = static_cast<double>(i + 1);
        rep.ratios.push_back(n / g(1.0 / s[i]));
        idx.push_back(n);
    }
    size_t start = s.size() - (s.size() + 2) / 3;
    double m = 0.0;
    for (size_t i = start; i < s.size(); ++i) {
        m = std::max(m, rep.ratios[i]);
        rep.running_max.push_back(m);
    }
    rep.trend = classify_trend(rep.ratios, idx);
    return rep;
}

std::string to_string(SeriesClass c) {
    switch (c) {
        case SeriesClass::converges: return "converges";
        case SeriesClass::diverges: return "diverges";
        case SeriesClass::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

SeriesReport classify_series(const RealSequence& a, const std::vector<double>& index) {
    SeriesReport r;
    double s = 0.0;
    for (double x : a) r.partial_sums.push_back(s += x);
    if (a.size() < 6 || a.size() != index.size()) return r;
    if (!std::isfinite(s)) {
        r.cls = SeriesClass::diverges;
        return r;
    }
    size_t start = a.size() - (a.size() + 2) / 3;
    std::vector<double> R;
    for (size_t i = start; i + 1 < a.size(); ++i) {
        if (a[i + 1] <= 0.0) {
            if (a[i] <= 0.0) continue;  // terms vanished: nothing left to sum
            R.push_back(1e300);
            continue;
        }
        R.push_back(index[i] * (a[i] / a[i + 1] - 1.0));
    }
    if (R.empty()) {
        r.cls = SeriesClass::converges;
        return r;
    }
    std::sort(R.begin(), R.end());
    r.raabe = R[R.size() / 2];
    double nmid = index[start + (a.size() - start) / 2];
    r.bertrand = r.raabe >= 1e300 ? 1e300 : std::log(nmid) * (r.raabe - 1.0);
    // Bertrand's test: > 1 converges, < 1 diverges; a margin absorbs the
    // finite-n offsets of slowly varying factors
    if (r.bertrand >= 1.15) r.cls = SeriesClass::converges;
    else if (r.bertrand <= 0.85) r.cls = SeriesClass::diverges;
    else r.cls = SeriesClass::inconclusive;
    return r;
}

}  // namespace cansys
