#include "cansys/gallery.hpp"

#include <cmath>

#include "cansys/criteria.hpp"
#include "cansys/dyadic.hpp"
#include "cansys/eigen_oracle.hpp"
#include "cansys/errors.hpp"
#include "cansys/operator_lab.hpp"
#include "quad.hpp"

namespace cansys {

using nlohmann::json;

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::oracle: return "oracle";
        case Estimator::dyadic: return "dyadic";
        case Estimator::operator_slope: return "operator";
    }
    return "oracle";
}

json ExampleCase::expected_json() const {
    json j = {{"family", family}, {"params", params}, {"basis", basis}, {"note", note}};
    j["discrete"] = discrete ? json(*discrete) : json(nullptr);
    j["invertible"] = invertible ? json(*invertible) : json(nullptr);
    if (std::isinf(exponent)) j["exponent"] = "inf";
    else if (exponent > 0) j["exponent"] = exponent;
    json checks = json::array();
    for (auto& c : exponent_checks) {
        json k = {{"estimator", to_string(c.estimator)}};
        if (c.diverges) k["rule"] = "estimate > 4 and increasing with depth";
        else k["band"] = {c.lo, c.hi};
        checks.push_back(k);
    }
    j["exponent_checks"] = checks;
    if (limsup_growth) j["limsup"] = {{"growth", limsup_growth->describe()}, {"class", "bounded, non-vanishing"}};
    if (agree_below) j["slope_difference_below"] = *agree_below;
    if (split_above) j["slope_difference_above"] = *split_above;
    return j;
}

namespace {

std::vector<ExampleCase> make_registry() {
    auto r2 = GrowthFunction::lindelof(2.0);
    auto pl = [](double a, double a1, double a2) {
        return [=] { return make_power_log(a, a1, a2); };
    };
    auto band = [](Estimator e, double lo, double hi) { return ExponentCheck{e, lo, hi, false}; };
    std::vector<ExampleCase> v;
    {
        ExampleCase c;
        c.id = "power-log-3-0-0";
        c.family = "power-log";
        c.params = {{"alpha", 3}, {"alpha1", 0}, {"alpha2", 0}};
        c.build = pl(3, 0, 0);
        c.discrete = false;
        c.invertible = false;
        c.note = "omega_n grows like 2^{n/2}; 0 lies in the essential spectrum";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "power-log-1.5-0-0";
        c.family = "power-log";
        c.params = {{"alpha", 1.5}, {"alpha1", 0}, {"alpha2", 0}};
        c.build = pl(1.5, 0, 0);
        c.discrete = true;
        c.invertible = true;
        c.exponent = 1;
        c.exponent_checks = {band(Estimator::oracle, 0.85, 1.2)};
        c.note = "sqrt(det H) integrable: finite exponential type, exponent 1";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "power-log-2-0-0";
        c.family = "power-log";
        c.params = {{"alpha", 2}, {"alpha1", 0}, {"alpha2", 0}};
        c.build = pl(2, 0, 0);
        c.discrete = false;
        c.invertible = true;
        c.note = "omega_n of order 1: not discrete, boundedly invertible";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "power-log-2-0-1";
        c.family = "power-log";
        c.params = {{"alpha", 2}, {"alpha1", 0}, {"alpha2", 1}};
        c.build = pl(2, 0, 1);
        c.discrete = true;
        c.invertible = true;
        c.exponent = kInf;
        c.exponent_checks = {ExponentCheck{Estimator::dyadic, 0, 0, true}};
        c.note = "omega_n decays like (log n)^{-1/2}: exponent estimate diverges";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "power-log-2-1-0";
        c.family = "power-log";
        c.params = {{"alpha", 2}, {"alpha1", 1}, {"alpha2", 0}};
        c.build = pl(2, 1, 0);
        c.discrete = true;
        c.invertible = true;
        c.exponent = 2;
        c.exponent_checks = {band(Estimator::oracle, 1.75, 2.25), band(Estimator::dyadic, 1.75, 2.25)};
        c.limsup_growth = r2;
        c.note = "exponent 2/alpha1 = 2";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "power-log-2-3-0";
        c.family = "power-log";
        c.params = {{"alpha", 2}, {"alpha1", 3}, {"alpha2", 0}};
        c.build = pl(2, 3, 0);
        c.discrete = true;
        c.invertible = true;
        c.exponent = 1;
        c.exponent_checks = {band(Estimator::oracle, 0.85, 1.2)};
        c.note = "alpha1 > 2: exponent 1";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "rank-one-1-0";
        c.family = "rank-one-power-log";
        c.params = {{"alpha1", 1}, {"alpha2", 0}};
        c.build = [] { return make_rank_one_power_log(1, 0); };
        c.discrete = true;
        c.invertible = true;
        c.exponent = 2;
        c.exponent_checks = {band(Estimator::operator_slope, 1.75, 2.25), band(Estimator::dyadic, 1.75, 2.25)};
        c.limsup_growth = r2;
        c.agree_below = 0.15;
        c.note = "exponent 2 >= 1: same exponent as the diagonal part";
        c.basis = "analytic";
        v.push_back(c);
    }
    {
        ExampleCase c;
        c.id = "rank-one-5-0";
        c.family = "rank-one-power-log";
        c.params = {{"alpha1", 5}, {"alpha2", 0}};
        c.build = [] { return make_rank_one_power_log(5, 0); };
        c.discrete = true;
        c.invertible = true;
        c.exponent = 0.5;
        c.exponent_checks = {band(Estimator::oracle, 0.4, 0.6), band(Estimator::operator_slope, 0.4, 0.6)};
        c.split_above = 0.5;
        c.note = "exponent 1/2, while the diagonal part has exponent 1";
        c.basis = "analytic";
        v.push_back(c);
    }
    return v;
}

}  // namespace

const std::vector<ExampleCase>& registry() {
    static const std::vector<ExampleCase> r = make_registry();
    return r;
}

const ExampleCase& registry_case(const std::string& id) {
    for (auto& c : registry())
        if (c.id == id) return c;
    throw InputError("unknown gallery case '" + id + "'");
}

// ----------------------------------------------------------------- regvar

json RegvarReport::to_json() const {
    return {{"ratios", ratios}, {"min", min}, {"max", max},
            {"band", {band_lo, band_hi}}, {"within_band", within_band}};
}

RegvarReport regvar_check(const std::function<double(const Point&)>& phi, double rho, int N) {
    if (N < 4) throw InputError("regvar_check needs N >= 4");
    RegvarReport r;
    for (int n = 1; n <= N; ++n) {
        // J_n = [1 - 2^{1-n}, 1 - 2^{-n}]; integrate phi^2 in s = log(gap)
        double lo = std::ldexp(1.0, -n), hi = std::ldexp(1.0, 1 - n);
        auto f = [&](double s) {
            double g = std::exp(s);
            double p = phi(Point{1.0 - g, g});
            return p * p * g;
        };
        double m2 = detail::gk(f, std::log(lo), std::log(hi), 1e-12);
        double omega = std::sqrt(std::ldexp(m2, -n));
        double ref = lo * phi(Point{1.0 - lo, lo});
        r.ratios.push_back(omega / ref);
    }
    r.min = *std::min_element(r.ratios.begin() + 3, r.ratios.end());
    r.max = *std::max_element(r.ratios.begin() + 3, r.ratios.end());
    double w = std::pow(4.0, std::max(1.0, std::abs(rho)));
    r.band_lo = 1.0 / w;
    r.band_hi = w;
    r.within_band = r.min >= r.band_lo && r.max <= r.band_hi;
    return r;
}

// ---------------------------------------------------------------- run_all

CaseResult run_case(const ExampleCase& ec, const GalleryConfig& cfg) {
    CaseResult res;
    res.id = ec.id;
    res.expected = ec.expected_json();
    json& obs = res.observed;
    auto fail = [&](const std::string& what) { res.failures.push_back(what); };
    auto guard = [&](const std::string& stage, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            fail(stage + ": " + e.what());
            obs[stage + "_error"] = e.what();
        }
    };
    Hamiltonian H;
    guard("build", [&] { H = ec.build(); });
    if (!res.failures.empty()) return res;

    guard("criteria", [&] {
        auto d = discreteness(H, cfg.depth);
        auto b = bounded_invertibility(H, cfg.depth);
        auto s = summability(H, GrowthFunction::lindelof(2.0), cfg.depth);
        obs["discreteness"] = to_string(d.verdict);
        obs["bounded_invertibility"] = to_string(b.verdict);
        obs["summability_r2"] = to_string(s.verdict);
        obs["agreement"] = {{"discreteness", *d.agreement},
                            {"bounded_invertibility", *b.agreement},
                            {"summability", *s.agreement}};
        if (ec.discrete && d.verdict != (*ec.discrete ? Verdict::holds : Verdict::fails))
            fail("discreteness verdict " + to_string(d.verdict));
        if (ec.invertible && b.verdict != (*ec.invertible ? Verdict::holds : Verdict::fails))
            fail("bounded invertibility verdict " + to_string(b.verdict));
    });
    if (ec.limsup_growth) {
        guard("limsup", [&] {
            auto l = limsup_distribution(H, *ec.limsup_growth, cfg.depth);
            obs["limsup"] = {{"bounded", to_string(l.verdict)}, {"vanishing", l.extra["vanishing"]}};
            if (l.verdict != Verdict::holds || l.extra["vanishing"] != "fails")
                fail("limsup not bounded and non-vanishing");
        });
    }

    std::optional<IndependenceReport> ind;
    auto need_operator = [&] {
        if (!ind) ind = independence_check(H, independence_grid(H, cfg.grid));
        return *ind;
    };
    json ex = json::array();
    for (auto& chk : ec.exponent_checks) {
        json e = {{"estimator", to_string(chk.estimator)}};
        guard("exponent_" + to_string(chk.estimator), [&] {
            if (chk.diverges) {
                double e1 = omega_exponent(H, cfg.depth).slope;
                double e2 = omega_exponent(H, 2 * cfg.depth).slope;
                e["estimates"] = {{"depth", cfg.depth}, {"value", e1}, {"depth2", 2 * cfg.depth}, {"value2", e2}};
                bool ok = e1 > 4.0 && e2 > e1;
                e["pass"] = ok;
                if (!ok) fail("dyadic exponent does not diverge");
                return;
            }
            double val = 0;
            if (chk.estimator == Estimator::oracle) {
                auto est = eigenvalues(H, H.at_gap(std::ldexp(1.0, -cfg.truncation)), cfg.window);
                if (est.eigenvalues.size() < 16) throw LengthError("fewer than 16 eigenvalues in the window");
                val = est.exponent.slope;
                e["eigenvalues"] = est.eigenvalues.size();
                e["residual"] = est.exponent.residual;
            } else if (chk.estimator == Estimator::dyadic) {
                val = omega_exponent(H, cfg.depth).slope;
            } else {
                auto r = need_operator();
                val = -1.0 / r.slope_full;
                e["slope"] = r.slope_full;
            }
            e["value"] = val;
            bool ok = val >= chk.lo && val <= chk.hi;
            e["pass"] = ok;
            if (!ok)
                fail(to_string(chk.estimator) + " exponent " + std::to_string(val) + " outside [" +
                     std::to_string(chk.lo) + ", " + std::to_string(chk.hi) + "]");
        });
        ex.push_back(e);
    }
    obs["exponents"] = ex;
    if (ec.agree_below || ec.split_above) {
        guard("independence", [&] {
            auto r = need_operator();
            obs["independence"] = {{"slope_full", r.slope_full}, {"slope_diag", r.slope_diag},
                                   {"difference", r.difference}};
            if (ec.agree_below && !(r.difference < *ec.agree_below)) fail("slopes do not agree");
            if (ec.split_above && !(r.difference > *ec.split_above)) fail("slopes do not split");
        });
    }
    res.pass = res.failures.empty();
    if (!res.pass) obs["failures"] = res.failures;
    return res;
}

std::vector<CaseResult> run_all(const GalleryConfig& cfg) {
    std::vector<CaseResult> out;
    for (auto& c : registry()) out.push_back(run_case(c, cfg));
    return out;
}

json gallery_json(const std::vector<CaseResult>& results) {
    json a = json::array();
    for (auto& r : results)
        a.push_back({{"case", r.id}, {"expected", r.expected}, {"observed", r.observed}, {"pass", r.pass}});
    return a;
}

}  // namespace cansys
