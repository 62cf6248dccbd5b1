#include "cansys/criteria.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "cansys/dyadic.hpp"
#include "cansys/errors.hpp"

namespace cansys {

using nlohmann::json;

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::fails: return "fails";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::continuous: return "continuous";
        case Method::sequential: return "sequential";
        case Method::both: return "both";
    }
    return "both";
}

namespace {

json traj_json(const Trajectory& t) {
    json a = json::array();
    for (auto& [x, v] : t) a.push_back({x, v});
    return a;
}

std::vector<double> iota_n(size_t n) {
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) r[i] = static_cast<double>(i + 1);
    return r;
}

void require_order(const GrowthFunction& g) {
    if (!(g.order() > 1.0))
        throw UnsupportedOrderError("growth functions of order <= 1 are not supported (order " +
                                    std::to_string(g.order()) + ")");
}

struct Scales {
    std::vector<Point> c;
    RealSequence P, w2;
    std::vector<double> idx;
    TrendReport tP, tW;
};

Scales scan(const Hamiltonian& H, int depth) {
    Scales s;
    auto prof = dyadic_profile(H, depth);
    s.c = prof.points;
    for (int n = 1; n <= depth; ++n) {
        s.P.push_back(product_P(H, s.c[n]));
        s.w2.push_back(prof.omega[n - 1] * prof.omega[n - 1]);
    }
    s.idx = iota_n(depth);
    s.tP = classify_trend(s.P, s.idx);
    s.tW = classify_trend(s.w2, s.idx);
    return s;
}

void fill(CriterionReport& r, const Scales& s) {
    for (size_t i = 0; i < s.P.size(); ++i) {
        r.trajectory.push_back({s.c[i + 1].t, s.P[i]});
        r.sequential_trajectory.push_back({s.idx[i], s.w2[i]});
    }
    r.continuous_class = to_string(s.tP.trend);
    r.sequential_class = to_string(s.tW.trend);
    r.extra["continuous_slope"] = s.tP.slope;
    r.extra["sequential_slope"] = s.tW.slope;
}

}  // namespace

json CriterionReport::to_json() const {
    json j = {{"criterion", criterion},
              {"verdict", to_string(verdict)},
              {"method", to_string(method)},
              {"trajectory", traj_json(trajectory)}};
    if (!sequential_trajectory.empty()) j["sequential_trajectory"] = traj_json(sequential_trajectory);
    j["agreement"] = agreement ? json(*agreement) : json(nullptr);
    if (!continuous_class.empty()) j["continuous_class"] = continuous_class;
    if (!sequential_class.empty()) j["sequential_class"] = sequential_class;
    if (!notes.empty()) j["notes"] = notes;
    if (verdict == Verdict::inconclusive) j["warning"] = "verdict is inconclusive at this depth";
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

double product_P(const Hamiltonian& H, const Point& t) {
    double tail = tail_h1(H, t);
    if (tail == 0.0) return 0.0;
    return tail * head_integral(H, 2, t);
}

CriterionReport discreteness(const Hamiltonian& H, int depth) {
    CriterionReport r;
    r.criterion = "discreteness";
    auto s = scan(H, depth);
    fill(r, s);
    bool vc = s.tP.trend == Trend::vanishing, vs = s.tW.trend == Trend::vanishing;
    bool known = s.tP.trend != Trend::inconclusive && s.tW.trend != Trend::inconclusive;
    r.agreement = known && vc == vs;
    if (!*r.agreement) r.verdict = Verdict::inconclusive;
    else r.verdict = vc ? Verdict::holds : Verdict::fails;
    return r;
}

CriterionReport bounded_invertibility(const Hamiltonian& H, int depth) {
    CriterionReport r;
    r.criterion = "bounded_invertibility";
    auto s = scan(H, depth);
    fill(r, s);
    auto side = [](Trend t) { return t == Trend::divergent; };
    bool known = s.tP.trend != Trend::inconclusive && s.tW.trend != Trend::inconclusive;
    r.agreement = known && side(s.tP.trend) == side(s.tW.trend);
    if (!*r.agreement) r.verdict = Verdict::inconclusive;
    else r.verdict = side(s.tP.trend) ? Verdict::fails : Verdict::holds;
    double sup = *std::max_element(s.w2.begin(), s.w2.end());
    r.extra["sup_omega"] = std::sqrt(sup);
    return r;
}

CriterionReport summability(const Hamiltonian& H, const GrowthFunction& g, int depth) {
    require_order(g);
    CriterionReport r;
    r.criterion = "summability";
    auto prof = dyadic_profile(H, depth);
    const double mass = prof.mass, ln2 = std::log(2.0);
    auto inv_g = [&](double P) {
        // [g(P^{-1/2})]^{-1}; P = 0 means an infinite argument
        if (!(P > 0.0)) return 0.0;
        return 1.0 / g(1.0 / std::sqrt(P));
    };
    RealSequence seq, cont;
    for (int n = 1; n <= depth; ++n) {
        double w = prof.omega[n - 1];
        seq.push_back(w > 0.0 ? 1.0 / g(1.0 / w) : 0.0);
        // cell J_n is s in [n-1, n] with u = 2^{-s}; h1 dt / int_t^b h1 = ln2 ds
        auto f = [&](double sv) {
            double tau = mass * std::exp2(-sv);
            Point p = invert_tail(H, tau);
            return inv_g(tau * head_integral(H, 2, p)) * ln2;
        };
        cont.push_back(boost::math::quadrature::gauss<double, 8>::integrate(f, n - 1.0, double(n)));
    }
    auto idx = iota_n(depth);
    auto sc = classify_series(cont, idx), ss = classify_series(seq, idx);
    for (int n = 1; n <= depth; ++n) {
        r.trajectory.push_back({prof.points[n].t, sc.partial_sums[n - 1]});
        r.sequential_trajectory.push_back({double(n), ss.partial_sums[n - 1]});
    }
    r.continuous_class = to_string(sc.cls);
    r.sequential_class = to_string(ss.cls);
    r.agreement = sc.cls == ss.cls;
    if (sc.cls != ss.cls || sc.cls == SeriesClass::inconclusive) r.verdict = Verdict::inconclusive;
    else r.verdict = sc.cls == SeriesClass::converges ? Verdict::holds : Verdict::fails;
    r.extra["growth"] = g.describe();
    r.extra["continuous_bertrand"] = sc.bertrand;
    r.extra["sequential_bertrand"] = ss.bertrand;
    if (g.is_table()) r.notes.push_back("approximate: table growth function");
    return r;
}

CriterionReport limsup_distribution(const Hamiltonian& H, const GrowthFunction& g, int depth) {
    require_order(g);
    CriterionReport r;
    r.criterion = "limsup_distribution";
    r.method = Method::sequential;
    auto raw = omega_sequence(H, depth);
    RealSequence w2;
    for (double w : raw) w2.push_back(w * w);
    Trend decay = classify_trend(w2, iota_n(depth)).trend;
    auto w = rearrange_desc(raw);
    // zero weights (h2 vanishing on a cell) carry no information for the ratio
    while (!w.empty() && !(w.back() > 0.0)) w.pop_back();
    if (w.size() < 3) throw NumericalError("too few nonzero weights for the limsup ratio");
    auto lr = limsup_ratio(w, g);
    for (size_t i = 0; i < lr.ratios.size(); ++i) r.trajectory.push_back({double(i + 1), lr.ratios[i]});
    Trend t = lr.trend.trend;
    if (decay == Trend::bounded || decay == Trend::divergent) {
        // omega_n does not tend to 0: omega*_n stays bounded below and n/g(1/omega*_n)
        // grows without bound, which a finite rearranged profile cannot show
        t = Trend::divergent;
        r.notes.push_back("omega_n does not vanish (spectrum not discrete); ratio unbounded");
    }
    r.sequential_class = to_string(t);
    if (t == Trend::inconclusive) r.verdict = Verdict::inconclusive;
    else r.verdict = t == Trend::divergent ? Verdict::fails : Verdict::holds;
    Verdict vanish = t == Trend::inconclusive ? Verdict::inconclusive
                     : t == Trend::vanishing  ? Verdict::holds
                                              : Verdict::fails;
    r.extra["trend"] = to_string(t);
    r.extra["bounded"] = to_string(r.verdict);
    r.extra["vanishing"] = to_string(vanish);
    r.extra["running_max"] = lr.running_max;
    r.extra["slope"] = lr.trend.slope;
    r.extra["growth"] = g.describe();
    if (g.is_table()) r.notes.push_back("approximate: table growth function");
    return r;
}

// ------------------------------------------------------------------ Kac

namespace {

// int over an interval of length L of e^{k s} ds, s from 0; L may be inf
double expint(double k, double L) {
    if (std::isinf(L)) return k < 0.0 ? -1.0 / k : kInf;
    if (k == 0.0) return L;
    return std::expm1(k * L) / k;
}

double kac_F_table(const TableData& d, double t, double lambda) {
    double m = 0.0, head = 0.0, tail = 0.0;
    for (size_t i = 0; i < d.cells.size(); ++i) {
        const auto& v = d.cells[i];
        double s0 = d.t[i], L = d.len[i], s1 = s0 + L;
        double k = 2.0 * lambda * v.h3;
        if (s1 <= t) {
            if (v.h2 != 0.0) head += v.h2 * std::exp(-2.0 * lambda * m) * expint(-k, L);
        } else if (s0 >= t) {
            if (v.h1 != 0.0) tail += v.h1 * std::exp(2.0 * lambda * m) * expint(k, L);
        } else {
            double a = t - s0;
            if (v.h2 != 0.0) head += v.h2 * std::exp(-2.0 * lambda * m) * expint(-k, a);
            double mt = m + v.h3 * a;
            if (v.h1 != 0.0) tail += v.h1 * std::exp(2.0 * lambda * mt) * expint(k, L - a);
        }
        if (std::isfinite(L)) m += v.h3 * L;
    }
    if (head == 0.0) return 0.0;
    return tail * head;
}

}  // namespace

double kac_F(const Hamiltonian& H, double t, double lambda) {
    if (!(t >= H.a() && t <= H.b())) throw DomainError("t outside [a,b]");
    return kac_F(H, H.at(t), lambda);
}

double kac_F(const Hamiltonian& H, const Point& p, double lambda) {
    if (lambda == 0.0 || H.source().diagonal()) {
        double tail = H.source().tail(Entry::H1, p);
        double head = head_integral(H, 2, p);
        return head == 0.0 ? 0.0 : tail * head;
    }
    if (auto* d = H.table()) return kac_F_table(*d, p.t, lambda);
    Point end = H.b_infinite() ? Point{kInf, kInf} : Point{H.b(), 0.0};
    auto m3 = [&](const Point& q) { return head_integral(H, 3, q); };
    double tail = integrate(H, p, end, [&](const Point& q) {
        // the endpoint b itself has measure zero; m3 may be infinite there
        if (std::isinf(q.t) || q.gap <= 0.0) return 0.0;
        return eval(H, q).h1 * std::exp(2.0 * lambda * m3(q));
    }, 1e-8);
    double head = integrate(H, H.start(), p, [&](const Point& q) {
        return eval(H, q).h2 * std::exp(-2.0 * lambda * m3(q));
    }, 1e-8);
    return head == 0.0 ? 0.0 : tail * head;
}

std::string to_string(KacMembership k) {
    switch (k) {
        case KacMembership::in_A: return "A_K+";
        case KacMembership::in_B: return "B_K+";
        case KacMembership::neither: return "neither";
        case KacMembership::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

json KacReport::to_json() const {
    return {{"membership", to_string(membership)}, {"threshold", threshold},
            {"max_A", max_A},   {"max_B", max_B},
            {"trajectory_A", traj_json(trajectory_A)}, {"trajectory_B", traj_json(trajectory_B)}};
}

KacReport kac_membership(const Hamiltonian& H, double lambda, double K, int depth) {
    if (lambda == 0.0) throw DomainError("Kac membership needs lambda != 0");
    if (!(K > 0.0)) throw DomainError("Kac membership needs K > 0");
    KacReport rep;
    rep.threshold = K / (lambda * lambda);
    Hamiltonian Hn = H.is_table() ? H : reparametrize_trace(H, 4096, depth + 8);
    const TableData& d = *Hn.table();
    std::vector<double> bp = d.t;
    std::vector<MatrixValue> sw;
    for (auto& c : d.cells) sw.push_back({c.h2, c.h1, -c.h3});
    Hamiltonian Hs = make_table(bp, sw);

    auto final_max = [&](const Hamiltonian& X, Trajectory& tr) {
        std::vector<Point> c;
        try {
            c = dyadic_points(X, depth);
        } catch (const PreconditionError&) {
            return kInf;
        }
        double m = 0.0;
        int start = depth - (depth + 2) / 3 + 1;
        for (int n = 1; n <= depth; ++n) {
            double F = kac_F(X, c[n], lambda);
            tr.push_back({c[n].t, F});
            if (n >= start) m = std::max(m, F);
        }
        return m;
    };
    rep.max_A = final_max(Hn, rep.trajectory_A);
    rep.max_B = final_max(Hs, rep.trajectory_B);
    auto near = [&](double m) { return std::abs(m / rep.threshold - 1.0) < 0.1; };
    bool inA = rep.max_A <= rep.threshold, inB = rep.max_B <= rep.threshold;
    if (inA && !near(rep.max_A)) rep.membership = KacMembership::in_A;
    else if (inB && !near(rep.max_B)) rep.membership = KacMembership::in_B;
    else if (near(rep.max_A) || near(rep.max_B)) rep.membership = KacMembership::inconclusive;
    else rep.membership = KacMembership::neither;
    return rep;
}

}  // namespace cansys
