// Acceptance runner.  `acceptance k` runs criterion k, `acceptance` runs all of
// them.  Each criterion prints one PASS/FAIL line followed by indented detail;
// the exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cansys/criteria.hpp"
#include "cansys/dyadic.hpp"
#include "cansys/eigen_oracle.hpp"
#include "cansys/gallery.hpp"
#include "cansys/operator_lab.hpp"

using namespace cansys;
using std::numbers::pi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects the sub-checks of one criterion.
struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void check(bool cond, const std::string& what) {
        if (!cond) ok = false;
        detail << "    [" << (cond ? "ok" : "FAILED") << "] " << what << "\n";
    }
};

std::string fmt(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", x);
    return b;
}

RealSequence positives(const SpectrumEstimate& est) {
    RealSequence p;
    for (double z : est.eigenvalues)
        if (z > 0) p.push_back(z);
    return p;
}

// ---------------------------------------------------------------- criteria

Outcome c1() {
    Outcome o;
    auto t0 = Clock::now();
    auto I = make_constant(1, 1, 0, 0.0, pi);
    auto est = eigenvalues(I, I.at(pi), 21.0);
    double worst = 0;
    bool enough = est.eigenvalues.size() >= 40;
    for (size_t i = 0; enough && i < 40; ++i) {
        double k = double(i / 2) + 0.5;
        worst = std::max(worst, std::abs(est.eigenvalues[i] - (i % 2 ? k : -k)));
    }
    double dt = seconds_since(t0);
    o.check(enough, "at least 40 eigenvalues in [-21, 21]: " + std::to_string(est.eigenvalues.size()));
    o.check(enough && worst <= 1e-8, "max |lambda_n - (+-(k+1/2))| over the first 40 = " + fmt(worst) + " <= 1e-8");
    o.check(dt < 5.0, "runtime " + fmt(dt) + " s < 5 s");
    return o;
}

Outcome c2() {
    Outcome o;
    auto t0 = Clock::now();
    for (double L : {1.0, pi, 5.0}) {
        auto I = make_constant(1, 1, 0, 0.0, L);
        auto est = eigenvalues(I, I.at(L), 55.0 * pi / L);
        double r = plus_ratio(est, 50), target = pi / L;
        double rel = std::abs(r / target - 1.0);
        o.check(rel <= 0.02, "L = " + fmt(L) + ": lambda_50^+/50 = " + fmt(r) + ", pi/L = " + fmt(target) +
                                 ", relative error " + fmt(rel) + " <= 0.02");
    }
    double dt = seconds_since(t0);
    o.check(dt < 10.0, "runtime " + fmt(dt) + " s < 10 s");
    return o;
}

Outcome c3() {
    Outcome o;
    struct Case {
        std::string name;
        Hamiltonian H;
        Verdict expect;
    };
    std::vector<Case> cases = {{"diag-exp", make_diag_exp(), Verdict::holds},
                               {"power-log (1.5,0,0)", make_power_log(1.5, 0, 0), Verdict::holds},
                               {"power-log (2,1,0)", make_power_log(2, 1, 0), Verdict::holds},
                               {"power-log (2,0,1)", make_power_log(2, 0, 1), Verdict::holds},
                               {"power-log (2,0,0)", make_power_log(2, 0, 0), Verdict::fails},
                               {"power-log (3,0,0)", make_power_log(3, 0, 0), Verdict::fails}};
    int match = 0;
    for (auto& c : cases) {
        auto v = discreteness(c.H).verdict;
        match += v == c.expect;
        o.check(v == c.expect, c.name + ": discreteness " + to_string(v) + ", expected " + to_string(c.expect));
    }
    o.check(match == 6, std::to_string(match) + "/6 match");
    return o;
}

Outcome c4() {
    Outcome o;
    auto a = bounded_invertibility(make_power_log(2, 0, 0)).verdict;
    auto b = bounded_invertibility(make_power_log(3, 0, 0)).verdict;
    o.check(a == Verdict::holds, "power-log (2,0,0): bounded invertibility " + to_string(a) + ", expected holds");
    o.check(b == Verdict::fails, "power-log (3,0,0): bounded invertibility " + to_string(b) + ", expected fails");
    return o;
}

SpectrumEstimate truncated_spectrum(const Hamiltonian& H) {
    return eigenvalues(H, H.at_gap(std::ldexp(1.0, -12)), 1e4);
}

Outcome c5() {
    Outcome o;
    struct Case {
        double a1, lo, hi;
    };
    for (Case c : {Case{1, 1.75, 2.25}, Case{3, 0.85, 1.2}}) {
        auto t0 = Clock::now();
        auto est = truncated_spectrum(make_power_log(2, c.a1, 0));
        double dt = seconds_since(t0);
        double e = est.exponent.slope;
        std::string name = "power-log (2," + fmt(c.a1) + ",0)";
        o.check(e >= c.lo && e <= c.hi, name + ": exponent " + fmt(e) + " from " +
                                            std::to_string(est.eigenvalues.size()) + " eigenvalues, band [" +
                                            fmt(c.lo) + ", " + fmt(c.hi) + "]");
        o.check(dt < 180.0, name + ": runtime " + fmt(dt) + " s < 180 s");
    }
    return o;
}

Outcome c6() {
    Outcome o;
    auto t0 = Clock::now();
    auto R1 = make_rank_one_power_log(1, 0);
    auto r1 = independence_check(R1, independence_grid(R1, 1024));
    o.check(r1.difference < 0.15, "rank-one alpha1=1: slopes " + fmt(r1.slope_full) + " / " + fmt(r1.slope_diag) +
                                      ", |difference| " + fmt(r1.difference) + " < 0.15");
    auto R5 = make_rank_one_power_log(5, 0);
    auto r5 = independence_check(R5, independence_grid(R5, 1024));
    o.check(r5.difference > 0.5, "rank-one alpha1=5: slopes " + fmt(r5.slope_full) + " / " + fmt(r5.slope_diag) +
                                     ", |difference| " + fmt(r5.difference) + " > 0.5");
    o.check(std::abs(r5.slope_full + 2.0) <= 0.3, "rank-one alpha1=5: full slope " + fmt(r5.slope_full) + " within -2 +- 0.3");
    o.check(std::abs(r5.slope_diag + 1.0) <= 0.3, "rank-one alpha1=5: diagonal slope " + fmt(r5.slope_diag) + " within -1 +- 0.3");
    double dt = seconds_since(t0);
    o.check(dt < 120.0, "runtime " + fmt(dt) + " s < 120 s (M = 1024)");
    return o;
}

Outcome c7() {
    Outcome o;
    auto g = GrowthFunction::lindelof(2);
    int agree = 0, total = 0;
    for (auto& c : registry()) {
        auto H = c.build();
        bool d = discreteness(H).agreement.value();
        bool b = bounded_invertibility(H).agreement.value();
        bool s = summability(H, g).agreement.value();
        ++total;
        agree += d && b && s;
        o.check(d && b && s, c.id + ": discreteness " + (d ? "agree" : "DISAGREE") + ", invertibility " +
                                 (b ? "agree" : "DISAGREE") + ", summability " + (s ? "agree" : "DISAGREE"));
    }
    o.check(total == 8 && agree == 8, std::to_string(agree) + "/" + std::to_string(total) + " families agree");
    return o;
}

Outcome c8() {
    Outcome o;
    auto H = make_diag_exp();
    int N = 20;
    auto g = dyadic_grid(H, N, 8);
    auto K = discretize_KH(H, g);
    auto s = offdiag_block_singulars(K, block_partition(g, 2));
    auto w = rearrange_desc(omega_sequence(H, N));
    double worst = 0;
    for (int n = 0; n < N / 2; ++n) worst = std::max(worst, std::abs(s[n] / (std::sqrt(0.5) * w[n]) - 1.0));
    o.check(worst <= 0.05, "diag-exp, " + std::to_string(N) + " dyadic cells x 8: max relative deviation of the first " +
                               std::to_string(N / 2) + " compressed singular values from 2^{-1/2} omega*_n = " +
                               fmt(worst) + " <= 0.05");
    return o;
}

Outcome c9() {
    Outcome o;
    auto H = make_power_log(2, 1, 0);
    auto g2 = GrowthFunction::lindelof(2), g3 = GrowthFunction::lindelof(3);
    auto l2 = limsup_distribution(H, g2);
    auto l3 = limsup_distribution(H, g3);
    std::string v2 = l2.extra["vanishing"], v3 = l3.extra["vanishing"];
    o.check(l2.verdict == Verdict::holds && v2 == "fails",
            "g = r^2: bounded " + to_string(l2.verdict) + ", vanishing " + v2 + " (expected bounded, non-vanishing)");
    o.check(v3 == "holds", "g = r^3: vanishing " + v3);

    // the oracle trajectory n / g(|lambda_n|) on the eigenvalues of criterion 5
    auto est = truncated_spectrum(H);
    auto rep = counting_report(est, &g2);
    auto oracle_trend = rep.limsup_trend->trend;
    auto dyadic_trend = v2 == "fails" ? Trend::bounded : Trend::vanishing;
    o.check(oracle_trend == dyadic_trend, "oracle trajectory n/|lambda_n|^2 over " +
                                              std::to_string(est.eigenvalues.size()) + " eigenvalues: trend " +
                                              to_string(oracle_trend) + ", criteria: " + to_string(dyadic_trend));
    return o;
}

Outcome c10() {
    Outcome o;
    auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_psd = [&] {
        double b00 = 5 * u(rng), b01 = 5 * u(rng), b10 = 5 * u(rng), b11 = 5 * u(rng);
        if (u(rng) > 0.8) b01 = b11 = 0.0;
        return MatrixValue{b00 * b00 + b01 * b01, b10 * b10 + b11 * b11, b00 * b10 + b01 * b11};
    };
    std::vector<std::pair<std::string, Hamiltonian>> fams;
    for (auto& c : registry()) fams.push_back({c.id, c.build()});
    fams.push_back({"diag-exp", make_diag_exp()});
    fams.push_back({"string-rank-one", make_string_rank_one(1, 0)});

    // PSD
    size_t bad = 0, n = 0;
    for (auto& [id, H] : fams)
        for (int k = 1; k <= 60; ++k, ++n) {
            Point p = H.b_infinite() ? H.at(0.5 * k) : H.at_gap(std::ldexp(1.0, -k));
            bad += !is_psd(eval(H, p));
        }
    o.check(bad == 0, "PSD: " + std::to_string(n - bad) + "/" + std::to_string(n) + " sampled values");

    // sqrt round trip
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        auto m = random_psd();
        auto s = sqrt_of(m);
        double r1 = s.v1 * s.v1 + s.v3 * s.v3, r2 = s.v3 * s.v3 + s.v2 * s.v2, r3 = s.v3 * (s.v1 + s.v2);
        double sc = std::max(1.0, m.trace());
        worst = std::max({worst, std::abs(r1 - m.h1) / sc, std::abs(r2 - m.h2) / sc, std::abs(r3 - m.h3) / sc});
    }
    o.check(worst <= 1e-10, "sqrt round trip on 10000 random PSD matrices: max error " + fmt(worst));

    // rotation group action
    worst = 0;
    for (int i = 0; i < 2000; ++i) {
        auto m = random_psd();
        double a = 3 * u(rng), b = 3 * u(rng);
        auto x = rotate_value(rotate_value(m, a), b), y = rotate_value(m, a + b);
        auto back = rotate_value(rotate_value(m, a), -a);
        double sc = std::max(1.0, m.trace());
        worst = std::max({worst, std::abs(x.h1 - y.h1) / sc, std::abs(x.h2 - y.h2) / sc, std::abs(x.h3 - y.h3) / sc,
                          std::abs(back.h1 - m.h1) / sc, std::abs(back.h3 - m.h3) / sc,
                          std::abs(x.trace() - m.trace()) / sc, std::abs(x.det() - m.det()) / (sc * sc)});
    }
    o.check(worst <= 1e-12, "rotation group action, inverse, trace and det on 2000 samples: max error " + fmt(worst));

    // dyadic halving
    worst = 0;
    for (auto& [id, H] : fams) {
        if (!H.normalized()) continue;
        double m = tail_h1(H, H.start());
        auto c = dyadic_points(H, 40);
        for (int k = 1; k <= 40; ++k) worst = std::max(worst, std::abs(tail_h1(H, c[k]) / std::ldexp(m, -k) - 1.0));
    }
    o.check(worst <= 1e-10, "dyadic halving to depth 40: max relative error " + fmt(worst));

    // rearrangement
    bool rearr = true;
    std::normal_distribution<double> nd;
    for (int t = 0; t < 100; ++t) {
        RealSequence s(200);
        for (auto& x : s) x = nd(rng);
        auto r = rearrange_desc(s);
        auto p = s;
        std::shuffle(p.begin(), p.end(), rng);
        rearr &= rearrange_desc(r) == r && rearrange_desc(p) == r && std::is_sorted(r.rbegin(), r.rend());
    }
    o.check(rearr, "rearrangement idempotent and permutation invariant on 100 sequences");

    // SVD: rank one and block doubling
    {
        DenseMatrix A(12, 9);
        std::vector<double> x(12), y(9);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        double nx = 0, ny = 0;
        for (size_t i = 0; i < 12; ++i) nx += x[i] * x[i];
        for (size_t j = 0; j < 9; ++j) ny += y[j] * y[j];
        for (size_t i = 0; i < 12; ++i)
            for (size_t j = 0; j < 9; ++j) A(i, j) = x[i] * y[j];
        auto s = singular_values(A);
        double err = std::abs(s[0] / std::sqrt(nx * ny) - 1.0);
        for (size_t k = 1; k < s.size(); ++k) err = std::max(err, s[k] / s[0]);
        o.check(err <= 1e-12, "SVD rank one: sigma_1 = |x||y|, rest zero, max error " + fmt(err));

        DenseMatrix B(10, 7), D(17, 17);
        for (auto& v : B.data) v = u(rng);
        for (size_t i = 0; i < 10; ++i)
            for (size_t j = 0; j < 7; ++j) D(7 + i, j) = D(j, 7 + i) = B(i, j);
        auto sb = singular_values(B), sd = singular_values(D);
        double derr = 0;
        for (size_t k = 0; k < sb.size(); ++k)
            derr = std::max({derr, std::abs(sd[2 * k] - sb[k]), std::abs(sd[2 * k + 1] - sb[k])});
        for (size_t k = 2 * sb.size(); k < sd.size(); ++k) derr = std::max(derr, sd[k]);
        o.check(derr <= 1e-12 * sb[0], "SVD block doubling [[0,B^T],[B,0]]: max error " + fmt(derr));
    }

    // monodromy determinant
    worst = 0;
    for (auto& [id, H] : fams) {
        if (!H.normalized()) continue;
        auto c = dyadic_points(H, 12)[12];
        auto chain = truncate(H, c, kDefaultMonodromyCells);
        for (double z : {0.3, 5.0, 50.0}) worst = std::max(worst, std::abs(monodromy(chain, z).det() - 1.0));
    }
    o.check(worst <= 1e-9, "monodromy determinant at 2048 cells: max |det - 1| = " + fmt(worst));

    double dt = seconds_since(t0);
    o.check(dt < 300.0, "runtime " + fmt(dt) + " s < 300 s");
    return o;
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria = {
    {"closed-form spectrum of H = I on [0, pi]", c1},
    {"Krein-de Branges density lambda_n^+/n -> pi/L", c2},
    {"discreteness classification", c3},
    {"bounded invertibility", c4},
    {"convergence exponents at c = 1 - 2^-12, R = 1e4", c5},
    {"independence of the decay slope", c6},
    {"sequential and continuous methods agree", c7},
    {"superdiagonal compression 2^{-1/2} omega*", c8},
    {"limsup test", c9},
    {"property suites", c10},
};

bool run(size_t k) {
    auto& [name, fn] = kCriteria[k - 1];
    auto t0 = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s c%zu: %s (%.1f s)\n%s", o.ok ? "PASS" : "FAIL", k, name.c_str(), seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
    return o.ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<size_t> which;
    for (int i = 1; i < argc; ++i) {
        long k = std::strtol(argv[i], nullptr, 10);
        if (k < 1 || k > long(kCriteria.size())) {
            std::fprintf(stderr, "usage: %s [criterion 1..%zu ...]\n", argv[0], kCriteria.size());
            return 2;
        }
        which.push_back(size_t(k));
    }
    if (which.empty())
        for (size_t k = 1; k <= kCriteria.size(); ++k) which.push_back(k);
    bool all = true;
    for (size_t k : which) all &= run(k);
    return all ? 0 : 1;
}
