#include <algorithm>
#include <cmath>
#include <numbers>

#include "cansys/criteria.hpp"
#include "cansys/dyadic.hpp"
#include "cansys/eigen_oracle.hpp"
#include "cansys/errors.hpp"
#include "doctest.h"

using namespace cansys;
using std::numbers::pi;

namespace {
void check_matrix(const TransferMatrix& T, double a, double b, double c, double d, double tol = 1e-14) {
    CHECK(std::abs(T.m[0][0] - a) <= tol);
    CHECK(std::abs(T.m[0][1] - b) <= tol);
    CHECK(std::abs(T.m[1][0] - c) <= tol);
    CHECK(std::abs(T.m[1][1] - d) <= tol);
}
}  // namespace

TEST_CASE("transfer_matrix closed forms") {
    for (double zl : {0.3, 1.7, -2.2}) {
        auto R = transfer_matrix({1, 1, 0}, 1.0, zl);
        check_matrix(R, std::cos(zl), -std::sin(zl), std::sin(zl), std::cos(zl));
        auto N = transfer_matrix({1, 0, 0}, 2.0, zl / 2.0);
        check_matrix(N, 1, 0, zl, 1);
        auto D = transfer_matrix({4, 1, 0}, 1.0, zl);
        double c = std::cos(2 * zl), s = std::sin(2 * zl) / 2;
        check_matrix(D, c, -s, 4 * s, c);
        CHECK(R.det() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(D.det() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(transfer_matrix({2, 3, -1.5}, 0.7, zl).det() == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("monodromy") {
    auto one = make_table({0.0, 0.8}, {{2, 1, 0.5}});
    auto W = monodromy(one, one.at(0.8), 1.3);
    auto T = transfer_matrix({2, 1, 0.5}, 0.8, 1.3);
    check_matrix(W, T.m[0][0], T.m[0][1], T.m[1][0], T.m[1][1], 0.0);

    for (auto H : {make_power_log(2, 1, 0), make_rank_one_power_log(1, 0), make_diag_exp()}) {
        auto c = dyadic_points(H, 12)[12];
        check_matrix(monodromy(H, c, 0.0), 1, 0, 0, 1, 0.0);
        for (double z : {0.5, 7.0, 60.0}) {
            CAPTURE(z);
            CHECK(std::abs(monodromy(H, c, z, 2048).det() - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("char_value") {
    auto I = make_constant(1, 1, 0, 0.0, 5.0);
    for (double L : {1.0, pi, 4.5})
        for (double z : {0.1, 0.9, 3.3}) CHECK(char_value(I, I.at(L), z) == doctest::Approx(std::cos(z * L)).epsilon(1e-12));
    CHECK(char_value(I, I.at(pi), 0.0) == 1.0);
    auto E = make_diag_exp();
    CHECK(char_value(E, E.at(10.0), 0.0) == 1.0);
    CHECK(char_value(I, I.at(pi), 0.4) > 0.0);
    CHECK(char_value(I, I.at(pi), 0.6) < 0.0);
}

TEST_CASE("eigenvalues of H = I on [0, pi]") {
    auto I = make_constant(1, 1, 0, 0.0, pi);
    auto est = eigenvalues(I, I.at(pi), 10.0);
    REQUIRE(est.eigenvalues.size() == 20);
    for (size_t i = 0; i < 20; ++i) {
        double k = double(i / 2) + 0.5;
        double expect = (i % 2 == 0 ? -k : k);
        CHECK(std::abs(est.eigenvalues[i] - expect) <= 1e-9);
    }
    CHECK(est.tangencies.empty());
    CHECK(est.sqrt_det_integral == doctest::Approx(pi).epsilon(1e-14));
    CHECK_THROWS_AS(eigenvalues(I, I.at(pi), 0.0), DomainError);
    CHECK_THROWS_AS(eigenvalues(I, I.at(pi), 1e12), NumericalError);
}

TEST_CASE("Krein-de Branges density on H = I") {
    for (double L : {1.0, pi, 5.0}) {
        auto I = make_constant(1, 1, 0, 0.0, L);
        auto est = eigenvalues(I, I.at(L), 60.0 * pi / L);
        CAPTURE(L);
        CHECK(plus_ratio(est, 50) == doctest::Approx(pi / L).epsilon(0.02));
        auto rep = counting_report(est);
        REQUIRE(rep.kdb_density.has_value());
        CHECK(*rep.kdb_density == doctest::Approx(pi / L).epsilon(1e-12));
        CHECK(rep.plus_tail_mean == doctest::Approx(pi / L).epsilon(0.02));
        CHECK(rep.minus_tail_mean == doctest::Approx(pi / L).epsilon(0.02));
        CHECK(rep.flags.empty());
    }
}

TEST_CASE("counting_report") {
    auto R = make_rank_one_power_log(1, 0);
    auto est = eigenvalues(R, dyadic_points(R, 10)[10], 200.0);
    REQUIRE(est.eigenvalues.size() >= 16);
    CHECK(est.sqrt_det_integral <= 1e-6);
    auto rep = counting_report(est);
    CHECK_FALSE(rep.kdb_density.has_value());
    CHECK(std::find(rep.flags.begin(), rep.flags.end(), "det H vanishes: density check skipped") != rep.flags.end());

    auto I = make_constant(1, 1, 0, 0.0, pi);
    auto small = eigenvalues(I, I.at(pi), 7.0);
    CHECK(small.eigenvalues.size() == 14);
    CHECK_THROWS_AS(counting_report(small), LengthError);

    // with a growth function: n / g(|lambda_n|) for g = r^2 on the +-(k+1/2) spectrum vanishes
    auto big = eigenvalues(I, I.at(pi), 40.0);
    auto g2 = GrowthFunction::lindelof(2);
    auto rg = counting_report(big, &g2);
    REQUIRE(rg.partial_sums.size() == big.eigenvalues.size());
    double s = 0;
    for (double z : big.eigenvalues) s += 1.0 / (z * z);
    CHECK(rg.partial_sums.back() == doctest::Approx(s).epsilon(1e-12));
    CHECK(rg.limsup_trend->trend == Trend::vanishing);
    CHECK(rg.series->cls == SeriesClass::converges);
    CHECK(rg.to_json()["limsup_trend"] == "vanishing");
}

TEST_CASE("spectrum of a diagonal H is symmetric") {
    for (auto H : {make_power_log(2, 1, 0), make_diag_exp(), make_power_log(1.5, 0, 0)}) {
        auto est = eigenvalues(H, dyadic_points(H, 10)[10], 50.0);
        RealSequence pos, neg;
        for (double z : est.eigenvalues) (z > 0 ? pos : neg).push_back(std::abs(z));
        REQUIRE(pos.size() == neg.size());
        for (size_t i = 0; i < pos.size(); ++i) CHECK(std::abs(pos[i] - neg[i]) <= 1e-9);
    }
    // rank-one H is not diagonal; its spectrum need not be symmetric, only real
    auto R = make_rank_one_power_log(1, 0);
    auto est = eigenvalues(R, dyadic_points(R, 8)[8], 30.0);
    for (double z : est.eigenvalues) CHECK(std::isfinite(z));
}

TEST_CASE("truncation: fixed-index eigenvalues settle as c approaches b") {
    auto H = make_power_log(2, 1, 0);
    std::vector<RealSequence> mods;
    for (int k = 6; k <= 10; ++k) {
        auto est = eigenvalues(H, H.at_gap(std::ldexp(1.0, -k)), 30.0);
        RealSequence pos;
        for (double z : est.eigenvalues)
            if (z > 0) pos.push_back(z);
        REQUIRE(pos.size() >= 10);
        mods.push_back(pos);
    }
    for (size_t n = 0; n < 10; ++n) {
        for (size_t k = 0; k + 2 < mods.size(); ++k) {
            double d0 = std::abs(mods[k + 1][n] - mods[k][n]);
            double d1 = std::abs(mods[k + 2][n] - mods[k + 1][n]);
            CAPTURE(n);
            CAPTURE(k);
            CHECK(d1 / d0 < 1.0);
        }
    }
}

TEST_CASE("oracle and criteria agree on the behaviour near 0") {
    // bounded invertibility fails for alpha = 3: the smallest |lambda| decreases towards 0
    auto H = make_power_log(3, 0, 0);
    REQUIRE(bounded_invertibility(H).verdict == Verdict::fails);
    // the window shrinks with the smallest zero, which scales like 2^{-k/2}
    double prev = 1e300, last = 0;
    for (int k = 8; k <= 64; k += 8) {
        auto est = eigenvalues(H, H.at_gap(std::ldexp(1.0, -k)), std::ldexp(8.0, -k / 2));
        REQUIRE(!est.eigenvalues.empty());
        last = std::abs(est.eigenvalues.front());
        CAPTURE(k);
        CHECK(last < prev);
        CHECK(est.eigenvalues[0] == doctest::Approx(-est.eigenvalues[1]).epsilon(1e-6));
        prev = last;
    }
    CHECK(last < 10.0 * kRootTol);

    // where discreteness holds, the spacing does not shrink as the window grows
    for (auto D : {make_diag_exp(), make_power_log(2, 1, 0), make_power_log(1.5, 0, 0)}) {
        REQUIRE(discreteness(D).verdict == Verdict::holds);
        auto est = eigenvalues(D, dyadic_points(D, 10)[10], 60.0);
        RealSequence pos;
        for (double z : est.eigenvalues)
            if (z > 0) pos.push_back(z);
        REQUIRE(pos.size() >= 8);
        double first = pos[1] - pos[0];
        double tail = pos.back() - pos[pos.size() - 2];
        CHECK(tail >= 0.5 * first);
    }
}

TEST_CASE("spectrum and counting csv") {
    auto I = make_constant(1, 1, 0, 0.0, pi);
    auto est = eigenvalues(I, I.at(pi), 2.0);
    auto s = spectrum_csv(est);
    CHECK(s.rfind("index,lambda,sign\n", 0) == 0);
    CHECK(s.find("\n1,-0.5") != std::string::npos);
    CHECK(std::count(s.begin(), s.end(), '\n') == 5);
    auto c = counting_csv(est);
    CHECK(c.rfind("r,n_of_r\n", 0) == 0);
    CHECK(std::count(c.begin(), c.end(), '\n') == 5);
    auto j = est.to_json();
    CHECK(j["count"] == 4);
}
