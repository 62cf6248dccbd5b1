#include <cmath>

#include "cansys/criteria.hpp"
#include "cansys/dyadic.hpp"
#include "cansys/errors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cansys;

namespace {
std::vector<Hamiltonian> builtin_instances() {
    return {make_diag_exp(),          make_power_log(1.5, 0, 0), make_power_log(2, 0, 0),
            make_power_log(2, 0, 1),  make_power_log(2, 1, 0),   make_power_log(2, 3, 0),
            make_power_log(3, 0, 0),  make_power_log(2, 1, 2),   make_rank_one_power_log(1, 0),
            make_rank_one_power_log(5, 0), make_string_rank_one(1, 0)};
}
}  // namespace

TEST_CASE("product_P closed forms") {
    auto E = make_diag_exp();
    for (double t : {0.5, 2.0, 10.0}) CHECK(product_P(E, E.at(t)) == doctest::Approx(t * std::exp(-t)).epsilon(1e-13));
    auto U = make_power_log(2, 0, 0);  // P(t) = (1-t) (1/(1-t) - 1) = t
    for (double t : {0.25, 0.5, 0.9}) CHECK(product_P(U, U.at(t)) == doctest::Approx(t).epsilon(1e-13));
}

TEST_CASE("discreteness") {
    CHECK(discreteness(make_diag_exp()).verdict == Verdict::holds);
    CHECK(discreteness(make_power_log(2, 0, 0)).verdict == Verdict::fails);
    CHECK(discreteness(make_power_log(2, 1, 0)).verdict == Verdict::holds);
    auto r = discreteness(make_power_log(2, 1, 0));
    CHECK(r.method == Method::both);
    CHECK(r.agreement.value());
    CHECK(r.trajectory.size() == size_t(kDefaultDepth));
    CHECK(r.sequential_trajectory.size() == size_t(kDefaultDepth));
    auto j = r.to_json();
    CHECK(j["criterion"] == "discreteness");
    CHECK(j["verdict"] == "holds");
    CHECK(j["agreement"] == true);
    CHECK(j["trajectory"].is_array());
    CHECK_THROWS_AS(discreteness(make_constant(1, 1, 0)), PreconditionError);
}

TEST_CASE("bounded_invertibility") {
    CHECK(bounded_invertibility(make_power_log(2, 0, 0)).verdict == Verdict::holds);
    CHECK(bounded_invertibility(make_power_log(3, 0, 0)).verdict == Verdict::fails);
    CHECK(bounded_invertibility(make_diag_exp()).verdict == Verdict::holds);
}

TEST_CASE("summability") {
    auto g2 = GrowthFunction::lindelof(2);
    auto conv = summability(make_power_log(2, 1, 2), g2);
    CHECK(conv.verdict == Verdict::holds);
    CHECK(conv.agreement.value());
    auto div = summability(make_power_log(2, 1, 0), g2);
    CHECK(div.verdict == Verdict::fails);
    CHECK(div.agreement.value());
    CHECK(summability(make_diag_exp(), GrowthFunction::lindelof(1.5)).verdict == Verdict::holds);

    CHECK_THROWS_AS(summability(make_diag_exp(), GrowthFunction::lindelof(1.0)), UnsupportedOrderError);
    CHECK_THROWS_AS(summability(make_diag_exp(), GrowthFunction::lindelof(0.5)), UnsupportedOrderError);

    // partial-sum oracle on the sequential side: sum omega_n^2 for (2,1,2) stays below
    // the integral-test bound of sum 1/(n log^2 n)
    auto w = omega_sequence(make_power_log(2, 1, 2), 40);
    double s = 0;
    for (double x : w) s += x * x;
    CHECK(std::isfinite(s));

    auto tab = GrowthFunction::table({1, 10, 100, 1000, 1e4, 1e5}, {1, 100, 1e4, 1e6, 1e8, 1e10});
    auto rt = summability(make_power_log(2, 1, 0), tab);
    bool noted = false;
    for (auto& n : rt.notes) noted |= n.find("approximate") != std::string::npos;
    CHECK(noted);
}

TEST_CASE("limsup_distribution: bounded, non-vanishing for the matched growth function") {
    struct P {
        double a1, a2;
    };
    for (P p : {P{1, 0}, P{0.5, 0}, P{1.5, 0}, P{1, 1}}) {
        auto g = GrowthFunction::lindelof(2.0 / p.a1, p.a2 == 0 ? std::vector<double>{}
                                                                : std::vector<double>{-p.a2 / p.a1});
        auto r = limsup_distribution(make_power_log(2, p.a1, p.a2), g);
        CAPTURE(p.a1);
        CAPTURE(p.a2);
        CHECK(r.verdict == Verdict::holds);
        CHECK(r.extra["vanishing"] == "fails");
        CHECK(r.extra["trend"] == "bounded");
    }
}

TEST_CASE("limsup_distribution: vanishing cases and non-discrete guard") {
    auto v = limsup_distribution(make_power_log(2, 1, 0), GrowthFunction::lindelof(3));
    CHECK(v.verdict == Verdict::holds);
    CHECK(v.extra["vanishing"] == "holds");
    for (double rho : {1.2, 2.0, 5.0}) {
        auto e = limsup_distribution(make_diag_exp(), GrowthFunction::lindelof(rho));
        CHECK(e.extra["vanishing"] == "holds");
    }
    auto nd = limsup_distribution(make_power_log(3, 0, 0), GrowthFunction::lindelof(2));
    CHECK(nd.verdict == Verdict::fails);
    CHECK_THROWS_AS(limsup_distribution(make_diag_exp(), GrowthFunction::lindelof(1.0)), UnsupportedOrderError);
}

TEST_CASE("kac_F: reductions to P") {
    auto D = make_power_log(2, 1, 0);
    for (double t : {0.3, 0.9, 0.999}) {
        double P = product_P(D, D.at(t));
        CHECK(kac_F(D, t, 0.0) == doctest::Approx(P).epsilon(1e-12));
        CHECK(kac_F(D, t, 1.0) == doctest::Approx(P).epsilon(1e-12));
        CHECK(kac_F(D, t, -2.5) == doctest::Approx(P).epsilon(1e-12));
    }
    auto R = make_rank_one_power_log(1, 0);
    for (double t : {0.3, 0.9}) CHECK(kac_F(R, t, 0.0) == doctest::Approx(product_P(R, R.at(t))).epsilon(1e-10));
}

TEST_CASE("kac_F: rank-one family against a quadrature oracle") {
    // h1 = 1, h2 = e^{2u}/(1+u), h3 = -sqrt(h2) with u = log 1/(1-t);
    // m3(u) = -2 (sqrt(1+u) - 1)
    auto R = make_rank_one_power_log(1, 0);
    auto m3 = [](double u) { return -2.0 * (std::sqrt(1.0 + u) - 1.0); };
    for (double t : {0.5, 0.9, 0.99}) {
        for (double lam : {0.5, -0.3, 1.0}) {
            double L = std::log(1.0 / (1.0 - t));
            auto f1 = [&](double u) { return std::exp(2.0 * lam * m3(u) - u); };
            auto f2 = [&](double u) { return std::exp(u - 2.0 * lam * m3(u)) / (1.0 + u); };
            double I1 = oracle::midpoint_richardson(f1, L, L + 80.0, 1024, 5);
            double I2 = oracle::midpoint_richardson(f2, 0.0, L, 256, 5);
            CAPTURE(t);
            CAPTURE(lam);
            CHECK(kac_F(R, t, lam) == doctest::Approx(I1 * I2).epsilon(1e-6));
        }
    }
}

TEST_CASE("kac_membership") {
    auto E = make_diag_exp();
    auto a1 = kac_membership(E, 1.0, 1e-3);
    CHECK(a1.membership == KacMembership::in_A);
    auto a2 = kac_membership(E, 2.0, 1e-3);
    CHECK(a2.membership == KacMembership::in_A);
    // diagonal H: F does not depend on lambda, only the threshold K / lambda^2 does
    REQUIRE(a1.trajectory_A.size() == a2.trajectory_A.size());
    for (size_t i = 0; i < a1.trajectory_A.size(); ++i)
        CHECK(a1.trajectory_A[i].second == doctest::Approx(a2.trajectory_A[i].second).epsilon(1e-12));
    CHECK(a1.threshold == doctest::Approx(4.0 * a2.threshold));

    auto n = kac_membership(make_power_log(2, 0, 0), 1.0, 0.01);
    CHECK(n.membership == KacMembership::neither);
    CHECK(n.max_A == doctest::Approx(1.0).epsilon(0.05));
    CHECK(to_string(n.membership) == "neither");
    CHECK_THROWS_AS(kac_membership(E, 0.0, 1.0), DomainError);
}

TEST_CASE("scale invariance of the criteria") {
    for (auto H : {make_diag_exp(), make_power_log(2, 0, 0), make_power_log(2, 1, 0), make_power_log(3, 0, 0)}) {
        auto S = scale(H, 3.0);
        auto w = omega_sequence(H, 30), ws = omega_sequence(S, 30);
        for (size_t i = 0; i < w.size(); ++i) CHECK(ws[i] == doctest::Approx(3.0 * w[i]).epsilon(1e-10));
        auto c = dyadic_points(H, 10);
        for (int k = 1; k <= 10; ++k)
            CHECK(product_P(S, c[k]) == doctest::Approx(9.0 * product_P(H, c[k])).epsilon(1e-10));
        CHECK(discreteness(S).verdict == discreteness(H).verdict);
        CHECK(bounded_invertibility(S).verdict == bounded_invertibility(H).verdict);
    }
}

TEST_CASE("rotation round trip gives identical reports on tables") {
    auto T = make_table({0.0, 0.3, 1.0, 1.2, 4.0, 5.0}, {{2, 1, 0.5}, {0.5, 3, 0.1}, {0.2, 1, 0}, {1, 1, 0}, {0.25, 7, 0}});
    for (double al : {0.3, 1.1, -2.0}) {
        auto back = rotate(rotate(T, al), -al);
        CHECK(discreteness(back, 20).to_json().dump() == discreteness(T, 20).to_json().dump());
        CHECK(bounded_invertibility(back, 20).to_json().dump() == bounded_invertibility(T, 20).to_json().dump());
    }
}

TEST_CASE("continuous and sequential methods agree on every built-in instance") {
    auto g = GrowthFunction::lindelof(2);
    for (auto& H : builtin_instances()) {
        CAPTURE(H.describe());
        CHECK(discreteness(H).agreement.value());
        CHECK(bounded_invertibility(H).agreement.value());
    }
    // summability where the series verdict is clear-cut
    for (auto H : {make_diag_exp(), make_power_log(2, 1, 2), make_power_log(2, 3, 0), make_power_log(1.5, 0, 0)}) {
        CAPTURE(H.describe());
        CHECK(summability(H, g).agreement.value());
    }
}

TEST_CASE("criteria verdicts coincide for H and diag H") {
    auto g = GrowthFunction::lindelof(2);
    for (auto H : {make_rank_one_power_log(1, 0), make_rank_one_power_log(5, 0), make_string_rank_one(1, 0)}) {
        auto D = diag(H);
        CHECK(discreteness(H).to_json()["verdict"] == discreteness(D).to_json()["verdict"]);
        CHECK(bounded_invertibility(H).verdict == bounded_invertibility(D).verdict);
        CHECK(summability(H, g).verdict == summability(D, g).verdict);
        CHECK(limsup_distribution(H, g).verdict == limsup_distribution(D, g).verdict);
    }
}
