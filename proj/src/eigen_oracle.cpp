#include "cansys/eigen_oracle.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <sstream>

#include "cansys/errors.hpp"

namespace cansys {

using nlohmann::json;

TransferMatrix transfer_matrix(const MatrixValue& h, double len, double z) {
    TransferMatrix T;
    T.z = z;
    T.c = len;
    // J H = [[-h3, -h2], [h1, h3]], (J H)^2 = -det(H) I
    double jh[2][2] = {{-h.h3, -h.h2}, {h.h1, h.h3}};
    double d = std::max(0.0, h.det());
    double co, sc;  // exp = co I + sc J H
    if (d < 1e-14) {
        co = 1.0;
        sc = z * len;
    } else {
        double r = std::sqrt(d);
        co = std::cos(z * len * r);
        sc = std::sin(z * len * r) / r;
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) T.m[i][j] = (i == j ? co : 0.0) + sc * jh[i][j];
    return T;
}

double CellChain::sqrt_det_integral() const {
    double s = 0;
    for (size_t i = 0; i < cells.size(); ++i) {
        // rank-one cells carry det noise of order eps * h1 h2
        double d = cells[i].det();
        if (d > 1e-12 * cells[i].h1 * cells[i].h2) s += std::sqrt(d) * len[i];
    }
    return s;
}

CellChain truncate(const Hamiltonian& H, const Point& c, int cells) {
    if (!(c.t > H.a()) || c.t > H.b() || std::isinf(c.t))
        throw DomainError("truncation point must lie in (a, b] and be finite");
    CellChain ch;
    ch.a = H.a();
    ch.c = c.t;
    if (auto* d = H.table()) {
        for (size_t i = 0; i < d->cells.size() && d->t[i] < c.t; ++i) {
            double hi = std::min(d->t[i + 1], c.t);
            ch.len.push_back(hi == d->t[i + 1] ? d->len[i] : hi - d->t[i]);
            ch.cells.push_back(d->cells[i]);
        }
        return ch;
    }
    if (H.source().constant()) {
        ch.len.push_back(H.b_infinite() ? c.t - H.a() : H.start().gap - c.gap);
        ch.cells.push_back(eval(H, H.start()));
        return ch;
    }
    // cell lengths and midpoints from the gap, so that cells below double
    // resolution in t survive (a table would need strictly increasing t)
    auto g = clustered_grid(H, c, cells);
    bool fin = !H.b_infinite();
    for (size_t i = 0; i + 1 < g.size(); ++i) {
        const Point &x = g[i], &y = g[i + 1];
        double len = fin ? x.gap - y.gap : y.t - x.t;
        if (!(len > 0.0)) continue;
        ch.len.push_back(len);
        ch.cells.push_back(eval(H, fin ? H.at_gap(0.5 * (x.gap + y.gap)) : H.at(0.5 * (x.t + y.t))));
    }
    return ch;
}

TransferMatrix monodromy(const CellChain& chain, double z) {
    TransferMatrix W;
    W.z = z;
    W.a = chain.a;
    W.c = chain.c;
    for (size_t k = 0; k < chain.cells.size(); ++k) {
        auto T = transfer_matrix(chain.cells[k], chain.len[k], z);
        double r[2][2];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r[i][j] = T.m[i][0] * W.m[0][j] + T.m[i][1] * W.m[1][j];
        std::copy(&r[0][0], &r[0][0] + 4, &W.m[0][0]);
    }
    return W;
}

TransferMatrix monodromy(const Hamiltonian& H, const Point& c, double z, int cells) {
    return monodromy(truncate(H, c, cells), z);
}

double char_value(const CellChain& chain, double z, double beta) {
    // y(a) = (0,1): propagate only the second column
    double y0 = 0.0, y1 = 1.0;
    for (size_t k = 0; k < chain.cells.size(); ++k) {
        auto T = transfer_matrix(chain.cells[k], chain.len[k], z);
        double n0 = T.m[0][0] * y0 + T.m[0][1] * y1;
        double n1 = T.m[1][0] * y0 + T.m[1][1] * y1;
        y0 = n0, y1 = n1;
    }
    // cos(pi/2) is 6e-17 in double, and y0 reaches 1e16 on deep truncations
    double cb = std::cos(beta), sb = std::sin(beta);
    if (std::abs(cb) < 1e-15) cb = 0.0;
    if (std::abs(sb) < 1e-15) sb = 0.0;
    return cb * y0 + sb * y1;
}

double char_value(const Hamiltonian& H, const Point& c, double z, double beta) {
    return char_value(truncate(H, c, kDefaultMonodromyCells), z, beta);
}

// ------------------------------------------------------------- eigenvalues

std::vector<std::pair<double, size_t>> SpectrumEstimate::counting() const {
    std::vector<std::pair<double, size_t>> out;
    for (size_t i = 0; i < eigenvalues.size(); ++i) out.push_back({std::abs(eigenvalues[i]), i + 1});
    return out;
}

json SpectrumEstimate::to_json() const {
    json j = {{"c", c},
              {"beta", beta},
              {"window", window},
              {"step", step},
              {"sqrt_det_integral", sqrt_det_integral},
              {"count", eigenvalues.size()},
              {"eigenvalues", eigenvalues},
              {"tangencies", tangencies}};
    if (exponent.fitted)
        j["exponent"] = {{"slope", exponent.slope}, {"intercept", exponent.intercept},
                         {"residual", exponent.residual}, {"fitted", exponent.fitted}};
    if (!tangencies.empty()) j["warning"] = "possible multiple zeros at tangency points";
    return j;
}

SpectrumEstimate eigenvalues(const CellChain& chain, double R, double beta) {
    if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("window R must be positive and finite");
    SpectrumEstimate est;
    est.c = chain.c;
    est.beta = beta;
    est.window = R;
    est.sqrt_det_integral = chain.sqrt_det_integral();
    est.step = std::min(std::numbers::pi / (4.0 * est.sqrt_det_integral + 1e-12), R / 1e4);
    double K = std::ceil(2.0 * R / est.step);
    if (!(est.step > 0.0) || K > 5e7)
        throw NumericalError("window too large for the scan step (" + std::to_string(K) + " scan points)");
    size_t N = static_cast<size_t>(K);
    auto f = [&](double z) { return char_value(chain, z, beta); };
    auto zk = [&](size_t k) { return k == N ? R : -R + k * (2.0 * R / N); };

    std::vector<double> roots;
    double zp = zk(0), fp = f(zp);
    double zpp = zp, fpp = fp;
    if (fp == 0.0) roots.push_back(zp);
    for (size_t k = 1; k <= N; ++k) {
        double z = zk(k), fz = f(z);
        if (fz == 0.0) {
            roots.push_back(z);
        } else if (fp != 0.0 && std::signbit(fz) != std::signbit(fp)) {
            boost::uintmax_t it = 200;
            auto tol = [](double lo, double hi) { return hi - lo <= kRootTol; };
            auto r = boost::math::tools::toms748_solve(f, zp, z, fp, fz, tol, it);
            roots.push_back(0.5 * (r.first + r.second));
        } else if (k >= 2 && fp != 0.0 && std::signbit(fpp) == std::signbit(fp) &&
                   std::signbit(fz) == std::signbit(fp) && std::abs(fp) < std::abs(fpp) &&
                   std::abs(fp) < std::abs(fz) && std::abs(fp) < 1e-6 * std::max(std::abs(fpp), std::abs(fz))) {
            est.tangencies.push_back(zp);
        }
        zpp = zp, fpp = fp;
        zp = z, fp = fz;
    }
    (void)zpp;
    // z = 0 is excluded by the boundary condition at a
    std::erase_if(roots, [](double z) { return std::abs(z) < kRootTol; });
    std::sort(roots.begin(), roots.end(), [](double x, double y) {
        return std::abs(x) < std::abs(y) || (std::abs(x) == std::abs(y) && x < y);
    });
    // +-pairs agree only to the root tolerance; put the negative one first
    for (size_t i = 0; i + 1 < roots.size(); ++i)
        if (roots[i] > 0.0 && roots[i + 1] < 0.0 &&
            std::abs(roots[i] + roots[i + 1]) <= std::min(4.0 * kRootTol, 1e-3 * roots[i]))
            std::swap(roots[i], roots[i + 1]);
    est.eigenvalues = std::move(roots);
    if (est.eigenvalues.size() >= 16) {
        RealSequence m;
        for (double z : est.eigenvalues) m.push_back(std::abs(z));
        est.exponent = conv_exponent(m);
    }
    return est;
}

SpectrumEstimate eigenvalues(const Hamiltonian& H, const Point& c, double R, double beta, int cells) {
    return eigenvalues(truncate(H, c, cells), R, beta);
}

// ----------------------------------------------------------------- counting

double plus_ratio(const SpectrumEstimate& est, size_t n) {
    size_t k = 0;
    for (double z : est.eigenvalues)
        if (z > 0.0 && ++k == n) return z / double(n);
    throw LengthError("fewer than " + std::to_string(n) + " positive eigenvalues");
}

json CountingReport::to_json() const {
    json j = {{"exponent", {{"slope", exponent.slope}, {"intercept", exponent.intercept},
                            {"residual", exponent.residual}, {"fitted", exponent.fitted}}},
              {"plus_tail_mean", plus_tail_mean},
              {"minus_tail_mean", minus_tail_mean},
              {"plus_count", plus_count},
              {"minus_count", minus_count},
              {"kdb_density", kdb_density ? json(*kdb_density) : json(nullptr)},
              {"flags", flags}};
    json nr = json::array();
    for (auto& [r, n] : n_of_r) nr.push_back({r, n});
    j["n_of_r"] = nr;
    if (!partial_sums.empty()) {
        j["partial_sums"] = partial_sums;
        j["limsup_trajectory"] = limsup_trajectory;
        j["limsup_trend"] = to_string(limsup_trend->trend);
        j["series_class"] = to_string(series->cls);
    }
    return j;
}

CountingReport counting_report(const SpectrumEstimate& est, const GrowthFunction* g) {
    if (est.eigenvalues.size() < 16) throw LengthError("counting report needs at least 16 eigenvalues");
    CountingReport r;
    r.n_of_r = est.counting();
    RealSequence mod;
    for (double z : est.eigenvalues) mod.push_back(std::abs(z));
    r.exponent = conv_exponent(mod);

    auto tail_mean = [](const RealSequence& v) {
        if (v.empty()) return 0.0;
        size_t from = v.size() - std::max<size_t>(1, v.size() / 3);
        double s = 0;
        for (size_t i = from; i < v.size(); ++i) s += v[i] / double(i + 1);
        return s / double(v.size() - from);
    };
    RealSequence plus, minus;
    for (double z : est.eigenvalues) (z > 0 ? plus : minus).push_back(std::abs(z));
    r.plus_count = plus.size();
    r.minus_count = minus.size();
    r.plus_tail_mean = tail_mean(plus);
    r.minus_tail_mean = tail_mean(minus);
    if (est.sqrt_det_integral > 1e-12) r.kdb_density = std::numbers::pi / est.sqrt_det_integral;
    else r.flags.push_back("det H vanishes: density check skipped");
    if (!est.tangencies.empty()) r.flags.push_back("tangency detected: possible multiple zeros");

    if (g) {
        double s = 0;
        std::vector<double> idx;
        RealSequence terms;
        for (size_t n = 1; n <= mod.size(); ++n) {
            double gn = (*g)(mod[n - 1]);
            terms.push_back(1.0 / gn);
            s += 1.0 / gn;
            r.partial_sums.push_back(s);
            r.limsup_trajectory.push_back(double(n) / gn);
            idx.push_back(double(n));
        }
        r.limsup_trend = classify_trend(r.limsup_trajectory, idx);
        r.series = classify_series(terms, idx);
    }
    return r;
}

std::string spectrum_csv(const SpectrumEstimate& est) {
    std::ostringstream o;
    o.precision(17);
    o << "index,lambda,sign\n";
    for (size_t i = 0; i < est.eigenvalues.size(); ++i)
        o << i + 1 << "," << est.eigenvalues[i] << "," << (est.eigenvalues[i] > 0 ? 1 : -1) << "\n";
    return o.str();
}

std::string counting_csv(const SpectrumEstimate& est) {
    std::ostringstream o;
    o.precision(17);
    o << "r,n_of_r\n";
    for (auto& [r, n] : est.counting()) o << r << "," << n << "\n";
    return o.str();
}

}  // namespace cansys
