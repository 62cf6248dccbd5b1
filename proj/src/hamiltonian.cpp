#include "cansys/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cansys/errors.hpp"
#include "quad.hpp"

namespace cansys {

using nlohmann::json;
using detail::gk;
using detail::logplus;

std::optional<Point> Source::point_at_tail(double) const { return std::nullopt; }

namespace {

int idx(Entry e) { return static_cast<int>(e) - 1; }

double entry_of(const MatrixValue& m, Entry e) {
    switch (e) {
        case Entry::H1: return m.h1;
        case Entry::H2: return m.h2;
        case Entry::H3: return m.h3;
        case Entry::SqrtDet: return std::sqrt(std::max(0.0, m.det()));
    }
    return 0.0;
}

// c * L with the convention 0 * inf = 0.
double times(double c, double L) { return c == 0.0 ? 0.0 : c * L; }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// ---------------------------------------------------------------- constant

class ConstantSource final : public Source {
public:
    ConstantSource(MatrixValue m, double a, double b, std::shared_ptr<const Source> base = nullptr,
                   double angle = 0.0)
        : Source(a, b), m_(m), base_(std::move(base)), angle_(angle) {}

    MatrixValue value(const Point&) const override { return m_; }

    double integral(Entry e, const Point& x, const Point& y) const override {
        return times(entry_of(m_, e), length(x, y));
    }
    double tail(Entry e, const Point& x) const override {
        double L = std::isinf(b()) ? kInf : x.gap;
        return times(entry_of(m_, e), L);
    }
    std::optional<Point> point_at_tail(double tau) const override {
        if (std::isinf(b()) || m_.h1 <= 0.0) return std::nullopt;
        double g = std::min(tau / m_.h1, b() - a());
        return Point{b() - g, g};
    }
    bool limit_point() const override { return std::isinf(b()) && m_.trace() > 0.0; }
    bool diagonal() const override { return m_.h3 == 0.0; }
    bool constant() const override { return true; }
    std::string describe() const override {
        return "constant [[" + fmt(m_.h1) + "," + fmt(m_.h3) + "],[" + fmt(m_.h3) + "," +
               fmt(m_.h2) + "]]";
    }
    std::shared_ptr<const Source> rotation_base() const override { return base_; }
    double rotation_angle() const override { return angle_; }
    const MatrixValue& matrix() const { return m_; }

private:
    double length(const Point& x, const Point& y) const {
        if (std::isinf(b())) return y.t - x.t;
        return x.gap - y.gap;
    }
    MatrixValue m_;
    std::shared_ptr<const Source> base_;
    double angle_;
};

// ---------------------------------------------------------------- diag-exp

class DiagExpSource final : public Source {
public:
    explicit DiagExpSource(double a) : Source(a, kInf) {}
    MatrixValue value(const Point& p) const override { return {std::exp(-p.t), 1.0, 0.0}; }
    double integral(Entry e, const Point& x, const Point& y) const override {
        switch (e) {
            case Entry::H1: return std::exp(-x.t) - std::exp(-y.t);
            case Entry::H2: return y.t - x.t;
            case Entry::H3: return 0.0;
            case Entry::SqrtDet: return 2.0 * (std::exp(-0.5 * x.t) - std::exp(-0.5 * y.t));
        }
        return 0.0;
    }
    double tail(Entry e, const Point& x) const override {
        return integral(e, x, Point{kInf, kInf});
    }
    std::optional<Point> point_at_tail(double tau) const override {
        double t = std::max(a(), -std::log(tau));
        return Point{t, kInf};
    }
    bool limit_point() const override { return true; }
    bool diagonal() const override { return true; }
    std::string describe() const override { return "diag-exp on [" + fmt(a()) + ",inf)"; }
};

// ---------------------------------------------------------------- power-log

// h2(t) = (1-t)^{-alpha} (1 + log 1/(1-t))^{-alpha1} (1 + log+ log 1/(1-t))^{-alpha2}
// on [0,1), written in u = -log(1-t).  All integrals are carried out in u.
class PowerLogCore {
public:
    PowerLogCore(double al, double a1, double a2) : al_(al), a1_(a1), a2_(a2) {}

    double alpha() const { return al_; }
    double alpha1() const { return a1_; }
    double alpha2() const { return a2_; }

    double log_weight(double u, double s) const {
        double r = 0.0;
        if (a1_ != 0.0) r -= s * a1_ * std::log1p(u);
        if (a2_ != 0.0) r -= s * a2_ * std::log1p(logplus(u));
        return r;
    }
    double h2(double u) const { return std::exp(al_ * u + log_weight(u, 1.0)); }

    // int_{u0}^{u1} h2 dt
    double int_h2(double u0, double u1) const {
        if (!(u1 > u0)) return 0.0;
        double k = al_ - 1.0;
        if (a1_ == 0.0 && a2_ == 0.0) {
            if (std::isinf(u1)) return kInf;
            return std::exp(k * u0) * std::expm1(k * (u1 - u0)) / k;
        }
        if (std::isinf(u1)) return kInf;
        return split([&](double u) { return std::exp(k * u + log_weight(u, 1.0)); }, u0, u1);
    }

    // int_{u0}^{u1} sqrt(h2) dt; u1 may be +inf.
    double int_sqrt(double u0, double u1) const {
        if (!(u1 > u0)) return 0.0;
        double k = 0.5 * al_ - 1.0;
        if (a1_ == 0.0 && a2_ == 0.0) {
            if (k == 0.0) return u1 - u0;
            if (std::isinf(u1)) return k > 0.0 ? kInf : -std::exp(k * u0) / k;
            return std::exp(k * u0) * std::expm1(k * (u1 - u0)) / k;
        }
        if (k == 0.0 && a2_ == 0.0) {
            double p = 1.0 - 0.5 * a1_;
            if (p == 0.0) return std::isinf(u1) ? kInf : std::log1p(u1) - std::log1p(u0);
            if (std::isinf(u1)) return p > 0.0 ? kInf : -std::pow(1.0 + u0, p) / p;
            return (std::pow(1.0 + u1, p) - std::pow(1.0 + u0, p)) / p;
        }
        if (std::isinf(u1)) {
            bool finite = k < 0.0 || (k == 0.0 && (0.5 * a1_ > 1.0 ||
                                                   (0.5 * a1_ == 1.0 && 0.5 * a2_ > 1.0)));
            if (!finite) return kInf;
        }
        return split([&](double u) { return std::exp(k * u + log_weight(u, 0.5)); }, u0, u1);
    }

private:
    double split(const std::function<double(double)>& f, double u0, double u1) const {
        // log+ has a kink at u = 1 when alpha2 != 0
        if (a2_ != 0.0 && u0 < 1.0 && u1 > 1.0)
            return gk(f, u0, 1.0, 1e-12, 2.0) + gk(f, 1.0, u1, 1e-12, 2.0);
        return gk(f, u0, u1, 1e-12, 2.0);
    }
    double al_, a1_, a2_;
};

double u_of(const Point& p) { return p.gap >= 1.0 ? 0.0 : -std::log(p.gap); }

class UnitIntervalSource : public Source {
public:
    UnitIntervalSource() : Source(0.0, 1.0) {}
    bool singular_end() const override { return true; }
    std::optional<Point> point_at_tail(double tau) const override {
        double g = std::min(tau, 1.0);
        return Point{1.0 - g, g};
    }
    bool limit_point() const override { return true; }

protected:
    double h1_integral(const Point& x, const Point& y) const { return x.gap - y.gap; }
};

class PowerLogSource final : public UnitIntervalSource {
public:
    PowerLogSource(double al, double a1, double a2) : core_(al, a1, a2) {}
    MatrixValue value(const Point& p) const override { return {1.0, core_.h2(u_of(p)), 0.0}; }
    double integral(Entry e, const Point& x, const Point& y) const override {
        double u0 = u_of(x), u1 = y.gap <= 0.0 ? kInf : u_of(y);
        switch (e) {
            case Entry::H1: return h1_integral(x, y);
            case Entry::H2: return core_.int_h2(u0, u1);
            case Entry::H3: return 0.0;
            case Entry::SqrtDet: return core_.int_sqrt(u0, u1);
        }
        return 0.0;
    }
    double tail(Entry e, const Point& x) const override {
        return integral(e, x, Point{1.0, 0.0});
    }
    bool diagonal() const override { return true; }
    std::string describe() const override {
        return "power-log alpha=" + fmt(core_.alpha()) + " alpha1=" + fmt(core_.alpha1()) +
               " alpha2=" + fmt(core_.alpha2());
    }

private:
    PowerLogCore core_;
};

class RankOneSource final : public UnitIntervalSource {
public:
    RankOneSource(double a1, double a2) : core_(2.0, a1, a2) {}
    MatrixValue value(const Point& p) const override {
        double h2 = core_.h2(u_of(p));
        return {1.0, h2, -std::sqrt(h2)};
    }
    double integral(Entry e, const Point& x, const Point& y) const override {
        double u0 = u_of(x), u1 = y.gap <= 0.0 ? kInf : u_of(y);
        switch (e) {
            case Entry::H1: return h1_integral(x, y);
            case Entry::H2: return core_.int_h2(u0, u1);
            case Entry::H3: return -core_.int_sqrt(u0, u1);
            case Entry::SqrtDet: return 0.0;
        }
        return 0.0;
    }
    double tail(Entry e, const Point& x) const override {
        return integral(e, x, Point{1.0, 0.0});
    }
    std::string describe() const override {
        return "rank-one-power-log alpha1=" + fmt(core_.alpha1()) + " alpha2=" + fmt(core_.alpha2());
    }
    const PowerLogCore& core() const { return core_; }

private:
    PowerLogCore core_;
};

// [[1,-m],[-m,m^2]] with m(t) = int_0^t h2 of the power-log family.
class StringRankOneSource final : public UnitIntervalSource {
public:
    StringRankOneSource(double al, double a1, double a2) : core_(al, a1, a2) {}
    double m(double u) const { return core_.int_h2(0.0, u); }
    MatrixValue value(const Point& p) const override {
        double mm = m(u_of(p));
        return {1.0, mm * mm, -mm};
    }
    double integral(Entry e, const Point& x, const Point& y) const override {
        double u0 = u_of(x), u1 = y.gap <= 0.0 ? kInf : u_of(y);
        switch (e) {
            case Entry::H1: return h1_integral(x, y);
            case Entry::H2:
                if (std::isinf(u1)) return kInf;
                return gk([&](double u) { double mm = m(u); return mm * mm * std::exp(-u); },
                          u0, u1, 1e-11, 2.0);
            case Entry::H3: {
                if (std::isinf(u1) && !h3_tail_finite()) return -kInf;
                return -gk([&](double u) { return m(u) * std::exp(-u); }, u0, u1, 1e-11, 2.0);
            }
            case Entry::SqrtDet: return 0.0;
        }
        return 0.0;
    }
    double tail(Entry e, const Point& x) const override {
        return integral(e, x, Point{1.0, 0.0});
    }
    std::string describe() const override {
        return "string-rank-one alpha=" + fmt(core_.alpha()) + " alpha1=" + fmt(core_.alpha1()) +
               " alpha2=" + fmt(core_.alpha2());
    }

private:
    bool h3_tail_finite() const {
        double k = core_.alpha() - 2.0;
        if (k != 0.0) return k < 0.0;
        return core_.alpha1() > 1.0 || (core_.alpha1() == 1.0 && core_.alpha2() > 1.0);
    }
    PowerLogCore core_;
};

// ---------------------------------------------------------------- table

class TableSource final : public Source {
public:
    TableSource(TableData d, std::shared_ptr<const Source> base = nullptr, double angle = 0.0)
        : Source(d.t.front(), d.t.back()), d_(std::move(d)), base_(std::move(base)),
          angle_(angle) {
        size_t n = d_.cells.size();
        for (int e = 0; e < 4; ++e) {
            pre_[e].assign(n + 1, 0.0);
            suf_[e].assign(n + 1, 0.0);
            for (size_t i = 0; i < n; ++i)
                pre_[e][i + 1] = pre_[e][i] + times(entry_of(d_.cells[i], Entry(e + 1)), d_.len[i]);
            for (size_t i = n; i-- > 0;)
                suf_[e][i] = suf_[e][i + 1] + times(entry_of(d_.cells[i], Entry(e + 1)), d_.len[i]);
        }
    }

    size_t cell_of(double t) const {
        auto it = std::upper_bound(d_.t.begin(), d_.t.end(), t);
        long i = static_cast<long>(it - d_.t.begin()) - 1;
        return static_cast<size_t>(std::clamp<long>(i, 0, static_cast<long>(d_.cells.size()) - 1));
    }

    MatrixValue value(const Point& p) const override { return d_.cells[cell_of(p.t)]; }

    double head(Entry e, double t) const {
        if (t <= d_.t.front()) return 0.0;
        if (t >= d_.t.back()) return pre_[idx(e)].back();
        size_t i = cell_of(t);
        return pre_[idx(e)][i] + times(entry_of(d_.cells[i], e), t - d_.t[i]);
    }
    double integral(Entry e, const Point& x, const Point& y) const override {
        if (!(y.t > x.t)) return 0.0;
        if (y.t >= d_.t.back()) return tail(e, x);
        // same cell: exact local length
        size_t i = cell_of(x.t), j = cell_of(y.t);
        if (i == j) return times(entry_of(d_.cells[i], e), y.t - x.t);
        return head(e, y.t) - head(e, x.t);
    }
    double tail(Entry e, const Point& x) const override {
        if (x.t <= d_.t.front()) return suf_[idx(e)][0];
        if (x.t >= d_.t.back()) return 0.0;
        size_t i = cell_of(x.t);
        double rest = std::isinf(d_.t[i + 1]) ? kInf : d_.t[i + 1] - x.t;
        return suf_[idx(e)][i + 1] + times(entry_of(d_.cells[i], e), rest);
    }
    std::optional<Point> point_at_tail(double tau) const override {
        const auto& s = suf_[0];
        if (std::isinf(s[0])) return std::nullopt;
        size_t n = d_.cells.size();
        if (tau >= s[0]) return Point{d_.t[0], gap(d_.t[0])};
        for (size_t i = 0; i < n; ++i) {
            if (s[i + 1] <= tau) {
                double h = d_.cells[i].h1;
                double t = (h > 0.0) ? d_.t[i] + (s[i] - tau) / h : d_.t[i];
                t = std::min(t, d_.t[i + 1]);
                if (s[i] <= tau) t = d_.t[i];
                return Point{t, gap(t)};
            }
        }
        return Point{d_.t.back(), 0.0};
    }
    bool limit_point() const override {
        return std::isinf(d_.t.back()) && d_.cells.back().trace() > 0.0;
    }
    bool limit_point_is_heuristic() const override { return true; }
    bool diagonal() const override {
        return std::all_of(d_.cells.begin(), d_.cells.end(),
                           [](const MatrixValue& m) { return m.h3 == 0.0; });
    }
    const TableData* table() const override { return &d_; }
    std::string describe() const override {
        return "table with " + std::to_string(d_.cells.size()) + " cells";
    }
    std::shared_ptr<const Source> rotation_base() const override { return base_; }
    double rotation_angle() const override { return angle_; }

private:
    double gap(double t) const { return std::isinf(b()) ? kInf : b() - t; }
    TableData d_;
    std::vector<double> pre_[4], suf_[4];
    std::shared_ptr<const Source> base_;
    double angle_;
};

// ---------------------------------------------------------------- wrappers

// H -> A H A^T for a fixed 2x2 matrix A.
class CongruenceSource final : public Source {
public:
    CongruenceSource(std::shared_ptr<const Source> child, double a00, double a01, double a10,
                     double a11, std::string tag, std::shared_ptr<const Source> base = nullptr,
                     double angle = 0.0)
        : Source(child->a(), child->b()), c_(std::move(child)), A_{a00, a01, a10, a11},
          tag_(std::move(tag)), base_(std::move(base)), angle_(angle) {}

    MatrixValue value(const Point& p) const override { return apply(c_->value(p)); }
    double integral(Entry e, const Point& x, const Point& y) const override {
        return combine(e, [&](Entry f) { return c_->integral(f, x, y); });
    }
    double tail(Entry e, const Point& x) const override {
        return combine(e, [&](Entry f) { return c_->tail(f, x); });
    }
    std::optional<Point> point_at_tail(double tau) const override {
        if (A_[1] != 0.0 || A_[0] == 0.0) return std::nullopt;
        return c_->point_at_tail(tau / (A_[0] * A_[0]));
    }
    bool limit_point() const override { return c_->limit_point(); }
    bool limit_point_is_heuristic() const override { return c_->limit_point_is_heuristic(); }
    bool singular_end() const override { return c_->singular_end(); }
    std::string describe() const override { return tag_ + " of " + c_->describe(); }
    std::shared_ptr<const Source> rotation_base() const override { return base_; }
    double rotation_angle() const override { return angle_; }

    MatrixValue apply(const MatrixValue& m) const {
        auto [a, b, c, d] = A_;
        return {a * a * m.h1 + 2 * a * b * m.h3 + b * b * m.h2,
                c * c * m.h1 + 2 * c * d * m.h3 + d * d * m.h2,
                a * c * m.h1 + (a * d + b * c) * m.h3 + b * d * m.h2};
    }

private:
    template <class F>
    double combine(Entry e, F&& of) const {
        auto [a, b, c, d] = A_;
        double k1, k2, k3;
        switch (e) {
            case Entry::H1: k1 = a * a; k2 = b * b; k3 = 2 * a * b; break;
            case Entry::H2: k1 = c * c; k2 = d * d; k3 = 2 * c * d; break;
            case Entry::H3: k1 = a * c; k2 = b * d; k3 = a * d + b * c; break;
            default: return std::abs(a * d - b * c) * of(Entry::SqrtDet);
        }
        double r = 0.0;
        if (k1 != 0.0) r += k1 * of(Entry::H1);
        if (k2 != 0.0) r += k2 * of(Entry::H2);
        if (k3 != 0.0) r += k3 * of(Entry::H3);
        // diagonal entries of a PSD matrix integrate to a nonnegative value
        if (std::isnan(r) && e != Entry::H3) r = kInf;
        return r;
    }
    std::shared_ptr<const Source> c_;
    std::array<double, 4> A_;
    std::string tag_;
    std::shared_ptr<const Source> base_;
    double angle_;
};

class DiagSource final : public Source {
public:
    explicit DiagSource(std::shared_ptr<const Source> child)
        : Source(child->a(), child->b()), c_(std::move(child)) {}
    MatrixValue value(const Point& p) const override {
        auto m = c_->value(p);
        m.h3 = 0.0;
        return m;
    }
    double integral(Entry e, const Point& x, const Point& y) const override {
        if (e == Entry::H3) return 0.0;
        if (e == Entry::SqrtDet) return integrate(Hamiltonian(c_), x, y, [&](const Point& p) {
                auto m = c_->value(p);
                return std::sqrt(std::max(0.0, m.h1 * m.h2));
            });
        return c_->integral(e, x, y);
    }
    double tail(Entry e, const Point& x) const override {
        if (e == Entry::H3) return 0.0;
        if (e == Entry::SqrtDet) {
            Point end = std::isinf(b()) ? Point{kInf, kInf} : Point{b(), 0.0};
            return integral(e, x, end);
        }
        return c_->tail(e, x);
    }
    std::optional<Point> point_at_tail(double tau) const override { return c_->point_at_tail(tau); }
    bool limit_point() const override { return c_->limit_point(); }
    bool limit_point_is_heuristic() const override { return c_->limit_point_is_heuristic(); }
    bool singular_end() const override { return c_->singular_end(); }
    bool diagonal() const override { return true; }
    std::string describe() const override { return "diag of " + c_->describe(); }

private:
    std::shared_ptr<const Source> c_;
};

class ScaledSource final : public Source {
public:
    ScaledSource(std::shared_ptr<const Source> child, double s)
        : Source(child->a(), child->b()), c_(std::move(child)), s_(s) {}
    MatrixValue value(const Point& p) const override {
        auto m = c_->value(p);
        return {s_ * m.h1, s_ * m.h2, s_ * m.h3};
    }
    double integral(Entry e, const Point& x, const Point& y) const override {
        return s_ * c_->integral(e, x, y);
    }
    double tail(Entry e, const Point& x) const override { return s_ * c_->tail(e, x); }
    std::optional<Point> point_at_tail(double tau) const override {
        return c_->point_at_tail(tau / s_);
    }
    bool limit_point() const override { return c_->limit_point(); }
    bool limit_point_is_heuristic() const override { return c_->limit_point_is_heuristic(); }
    bool singular_end() const override { return c_->singular_end(); }
    bool diagonal() const override { return c_->diagonal(); }
    std::string describe() const override { return fmt(s_) + " * " + c_->describe(); }

private:
    std::shared_ptr<const Source> c_;
    double s_;
};

Hamiltonian table_from(const TableData& d, std::shared_ptr<const Source> base = nullptr,
                       double angle = 0.0) {
    return Hamiltonian(std::make_shared<TableSource>(d, std::move(base), angle));
}

void check_breakpoints(const std::vector<double>& t, size_t cells) {
    if (t.size() < 2 || t.size() != cells + 1)
        throw InputError("table needs N+1 breakpoints for N >= 1 cells");
    for (size_t i = 0; i + 1 < t.size(); ++i)
        if (!(t[i + 1] > t[i])) throw InputError("table breakpoints must strictly increase");
    if (!std::isfinite(t.front())) throw InputError("table must start at a finite point");
    for (size_t i = 0; i + 1 < t.size() - 1; ++i)
        if (!std::isfinite(t[i + 1])) throw InputError("only the last breakpoint may be infinite");
}

}  // namespace

// ---------------------------------------------------------------- construction

bool Hamiltonian::normalized() const { return std::isfinite(src_->tail(Entry::H1, start())); }

Hamiltonian make_constant(double h1, double h2, double h3, double a, double b) {
    if (!(b > a)) throw InputError("interval must satisfy a < b");
    return Hamiltonian(std::make_shared<ConstantSource>(MatrixValue{h1, h2, h3}, a, b));
}

Hamiltonian make_diag_exp(double a) { return Hamiltonian(std::make_shared<DiagExpSource>(a)); }

Hamiltonian make_power_log(double alpha, double alpha1, double alpha2) {
    if (!(alpha > 1.0)) throw InputError("power-log requires alpha > 1");
    return Hamiltonian(std::make_shared<PowerLogSource>(alpha, alpha1, alpha2));
}

Hamiltonian make_rank_one_power_log(double alpha1, double alpha2) {
    if (!(alpha1 > 0.0)) throw InputError("rank-one-power-log requires alpha1 > 0");
    return Hamiltonian(std::make_shared<RankOneSource>(alpha1, alpha2));
}

Hamiltonian make_string_rank_one(double alpha1, double alpha2, double alpha) {
    if (!(alpha > 1.0)) throw InputError("string-rank-one requires alpha > 1");
    return Hamiltonian(std::make_shared<StringRankOneSource>(alpha, alpha1, alpha2));
}

Hamiltonian make_table(std::vector<double> breakpoints, std::vector<MatrixValue> cells) {
    check_breakpoints(breakpoints, cells.size());
    TableData d;
    d.len.resize(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) d.len[i] = breakpoints[i + 1] - breakpoints[i];
    d.t = std::move(breakpoints);
    d.cells = std::move(cells);
    return table_from(d);
}

namespace {

double num(const json& v, const char* what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
    }
    throw InputError(std::string("expected a number for ") + what);
}

double param(const json& p, const char* key, std::optional<double> def = std::nullopt) {
    if (p.is_object() && p.contains(key)) return num(p.at(key), key);
    if (def) return *def;
    throw InputError(std::string("missing parameter '") + key + "'");
}

}  // namespace

Hamiltonian hamiltonian_from_json(const json& j) {
    if (!j.is_object()) throw InputError("Hamiltonian spec must be a JSON object");
    if (!j.contains("interval") || !j["interval"].is_array() || j["interval"].size() != 2)
        throw InputError("'interval' must be [a, b]");
    double a = num(j["interval"][0], "interval"), b = num(j["interval"][1], "interval");
    if (!(b > a)) throw InputError("interval must satisfy a < b");
    std::string kind = j.value("kind", "");
    if (kind == "family") {
        std::string name = j.contains("family") ? j["family"].get<std::string>()
                                                : j.value("name", std::string());
        json p = j.value("params", json::object());
        auto unit = [&] {
            if (a != 0.0 || b != 1.0) throw InputError(name + " lives on [0,1)");
        };
        if (name == "constant") {
            double h1, h2, h3;
            if (p.is_array()) {
                if (p.size() != 3) throw InputError("constant needs 3 reals");
                h1 = num(p[0], "h1"); h2 = num(p[1], "h2"); h3 = num(p[2], "h3");
            } else {
                h1 = param(p, "h1"); h2 = param(p, "h2"); h3 = param(p, "h3", 0.0);
            }
            return make_constant(h1, h2, h3, a, b);
        }
        if (name == "diag-exp") {
            if (!std::isinf(b)) throw InputError("diag-exp lives on [a,inf)");
            return make_diag_exp(a);
        }
        if (name == "power-log") {
            unit();
            return make_power_log(param(p, "alpha"), param(p, "alpha1", 0.0), param(p, "alpha2", 0.0));
        }
        if (name == "rank-one-power-log") {
            unit();
            return make_rank_one_power_log(param(p, "alpha1"), param(p, "alpha2", 0.0));
        }
        if (name == "string-rank-one") {
            unit();
            return make_string_rank_one(param(p, "alpha1", 0.0), param(p, "alpha2", 0.0),
                                        param(p, "alpha", 2.0));
        }
        throw InputError("unknown family '" + name + "'");
    }
    if (kind == "table") {
        if (!j.contains("breakpoints") || !j.contains("values"))
            throw InputError("table needs 'breakpoints' and 'values'");
        std::vector<double> t;
        for (auto& v : j["breakpoints"]) t.push_back(num(v, "breakpoint"));
        std::vector<MatrixValue> cells;
        for (auto& v : j["values"]) {
            if (!v.is_array() || v.size() != 3) throw InputError("table values are [h1,h2,h3]");
            cells.push_back({num(v[0], "h1"), num(v[1], "h2"), num(v[2], "h3")});
        }
        if (t.empty() || t.front() != a || t.back() != b)
            throw InputError("table breakpoints must start at a and end at b");
        return make_table(std::move(t), std::move(cells));
    }
    throw InputError("'kind' must be \"family\" or \"table\"");
}

Hamiltonian load_hamiltonian(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("malformed JSON in " + path + ": " + e.what());
    }
    return hamiltonian_from_json(j);
}

// ---------------------------------------------------------------- evaluation

namespace {
void check_domain(const Hamiltonian& H, double t) {
    if (!(t >= H.a() && t < H.b())) throw DomainError("t outside [a,b)");
}
}  // namespace

MatrixValue eval(const Hamiltonian& H, double t) {
    check_domain(H, t);
    return H.source().value(H.at(t));
}
MatrixValue eval(const Hamiltonian& H, const Point& p) { return H.source().value(p); }

double tail_h1(const Hamiltonian& H, double t) {
    if (!(t >= H.a() && t <= H.b())) throw DomainError("t outside [a,b]");
    return tail_h1(H, H.at(t));
}
double tail_h1(const Hamiltonian& H, const Point& p) {
    if (!H.normalized()) throw PreconditionError("tail_h1 requires int_a^b h1 < inf");
    return H.source().tail(Entry::H1, p);
}

double head_integral(const Hamiltonian& H, int j, double t) {
    if (!(t >= H.a() && t < H.b())) throw DomainError("t outside [a,b)");
    return head_integral(H, j, H.at(t));
}
double head_integral(const Hamiltonian& H, int j, const Point& p) {
    if (j < 1 || j > 3) throw DomainError("entry index must be 1, 2 or 3");
    return H.source().integral(Entry(j), H.start(), p);
}

double integral(const Hamiltonian& H, Entry e, const Point& x, const Point& y) {
    return H.source().integral(e, x, y);
}

double det_sqrt_integral(const Hamiltonian& H, double c) {
    if (!(c >= H.a() && c <= H.b())) throw DomainError("c outside [a,b]");
    return det_sqrt_integral(H, H.b_infinite() && std::isinf(c) ? Point{kInf, kInf} : H.at(c));
}
double det_sqrt_integral(const Hamiltonian& H, const Point& c) {
    return H.source().integral(Entry::SqrtDet, H.start(), c);
}

Point invert_tail(const Hamiltonian& H, double tau) {
    const Source& s = H.source();
    double total = s.tail(Entry::H1, H.start());
    if (!std::isfinite(total)) throw PreconditionError("tail inversion requires int h1 < inf");
    if (tau >= total) return H.start();
    if (tau <= 0.0) return H.b_infinite() ? Point{kInf, kInf} : Point{H.b(), 0.0};
    if (auto p = s.point_at_tail(tau)) return *p;
    // bisection for the leftmost point with tail <= tau: in log-gap when b is
    // finite, otherwise on t after bracketing
    auto tail_at = [&](const Point& p) { return s.tail(Entry::H1, p); };
    if (!H.b_infinite()) {
        double lo = std::log(H.b() - H.a()), hi = lo - 1.0;
        while (tail_at(H.at_gap(std::exp(hi))) > tau) {
            hi = lo - 2.0 * (lo - hi);
            if (hi < -745.0) throw DegenerateTailError("h1 tail does not reach the requested level");
        }
        for (int it = 0; it < 200 && lo - hi > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
            double mid = 0.5 * (lo + hi);
            if (tail_at(H.at_gap(std::exp(mid))) > tau) lo = mid; else hi = mid;
        }
        return H.at_gap(std::exp(hi));
    }
    double lo = H.a(), step = 1.0, hi = lo + step;
    while (tail_at(H.at(hi)) > tau) {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if (step > 1e300) throw DegenerateTailError("h1 tail does not reach the requested level");
    }
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        if (tail_at(H.at(mid)) > tau) lo = mid; else hi = mid;
    }
    return H.at(hi);
}

double integrate(const Hamiltonian& H, const Point& x, const Point& y,
                 const std::function<double(const Point&)>& f, double rel_tol) {
    const Source& s = H.source();
    if (!H.b_infinite() && s.singular_end()) {
        double b = H.b();
        double u0 = -std::log(x.gap), u1 = y.gap <= 0.0 ? kInf : -std::log(y.gap);
        return gk([&](double u) {
            double g = std::exp(-u);
            return f(Point{b - g, g}) * g;
        }, u0, u1, rel_tol, 2.0);
    }
    if (std::isinf(y.t)) {
        double a = x.t;
        return gk([&](double s_) {
            double t = a + (1.0 - s_) / s_;
            return f(H.at(t)) / (s_ * s_);
        }, 0.0, 1.0, rel_tol);
    }
    return gk([&](double t) { return f(H.at(t)); }, x.t, y.t, rel_tol);
}

// ---------------------------------------------------------------- transforms

Hamiltonian diag(const Hamiltonian& H) {
    const Source& s = H.source();
    if (s.diagonal()) return H;
    if (auto* t = s.table()) {
        TableData d = *t;
        for (auto& c : d.cells) c.h3 = 0.0;
        return table_from(d);
    }
    if (auto* c = dynamic_cast<const ConstantSource*>(&s)) {
        auto m = c->matrix();
        return make_constant(m.h1, m.h2, 0.0, s.a(), s.b());
    }
    if (auto* r = dynamic_cast<const RankOneSource*>(&s))
        return make_power_log(2.0, r->core().alpha1(), r->core().alpha2());
    return Hamiltonian(std::make_shared<DiagSource>(H.source_ptr()));
}

MatrixValue rotate_value(const MatrixValue& m, double alpha) {
    double c = std::cos(alpha), s = std::sin(alpha);
    // N = [[c,s],[-s,c]],  N m N^T
    return {c * c * m.h1 + 2 * c * s * m.h3 + s * s * m.h2,
            s * s * m.h1 - 2 * c * s * m.h3 + c * c * m.h2,
            -c * s * m.h1 + (c * c - s * s) * m.h3 + c * s * m.h2};
}

Hamiltonian rotate(const Hamiltonian& H, double alpha) {
    auto base = H.source().rotation_base();
    double angle = alpha;
    if (base) angle += H.source().rotation_angle();
    else base = H.source_ptr();
    if (angle == 0.0) return Hamiltonian(base);
    if (auto* t = base->table()) {
        TableData d = *t;
        for (auto& c : d.cells) c = rotate_value(c, angle);
        return table_from(d, base, angle);
    }
    if (auto* c = dynamic_cast<const ConstantSource*>(base.get()))
        return Hamiltonian(std::make_shared<ConstantSource>(rotate_value(c->matrix(), angle),
                                                            base->a(), base->b(), base, angle));
    double co = std::cos(angle), si = std::sin(angle);
    return Hamiltonian(std::make_shared<CongruenceSource>(base, co, si, -si, co,
                                                          "rotation by " + fmt(angle), base, angle));
}

Hamiltonian scale(const Hamiltonian& H, double s) {
    if (!(s > 0.0)) throw InputError("scale factor must be positive");
    return Hamiltonian(std::make_shared<ScaledSource>(H.source_ptr(), s));
}

Hamiltonian swap_entries(const Hamiltonian& H) {
    return Hamiltonian(std::make_shared<CongruenceSource>(H.source_ptr(), 0.0, -1.0, 1.0, 0.0,
                                                          "J-conjugate"));
}

bool is_psd(const MatrixValue& m, double tol) {
    if (!(std::isfinite(m.h1) && std::isfinite(m.h2) && std::isfinite(m.h3))) return false;
    // minors are compared in absolute terms for O(1) entries and relative to
    // the entry size beyond that, where the determinant carries rounding noise
    double dscale = std::max({1.0, std::abs(m.h1 * m.h2), m.h3 * m.h3});
    return m.h1 >= -tol && m.h2 >= -tol && m.det() >= -tol * dscale;
}

SqrtTriple sqrt_of(const MatrixValue& m) {
    if (!is_psd(m)) throw InputError("square root of a matrix that is not positive semidefinite");
    double tr = m.trace();
    if (tr <= 0.0) return {};
    if (m.h3 == 0.0) return {std::sqrt(std::max(0.0, m.h1)), std::sqrt(std::max(0.0, m.h2)), 0.0};
    double sd = std::sqrt(std::max(0.0, m.det()));
    double den = std::sqrt(tr + 2.0 * sd);
    return {(m.h1 + sd) / den, (m.h2 + sd) / den, m.h3 / den};
}

SqrtTriple sqrt_at(const Hamiltonian& H, double t) { return sqrt_of(eval(H, t)); }
SqrtTriple sqrt_at(const Hamiltonian& H, const Point& p) { return sqrt_of(eval(H, p)); }

Hamiltonian sample_table(const Hamiltonian& H, const std::vector<Point>& br, CellRule rule) {
    if (br.size() < 2) throw InputError("sampling needs at least two breakpoints");
    TableData d;
    bool fin = !H.b_infinite();
    for (size_t i = 0; i + 1 < br.size(); ++i) {
        const Point &x = br[i], &y = br[i + 1];
        double len = fin ? x.gap - y.gap : y.t - x.t;
        if (!(len > 0.0) || !(y.t > x.t)) throw InputError("sampling breakpoints must strictly increase");
        MatrixValue v;
        if (rule == CellRule::average) {
            v = {integral(H, Entry::H1, x, y) / len, integral(H, Entry::H2, x, y) / len,
                 integral(H, Entry::H3, x, y) / len};
        } else {
            Point mid = fin ? H.at_gap(0.5 * (x.gap + y.gap)) : H.at(0.5 * (x.t + y.t));
            v = eval(H, mid);
        }
        d.t.push_back(x.t);
        d.len.push_back(len);
        d.cells.push_back(v);
    }
    d.t.push_back(br.back().t);
    return table_from(d);
}

std::vector<Point> clustered_grid(const Hamiltonian& H, const Point& c, int cells) {
    if (cells < 1) throw InputError("grid needs at least one cell");
    bool fin = !H.b_infinite();
    auto lerp = [&](const Point& x, const Point& y, double s) {
        if (fin) return H.at_gap(x.gap + s * (y.gap - x.gap));
        return H.at(x.t + s * (y.t - x.t));
    };
    auto uniform = [&](const Point& x, const Point& y, int n, std::vector<Point>& out) {
        for (int k = 0; k < n; ++k) out.push_back(lerp(x, y, double(k) / n));
    };
    std::vector<Point> out;
    Point a = H.start();
    bool cluster = H.normalized() && (H.b_infinite() || H.source().singular_end());
    std::vector<Point> levels{a};
    if (cluster) {
        double ta = H.source().tail(Entry::H1, a), tc = H.source().tail(Entry::H1, c);
        int K = tc > 0.0 ? static_cast<int>(std::floor(std::log2(ta / tc) + 1e-9)) : 0;
        for (int n = 1; n <= K; ++n) levels.push_back(invert_tail(H, std::ldexp(ta, -n)));
        // drop a last level that coincides with c
        if (levels.size() > 1) {
            const Point& l = levels.back();
            double d = fin ? l.gap - c.gap : c.t - l.t;
            if (d <= 1e-12 * (fin ? c.gap : std::max(1.0, std::abs(c.t)))) levels.pop_back();
        }
    }
    levels.push_back(c);
    if (levels.size() <= 2) {
        uniform(a, c, cells, out);
        out.push_back(c);
        return out;
    }
    int segs = static_cast<int>(levels.size()) - 2;
    int sub = std::max(8, (cells / 2) / segs);
    int head = std::max(1, cells - sub * segs);
    uniform(levels[0], levels[1], head, out);
    for (size_t k = 1; k + 1 < levels.size(); ++k) uniform(levels[k], levels[k + 1], sub, out);
    out.push_back(c);
    return out;
}

Hamiltonian reparametrize_trace(const Hamiltonian& H, int resolution, int levels) {
    const Source& s = H.source();
    if (auto* c = dynamic_cast<const ConstantSource*>(&s)) {
        auto m = c->matrix();
        double tr = m.trace();
        if (!(tr > 0.0)) throw PreconditionError("trace vanishes identically");
        double len = H.b_infinite() ? kInf : tr * (H.b() - H.a());
        return make_constant(m.h1 / tr, m.h2 / tr, m.h3 / tr, 0.0, len);
    }
    // (average value, length) per cell in the original variable
    std::vector<std::pair<MatrixValue, double>> raw;
    if (const TableData* t = s.table()) {
        for (size_t i = 0; i < t->cells.size(); ++i) raw.push_back({t->cells[i], t->len[i]});
    } else {
        if (!H.limit_point()) throw PreconditionError("trace reparametrization needs the limit point case");
        Point c = H.normalized() ? invert_tail(H, std::ldexp(s.tail(Entry::H1, H.start()), -levels))
                                 : H.at(H.a() + levels);
        // integrated cell by cell in the source's own coordinates: near a finite b
        // the cells can be narrower than the resolution of t
        auto br = clustered_grid(H, c, resolution);
        bool fin = !H.b_infinite();
        for (size_t i = 0; i + 1 < br.size(); ++i) {
            const Point &x = br[i], &y = br[i + 1];
            double len = fin ? x.gap - y.gap : y.t - x.t;
            raw.push_back({{integral(H, Entry::H1, x, y) / len, integral(H, Entry::H2, x, y) / len,
                            integral(H, Entry::H3, x, y) / len},
                           len});
        }
    }
    TableData d;
    double x = 0.0;
    d.t.push_back(0.0);
    for (const auto& [m, len0] : raw) {
        double tr = m.trace();
        if (!(tr > 0.0)) continue;
        double len = len0 * tr;
        x = std::isinf(len) ? kInf : x + len;
        d.len.push_back(len);
        d.cells.push_back({m.h1 / tr, m.h2 / tr, m.h3 / tr});
        d.t.push_back(x);
    }
    if (d.cells.empty()) throw PreconditionError("trace vanishes identically");
    return table_from(d);
}

// ---------------------------------------------------------------- validate

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.passed || c.informational; });
}

json ValidationReport::to_json() const {
    json arr = json::array();
    for (auto& c : checks)
        arr.push_back({{"check", c.name}, {"pass", c.passed}, {"informational", c.informational},
                       {"detail", c.detail}});
    return {{"ok", ok()}, {"checks", arr}};
}

ValidationReport validate(const Hamiltonian& H) {
    ValidationReport r;
    const Source& s = H.source();
    std::vector<Point> samples;
    if (auto* t = s.table()) {
        for (size_t i = 0; i < t->cells.size(); ++i) samples.push_back(H.at(t->t[i]));
    } else if (!H.b_infinite() && s.singular_end()) {
        for (int k = 0; k < 2000; ++k) samples.push_back(H.at_gap(std::exp(-80.0 * k / 2000.0)));
    } else if (H.b_infinite()) {
        for (int k = 0; k < 2000; ++k) samples.push_back(H.at(H.a() + 200.0 * k / 2000.0));
    } else {
        for (int k = 0; k < 2000; ++k) samples.push_back(H.at(H.a() + (H.b() - H.a()) * k / 2000.0));
    }

    ValidationCheck psd{"psd", true, false, "H(t) >= 0 at all samples"};
    for (auto& p : samples) {
        auto m = s.value(p);
        if (!is_psd(m)) {
            psd.passed = false;
            psd.detail = "h3^2 > h1*h2 or negative diagonal at t=" + fmt(p.t);
            break;
        }
    }
    r.checks.push_back(psd);

    ValidationCheck integ{"local_integrability", true, false, "finite integrals on [a,c] for c < b"};
    std::vector<Point> ends;
    if (auto* t = s.table()) {
        for (size_t i = 1; i + 1 < t->t.size(); ++i) ends.push_back(H.at(t->t[i]));
        if (!H.b_infinite()) ends.push_back(Point{H.b(), 0.0});
        else if (t->t.size() >= 2) ends.push_back(H.at(t->t[t->t.size() - 2] + 1.0));
    } else if (!H.b_infinite()) {
        for (int k = 1; k <= 40; ++k) ends.push_back(H.at_gap((H.b() - H.a()) * std::ldexp(1.0, -k)));
    } else {
        for (int k = 0; k <= 8; ++k) ends.push_back(H.at(H.a() + std::ldexp(1.0, k)));
    }
    for (auto& c : ends) {
        for (Entry e : {Entry::H1, Entry::H2, Entry::H3}) {
            double v = s.integral(e, H.start(), c);
            if (!std::isfinite(v)) {
                integ.passed = false;
                integ.detail = "non-finite integral up to t=" + fmt(c.t);
            }
        }
    }
    r.checks.push_back(integ);

    ValidationCheck lp{"limit_point", H.limit_point(), s.limit_point_is_heuristic(),
                       s.limit_point_is_heuristic() ? "heuristic for tables: unbounded last cell"
                                                    : "int tr H = inf"};
    r.checks.push_back(lp);

    bool norm = H.normalized();
    r.checks.push_back({"normalization", norm, true,
                        norm ? "int h1 < inf" : "int h1 = inf (criterion engines need it finite)"});
    return r;
}

}  // namespace cansys
