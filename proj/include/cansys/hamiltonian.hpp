#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cansys {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPsdTol = 1e-12;

// A location in [a,b).  When b is finite, gap = b - t is carried separately so
// that points extremely close to b keep full relative precision; families with
// a singularity at b evaluate from the gap.  When b is infinite, gap = +inf.
struct Point {
    double t = 0;
    double gap = kInf;
};

// Symmetric 2x2 matrix [[h1,h3],[h3,h2]].
struct MatrixValue {
    double h1 = 0, h2 = 0, h3 = 0;
    double trace() const { return h1 + h2; }
    double det() const { return h1 * h2 - h3 * h3; }
};

// Entries of H^{1/2} = [[v1,v3],[v3,v2]].
struct SqrtTriple {
    double v1 = 0, v2 = 0, v3 = 0;
};

// Integrand selectors for Source::integral / tail.  SqrtDet is sqrt(det H).
enum class Entry { H1 = 1, H2 = 2, H3 = 3, SqrtDet = 4 };

// Piecewise-constant data: breakpoints t[0] < ... < t[N] (t[N] may be +inf),
// cell i is [t[i], t[i+1]) with value cells[i].  len[i] is the exact cell
// length (may differ from t[i+1]-t[i] in the last bits when sampled from gaps).
struct TableData {
    std::vector<double> t;
    std::vector<double> len;
    std::vector<MatrixValue> cells;
};

// Internal polymorphic representation of an H.  Users work with Hamiltonian.
class Source {
public:
    Source(double a, double b) : a_(a), b_(b) {}
    virtual ~Source() = default;

    double a() const { return a_; }
    double b() const { return b_; }

    virtual MatrixValue value(const Point& p) const = 0;
    // Integral of the selected entry over [x,y], x <= y.
    virtual double integral(Entry e, const Point& x, const Point& y) const = 0;
    // Integral over [x,b); may be +-inf.
    virtual double tail(Entry e, const Point& x) const = 0;
    // Infimum of {p : tail(H1,p) = tau}, if a closed form is available.
    virtual std::optional<Point> point_at_tail(double tau) const;

    virtual bool limit_point() const = 0;
    virtual bool limit_point_is_heuristic() const { return false; }
    virtual bool diagonal() const { return false; }
    virtual bool singular_end() const { return false; }
    virtual bool constant() const { return false; }
    virtual const TableData* table() const { return nullptr; }
    virtual std::string describe() const = 0;

    // Rotation bookkeeping so that rotate(rotate(H,x),-x) returns H itself.
    virtual std::shared_ptr<const Source> rotation_base() const { return nullptr; }
    virtual double rotation_angle() const { return 0.0; }

private:
    double a_, b_;
};

class Hamiltonian {
public:
    Hamiltonian() = default;
    explicit Hamiltonian(std::shared_ptr<const Source> src) : src_(std::move(src)) {}

    double a() const { return src_->a(); }
    double b() const { return src_->b(); }
    bool b_infinite() const { return b() == kInf; }
    bool is_table() const { return src_->table() != nullptr; }
    const TableData* table() const { return src_->table(); }
    const Source& source() const { return *src_; }
    const std::shared_ptr<const Source>& source_ptr() const { return src_; }
    std::string describe() const { return src_->describe(); }

    Point at(double t) const { return {t, b_infinite() ? kInf : b() - t}; }
    Point at_gap(double gap) const { return {b() - gap, gap}; }
    Point start() const { return at(a()); }

    bool normalized() const;
    bool limit_point() const { return src_->limit_point(); }

private:
    std::shared_ptr<const Source> src_;
};

// ---- construction -------------------------------------------------------

Hamiltonian make_constant(double h1, double h2, double h3, double a = 0.0, double b = kInf);
Hamiltonian make_diag_exp(double a = 0.0);
Hamiltonian make_power_log(double alpha, double alpha1, double alpha2);
Hamiltonian make_rank_one_power_log(double alpha1, double alpha2);
Hamiltonian make_string_rank_one(double alpha1, double alpha2, double alpha = 2.0);
// Breakpoints t0 < ... < tN (tN may be +inf), one value per cell.
Hamiltonian make_table(std::vector<double> breakpoints, std::vector<MatrixValue> cells);

Hamiltonian hamiltonian_from_json(const nlohmann::json& j);
Hamiltonian load_hamiltonian(const std::string& path);

// ---- evaluation and integrals ---------------------------------------------

MatrixValue eval(const Hamiltonian& H, double t);
MatrixValue eval(const Hamiltonian& H, const Point& p);

double tail_h1(const Hamiltonian& H, double t);
double tail_h1(const Hamiltonian& H, const Point& p);

// j in {1,2,3}: integral of h_j over [a,t].
double head_integral(const Hamiltonian& H, int j, double t);
double head_integral(const Hamiltonian& H, int j, const Point& p);

double integral(const Hamiltonian& H, Entry e, const Point& x, const Point& y);

double det_sqrt_integral(const Hamiltonian& H, double c);
double det_sqrt_integral(const Hamiltonian& H, const Point& c);

// Smallest point p with tail_h1(p) = tau (0 < tau <= tail_h1(a)).
Point invert_tail(const Hamiltonian& H, double tau);

// Adaptive quadrature of f over [x,y] in the coordinate natural to H:
// log-gap near a finite singular b, a reciprocal substitution for y = +inf.
double integrate(const Hamiltonian& H, const Point& x, const Point& y,
                 const std::function<double(const Point&)>& f, double rel_tol = 1e-10);

// ---- transformations ------------------------------------------------------

Hamiltonian diag(const Hamiltonian& H);
Hamiltonian rotate(const Hamiltonian& H, double alpha);
Hamiltonian scale(const Hamiltonian& H, double s);
// [[h2,-h3],[-h3,h1]], i.e. J H J^T.
Hamiltonian swap_entries(const Hamiltonian& H);

MatrixValue rotate_value(const MatrixValue& m, double alpha);
SqrtTriple sqrt_of(const MatrixValue& m);
SqrtTriple sqrt_at(const Hamiltonian& H, double t);
SqrtTriple sqrt_at(const Hamiltonian& H, const Point& p);
bool is_psd(const MatrixValue& m, double tol = kPsdTol);

enum class CellRule { average, midpoint };
// Piecewise-constant resampling on the given breakpoints (strictly increasing).
Hamiltonian sample_table(const Hamiltonian& H, const std::vector<Point>& breaks,
                         CellRule rule = CellRule::average);

// Breakpoints on [a, c]: tail-halving levels of h1 (when normalized), `sub`
// equal subcells per level, `head` cells before the first level.  Falls back
// to a uniform grid when H is regular at b or not normalized.
std::vector<Point> clustered_grid(const Hamiltonian& H, const Point& c, int cells);

// Trace-normalizing change of variable x = int_a^t tr H.  Families are first
// sampled with `resolution` cells down to tail level `levels`.
Hamiltonian reparametrize_trace(const Hamiltonian& H, int resolution = 4096, int levels = 48);

// ---- validation -----------------------------------------------------------

struct ValidationCheck {
    std::string name;
    bool passed = false;
    bool informational = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool ok() const;
    nlohmann::json to_json() const;
};

ValidationReport validate(const Hamiltonian& H);

}  // namespace cansys
