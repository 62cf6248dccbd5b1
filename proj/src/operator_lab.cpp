#include "cansys/operator_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cansys/dyadic.hpp"
#include "cansys/errors.hpp"

namespace cansys {

// ------------------------------------------------------------------ matrix

DenseMatrix DenseMatrix::identity(size_t n) {
    DenseMatrix I(n, n);
    for (size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix T(cols, rows);
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) T(j, i) = (*this)(i, j);
    return T;
}

bool DenseMatrix::finite() const {
    return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

// -------------------------------------------------------------------- grids

double Grid::width(size_t i) const {
    if (gap_coords) return nodes[i].gap - nodes[i + 1].gap;
    return nodes[i + 1].t - nodes[i].t;
}

Point Grid::midpoint(size_t i) const {
    const Point &x = nodes[i], &y = nodes[i + 1];
    if (gap_coords) {
        double g = 0.5 * (x.gap + y.gap);
        return {x.t + (x.gap - g), g};
    }
    return {0.5 * (x.t + y.t), kInf};
}

namespace {

void check_grid(const Grid& g) {
    if (g.cells() < 2) throw InputError("grid needs at least 2 cells");
    for (size_t i = 0; i < g.cells(); ++i)
        if (!(g.width(i) > 0.0) || !std::isfinite(g.width(i)))
            throw InputError("grid nodes must be finite and strictly increasing");
}

}  // namespace

Grid make_grid(std::vector<double> t) {
    Grid g;
    for (double x : t) g.nodes.push_back({x, kInf});
    check_grid(g);
    return g;
}

Grid make_grid(const Hamiltonian& H, std::vector<Point> nodes) {
    Grid g;
    g.nodes = std::move(nodes);
    g.gap_coords = !H.b_infinite();
    check_grid(g);
    if (g.nodes.front().t < H.a() || g.nodes.back().t > H.b())
        throw InputError("grid leaves the interval [a,b)");
    return g;
}

Grid uniform_grid(const Hamiltonian& H, const Point& c, int cells) {
    if (cells < 2) throw InputError("grid needs at least 2 cells");
    std::vector<Point> n;
    Point a = H.start();
    for (int k = 0; k < cells; ++k) {
        double s = double(k) / cells;
        n.push_back(H.b_infinite() ? H.at(a.t + s * (c.t - a.t)) : H.at_gap(a.gap + s * (c.gap - a.gap)));
    }
    n.push_back(c);
    return make_grid(H, std::move(n));
}

Grid dyadic_grid(const Hamiltonian& H, int depth, int sub, int head) {
    if (sub < 1) throw InputError("need at least one subcell per dyadic cell");
    auto c = dyadic_points(H, depth);
    bool fin = !H.b_infinite();
    std::vector<Point> nodes;
    std::vector<int> block;
    for (int n = 1; n <= depth; ++n) {
        int k = (n == 1 && head > 0) ? head : sub;
        const Point &x = c[n - 1], &y = c[n];
        for (int s = 0; s < k; ++s) {
            double u = double(s) / k;
            nodes.push_back(fin ? H.at_gap(x.gap + u * (y.gap - x.gap)) : H.at(x.t + u * (y.t - x.t)));
            block.push_back(n - 1);
        }
    }
    nodes.push_back(c[depth]);
    Grid g = make_grid(H, std::move(nodes));
    g.block = std::move(block);
    return g;
}

// ------------------------------------------------------------ discretization

KernelOperator discretize_T(const Factor& kappa, const Factor& phi, const Grid& grid, DiagonalRule rule) {
    check_grid(grid);
    KernelOperator K;
    K.grid = grid;
    size_t M = grid.cells();
    std::vector<double> rw(M);
    for (size_t i = 0; i < M; ++i) {
        Point p = grid.midpoint(i);
        K.kappa.push_back(kappa(p));
        K.phi.push_back(phi(p));
        rw[i] = std::sqrt(grid.width(i));
    }
    K.matrix = DenseMatrix(M, M);
    for (size_t i = 0; i < M; ++i) {
        double fi = K.phi[i] * rw[i];
        for (size_t j = i + 1; j < M; ++j) K.matrix(i, j) = fi * K.kappa[j] * rw[j];
        if (rule == DiagonalRule::half) K.matrix(i, i) = 0.5 * fi * K.kappa[i] * rw[i];
    }
    if (!K.matrix.finite()) throw NumericalError("kernel matrix has non-finite entries");
    return K;
}

KernelOperator discretize_T(const Hamiltonian& H, const Grid& grid, DiagonalRule rule) {
    return discretize_T([&](const Point& p) { return std::sqrt(std::max(0.0, eval(H, p).h1)); },
                        [&](const Point& p) { return std::sqrt(std::max(0.0, eval(H, p).h2)); }, grid,
                        rule);
}

DenseMatrix discretize_KH(const Hamiltonian& H, const Grid& grid, DiagonalRule rule) {
    check_grid(grid);
    size_t M = grid.cells();
    std::vector<SqrtTriple> v(M);
    std::vector<double> rw(M);
    for (size_t i = 0; i < M; ++i) {
        v[i] = sqrt_at(H, grid.midpoint(i));
        rw[i] = std::sqrt(grid.width(i));
    }
    DenseMatrix K(2 * M, 2 * M);
    for (size_t i = 0; i < M; ++i) {
        for (size_t j = 0; j < M; ++j) {
            // each product is formed as ((x sqrt(D_p)) y) sqrt(D_q) with p the smaller
            // cell index, the order used by discretize_T; K stays exactly symmetric and
            // a diagonal H reproduces the block form of T bit for bit
            auto P = [&](double x, size_t p, double y, size_t q) { return ((x * rw[p]) * y) * rw[q]; };
            // i > j: H^{1/2}(t_i) e1 e2^T H^{1/2}(t_j);  i < j: e2 e1^T
            double b00 = 0, b01 = 0, b10 = 0, b11 = 0;
            auto lower = [&](double s) {
                b00 += s * P(v[j].v3, j, v[i].v1, i);
                b01 += s * P(v[j].v2, j, v[i].v1, i);
                b10 += s * P(v[j].v3, j, v[i].v3, i);
                b11 += s * P(v[j].v2, j, v[i].v3, i);
            };
            auto upper = [&](double s) {
                b00 += s * P(v[i].v3, i, v[j].v1, j);
                b01 += s * P(v[i].v3, i, v[j].v3, j);
                b10 += s * P(v[i].v2, i, v[j].v1, j);
                b11 += s * P(v[i].v2, i, v[j].v3, j);
            };
            if (i > j) lower(1.0);
            else if (i < j) upper(1.0);
            else if (rule == DiagonalRule::half) {
                lower(0.5);
                upper(0.5);
            }
            K(2 * i, 2 * j) = -b00;
            K(2 * i, 2 * j + 1) = -b01;
            K(2 * i + 1, 2 * j) = -b10;
            K(2 * i + 1, 2 * j + 1) = -b11;
        }
    }
    if (!K.finite()) throw NumericalError("kernel matrix has non-finite entries");
    return K;
}

DenseMatrix deinterleave(const DenseMatrix& K) {
    if (K.rows != K.cols || K.rows % 2) throw InputError("deinterleave needs a square matrix of even size");
    size_t M = K.rows / 2;
    auto idx = [M](size_t k) { return (k % 2) * M + k / 2; };
    DenseMatrix R(K.rows, K.cols);
    for (size_t i = 0; i < K.rows; ++i)
        for (size_t j = 0; j < K.cols; ++j) R(idx(i), idx(j)) = K(i, j);
    return R;
}

DenseMatrix real_part(const DenseMatrix& A) {
    if (A.rows != A.cols) throw InputError("real part needs a square matrix");
    DenseMatrix R(A.rows, A.cols);
    for (size_t i = 0; i < A.rows; ++i)
        for (size_t j = 0; j < A.cols; ++j) R(i, j) = 0.5 * (A(i, j) + A(j, i));
    return R;
}

// ---------------------------------------------------------------------- SVD

namespace {

// Four partial sums so the compiler can keep independent chains in flight.
double dot(const double* x, const double* y, size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += x[k] * y[k];
        s1 += x[k + 1] * y[k + 1];
        s2 += x[k + 2] * y[k + 2];
        s3 += x[k + 3] * y[k + 3];
    }
    for (; k < n; ++k) s0 += x[k] * y[k];
    return (s0 + s1) + (s2 + s3);
}

// Householder QR with column pivoting of X = W^T, where the columns of X are the
// rows of W (contiguous).  Returns the leading rows of R, stopping once the
// Frobenius norm of the trailing block falls below 1e-15 of |R_00|.
DenseMatrix pivoted_r(DenseMatrix W) {
    const size_t m = W.rows, n = W.cols;
    auto col = [&](size_t j) { return W.data.data() + j * n; };
    std::vector<double> pn(m), pn0(m);
    for (size_t j = 0; j < m; ++j) {
        pn[j] = pn0[j] = std::sqrt(dot(col(j), col(j), n));
    }
    std::vector<double> v(n);
    size_t rank = 0;
    double r00 = 0;
    const size_t steps = std::min(m, n);
    for (size_t k = 0; k < steps; ++k) {
        size_t p = k;
        double rest = 0;
        for (size_t j = k; j < m; ++j) {
            if (pn[j] > pn[p]) p = j;
            rest += pn[j] * pn[j];
        }
        if (k > 0 && std::sqrt(rest) <= 1e-15 * r00) break;
        if (pn[p] == 0.0) break;
        if (p != k) {
            std::swap_ranges(col(k), col(k) + n, col(p));
            std::swap(pn[k], pn[p]);
            std::swap(pn0[k], pn0[p]);
        }
        double* x = col(k);
        double nx = 0;
        for (size_t l = k; l < n; ++l) nx += x[l] * x[l];
        nx = std::sqrt(nx);
        double alpha = x[k] > 0 ? -nx : nx;
        for (size_t l = k; l < n; ++l) v[l] = x[l];
        v[k] -= alpha;
        double vv = 0;
        for (size_t l = k; l < n; ++l) vv += v[l] * v[l];
        x[k] = alpha;
        for (size_t l = k + 1; l < n; ++l) x[l] = 0.0;
        if (k == 0) r00 = std::abs(alpha);
        ++rank;
        if (vv == 0.0) continue;
        const double beta = 2.0 / vv;
        for (size_t j = k + 1; j < m; ++j) {
            double* y = col(j);
            double sdot = beta * dot(v.data() + k, y + k, n - k);
            for (size_t l = k; l < n; ++l) y[l] -= sdot * v[l];
            // norm downdate, recomputed when cancellation sets in
            if (pn[j] != 0.0) {
                double t = std::abs(y[k]) / pn[j];
                t = std::max(0.0, (1.0 + t) * (1.0 - t));
                double t2 = t * (pn[j] / pn0[j]) * (pn[j] / pn0[j]);
                if (t2 <= 1e-8) {
                    pn[j] = pn0[j] = std::sqrt(dot(y + k + 1, y + k + 1, n - k - 1));
                } else {
                    pn[j] *= std::sqrt(t);
                }
            }
        }
    }
    // R(k, j) = X(k, j) = entry k of column j, j >= k
    DenseMatrix R(rank, m);
    for (size_t k = 0; k < rank; ++k)
        for (size_t j = k; j < m; ++j) R(k, j) = col(j)[k];
    return R;
}

// Round-robin tournament (circle method) on players 0..n-1; a player paired
// with the bye slot n sits out.  Calls f(p, q) with p < q.
template <class F>
void round_robin(size_t n, F&& f) {
    size_t P = n + (n % 2);
    std::vector<size_t> ring(P);
    for (size_t k = 0; k < P; ++k) ring[k] = k;
    for (size_t round = 0; round + 1 < P; ++round) {
        for (size_t k = 0; k < P / 2; ++k) {
            size_t p = ring[k], q = ring[P - 1 - k];
            if (p < n && q < n) f(std::min(p, q), std::max(p, q));
        }
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
}

// One-sided Jacobi on the rows of W.  The cyclic ordering is a round-robin
// over blocks of kBlock rows: pairs inside each block, then every pair of
// blocks in tournament order, so that a block pair stays in cache.
RealSequence jacobi_rows(DenseMatrix& W) {
    const size_t m = W.rows, n = W.cols;
    if (m == 0) return {};
    constexpr double tol = 1e-12;
    constexpr size_t kBlock = 32;
    std::vector<double> nrm(m);
    auto row = [&](size_t i) { return W.data.data() + i * n; };
    const size_t nb = (m + kBlock - 1) / kBlock;

    for (int sweep = 0;; ++sweep) {
        if (sweep == 60) throw NumericalError("Jacobi SVD did not converge in 60 sweeps");
        double big = 0;
        for (size_t i = 0; i < m; ++i) {
            nrm[i] = dot(row(i), row(i), n);
            big = std::max(big, nrm[i]);
        }
        if (big == 0.0) break;
        // rows below this squared norm are rounding noise relative to the largest
        const double floor2 = big * 1e-34;
        bool rotated = false;
        auto pair = [&](size_t p, size_t q) {
            double a = nrm[p], b = nrm[q];
            if (a <= floor2 || b <= floor2) return;
            double* x = row(p);
            double* y = row(q);
            double g = dot(x, y, n);
            if (std::abs(g) <= tol * std::sqrt(a) * std::sqrt(b)) return;
            rotated = true;
            double zeta = (b - a) / (2.0 * g);
            double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
            double c = 1.0 / std::hypot(1.0, t), s = c * t;
            for (size_t l = 0; l < n; ++l) {
                double xl = x[l], yl = y[l];
                x[l] = c * xl - s * yl;
                y[l] = s * xl + c * yl;
            }
            nrm[p] = a - t * g;
            nrm[q] = b + t * g;
        };
        auto lo = [&](size_t I) { return I * kBlock; };
        auto hi = [&](size_t I) { return std::min(m, (I + 1) * kBlock); };
        for (size_t I = 0; I < nb; ++I)
            round_robin(hi(I) - lo(I), [&](size_t p, size_t q) { pair(lo(I) + p, lo(I) + q); });
        round_robin(nb, [&](size_t I, size_t J) {
            for (size_t p = lo(I); p < hi(I); ++p)
                for (size_t q = lo(J); q < hi(J); ++q) pair(p, q);
        });
        if (!rotated) break;
    }
    RealSequence s(m);
    for (size_t i = 0; i < m; ++i) s[i] = std::sqrt(dot(row(i), row(i), n));
    return s;
}

}  // namespace

RealSequence singular_values(const DenseMatrix& A) {
    if (!A.finite()) throw InputError("singular values need finite entries");
    size_t full = std::min(A.rows, A.cols);
    if (full == 0) return {};
    // rows of W span the smaller dimension
    DenseMatrix W = A.rows <= A.cols ? A : A.transpose();
    // two QR passes leave a square, strongly graded triangular factor on
    // which the Jacobi sweeps converge quickly
    DenseMatrix R = pivoted_r(pivoted_r(std::move(W)));
    RealSequence s = jacobi_rows(R);
    s.resize(full, 0.0);
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

// --------------------------------------------------------------- compression

std::vector<size_t> block_partition(const Grid& grid, size_t stride) {
    if (grid.block.size() != grid.cells()) throw InputError("grid carries no dyadic block labels");
    std::vector<size_t> b{0};
    for (size_t i = 1; i < grid.cells(); ++i)
        if (grid.block[i] != grid.block[i - 1]) b.push_back(i * stride);
    b.push_back(grid.cells() * stride);
    return b;
}

namespace {

RealSequence compress(const DenseMatrix& A, const std::vector<size_t>& part, bool re) {
    if (A.rows != A.cols) throw InputError("block compression needs a square matrix");
    if (part.size() < 2 || part.front() != 0 || part.back() != A.rows)
        throw InputError("partition does not match the matrix size");
    for (size_t k = 1; k < part.size(); ++k)
        if (part[k] <= part[k - 1]) throw InputError("partition must be strictly increasing");
    RealSequence out;
    for (size_t k = 0; k + 2 < part.size(); ++k) {
        size_t r0 = part[k], r1 = part[k + 1], c0 = part[k + 1], c1 = part[k + 2];
        DenseMatrix B(r1 - r0, c1 - c0);
        for (size_t i = r0; i < r1; ++i)
            for (size_t j = c0; j < c1; ++j)
                B(i - r0, j - c0) = re ? 0.5 * (A(i, j) + A(j, i)) : A(i, j);
        auto s = singular_values(B);
        out.insert(out.end(), s.begin(), s.end());
    }
    out.resize(A.rows, 0.0);
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

}  // namespace

RealSequence offdiag_block_singulars(const DenseMatrix& A, const std::vector<size_t>& partition) {
    return compress(A, partition, true);
}

RealSequence offdiag_block_singulars_raw(const DenseMatrix& A, const std::vector<size_t>& partition) {
    return compress(A, partition, false);
}

// -------------------------------------------------------------- independence

double decay_slope(const RealSequence& a, size_t lo, size_t hi) {
    if (lo < 1 || hi <= lo || hi > a.size()) throw InputError("fit range must satisfy 1 <= lo < hi <= size");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t k = 0;
    for (size_t n = lo; n <= hi; ++n) {
        if (!(a[n - 1] > 0.0)) throw NumericalError("zero singular value inside the fit range");
        double x = std::log(double(n)), y = std::log(a[n - 1]);
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++k;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

nlohmann::json IndependenceReport::to_json() const {
    return {{"slope_full", slope_full}, {"slope_diag", slope_diag}, {"difference", difference},
            {"fit_range", {fit_lo, fit_hi}}, {"cells", cells},
            {"singular_full", singular_full}, {"singular_diag", singular_diag}};
}

Grid independence_grid(const Hamiltonian& H, int cells) {
    if (cells < 8 || cells % 2) throw InputError("independence grid needs an even cell count >= 8");
    int dy = cells / 2;
    int sub = 4, depth = dy / sub;
    return dyadic_grid(H, depth, sub, cells - dy);
}

IndependenceReport independence_check(const Hamiltonian& H, const Grid& grid, size_t fit_lo, size_t fit_hi) {
    IndependenceReport r;
    r.fit_lo = fit_lo;
    r.fit_hi = fit_hi;
    r.cells = grid.cells();
    r.singular_full = singular_values(discretize_KH(H, grid, DiagonalRule::half));
    Hamiltonian D = diag(H);
    if (D.source_ptr() == H.source_ptr() || H.source().diagonal())
        r.singular_diag = r.singular_full;
    else
        r.singular_diag = singular_values(discretize_KH(D, grid, DiagonalRule::half));
    r.slope_full = decay_slope(r.singular_full, fit_lo, fit_hi);
    r.slope_diag = decay_slope(r.singular_diag, fit_lo, fit_hi);
    r.difference = std::abs(r.slope_full - r.slope_diag);
    return r;
}

// --------------------------------------------------------------------- I/O

std::string singular_csv(const RealSequence& s) {
    std::ostringstream o;
    o.precision(17);
    o << "n,sigma_n\n";
    for (size_t i = 0; i < s.size(); ++i) o << i + 1 << "," << s[i] << "\n";
    return o.str();
}

void write_matrix_binary(const std::string& path, const DenseMatrix& A) {
    if (A.rows != A.cols) throw InputError("binary dump expects a square matrix");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path);
    uint64_t M = A.rows;
    unsigned char hdr[8];
    for (int k = 0; k < 8; ++k) hdr[k] = static_cast<unsigned char>(M >> (8 * k));
    f.write(reinterpret_cast<const char*>(hdr), 8);
    for (double x : A.data) {
        uint64_t u = std::bit_cast<uint64_t>(x);
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
        f.write(reinterpret_cast<const char*>(b), 8);
    }
}

DenseMatrix read_matrix_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path);
    auto rd = [&]() {
        unsigned char b[8];
        if (!f.read(reinterpret_cast<char*>(b), 8)) throw InputError("truncated matrix file");
        uint64_t u = 0;
        for (int k = 0; k < 8; ++k) u |= uint64_t(b[k]) << (8 * k);
        return u;
    };
    uint64_t M = rd();
    if (M > (1u << 20)) throw InputError("implausible matrix size in header");
    DenseMatrix A(M, M);
    for (auto& x : A.data) x = std::bit_cast<double>(rd());
    return A;
}

}  // namespace cansys
