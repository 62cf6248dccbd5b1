#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cansys/growth.hpp"
#include "cansys/hamiltonian.hpp"
#include "json.hpp"

namespace cansys {

// Real row-major matrix.
struct DenseMatrix {
    size_t rows = 0, cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    static DenseMatrix identity(size_t n);

    double& operator()(size_t i, size_t j) { return data[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return data[i * cols + j]; }
    DenseMatrix transpose() const;
    bool finite() const;
};

// Cells [nodes[i], nodes[i+1]).  When gap_coords is set (finite b) widths and
// midpoints come from the gaps.  block[i] is the dyadic cell J_{block[i]+1}
// containing cell i, or empty when the grid is not dyadic-aligned.
struct Grid {
    std::vector<Point> nodes;
    bool gap_coords = false;
    std::vector<int> block;

    size_t cells() const { return nodes.empty() ? 0 : nodes.size() - 1; }
    double width(size_t i) const;
    Point midpoint(size_t i) const;
};

Grid make_grid(std::vector<double> t);
Grid make_grid(const Hamiltonian& H, std::vector<Point> nodes);
// `cells` equal cells on [a, c].
Grid uniform_grid(const Hamiltonian& H, const Point& c, int cells);
// J_1..J_depth split into `sub` equal cells each; J_1 gets `head` cells when head > 0.
Grid dyadic_grid(const Hamiltonian& H, int depth, int sub = 8, int head = 0);

// Treatment of the cell where the kernel jumps (s = t).  strict drops it;
// half weights it by 1/2.
enum class DiagonalRule { strict, half };

using Factor = std::function<double(const Point&)>;

struct KernelOperator {
    Grid grid;
    std::vector<double> kappa, phi;  // at cell midpoints
    DenseMatrix matrix;
};

// A(i,j) = phi(tau_i) kappa(tau_j) sqrt(D_i D_j) for i < j.
KernelOperator discretize_T(const Factor& kappa, const Factor& phi, const Grid& grid,
                            DiagonalRule rule = DiagonalRule::strict);
// Same with kappa = sqrt h1, phi = sqrt h2 of H.
KernelOperator discretize_T(const Hamiltonian& H, const Grid& grid,
                            DiagonalRule rule = DiagonalRule::strict);

// 2M x 2M kernel -H^{1/2}(t) [[0, 1_{s<t}], [1_{s>t}, 0]] H^{1/2}(s), rows and
// columns interleaved: index 2i is the first component on cell i, 2i+1 the second.
DenseMatrix discretize_KH(const Hamiltonian& H, const Grid& grid,
                          DiagonalRule rule = DiagonalRule::strict);
// Reorders an interleaved 2M x 2M matrix into component blocks.
DenseMatrix deinterleave(const DenseMatrix& K);

DenseMatrix real_part(const DenseMatrix& A);

// One-sided Jacobi (rows, cyclic round-robin pairing), nonincreasing.
// Throws NumericalError if 60 sweeps do not reach 1e-12 relative orthogonality.
RealSequence singular_values(const DenseMatrix& A);

// Block boundaries 0 = b_0 < ... < b_K = n from grid.block; stride 2 for
// interleaved K_H matrices.
std::vector<size_t> block_partition(const Grid& grid, size_t stride = 1);

// Singular values of sum_k P_k (Re A) P_{k+1}, padded with zeros to size n.
RealSequence offdiag_block_singulars(const DenseMatrix& A, const std::vector<size_t>& partition);
// Same compression without taking the real part.
RealSequence offdiag_block_singulars_raw(const DenseMatrix& A, const std::vector<size_t>& partition);

// Least-squares slope of log a_n against log n for n in [lo, hi] (1-based).
double decay_slope(const RealSequence& a, size_t lo, size_t hi);

struct IndependenceReport {
    double slope_full = 0, slope_diag = 0, difference = 0;
    size_t fit_lo = 0, fit_hi = 0, cells = 0;
    RealSequence singular_full, singular_diag;
    nlohmann::json to_json() const;
};

// Grid for independence runs: 128 dyadic cells x 4 plus 512 cells on J_1.
Grid independence_grid(const Hamiltonian& H, int cells = 1024);
IndependenceReport independence_check(const Hamiltonian& H, const Grid& grid, size_t fit_lo = 3,
                                      size_t fit_hi = 12);

std::string singular_csv(const RealSequence& s);
void write_matrix_binary(const std::string& path, const DenseMatrix& A);
DenseMatrix read_matrix_binary(const std::string& path);

}  // namespace cansys
