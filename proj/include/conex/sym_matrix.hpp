#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace conex {

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 8;

/// Dense symmetric matrix of dimension 2..8, packed upper-triangle storage.
/// Symmetry is enforced by construction: (i,j) and (j,i) address the same entry.
class SymMatrix {
public:
    explicit SymMatrix(int dim);

    static SymMatrix zero(int dim) { return SymMatrix(dim); }
    static SymMatrix identity(int dim);
    static SymMatrix diagonal(std::span<const double> entries);
    static SymMatrix diagonal(std::initializer_list<double> entries);
    /// a a^T
    static SymMatrix outer(std::span<const double> a);
    /// symmetric tensor product, entries (a_i b_j + b_i a_j)/2
    static SymMatrix sym_outer(std::span<const double> a, std::span<const double> b);

    int dim() const { return dim_; }

    double operator()(int i, int j) const { return a_[pack(i, j)]; }
    void set(int i, int j, double v) { a_[pack(i, j)] = v; }
    void add(int i, int j, double v) { a_[pack(i, j)] += v; }

    SymMatrix& operator+=(const SymMatrix& rhs);
    SymMatrix& operator-=(const SymMatrix& rhs);
    SymMatrix& operator*=(double t);
    friend SymMatrix operator+(SymMatrix lhs, const SymMatrix& rhs) { return lhs += rhs; }
    friend SymMatrix operator-(SymMatrix lhs, const SymMatrix& rhs) { return lhs -= rhs; }
    friend SymMatrix operator*(double t, SymMatrix m) { return m *= t; }
    SymMatrix operator-() const;

    double trace() const;
    double frobenius_norm() const;

    /// y = M x
    void multiply(std::span<const double> x, std::span<double> y) const;

private:
    int pack(int i, int j) const {
        if (i > j) { int t = i; i = j; j = t; }
        return i * dim_ - i * (i - 1) / 2 + (j - i);
    }

    int dim_;
    std::array<double, kMaxDim*(kMaxDim + 1) / 2> a_{};
};

struct EigenDecomposition {
    int dim = 0;
    std::array<double, kMaxDim> values{};                    // ascending
    std::array<std::array<double, kMaxDim>, kMaxDim> vectors{};  // vectors[k] is the k-th eigenvector
};

/// Cyclic Jacobi with rotation threshold 1e-14 relative to ||M||, at most 30 sweeps.
/// Always converges for symmetric input; eigenvalues come back nondecreasing.
EigenDecomposition eig_sym_full(const SymMatrix& m);

/// Eigenvalues only, nondecreasing. Writes into `out` (size >= dim), returns dim.
int eig_sym(const SymMatrix& m, std::span<double> out);
std::vector<double> eig_sym(const SymMatrix& m);

}  // namespace conex
