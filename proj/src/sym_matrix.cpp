#include "conex/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conex {

SymMatrix::SymMatrix(int dim) : dim_(dim) {
    if (dim < kMinDim || dim > kMaxDim)
        throw std::invalid_argument("SymMatrix: dim must be in [2, 8]");
}

SymMatrix SymMatrix::identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> entries) {
    SymMatrix m(static_cast<int>(entries.size()));
    for (int i = 0; i < m.dim(); ++i) m.set(i, i, entries[i]);
    return m;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> entries) {
    std::vector<double> v(entries);
    return diagonal(std::span<const double>(v));
}

SymMatrix SymMatrix::outer(std::span<const double> a) {
    SymMatrix m(static_cast<int>(a.size()));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = i; j < m.dim(); ++j) m.set(i, j, a[i] * a[j]);
    return m;
}

SymMatrix SymMatrix::sym_outer(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("sym_outer: size mismatch");
    SymMatrix m(static_cast<int>(a.size()));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = i; j < m.dim(); ++j) m.set(i, j, 0.5 * (a[i] * b[j] + b[i] * a[j]));
    return m;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& rhs) {
    if (rhs.dim_ != dim_) throw std::invalid_argument("SymMatrix: dim mismatch");
    for (size_t k = 0; k < a_.size(); ++k) a_[k] += rhs.a_[k];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& rhs) {
    if (rhs.dim_ != dim_) throw std::invalid_argument("SymMatrix: dim mismatch");
    for (size_t k = 0; k < a_.size(); ++k) a_[k] -= rhs.a_[k];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double t) {
    for (double& v : a_) v *= t;
    return *this;
}

SymMatrix SymMatrix::operator-() const {
    SymMatrix m(*this);
    for (double& v : m.a_) v = -v;
    return m;
}

double SymMatrix::trace() const {
    double t = 0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double SymMatrix::frobenius_norm() const {
    double s = 0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
}

void SymMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < dim_; ++i) {
        double s = 0;
        for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
}

EigenDecomposition eig_sym_full(const SymMatrix& m) {
    const int n = m.dim();
    double a[kMaxDim][kMaxDim];
    double v[kMaxDim][kMaxDim];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            a[i][j] = m(i, j);
            v[i][j] = (i == j) ? 1.0 : 0.0;
        }

    const double norm = m.frobenius_norm();
    const double thresh = 1e-14 * (norm > 0 ? norm : 1.0);

    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p][q]));
        if (off <= thresh) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p][q];
                if (std::abs(apq) <= thresh) continue;
                // classical Jacobi rotation annihilating a[p][q]
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    EigenDecomposition d;
    d.dim = n;
    std::array<int, kMaxDim> order{};
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.begin() + n,
              [&](int i, int j) { return a[i][i] < a[j][j]; });
    for (int k = 0; k < n; ++k) {
        d.values[k] = a[order[k]][order[k]];
        for (int i = 0; i < n; ++i) d.vectors[k][i] = v[i][order[k]];
    }
    return d;
}

int eig_sym(const SymMatrix& m, std::span<double> out) {
    // Eigenvalue-only path; same rotations without accumulating vectors.
    const int n = m.dim();
    double a[kMaxDim][kMaxDim];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[i][j] = m(i, j);

    const double norm = m.frobenius_norm();
    const double thresh = 1e-14 * (norm > 0 ? norm : 1.0);

    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p][q]));
        if (off <= thresh) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p][q];
                if (std::abs(apq) <= thresh) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }

    for (int i = 0; i < n; ++i) out[i] = a[i][i];
    std::sort(out.begin(), out.begin() + n);
    return n;
}

std::vector<double> eig_sym(const SymMatrix& m) {
    std::vector<double> v(m.dim());
    eig_sym(m, v);
    return v;
}

}  // namespace conex
