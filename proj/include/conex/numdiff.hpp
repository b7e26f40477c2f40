#pragma once

#include <functional>
#include <span>
#include <vector>

#include "conex/sym_matrix.hpp"

namespace conex {

/// Central-difference gradient and Hessian of a scalar field at `x`, step `h`.
template <typename F>
void fd_hessian_gradient(F&& f, std::span<const double> x, double h, SymMatrix& hess,
                         std::span<double> grad) {
    const int n = static_cast<int>(x.size());
    std::vector<double> q(x.begin(), x.end());
    const double f0 = f(std::span<const double>(q));
    for (int i = 0; i < n; ++i) {
        q[i] = x[i] + h;
        const double fp = f(std::span<const double>(q));
        q[i] = x[i] - h;
        const double fm = f(std::span<const double>(q));
        q[i] = x[i];
        grad[i] = (fp - fm) / (2 * h);
        hess.set(i, i, (fp - 2 * f0 + fm) / (h * h));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            q[i] = x[i] + h; q[j] = x[j] + h;
            const double fpp = f(std::span<const double>(q));
            q[j] = x[j] - h;
            const double fpm = f(std::span<const double>(q));
            q[i] = x[i] - h; q[j] = x[j] + h;
            const double fmp = f(std::span<const double>(q));
            q[j] = x[j] - h;
            const double fmm = f(std::span<const double>(q));
            q[i] = x[i]; q[j] = x[j];
            hess.set(i, j, (fpp - fpm - fmp + fmm) / (4 * h * h));
        }
}

}  // namespace conex
