#pragma once

#include <stdexcept>

namespace conex {

/// Axisymmetric cone in R^n (2D sector for n = 2): all x != 0 whose angle to the
/// positive axis e_n is below theta0. theta0 in (0, pi), a proper subdomain of S^{n-1}.
struct ConeSpec {
    int dim = 2;
    double theta0 = 0;

    void validate() const {
        if (dim < 2 || dim > 8) throw std::invalid_argument("ConeSpec: dim must be in [2, 8]");
        if (!(theta0 > 0) || !(theta0 < 3.14159265358979323846))
            throw std::invalid_argument("ConeSpec: theta0 must lie in (0, pi)");
    }
};

}  // namespace conex
