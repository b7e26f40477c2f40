#pragma once

#include <span>
#include <utility>
#include <vector>

#include "conex/cone.hpp"
#include "conex/operators.hpp"
#include "conex/sym_matrix.hpp"

namespace conex {

/// Closed-form exponent bounds. C1, C2, kappa, alpha_lb, sigma_lb belong to the
/// lower-bound construction (supersolution barrier); alpha_ub, sigma_ub to the
/// upper bound (subsolution barrier, minimized over inscribed caps).
struct BoundsReport {
    double C1 = 0;
    double C2 = 0;
    double kappa = 0;
    double alpha_lb = 0;
    double alpha_ub = 0;
    double sigma_lb = 0;
    double sigma_ub = 0;
};

/// C1 = max{0, 2*Lambda + mu - lambda(n-1)}, C2 = (2*Lambda+mu)^2 / (2*lambda),
/// kappa = 1 + C2 + (2*Lambda(n-1)+1)/(lambda(1-sigma^2)) + 4(C2+1)/lambda,
/// alpha_lb = min{1, exp(-2*kappa)/C1} (= 1 when C1 = 0), with sigma = -cos(theta0)
/// so the cone fits in the half-space cap complement.
BoundsReport lower_bound(const EllipticityParams& params, const ConeSpec& cone);

/// 2 + (mu + (n-1)Lambda + n^2 Lambda^2/lambda + (2*Lambda+mu)^2/(2*lambda))/lambda
///   + (lambda + sigma^4)/(sigma^2 (1 - sigma^2))
double upper_bound_at_sigma(const EllipticityParams& params, int dim, double sigma);

/// Minimum of upper_bound_at_sigma over inscribed-cap sigma (64-point pre-scan plus
/// golden section to 1e-10). Returns (alpha_ub, argmin sigma).
std::pair<double, double> upper_bound(const EllipticityParams& params, const ConeSpec& cone);

BoundsReport compute_bounds(const EllipticityParams& params, const ConeSpec& cone);

struct BarrierSample {
    double value = 0;
    std::vector<double> gradient;
    SymMatrix hessian = SymMatrix(2);
};

/// v(x) = |x|^-alpha (exp(kappa) - exp(kappa x_n/|x|)), closed-form derivatives.
BarrierSample supersolution_eval(std::span<const double> x, double alpha, double kappa);

/// phi = w^2/2 with w(x) = |x|^-alpha-2 x_n^2 - sigma^2 |x|^-alpha;
/// Dphi = w Dw, D2phi = w D2w + Dw (x) Dw.
BarrierSample subsolution_eval(std::span<const double> x, double alpha, double sigma);

struct BarrierCheck {
    double residual = 0;  // min for the supersolution check, max for the subsolution one
    std::vector<double> witness;
    int num_samples = 0;
};

/// min over stratified unit-sphere samples of the admissible region {x_n <= sigma} of
/// P^-(D^2 v) - mu |x|^-1 |Dv|; nonnegative at the formula constants.
BarrierCheck verify_supersolution(const EllipticityParams& params, double alpha, double kappa,
                                  const ConeSpec& cone, int num_samples);

/// max over stratified interior samples of {x_n > sigma |x|} (1e-3 collar excluded) of
/// P^+(D^2 phi) + mu |x|^-1 |Dphi|; strictly negative for admissible alpha.
BarrierCheck verify_subsolution(const EllipticityParams& params, double alpha, double sigma,
                                const ConeSpec& cone, int num_samples);

/// Smallest alpha for which the subsolution claim is guaranteed (max of the two
/// admissibility thresholds; the second is strict, callers should add a margin).
double subsolution_alpha_threshold(const EllipticityParams& params, int dim, double sigma);

}  // namespace conex
