#include "conex/bounds_barriers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace conex {

namespace {

constexpr double kSigmaEdge = 1e-6;

double norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

BoundsReport lower_bound(const EllipticityParams& params, const ConeSpec& cone) {
    params.validate();
    cone.validate();
    const int n = cone.dim;
    const double sigma = -std::cos(cone.theta0);  // omega fits in {x . (-e_n) < sigma}

    BoundsReport r;
    r.sigma_lb = sigma;
    r.C1 = std::max(0.0, 2 * params.Lambda + params.mu - params.lambda * (n - 1));
    r.C2 = (2 * params.Lambda + params.mu) * (2 * params.Lambda + params.mu) / (2 * params.lambda);
    r.kappa = 1 + r.C2 + (2 * params.Lambda * (n - 1) + 1) / (params.lambda * (1 - sigma * sigma)) +
              4 * (r.C2 + 1) / params.lambda;
    r.alpha_lb = r.C1 > 0 ? std::min(1.0, std::exp(-2 * r.kappa) / r.C1) : 1.0;
    return r;
}

double upper_bound_at_sigma(const EllipticityParams& params, int dim, double sigma) {
    params.validate();
    if (!(sigma > 0) || !(sigma < 1))
        throw std::invalid_argument("upper_bound_at_sigma: sigma must lie in (0, 1)");
    const double n = dim;
    const double lam = params.lambda, Lam = params.Lambda, mu = params.mu;
    const double bulk =
        (mu + (n - 1) * Lam + n * n * Lam * Lam / lam + (2 * Lam + mu) * (2 * Lam + mu) / (2 * lam)) / lam;
    const double s2 = sigma * sigma;
    return 2 + bulk + (lam + s2 * s2) / (s2 * (1 - s2));
}

std::pair<double, double> upper_bound(const EllipticityParams& params, const ConeSpec& cone) {
    params.validate();
    cone.validate();
    // any cap {x . e_n > sigma} of half-aperture arccos(sigma) <= theta0 is inscribed
    const double lo = std::max(cone.theta0 < 1.5707963267948966 ? std::cos(cone.theta0) : 0.0,
                               kSigmaEdge);
    const double hi = 1.0 - kSigmaEdge;

    auto g = [&](double s) { return upper_bound_at_sigma(params, cone.dim, s); };

    // pre-scan guards against surprises even though the profile is unimodal in practice
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    const int kScan = 64;
    for (int k = 0; k < kScan; ++k) {
        const double s = lo + (hi - lo) * k / (kScan - 1.0);
        const double v = g(s);
        if (v < best_val) { best_val = v; best = k; }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / (kScan - 1.0);
    double b = lo + (hi - lo) * std::min(kScan - 1, best + 1) / (kScan - 1.0);

    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = g(x1), f2 = g(x2);
    while (b - a > 1e-10) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = g(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = g(x2);
        }
    }
    const double s_opt = 0.5 * (a + b);
    return {g(s_opt), s_opt};
}

BoundsReport compute_bounds(const EllipticityParams& params, const ConeSpec& cone) {
    BoundsReport r = lower_bound(params, cone);
    auto [ub, sig] = upper_bound(params, cone);
    r.alpha_ub = ub;
    r.sigma_ub = sig;
    return r;
}

BarrierSample supersolution_eval(std::span<const double> x, double alpha, double kappa) {
    const int n = static_cast<int>(x.size());
    const double rho2 = [&] { double s = 0; for (double v : x) s += v * v; return s; }();
    if (!(rho2 > 0)) throw std::invalid_argument("supersolution_eval: x = 0");
    const double rho = std::sqrt(rho2);
    const double xn = x[n - 1];

    const double E = std::exp(kappa * xn / rho);
    const double A = std::exp(kappa) - E;

    // w = rho^2 e_n - x_n x
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = (i == n - 1 ? rho2 : 0.0) - xn * x[i];

    auto rp = [&](double e) { return std::pow(rho, e); };

    BarrierSample out;
    out.value = rp(-alpha) * A;

    out.gradient.resize(n);
    const double g1 = -alpha * rp(-alpha - 2) * A;
    const double g2 = -kappa * rp(-alpha - 3) * E;
    for (int i = 0; i < n; ++i) out.gradient[i] = g1 * x[i] + g2 * w[i];

    SymMatrix H = SymMatrix::outer(x);
    H *= alpha * rp(-alpha - 4) * A * (alpha + 2) - kappa * rp(-alpha - 5) * xn * E;
    SymMatrix I = SymMatrix::identity(n);
    I *= -alpha * rp(-alpha - 2) * A + kappa * rp(-alpha - 3) * xn * E;
    H += I;
    SymMatrix XW = SymMatrix::sym_outer(x, w);
    XW *= 2 * kappa * (alpha + 1) * rp(-alpha - 5) * E;
    H += XW;
    SymMatrix WW = SymMatrix::outer(w);
    WW *= -kappa * kappa * rp(-alpha - 6) * E;
    H += WW;
    out.hessian = H;
    return out;
}

BarrierSample subsolution_eval(std::span<const double> x, double alpha, double sigma) {
    const int n = static_cast<int>(x.size());
    const double rho2 = [&] { double s = 0; for (double v : x) s += v * v; return s; }();
    if (!(rho2 > 0)) throw std::invalid_argument("subsolution_eval: x = 0");
    const double rho = std::sqrt(rho2);
    const double xn = x[n - 1];

    auto rp = [&](double e) { return std::pow(rho, e); };
    const double w = rp(-alpha - 2) * xn * xn - sigma * sigma * rp(-alpha);

    std::vector<double> wv(n);  // rho^2 e_n - x_n x
    for (int i = 0; i < n; ++i) wv[i] = (i == n - 1 ? rho2 : 0.0) - xn * x[i];

    std::vector<double> dw(n);
    const double c1 = -alpha * w / rho2;
    const double c2 = 2 * rp(-alpha - 4) * xn;
    for (int i = 0; i < n; ++i) dw[i] = c1 * x[i] + c2 * wv[i];

    SymMatrix d2w = SymMatrix::outer(x);
    d2w *= alpha * w / (rho2 * rho2) * (alpha + 2);
    SymMatrix I = SymMatrix::identity(n);
    I *= -alpha * w / rho2 - 2 * rp(-alpha - 4) * xn * xn;
    d2w += I;
    std::vector<double> en(n, 0.0);
    en[n - 1] = 1.0;
    SymMatrix EE = SymMatrix::outer(en);
    EE *= 2 * rp(-alpha - 2);
    d2w += EE;
    SymMatrix XW = SymMatrix::sym_outer(x, wv);
    XW *= -4 * (alpha + 2) * rp(-alpha - 6) * xn;
    d2w += XW;

    BarrierSample out;
    out.value = 0.5 * w * w;
    out.gradient.resize(n);
    for (int i = 0; i < n; ++i) out.gradient[i] = w * dw[i];
    d2w *= w;
    SymMatrix DD = SymMatrix::outer(dw);
    d2w += DD;
    out.hessian = d2w;
    return out;
}

BarrierCheck verify_supersolution(const EllipticityParams& params, double alpha, double kappa,
                                  const ConeSpec& cone, int num_samples) {
    params.validate();
    cone.validate();
    if (num_samples < 1) throw std::invalid_argument("verify_supersolution: num_samples < 1");
    const int n = cone.dim;
    const double sigma = -std::cos(cone.theta0);

    // by rotational symmetry around e_n only the polar slice matters; sampling the
    // unit-sphere section at stratified x_n covers the admissible region exactly
    BarrierCheck out;
    out.num_samples = num_samples;
    out.residual = std::numeric_limits<double>::infinity();
    std::vector<double> x(n, 0.0);
    for (int k = 0; k < num_samples; ++k) {
        const double t = -1.0 + (sigma + 1.0) * (k + 0.5) / num_samples;
        x.assign(n, 0.0);
        x[0] = std::sqrt(std::max(0.0, 1.0 - t * t));
        x[n - 1] = t;
        const BarrierSample s = supersolution_eval(x, alpha, kappa);
        const double res = pucci_minus(s.hessian, params) - params.mu * norm(s.gradient);
        if (res < out.residual) {
            out.residual = res;
            out.witness = x;
        }
    }
    return out;
}

BarrierCheck verify_subsolution(const EllipticityParams& params, double alpha, double sigma,
                                const ConeSpec& cone, int num_samples) {
    params.validate();
    cone.validate();
    if (num_samples < 1) throw std::invalid_argument("verify_subsolution: num_samples < 1");
    if (!(sigma > 0) || !(sigma < 1))
        throw std::invalid_argument("verify_subsolution: sigma must lie in (0, 1)");
    const int n = cone.dim;

    const double lo = sigma + 1e-3 * (1 - sigma);  // w -> 0 collar at the lateral boundary
    BarrierCheck out;
    out.num_samples = num_samples;
    out.residual = -std::numeric_limits<double>::infinity();
    std::vector<double> x(n, 0.0);
    for (int k = 0; k < num_samples; ++k) {
        const double t = lo + (1.0 - lo) * (k + 0.5) / num_samples;
        x.assign(n, 0.0);
        x[0] = std::sqrt(std::max(0.0, 1.0 - t * t));
        x[n - 1] = t;
        const BarrierSample s = subsolution_eval(x, alpha, sigma);
        const double res = pucci_plus(s.hessian, params) + params.mu * norm(s.gradient);
        if (res > out.residual) {
            out.residual = res;
            out.witness = x;
        }
    }
    return out;
}

double subsolution_alpha_threshold(const EllipticityParams& params, int dim, double sigma) {
    params.validate();
    if (!(sigma > 0) || !(sigma < 1))
        throw std::invalid_argument("subsolution_alpha_threshold: sigma must lie in (0, 1)");
    const double n = dim;
    const double lam = params.lambda, Lam = params.Lambda, mu = params.mu;
    const double a1 = 1 + (mu + (n - 1) * Lam + n * n * Lam * Lam / lam +
                           0.5 * (2 * Lam + mu) * (2 * Lam + mu) / lam) /
                              (2 * lam);
    const double s2 = sigma * sigma;
    const double a2 = (lam + s2 * s2) / (2 * s2 * (1 - s2));
    return std::max(a1, a2);
}

}  // namespace conex
