#include "conex/cone_exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conex/bounds_barriers.hpp"
#include "conex/numdiff.hpp"

namespace conex {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Reduced jet of the homogeneous ansatz at polar angle theta: the full Cartesian
// (M, p, x) triple on the unit sphere, with the polar leg in the (e_1, e_n) plane.
struct ReducedJet {
    SymMatrix M;
    std::array<double, kMaxDim> p{};
    std::array<double, kMaxDim> x{};
    int n;
    ReducedJet(int dim) : M(dim), n(dim) {}
    std::span<const double> pspan() const { return {p.data(), size_t(n)}; }
    std::span<const double> xspan() const { return {x.data(), size_t(n)}; }
};

void build_reduced_jet(int n, double alpha, double theta, double phi, double dphi, double s,
                       ReducedJet& jet) {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    const double a = alpha * (alpha + 1) * phi;
    const double b = -(alpha + 1) * dphi;
    const double c = s - alpha * phi;
    // azimuthal entry; cot(theta) phi' -> s as theta -> 0 under phi'(0) = 0
    const double m = theta > 0 ? (-alpha * phi + ct / st * dphi) : (-alpha * phi + s);

    SymMatrix& M = jet.M;
    M = SymMatrix(n);
    M.set(0, 0, a * st * st + 2 * b * st * ct + c * ct * ct);
    M.set(0, n - 1, (a - c) * st * ct + b * (ct * ct - st * st));
    M.set(n - 1, n - 1, a * ct * ct - 2 * b * st * ct + c * st * st);
    for (int k = 1; k < n - 1; ++k) M.set(k, k, m);

    jet.p.fill(0.0);
    jet.p[0] = -alpha * phi * st + dphi * ct;
    jet.p[n - 1] = -alpha * phi * ct - dphi * st;

    jet.x.fill(0.0);
    jet.x[0] = st;
    jet.x[n - 1] = ct;
}

// Hermite root of phi on a bracketing step [t0, t1], phi(t0) > 0 >= phi(t1).
double hermite_root(double t0, double p0, double d0, double t1, double p1, double d1) {
    const double h = t1 - t0;
    auto value = [&](double u) {
        const double u2 = u * u, u3 = u2 * u;
        return p0 * (2 * u3 - 3 * u2 + 1) + d0 * h * (u3 - 2 * u2 + u) + p1 * (-2 * u3 + 3 * u2) +
               d1 * h * (u3 - u2);
    };
    double lo = 0, hi = 1;
    for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (value(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    return t0 + 0.5 * (lo + hi) * h;
}

struct OdeContext {
    const OperatorSpec& spec;
    int n;
    double alpha;
    double tol_root;
    double warm_s = 0;  // previous root, reused as the secant seed
};

double solve_second_derivative(OdeContext& ctx, double theta, double phi, double dphi) {
    // exact linear solve for the Laplacian
    if (ctx.spec.variant() == OperatorVariant::Laplacian) {
        const double cot = theta > 0 ? std::cos(theta) / std::sin(theta) : 0.0;
        double s = -ctx.alpha * (ctx.alpha - ctx.n + 2) * phi;
        if (theta > 0)
            s -= (ctx.n - 2) * cot * dphi;
        else
            s = s / (ctx.n - 1);  // repeated entries carry s at the axis
        return s;
    }

    ReducedJet jet(ctx.n);
    auto residual = [&](double s) {
        build_reduced_jet(ctx.n, ctx.alpha, theta, phi, dphi, s, jet);
        return ctx.spec.eval(jet.M, jet.pspan(), jet.xspan());
    };

    const EllipticityParams ep = ctx.spec.ellipticity(ctx.n);
    const double slope_min = ep.lambda;             // |dF/ds| lower bound
    const double slope_max = ctx.n * ep.Lambda;     // covers the rank-(n-1) axis limit

    double s = ctx.warm_s;
    double g = residual(s);
    if (std::abs(g) <= ctx.tol_root) return s;

    // F is strictly decreasing in s, so the slope bounds bracket the root outright
    double lo, hi, glo, ghi;
    if (g > 0) {
        lo = s + g / slope_max;
        hi = s + g / slope_min;
    } else {
        lo = s + g / slope_min;
        hi = s + g / slope_max;
    }
    glo = residual(lo);
    ghi = residual(hi);

    // safeguard expansion; only reachable if the spec violates uniform ellipticity
    double width = std::max(1.0, hi - lo);
    while (glo < 0) {
        hi = lo; ghi = glo;
        lo -= width;
        width *= 2;
        if (width > 1.152921504606847e18)  // 2^60
            throw std::runtime_error(
                "implicit_second_derivative: bracket expansion exceeded 2^60 "
                "(operator is not uniformly elliptic?)");
        glo = residual(lo);
    }
    while (ghi > 0) {
        lo = hi; glo = ghi;
        hi += width;
        width *= 2;
        if (width > 1.152921504606847e18)
            throw std::runtime_error(
                "implicit_second_derivative: bracket expansion exceeded 2^60 "
                "(operator is not uniformly elliptic?)");
        ghi = residual(hi);
    }

    if (std::abs(glo) <= ctx.tol_root) { ctx.warm_s = lo; return lo; }
    if (std::abs(ghi) <= ctx.tol_root) { ctx.warm_s = hi; return hi; }

    // Illinois false position; the residual is piecewise linear in s
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        double mid = (lo * ghi - hi * glo) / (ghi - glo);
        if (!(mid > lo) || !(mid < hi)) mid = 0.5 * (lo + hi);
        const double gm = residual(mid);
        if (std::abs(gm) <= ctx.tol_root || hi - lo <= 1e-15 * (1 + std::abs(mid))) {
            ctx.warm_s = mid;
            return mid;
        }
        if (gm > 0) {
            lo = mid; glo = gm;
            if (side == 1) ghi *= 0.5;
            side = 1;
        } else {
            hi = mid; ghi = gm;
            if (side == -1) glo *= 0.5;
            side = -1;
        }
    }
    ctx.warm_s = 0.5 * (lo + hi);
    return ctx.warm_s;
}

}  // namespace

SymMatrix ansatz_hessian(int n, double alpha, double theta, double phi, double dphi, double s) {
    if (n < 2 || n > kMaxDim) throw std::invalid_argument("ansatz_hessian: dim out of range");
    if (theta < 0 || theta >= kPi)
        throw std::invalid_argument("ansatz_hessian: theta outside [0, pi)");
    ReducedJet jet(n);
    build_reduced_jet(n, alpha, theta, phi, dphi, s, jet);
    return jet.M;
}

double implicit_second_derivative(const OperatorSpec& spec, int n, double alpha, double theta,
                                  double phi, double dphi, double tol_root) {
    if (n < 2 || n > kMaxDim)
        throw std::invalid_argument("implicit_second_derivative: dim out of range");
    if (theta < 0 || theta >= kPi)
        throw std::invalid_argument("implicit_second_derivative: theta outside [0, pi)");
    OdeContext ctx{spec, n, alpha, tol_root};
    return solve_second_derivative(ctx, theta, phi, dphi);
}

ProfileSolution integrate_profile(const OperatorSpec& spec, const ConeSpec& cone, double alpha,
                                  const ShootingConfig& config) {
    cone.validate();
    config.validate();
    if (alpha == 0) throw std::invalid_argument("integrate_profile: alpha must be nonzero");

    const double h = config.ode_step > 0 ? config.ode_step : cone.theta0 / 4096.0;
    const double eps = h / 16.0;
    const double theta_cap = std::min(cone.theta0 + 0.2, kPi - 1e-9);

    ProfileSolution sol;
    sol.alpha = alpha;
    sol.branch = alpha > 0 ? Branch::Plus : Branch::Minus;
    sol.dim = cone.dim;

    OdeContext ctx{spec, cone.dim, alpha, config.tol_root};
    const double s0 = solve_second_derivative(ctx, 0.0, 1.0, 0.0);
    ctx.warm_s = s0;

    sol.theta.push_back(0.0);
    sol.phi.push_back(1.0);
    sol.dphi.push_back(0.0);

    // quadratic series start; phi is even at the axis so the error is O(eps^4)
    double t = eps;
    double phi = 1.0 + 0.5 * s0 * eps * eps;
    double dphi = s0 * eps;
    sol.theta.push_back(t);
    sol.phi.push_back(phi);
    sol.dphi.push_back(dphi);

    auto fprime = [&](double th, double f, double df, double& out_df, double& out_ddf) {
        out_df = df;
        out_ddf = solve_second_derivative(ctx, th, f, df);
    };

    while (t < theta_cap) {
        const double step = std::min(h, theta_cap - t);
        double k1p, k1s, k2p, k2s, k3p, k3s, k4p, k4s;
        fprime(t, phi, dphi, k1p, k1s);
        fprime(t + 0.5 * step, phi + 0.5 * step * k1p, dphi + 0.5 * step * k1s, k2p, k2s);
        fprime(t + 0.5 * step, phi + 0.5 * step * k2p, dphi + 0.5 * step * k2s, k3p, k3s);
        fprime(t + step, phi + step * k3p, dphi + step * k3s, k4p, k4s);

        const double phi_next = phi + step / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        const double dphi_next = dphi + step / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
        const double t_next = t + step;

        sol.theta.push_back(t_next);
        sol.phi.push_back(phi_next);
        sol.dphi.push_back(dphi_next);

        if (phi_next <= 0.0) {
            sol.theta_star = hermite_root(t, phi, dphi, t_next, phi_next, dphi_next);
            break;
        }
        if (std::abs(phi_next) > 1e8 || std::abs(dphi_next) > 1e8) break;  // runaway guard

        t = t_next;
        phi = phi_next;
        dphi = dphi_next;
    }
    return sol;
}

double ProfileSolution::angular_value(double th) const {
    if (th < 0 || th > theta.back() + 1e-6)
        throw std::domain_error("ProfileSolution: angle beyond the integrated range");
    th = std::min(th, theta.back());
    const auto it = std::upper_bound(theta.begin(), theta.end(), th);
    size_t k = it == theta.begin() ? 0 : (it - theta.begin() - 1);
    if (k + 1 >= theta.size()) k = theta.size() - 2;
    const double t0 = theta[k], t1 = theta[k + 1];
    const double hseg = t1 - t0;
    const double u = (th - t0) / hseg;
    const double u2 = u * u, u3 = u2 * u;
    return phi[k] * (2 * u3 - 3 * u2 + 1) + dphi[k] * hseg * (u3 - 2 * u2 + u) +
           phi[k + 1] * (-2 * u3 + 3 * u2) + dphi[k + 1] * hseg * (u3 - u2);
}

double ProfileSolution::angular_derivative(double th) const {
    if (th < 0 || th > theta.back() + 1e-6)
        throw std::domain_error("ProfileSolution: angle beyond the integrated range");
    th = std::min(th, theta.back());
    const auto it = std::upper_bound(theta.begin(), theta.end(), th);
    size_t k = it == theta.begin() ? 0 : (it - theta.begin() - 1);
    if (k + 1 >= theta.size()) k = theta.size() - 2;
    const double t0 = theta[k], t1 = theta[k + 1];
    const double hseg = t1 - t0;
    const double u = (th - t0) / hseg;
    const double u2 = u * u;
    return (phi[k] * (6 * u2 - 6 * u) / hseg + dphi[k] * (3 * u2 - 4 * u + 1) +
            phi[k + 1] * (-6 * u2 + 6 * u) / hseg + dphi[k + 1] * (3 * u2 - 2 * u));
}

double ProfileSolution::value_polar(double r, double th) const {
    return std::pow(r, -alpha) * angular_value(th);
}

double ProfileSolution::reconstruct(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw std::invalid_argument("ProfileSolution::reconstruct: dimension mismatch");
    double r2 = 0;
    for (double v : x) r2 += v * v;
    const double r = std::sqrt(r2);
    if (!(r > 0)) throw std::domain_error("ProfileSolution::reconstruct: x = 0");
    double perp2 = 0;
    for (size_t i = 0; i + 1 < x.size(); ++i) perp2 += x[i] * x[i];
    const double th = std::atan2(std::sqrt(perp2), x[dim - 1]);
    return value_polar(r, th);
}

namespace {

double theta_star_at(const OperatorSpec& spec, const ConeSpec& cone, Branch branch, double mag,
                     const ShootingConfig& config) {
    const double alpha = branch == Branch::Plus ? mag : -mag;
    const ProfileSolution p = integrate_profile(spec, cone, alpha, config);
    return p.theta_star ? *p.theta_star : kInf;
}

}  // namespace

ShootResult shoot(const OperatorSpec& spec, const ConeSpec& cone, Branch branch,
                  const ShootingConfig& config) {
    cone.validate();
    config.validate();

    std::vector<ScanEntry> scanned;
    auto theta_star = [&](double mag) {
        const double ts = theta_star_at(spec, cone, branch, mag, config);
        scanned.push_back({branch == Branch::Plus ? mag : -mag, ts});
        return ts;
    };

    // |alpha| bracket: [lo, hi] with theta*(lo) > theta0 > theta*(hi)
    double lo, hi;
    bool monotone_suspect = false;
    if (config.alpha_bracket) {
        lo = config.alpha_bracket->first;
        hi = config.alpha_bracket->second;
        if (!(theta_star(lo) > cone.theta0) || !(theta_star(hi) < cone.theta0))
            throw ShootError("shoot: supplied alpha bracket does not straddle theta0", scanned);
    } else {
        double lo_floor = 1e-12;
        if (branch == Branch::Plus) {
            // the closed-form exponent bounds depend only on the ellipticity envelope
            const BoundsReport b = compute_bounds(spec.ellipticity(cone.dim), cone);
            lo = std::max(b.alpha_lb, 1e-3);
            hi = b.alpha_ub;
            lo_floor = b.alpha_lb;
        } else {
            lo = 1e-3;
            hi = 1.0;
        }
        double ts_lo = theta_star(lo);
        while (!(ts_lo > cone.theta0)) {
            if (lo <= lo_floor * (1 + 1e-12) || lo < 1e-12) {
                monotone_suspect = true;
                break;
            }
            lo = std::max(lo_floor, lo / 4);
            ts_lo = theta_star(lo);
        }
        double ts_hi = theta_star(hi);
        double prev = ts_hi;
        int expansions = 0;
        while (!(ts_hi < cone.theta0)) {
            if (++expansions > 40)
                throw ShootError("shoot: bracket endpoints do not straddle theta0", scanned);
            hi *= 2;
            ts_hi = theta_star(hi);
            if (ts_hi > prev + 1e-12) monotone_suspect = true;
            prev = ts_hi;
        }
    }

    if (monotone_suspect) {
        // uniform scan, then local bisection on the first sign-change interval
        const int kScan = 256;
        double prev_mag = lo;
        double prev_ts = theta_star(lo);
        bool found = false;
        for (int k = 1; k <= kScan; ++k) {
            const double mag = lo + (hi - lo) * k / kScan;
            const double ts = theta_star(mag);
            if (prev_ts > cone.theta0 && ts <= cone.theta0) {
                lo = prev_mag;
                hi = mag;
                found = true;
                break;
            }
            prev_mag = mag;
            prev_ts = ts;
        }
        if (!found) throw ShootError("shoot: scan found no crossing of theta0", scanned);
    }

    int iterations = 0;
    while (hi - lo > config.tol_alpha && iterations < config.max_bisections) {
        const double mid = 0.5 * (lo + hi);
        if (theta_star(mid) > cone.theta0)
            lo = mid;
        else
            hi = mid;
        ++iterations;
    }

    const double mag = 0.5 * (lo + hi);
    const double alpha = branch == Branch::Plus ? mag : -mag;
    ShootResult result;
    result.alpha = alpha;
    result.iterations = iterations;
    result.profile = integrate_profile(spec, cone, alpha, config);
    if (!result.profile.theta_star) {
        // land on the side of the bracket that certainly crosses zero
        result.profile = integrate_profile(spec, cone, branch == Branch::Plus ? hi : -hi, config);
        result.alpha = branch == Branch::Plus ? hi : -hi;
    }
    result.theta_star_residual = std::abs(*result.profile.theta_star - cone.theta0);
    return result;
}

double profile_residual(const OperatorSpec& spec, const ProfileSolution& profile,
                        std::span<const std::vector<double>> points, double fd_step) {
    double worst = 0;
    for (const auto& pt : points) {
        const int n = static_cast<int>(pt.size());
        SymMatrix H(n);
        std::vector<double> g(n);
        fd_hessian_gradient([&](std::span<const double> q) { return profile.reconstruct(q); }, pt,
                            fd_step, H, g);
        worst = std::max(worst, std::abs(spec.eval(H, g, pt)));
    }
    return worst;
}

double alpha_minus_via_inversion(const OperatorSpec& spec, const ConeSpec& cone,
                                 const ShootingConfig& config) {
    const ShootResult r = shoot(spec.inverted(), cone, Branch::Plus, config);
    return -r.alpha;
}

}  // namespace conex
