#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "conex/cone.hpp"
#include "conex/operators.hpp"
#include "conex/sym_matrix.hpp"

namespace conex {

enum class Branch { Plus, Minus };

struct ShootingConfig {
    double tol_alpha = 1e-9;
    double ode_step = 0;  // 0 selects theta0 / 4096
    double tol_root = 1e-13;
    std::optional<std::pair<double, double>> alpha_bracket;
    int max_bisections = 200;

    void validate() const {
        if (!(tol_alpha > 0) || !(tol_root > 0) || ode_step < 0 || max_bisections < 1)
            throw std::invalid_argument("ShootingConfig: tolerances must be positive");
    }
};

/// Angular profile of a homogeneous solution u(x) = |x|^-alpha phi(theta), theta the
/// polar angle to the cone axis e_n. phi(0) = 1, phi'(0) = 0.
struct ProfileSolution {
    double alpha = 0;
    Branch branch = Branch::Plus;
    int dim = 2;
    std::vector<double> theta;  // nondecreasing, starts at 0
    std::vector<double> phi;
    std::vector<double> dphi;
    std::optional<double> theta_star;  // first zero of phi, when reached

    double theta_end() const { return theta.back(); }
    /// cubic Hermite interpolation of phi
    double angular_value(double th) const;
    double angular_derivative(double th) const;
    double value_polar(double r, double th) const;
    /// u at a Cartesian point (axis = e_n); throws if the angle exceeds theta_end
    double reconstruct(std::span<const double> x) const;
};

struct ShootResult {
    double alpha = 0;
    ProfileSolution profile;
    int iterations = 0;
    double theta_star_residual = 0;
};

struct ScanEntry {
    double alpha = 0;
    double theta_star = 0;  // +inf when phi has no zero before the integration cap
};

class ShootError : public std::runtime_error {
public:
    ShootError(const std::string& what, std::vector<ScanEntry> table)
        : std::runtime_error(what), scanned(std::move(table)) {}
    std::vector<ScanEntry> scanned;
};

/// Scaled Hessian of the ansatz: D^2 u = r^-alpha-2 M(theta) for u = r^-alpha phi.
/// In the (radial, polar, azimuthal...) frame M has the 2x2 block
/// [[alpha(alpha+1) phi, -(alpha+1) phi'], [-(alpha+1) phi', s - alpha phi]]
/// and an (n-2)-fold entry -alpha phi + cot(theta) phi'; at theta = 0 the repeated
/// entry takes the symmetric limit cot(theta) phi' -> s. Returned in Cartesian
/// coordinates with the axis along e_n and the polar leg in the (e_1, e_n) plane.
SymMatrix ansatz_hessian(int n, double alpha, double theta, double phi, double dphi, double s);

/// The unique s = phi'' with F(M(s), p, x) = 0 at the reduced state; F is strictly
/// decreasing in s with slope in [-n Lambda, -lambda], so the root is bracketed
/// directly from the residual. Residual at the returned s is at most tol_root.
double implicit_second_derivative(const OperatorSpec& spec, int n, double alpha, double theta,
                                  double phi, double dphi, double tol_root = 1e-13);

/// RK4 on (phi, phi') from the series start at eps = ode_step/16, stopping at the
/// first sign change of phi (theta_star by cubic Hermite root) or at theta0 + 0.2.
ProfileSolution integrate_profile(const OperatorSpec& spec, const ConeSpec& cone, double alpha,
                                  const ShootingConfig& config = {});

/// Bisection on alpha for theta_star(alpha) = theta0. Branch plus searches alpha > 0,
/// branch minus searches alpha < 0 (parameterized by |alpha|). Brackets come from the
/// config, else from the closed-form exponent bounds (plus branch), else a doubling
/// scan from [1e-3, 1]; a 256-point scan is the fallback when the bracket fails.
ShootResult shoot(const OperatorSpec& spec, const ConeSpec& cone, Branch branch,
                  const ShootingConfig& config = {});

/// Max |F| over sample points, derivatives of the reconstructed profile by central
/// differences with step fd_step.
double profile_residual(const OperatorSpec& spec, const ProfileSolution& profile,
                        std::span<const std::vector<double>> points, double fd_step = 1e-4);

/// alpha_minus(F, omega) = -alpha_plus(F*, omega).
double alpha_minus_via_inversion(const OperatorSpec& spec, const ConeSpec& cone,
                                 const ShootingConfig& config = {});

}  // namespace conex
