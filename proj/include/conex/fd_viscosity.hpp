#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "conex/cone.hpp"
#include "conex/cone_exponents.hpp"
#include "conex/operators.hpp"

namespace conex {

/// Annular cone section E(omega, r0, r1) in 2D, axis along e_2. Radial nodes are
/// geometric (uniform in log r, matching the dilation invariance of the problem),
/// angular nodes uniform on [-theta0, theta0]. Node (i, j) -> index i*Ntheta + j.
struct PolarGrid {
    double r0 = 1, r1 = 2, theta0 = 0.5;
    int Nr = 8, Ntheta = 8;
    double dlog = 0, dtheta = 0;

    double r(int i) const { return r0 * std::exp(dlog * i); }
    double theta(int j) const { return -theta0 + dtheta * j; }
    int index(int i, int j) const { return i * Ntheta + j; }
    int size() const { return Nr * Ntheta; }
    bool is_boundary(int i, int j) const {
        return i == 0 || i == Nr - 1 || j == 0 || j == Ntheta - 1;
    }
    std::array<double, 2> cart(int i, int j) const {
        const double rr = r(i), th = theta(j);
        return {rr * std::sin(th), rr * std::cos(th)};
    }
};

PolarGrid build_grid(double r0, double r1, int Nr, int Ntheta, double theta0);

/// Grid function; boundary nodes carry the Dirichlet data.
struct PolarField {
    PolarGrid grid;
    std::vector<double> values;

    PolarField() = default;
    explicit PolarField(const PolarGrid& g) : grid(g), values(g.size(), 0.0) {}

    double at(int i, int j) const { return values[grid.index(i, j)]; }
    double& at(int i, int j) { return values[grid.index(i, j)]; }
    /// bilinear in (log r, theta), clamped to the domain rectangle
    double sample(double r, double theta) const;
};

/// Builds a field whose boundary nodes carry g(r, theta); interior starts at 0.
PolarField field_with_boundary(const PolarGrid& grid,
                               const std::function<double(double, double)>& g);

struct StencilSet {
    int num_directions = 16;   // even, uniform on the half circle
    double step_factor = 2.0;  // h = step_factor * local grid spacing (carteian arc)
};

enum class SolveMethod {
    Damped,  // monotone explicit update u -= tau * h_loc^2 * F_h[u], Jacobi sweeps
    Policy,  // frozen argmin/argmax directions + BiCGStab on the linearization
};

struct SolveConfig {
    double tol = 1e-8;
    int max_iter = 200000;
    SolveMethod method = SolveMethod::Damped;
};

struct SolveReport {
    int iterations = 0;
    double final_residual = 0;
    double initial_residual = 0;
    /// residual <= tol, or <= 1e-12 * initial residual when the data's dynamic range
    /// puts the rounding floor of the scheme above tol
    bool converged = false;
};

/// (u(x+h+ e) - 2u(x) + u(x-h- e)) / (quadratic weights), arms shrunk to the boundary
/// hit where the segment exits the domain (one-sided weights stay nonnegative).
double directional_second_difference(const PolarField& field, int i, int j,
                                     std::array<double, 2> direction, double h);

/// Wide-stencil residual of F at an interior node: Pucci-type operators evaluated on
/// the surrogate Hessian diag(mu_min, mu_max) over the stencil directions, gradient
/// by central differences in (log r, theta).
double apply_operator_fd(const OperatorSpec& spec, const PolarField& field, int i, int j,
                         const StencilSet& stencil);

/// Solves F_h[u] = 0 with the boundary values of `boundary`; returns the field and a
/// report. Non-convergence within max_iter returns the best iterate, converged=false.
std::pair<PolarField, SolveReport> solve_dirichlet(
    const OperatorSpec& spec, const PolarGrid& grid,
    const std::function<double(double, double)>& boundary, const SolveConfig& config = {},
    const StencilSet& stencil = {});

SolveReport solve_dirichlet_inplace(const OperatorSpec& spec, PolarField& field,
                                    const SolveConfig& config = {}, const StencilSet& stencil = {});

struct RatioTrace {
    std::vector<double> r;
    std::vector<double> q;  // inf of field / Psi over E(omega, r, 2r)
    std::vector<double> Q;  // sup
};

/// q(r), Q(r) over grid nodes in E(omega, r, 2r), one-cell collar at the lateral
/// boundary excluded (both numerator and denominator vanish there).
RatioTrace ratio_diagnostics(const PolarField& field, const ProfileSolution& profile,
                             std::span<const double> r_list);

/// Least-squares slope of log u(t * axis) against log t.
double hopf_exponent(const PolarField& field, std::span<const double> t_list);

/// sup(u/v) / inf(u/v) over nodes with radius in [ra, rb], lateral collar excluded.
double harnack_ratio(const PolarField& u, const PolarField& v, double ra, double rb);

enum class SingularityMode { Bounded, Singular };

struct SingularityExperiment {
    ShootResult plus;
    ShootResult minus;
    PolarField field;
    SolveReport report;
    RatioTrace vs_plus;
    RatioTrace vs_minus;
};

/// Dirichlet solve on E(omega, r0, 1) with zero lateral and outer data; inner-arc data
/// is the Psi+ trace (mode Singular) or the constant 1 (mode Bounded). Ratio traces
/// against both homogeneous solutions on E(omega, r, 2r) for the requested r values.
SingularityExperiment experiment_singularity(const OperatorSpec& spec, const ConeSpec& cone,
                                             SingularityMode mode, double r0, int Nr, int Ntheta,
                                             std::span<const double> r_list,
                                             const ShootingConfig& shoot_config = {},
                                             const SolveConfig& solve_config = {},
                                             const StencilSet& stencil = {});

}  // namespace conex
