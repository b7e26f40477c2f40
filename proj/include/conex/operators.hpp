#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conex/sym_matrix.hpp"

namespace conex {

/// Ellipticity constants of Eq.-style sandwich bounds: 0 < lambda <= Lambda, mu >= 0.
struct EllipticityParams {
    double lambda = 1.0;
    double Lambda = 1.0;
    double mu = 0.0;
    void validate() const;
};

enum class OperatorVariant {
    PucciPlus,
    PucciMinus,
    ExtremalPlus,
    ExtremalMinus,
    Laplacian,
    Isaacs,
    Dual,
    Inverted,
};

/// Second-order argument triple (M, p, x) with |x| > 0.
struct Jet {
    SymMatrix M;
    std::vector<double> p;
    std::vector<double> x;
};

/// P+(M) = -lambda sum_{mu_j>0} mu_j - Lambda sum_{mu_j<0} mu_j, eigenvalues within
/// 1e-14*||M|| of zero contribute nothing (both branch weights vanish there anyway).
double pucci_plus(const SymMatrix& M, const EllipticityParams& params);
double pucci_minus(const SymMatrix& M, const EllipticityParams& params);

/// Sampling definition of P+ as sup over A in [[lambda, Lambda]] of -tr(A M).
/// Draws `num_samples` random admissible A; when `include_aligned` is set, also
/// evaluates the eigenframe-aligned optimizer, which attains the sup exactly.
double pucci_oracle(const SymMatrix& M, const EllipticityParams& params, int num_samples,
                    std::uint64_t seed = 1234, bool include_aligned = true);

/// Immutable description of a uniformly elliptic, 1-homogeneous, dilation invariant
/// operator. Dual and inverted operators are wrappers evaluating by formula, so the
/// involutions hold pointwise rather than by symbolic rewriting.
class OperatorSpec {
public:
    static OperatorSpec pucci_plus_op(double lambda, double Lambda);
    static OperatorSpec pucci_minus_op(double lambda, double Lambda);
    static OperatorSpec extremal_plus(double lambda, double Lambda, double mu);
    static OperatorSpec extremal_minus(double lambda, double Lambda, double mu);
    static OperatorSpec laplacian();
    /// inf over i of sup over j of [ -tr(A[i][j] M) + b[i][j] |x|^-1 |p| ].
    static OperatorSpec isaacs(std::vector<std::vector<SymMatrix>> A,
                               std::vector<std::vector<double>> b);

    OperatorVariant variant() const;
    /// Constants of this operator's own ellipticity sandwich; for Isaacs they are the
    /// family envelope. mu for an inverted operator grows with the dimension, hence
    /// the argument.
    EllipticityParams ellipticity(int dim) const;

    double eval(const SymMatrix& M, std::span<const double> p, std::span<const double> x) const;
    double eval(const Jet& jet) const { return eval(jet.M, jet.p, jet.x); }

    OperatorSpec dual() const;
    OperatorSpec inverted() const;
    const OperatorSpec& inner() const;  // wrapper variants only

    /// Every implemented variant evaluates through (eig(M), |p|, |x|) except the
    /// inverted wrapper, which also sees the relative orientation of p and x but is
    /// still frame-covariant, so the cone ODE reduction applies to all of them.
    bool rotationally_invariant() const { return true; }

    const std::vector<std::vector<SymMatrix>>& isaacs_A() const;
    const std::vector<std::vector<double>>& isaacs_b() const;

    std::string name() const;

private:
    struct Data;
    explicit OperatorSpec(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
    std::shared_ptr<const Data> d_;
};

OperatorSpec dual(const OperatorSpec& spec);
OperatorSpec invert(const OperatorSpec& spec);

/// Checks the transport identity F*(D^2u*, Du*, y) = |y|^-4 F(D^2u, Du, x) at x = y/|y|^2
/// for a twice differentiable callable u, derivatives taken by central differences.
/// Returns (lhs, rhs).
std::pair<double, double> invert_function_residual(
    const OperatorSpec& spec, const std::function<double(std::span<const double>)>& u,
    std::span<const double> y, double fd_step = 1e-4);

}  // namespace conex
