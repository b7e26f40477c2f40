#include "conex/operators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "conex/rng.hpp"

namespace conex {

namespace {

double norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double pucci_signed(const SymMatrix& M, double weight_pos, double weight_neg) {
    double eigs[kMaxDim];
    const int n = eig_sym(M, std::span<double>(eigs, kMaxDim));
    const double dead_band = 1e-14 * M.frobenius_norm();
    double r = 0;
    for (int i = 0; i < n; ++i) {
        if (eigs[i] > dead_band)
            r += weight_pos * eigs[i];
        else if (eigs[i] < -dead_band)
            r += weight_neg * eigs[i];
    }
    return r;
}

}  // namespace

void EllipticityParams::validate() const {
    if (!(lambda > 0) || !(Lambda >= lambda) || !(mu >= 0))
        throw std::invalid_argument("EllipticityParams: need 0 < lambda <= Lambda, mu >= 0");
}

double pucci_plus(const SymMatrix& M, const EllipticityParams& params) {
    params.validate();
    return pucci_signed(M, -params.lambda, -params.Lambda);
}

double pucci_minus(const SymMatrix& M, const EllipticityParams& params) {
    params.validate();
    return pucci_signed(M, -params.Lambda, -params.lambda);
}

double pucci_oracle(const SymMatrix& M, const EllipticityParams& params, int num_samples,
                    std::uint64_t seed, bool include_aligned) {
    params.validate();
    if (num_samples < 0) throw std::invalid_argument("pucci_oracle: num_samples < 0");
    const int n = M.dim();
    double best = -std::numeric_limits<double>::infinity();

    auto neg_trace_product = [&](const double q[kMaxDim][kMaxDim], const double* diag) {
        // -tr(Q diag Q^T M) = -sum_k diag[k] * (q_k . M q_k)
        double s = 0;
        for (int k = 0; k < n; ++k) {
            double mq[kMaxDim];
            for (int i = 0; i < n; ++i) {
                double t = 0;
                for (int j = 0; j < n; ++j) t += M(i, j) * q[k][j];
                mq[i] = t;
            }
            double quad = 0;
            for (int i = 0; i < n; ++i) quad += q[k][i] * mq[i];
            s -= diag[k] * quad;
        }
        return s;
    };

    if (include_aligned) {
        const EigenDecomposition d = eig_sym_full(M);
        double q[kMaxDim][kMaxDim];
        double diag[kMaxDim];
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) q[k][i] = d.vectors[k][i];
            diag[k] = d.values[k] > 0 ? params.lambda : params.Lambda;
        }
        best = std::max(best, neg_trace_product(q, diag));
    }

    Rng rng(seed);
    for (int s = 0; s < num_samples; ++s) {
        // random orthogonal frame by Gram-Schmidt on Gaussian vectors
        double q[kMaxDim][kMaxDim];
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) q[k][i] = rng.normal();
            for (int prev = 0; prev < k; ++prev) {
                double proj = 0;
                for (int i = 0; i < n; ++i) proj += q[k][i] * q[prev][i];
                for (int i = 0; i < n; ++i) q[k][i] -= proj * q[prev][i];
            }
            double len = 0;
            for (int i = 0; i < n; ++i) len += q[k][i] * q[k][i];
            len = std::sqrt(len);
            if (len < 1e-12) { --k; continue; }
            for (int i = 0; i < n; ++i) q[k][i] /= len;
        }
        double diag[kMaxDim];
        for (int k = 0; k < n; ++k) diag[k] = rng.uniform(params.lambda, params.Lambda);
        best = std::max(best, neg_trace_product(q, diag));
    }
    return best;
}

struct OperatorSpec::Data {
    OperatorVariant variant;
    EllipticityParams params;
    std::vector<std::vector<SymMatrix>> A;  // isaacs
    std::vector<std::vector<double>> b;     // isaacs
    std::shared_ptr<const Data> inner;      // dual / inverted
    // cached OperatorSpec view of `inner` so inner() can return a reference
    std::unique_ptr<OperatorSpec> inner_spec;
};

OperatorSpec OperatorSpec::pucci_plus_op(double lambda, double Lambda) {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::PucciPlus;
    d->params = {lambda, Lambda, 0.0};
    d->params.validate();
    return OperatorSpec(std::move(d));
}

OperatorSpec OperatorSpec::pucci_minus_op(double lambda, double Lambda) {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::PucciMinus;
    d->params = {lambda, Lambda, 0.0};
    d->params.validate();
    return OperatorSpec(std::move(d));
}

OperatorSpec OperatorSpec::extremal_plus(double lambda, double Lambda, double mu) {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::ExtremalPlus;
    d->params = {lambda, Lambda, mu};
    d->params.validate();
    return OperatorSpec(std::move(d));
}

OperatorSpec OperatorSpec::extremal_minus(double lambda, double Lambda, double mu) {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::ExtremalMinus;
    d->params = {lambda, Lambda, mu};
    d->params.validate();
    return OperatorSpec(std::move(d));
}

OperatorSpec OperatorSpec::laplacian() {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::Laplacian;
    d->params = {1.0, 1.0, 0.0};
    return OperatorSpec(std::move(d));
}

OperatorSpec OperatorSpec::isaacs(std::vector<std::vector<SymMatrix>> A,
                                  std::vector<std::vector<double>> b) {
    if (A.empty() || A[0].empty()) throw std::invalid_argument("isaacs: empty family");
    if (b.size() != A.size()) throw std::invalid_argument("isaacs: A/b shape mismatch");
    const int n = A[0][0].dim();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double mu = 0;
    for (size_t i = 0; i < A.size(); ++i) {
        if (A[i].size() != A[0].size() || b[i].size() != A[i].size())
            throw std::invalid_argument("isaacs: ragged family");
        for (size_t j = 0; j < A[i].size(); ++j) {
            if (A[i][j].dim() != n) throw std::invalid_argument("isaacs: dim mismatch in family");
            if (b[i][j] < 0) throw std::invalid_argument("isaacs: drift coefficients must be >= 0");
            double eigs[kMaxDim];
            eig_sym(A[i][j], std::span<double>(eigs, kMaxDim));
            lo = std::min(lo, eigs[0]);
            hi = std::max(hi, eigs[n - 1]);
            mu = std::max(mu, b[i][j]);
        }
    }
    if (!(lo > 0)) throw std::invalid_argument("isaacs: family not uniformly elliptic");
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::Isaacs;
    d->params = {lo, hi, mu};
    d->A = std::move(A);
    d->b = std::move(b);
    return OperatorSpec(std::move(d));
}

OperatorVariant OperatorSpec::variant() const { return d_->variant; }

EllipticityParams OperatorSpec::ellipticity(int dim) const {
    switch (d_->variant) {
        case OperatorVariant::Dual:
            return OperatorSpec(d_->inner).ellipticity(dim);
        case OperatorVariant::Inverted: {
            // inversion keeps lambda, Lambda and enlarges the drift constant
            EllipticityParams p = OperatorSpec(d_->inner).ellipticity(dim);
            p.mu = 2.0 * ((dim - 1) * p.Lambda - p.lambda) + p.mu;
            return p;
        }
        default:
            return d_->params;
    }
}

double OperatorSpec::eval(const SymMatrix& M, std::span<const double> p,
                          std::span<const double> x) const {
    const int n = M.dim();
    if (static_cast<int>(p.size()) != n || static_cast<int>(x.size()) != n)
        throw std::invalid_argument("OperatorSpec::eval: dimension mismatch");

    switch (d_->variant) {
        case OperatorVariant::PucciPlus:
            return pucci_plus(M, d_->params);
        case OperatorVariant::PucciMinus:
            return pucci_minus(M, d_->params);
        case OperatorVariant::ExtremalPlus:
            return pucci_plus(M, d_->params) + d_->params.mu * norm(p) / norm(x);
        case OperatorVariant::ExtremalMinus:
            return pucci_minus(M, d_->params) - d_->params.mu * norm(p) / norm(x);
        case OperatorVariant::Laplacian:
            return -M.trace();
        case OperatorVariant::Isaacs: {
            const double drift_base = norm(p) / norm(x);
            double inf_val = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < d_->A.size(); ++i) {
                double sup_val = -std::numeric_limits<double>::infinity();
                for (size_t j = 0; j < d_->A[i].size(); ++j) {
                    double tr = 0;
                    for (int r = 0; r < n; ++r)
                        for (int c = 0; c < n; ++c) tr += d_->A[i][j](r, c) * M(c, r);
                    sup_val = std::max(sup_val, -tr + d_->b[i][j] * drift_base);
                }
                inf_val = std::min(inf_val, sup_val);
            }
            return inf_val;
        }
        case OperatorVariant::Dual: {
            std::array<double, kMaxDim> mp;
            for (int i = 0; i < n; ++i) mp[i] = -p[i];
            return -OperatorSpec(d_->inner).eval(-M, std::span<const double>(mp.data(), n), x);
        }
        case OperatorVariant::Inverted: {
            const double y2 = dot(x, x);
            if (!(y2 > 0)) throw std::invalid_argument("inverted eval: y = 0");
            // J = I - 2 y (x) y / |y|^2
            double J[kMaxDim][kMaxDim];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    J[i][j] = (i == j ? 1.0 : 0.0) - 2.0 * x[i] * x[j] / y2;

            std::array<double, kMaxDim> Jp;
            for (int i = 0; i < n; ++i) {
                double s = 0;
                for (int j = 0; j < n; ++j) s += J[i][j] * p[j];
                Jp[i] = s;
            }

            // J M J
            double MJ[kMaxDim][kMaxDim];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0;
                    for (int k = 0; k < n; ++k) s += M(i, k) * J[k][j];
                    MJ[i][j] = s;
                }
            SymMatrix Mt(n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double s = 0;
                    for (int k = 0; k < n; ++k) s += J[i][k] * MJ[k][j];
                    Mt.set(i, j, s);
                }

            // - 2|y|^-2 ( (y.p) J + y (x) Jp + y (x) p ), symmetric tensor products
            const double yp = dot(x, p);
            const double c = -2.0 / y2;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double t = yp * J[i][j];
                    t += 0.5 * (x[i] * Jp[j] + Jp[i] * x[j]);
                    t += 0.5 * (x[i] * p[j] + p[i] * x[j]);
                    Mt.add(i, j, c * t);
                }

            return OperatorSpec(d_->inner).eval(Mt, std::span<const double>(Jp.data(), n), x);
        }
    }
    throw std::logic_error("OperatorSpec::eval: unreachable");
}

OperatorSpec OperatorSpec::dual() const {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::Dual;
    d->params = d_->params;
    d->inner = d_;
    d->inner_spec = std::make_unique<OperatorSpec>(OperatorSpec(d_));
    return OperatorSpec(std::move(d));
}

OperatorSpec OperatorSpec::inverted() const {
    auto d = std::make_shared<Data>();
    d->variant = OperatorVariant::Inverted;
    d->params = d_->params;
    d->inner = d_;
    d->inner_spec = std::make_unique<OperatorSpec>(OperatorSpec(d_));
    return OperatorSpec(std::move(d));
}

const OperatorSpec& OperatorSpec::inner() const {
    if (!d_->inner_spec) throw std::logic_error("OperatorSpec::inner: not a wrapper variant");
    return *d_->inner_spec;
}

const std::vector<std::vector<SymMatrix>>& OperatorSpec::isaacs_A() const {
    if (d_->variant != OperatorVariant::Isaacs) throw std::logic_error("not an isaacs family");
    return d_->A;
}

const std::vector<std::vector<double>>& OperatorSpec::isaacs_b() const {
    if (d_->variant != OperatorVariant::Isaacs) throw std::logic_error("not an isaacs family");
    return d_->b;
}

std::string OperatorSpec::name() const {
    switch (d_->variant) {
        case OperatorVariant::PucciPlus: return "pucci-plus";
        case OperatorVariant::PucciMinus: return "pucci-minus";
        case OperatorVariant::ExtremalPlus: return "extremal-plus";
        case OperatorVariant::ExtremalMinus: return "extremal-minus";
        case OperatorVariant::Laplacian: return "laplacian";
        case OperatorVariant::Isaacs: return "isaacs";
        case OperatorVariant::Dual: return "dual(" + OperatorSpec(d_->inner).name() + ")";
        case OperatorVariant::Inverted: return "inverted(" + OperatorSpec(d_->inner).name() + ")";
    }
    return "?";
}

OperatorSpec dual(const OperatorSpec& spec) { return spec.dual(); }
OperatorSpec invert(const OperatorSpec& spec) { return spec.inverted(); }

std::pair<double, double> invert_function_residual(
    const OperatorSpec& spec, const std::function<double(std::span<const double>)>& u,
    std::span<const double> y, double fd_step) {
    const int n = static_cast<int>(y.size());
    const double ry2 = dot(y, y);
    if (!(ry2 > 0)) throw std::invalid_argument("invert_function_residual: y = 0");
    const double h = fd_step;
    if (std::sqrt(ry2) <= 4 * h)
        throw std::invalid_argument("invert_function_residual: FD step collides with the singularity");

    auto ustar = [&](std::span<const double> yy) {
        double s = dot(yy, yy);
        std::vector<double> xx(n);
        for (int i = 0; i < n; ++i) xx[i] = yy[i] / s;
        return u(xx);
    };

    auto fd_jet = [&](auto&& f, std::span<const double> at, SymMatrix& H, std::vector<double>& g) {
        std::vector<double> q(at.begin(), at.end());
        const double f0 = f(q);
        for (int i = 0; i < n; ++i) {
            q[i] = at[i] + h;
            const double fp = f(q);
            q[i] = at[i] - h;
            const double fm = f(q);
            q[i] = at[i];
            g[i] = (fp - fm) / (2 * h);
            H.set(i, i, (fp - 2 * f0 + fm) / (h * h));
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                q[i] = at[i] + h; q[j] = at[j] + h;
                const double fpp = f(q);
                q[j] = at[j] - h;
                const double fpm = f(q);
                q[i] = at[i] - h; q[j] = at[j] + h;
                const double fmp = f(q);
                q[j] = at[j] - h;
                const double fmm = f(q);
                q[i] = at[i]; q[j] = at[j];
                H.set(i, j, (fpp - fpm - fmp + fmm) / (4 * h * h));
            }
    };

    SymMatrix Hstar(n);
    std::vector<double> gstar(n);
    fd_jet(ustar, y, Hstar, gstar);
    const double lhs = spec.inverted().eval(Hstar, gstar, y);

    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = y[i] / ry2;
    if (norm(x) <= 4 * h)
        throw std::invalid_argument("invert_function_residual: FD step collides with the singularity");
    SymMatrix Hx(n);
    std::vector<double> gx(n);
    fd_jet(u, x, Hx, gx);
    const double rhs = spec.eval(Hx, gx, x) / (ry2 * ry2);

    return {lhs, rhs};
}

}  // namespace conex
