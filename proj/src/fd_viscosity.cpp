#include "conex/fd_viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstdlib>
#include <stdexcept>

namespace conex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bilinear gather in the (log r, theta) rectangle: at most 4 nodes, weights >= 0.
struct Gather {
    std::array<int, 4> idx{};
    std::array<double, 4> w{};
};

Gather make_gather(const PolarGrid& g, double x, double y) {
    const double r = std::sqrt(x * x + y * y);
    double t = std::log(std::max(r, 1e-300) / g.r0);
    double th = std::atan2(x, y);  // polar angle to the +e_2 axis, signed

    t = std::clamp(t, 0.0, g.dlog * (g.Nr - 1));
    th = std::clamp(th, -g.theta0, g.theta0);

    int it = std::min(static_cast<int>(t / g.dlog), g.Nr - 2);
    int jt = std::min(static_cast<int>((th + g.theta0) / g.dtheta), g.Ntheta - 2);
    const double wt = std::clamp(t / g.dlog - it, 0.0, 1.0);
    const double wh = std::clamp((th + g.theta0) / g.dtheta - jt, 0.0, 1.0);

    Gather out;
    out.idx = {g.index(it, jt), g.index(it + 1, jt), g.index(it, jt + 1), g.index(it + 1, jt + 1)};
    out.w = {(1 - wt) * (1 - wh), wt * (1 - wh), (1 - wt) * wh, wt * wh};
    return out;
}

// Largest step fraction in (0, 1] keeping P + f*h*e inside the closed domain.
double boundary_fraction(const PolarGrid& g, std::array<double, 2> P, std::array<double, 2> e,
                         double h) {
    double f = 1.0;
    const double px = P[0], py = P[1];
    const double pe = px * e[0] + py * e[1];
    const double pp = px * px + py * py;

    // outer arc |X| = r1
    {
        const double disc = pe * pe + g.r1 * g.r1 - pp;
        if (disc >= 0) {
            const double s = -pe + std::sqrt(disc);
            if (s > 0) f = std::min(f, s / h);
        }
    }
    // inner arc |X| = r0 (only hit when marching inward)
    {
        const double disc = pe * pe - (pp - g.r0 * g.r0);
        if (disc >= 0 && pe < 0) {
            const double s = -pe - std::sqrt(disc);
            if (s > 0) f = std::min(f, s / h);
        }
    }
    // lateral rays theta = +-theta0; interior side has x.n < 0
    const double st = std::sin(g.theta0), ct = std::cos(g.theta0);
    struct Ray { std::array<double, 2> n, d; };
    const std::array<Ray, 2> rays = {{{{ct, -st}, {st, ct}}, {{-ct, -st}, {-st, ct}}}};
    for (const auto& ray : rays) {
        const double en = e[0] * ray.n[0] + e[1] * ray.n[1];
        if (std::abs(en) < 1e-300) continue;
        const double s = -(px * ray.n[0] + py * ray.n[1]) / en;
        if (s <= 0) continue;
        // must land on the forward ray, not on its mirror through the origin
        const double hx = px + s * e[0], hy = py + s * e[1];
        const double rad = std::hypot(hx, hy);
        if (hx * ray.d[0] + hy * ray.d[1] >= -1e-12 * rad) f = std::min(f, s / h);
    }
    return std::max(f, 0.0);
}

// The solver's stencil lives on the (log r, theta) rectangle, where the grid is
// uniform: rays through integer lattice offsets hit nodes exactly, so the second
// differences carry no interpolation error away from the boundary. The Cartesian
// directional second derivative along the in-frame angle psi is recovered from the
// conformal identity
//   D^2_cart(psi) = [ D^2_param(psi) + (sin^2 - cos^2)(psi) u_t - 2 sin psi cos psi u_th ] / r^2,
// the corrections being first order (central differences).
struct Arm {
    Gather gather;   // endpoint nodes (<= 2 used; boundary hits interpolate on the side)
    double len = 0;  // parameter length in (log r, theta) units
};

struct DirectionStencil {
    Arm plus, minus;
    // second difference in parameter units = cp*u(plus) + cc*u(center) + cm*u(minus)
    double cp = 0, cc = 0, cm = 0;
    // first-order correction coefficients on u_t and u_theta
    double ct = 0, cth = 0;
};

struct StencilTable {
    int K = 0;
    std::vector<int> interior;                    // node indices
    std::vector<DirectionStencil> dirs;           // interior.size() * K
    std::vector<double> update_scale;             // per node: r^2 * min over dirs of l+ l-
    std::vector<std::array<int, 4>> grad_nodes;   // i+1, i-1, j+1, j-1 neighbors
    std::vector<double> inv_r;
    std::vector<double> inv_r2;
    std::vector<std::array<double, 2>> cart;
};

// coprime lattice offsets with angles closest to the K uniform targets
std::vector<std::array<int, 2>> lattice_rays(const PolarGrid& g, int K) {
    std::vector<std::array<int, 2>> cands;
    const int L = std::max(2, K / 2);
    for (int a = -L; a <= L; ++a) {
        for (int b = 0; b <= L; ++b) {
            if (b == 0 && a != 1) continue;
            if (a == 0 && b != 1) continue;
            if (std::abs(std::gcd(a, b)) != 1) continue;
            cands.push_back({a, b});
        }
    }
    auto angle = [&](const std::array<int, 2>& v) {
        double ang = std::atan2(v[1] * g.dtheta, v[0] * g.dlog);
        if (ang < 0) ang += M_PI;
        return ang;
    };
    std::vector<std::array<int, 2>> rays;
    for (int k = 0; k < K; ++k) {
        const double target = M_PI * k / K;
        const std::array<int, 2>* best = nullptr;
        double best_d = kInf;
        for (const auto& c : cands) {
            double d = std::abs(angle(c) - target);
            d = std::min(d, M_PI - d);
            if (d < best_d) {
                best_d = d;
                best = &c;
            }
        }
        if (std::find(rays.begin(), rays.end(), *best) == rays.end()) rays.push_back(*best);
    }
    return rays;
}

// parameter-space arm from node (i, j) along step*(a, b) cells, clipped to the
// rectangle; a clipped endpoint lies on a boundary grid line and interpolates
// linearly between the two adjacent boundary nodes
Arm make_arm(const PolarGrid& g, int i, int j, int a, int b, int steps) {
    const double dt = g.dlog, dh = g.dtheta;
    const double vt = steps * a * dt, vh = steps * b * dh;
    double f = 1.0;
    if (vt > 0) f = std::min(f, (g.Nr - 1 - i) * dt / vt);
    if (vt < 0) f = std::min(f, -i * dt / vt);
    if (vh > 0) f = std::min(f, (g.Ntheta - 1 - j) * dh / vh);
    if (vh < 0) f = std::min(f, -j * dh / vh);

    Arm arm;
    arm.len = f * std::hypot(vt, vh);
    arm.gather.w = {0, 0, 0, 0};
    arm.gather.idx = {0, 0, 0, 0};
    if (f >= 1.0 - 1e-12) {
        arm.gather.idx[0] = g.index(i + steps * a, j + steps * b);
        arm.gather.w[0] = 1.0;
        return arm;
    }
    const double ti = (i * dt + f * vt) / dt;  // fractional node coordinates
    const double tj = (j * dh + f * vh) / dh;
    const int i0 = std::clamp(static_cast<int>(ti), 0, g.Nr - 2);
    const int j0 = std::clamp(static_cast<int>(tj), 0, g.Ntheta - 2);
    const double wi = std::clamp(ti - i0, 0.0, 1.0);
    const double wj = std::clamp(tj - j0, 0.0, 1.0);
    // the hit is on a grid line, so one of the two interpolations is degenerate
    if (wi < 1e-12 || wi > 1 - 1e-12) {
        const int ii = wi < 0.5 ? i0 : i0 + 1;
        arm.gather.idx = {g.index(ii, j0), g.index(ii, j0 + 1), 0, 0};
        arm.gather.w = {1 - wj, wj, 0, 0};
    } else {
        const int jj = wj < 0.5 ? j0 : j0 + 1;
        arm.gather.idx = {g.index(i0, jj), g.index(i0 + 1, jj), 0, 0};
        arm.gather.w = {1 - wi, wi, 0, 0};
    }
    return arm;
}

StencilTable build_table(const PolarGrid& g, const StencilSet& stencil) {
    if (stencil.num_directions < 4 || stencil.num_directions % 2 != 0)
        throw std::invalid_argument("StencilSet: num_directions must be even and >= 4");
    StencilTable T;
    const auto rays = lattice_rays(g, stencil.num_directions);
    T.K = static_cast<int>(rays.size());

    const double dmax = std::max(g.dlog, g.dtheta);
    std::vector<int> steps(T.K);
    std::vector<double> psi(T.K);
    for (int k = 0; k < T.K; ++k) {
        const double len = std::hypot(rays[k][0] * g.dlog, rays[k][1] * g.dtheta);
        steps[k] = std::max(1, static_cast<int>(std::lround(stencil.step_factor * dmax / len)));
        psi[k] = std::atan2(rays[k][1] * g.dtheta, rays[k][0] * g.dlog);
    }

    for (int i = 1; i < g.Nr - 1; ++i) {
        for (int j = 1; j < g.Ntheta - 1; ++j) {
            const int node = g.index(i, j);
            T.interior.push_back(node);
            T.cart.push_back(g.cart(i, j));
            const double rr = g.r(i);
            T.inv_r.push_back(1.0 / rr);
            T.inv_r2.push_back(1.0 / (rr * rr));
            T.grad_nodes.push_back(
                {g.index(i + 1, j), g.index(i - 1, j), g.index(i, j + 1), g.index(i, j - 1)});

            double scale = kInf;
            for (int k = 0; k < T.K; ++k) {
                DirectionStencil d;
                d.plus = make_arm(g, i, j, rays[k][0], rays[k][1], steps[k]);
                d.minus = make_arm(g, i, j, -rays[k][0], -rays[k][1], steps[k]);
                const double floor_len = 1e-14 * dmax;
                const double lp = std::max(d.plus.len, floor_len);
                const double lm = std::max(d.minus.len, floor_len);
                d.cp = 2.0 / (lp * (lp + lm));
                d.cm = 2.0 / (lm * (lp + lm));
                d.cc = -2.0 / (lp * lm);
                const double sp = std::sin(psi[k]), cp_ = std::cos(psi[k]);
                d.ct = sp * sp - cp_ * cp_;
                d.cth = -2.0 * sp * cp_;
                scale = std::min(scale, lp * lm);
                T.dirs.push_back(d);
            }
            T.update_scale.push_back(scale * rr * rr);
        }
    }
    return T;
}

double gather_value(const std::vector<double>& u, const Gather& gth) {
    return u[gth.idx[0]] * gth.w[0] + u[gth.idx[1]] * gth.w[1] + u[gth.idx[2]] * gth.w[2] +
           u[gth.idx[3]] * gth.w[3];
}

// Residual of the wide-stencil scheme at interior slot `s`; optionally reports the
// argmin/argmax directions and frozen gradient for the policy linearization.
double scheme_residual(const OperatorSpec& spec, const PolarGrid& g, const StencilTable& T,
                       const std::vector<double>& u, size_t s, int* kmin_out = nullptr,
                       int* kmax_out = nullptr, double* mu_min_out = nullptr,
                       double* mu_max_out = nullptr, std::array<double, 2>* grad_out = nullptr) {
    const int node = T.interior[s];
    const double uc = u[node];
    const auto& nb = T.grad_nodes[s];
    const double ut = (u[nb[0]] - u[nb[1]]) / (2 * g.dlog);
    const double uh = (u[nb[2]] - u[nb[3]]) / (2 * g.dtheta);
    const double ir2 = T.inv_r2[s];

    double mu_min = kInf, mu_max = -kInf;
    int kmin = 0, kmax = 0;
    for (int k = 0; k < T.K; ++k) {
        const DirectionStencil& d = T.dirs[s * T.K + k];
        const double mu = (d.cp * gather_value(u, d.plus.gather) + d.cc * uc +
                           d.cm * gather_value(u, d.minus.gather) + d.ct * ut + d.cth * uh) *
                          ir2;
        if (mu < mu_min) { mu_min = mu; kmin = k; }
        if (mu > mu_max) { mu_max = mu; kmax = k; }
    }

    const double gr = ut * T.inv_r[s];  // du/dr
    const double gt = uh * T.inv_r[s];  // (1/r) du/dtheta
    if (kmin_out) *kmin_out = kmin;
    if (kmax_out) *kmax_out = kmax;
    if (mu_min_out) *mu_min_out = mu_min;
    if (mu_max_out) *mu_max_out = mu_max;
    if (grad_out) *grad_out = {ut, uh};  // in (log r, theta) components

    const SymMatrix M = SymMatrix::diagonal({mu_min, mu_max});
    const std::array<double, 2> p = {std::hypot(gr, gt), 0.0};
    return spec.eval(M, p, T.cart[s]);
}

double max_abs_residual(const OperatorSpec& spec, const PolarGrid& g, const StencilTable& T,
                        const std::vector<double>& u) {
    double worst = 0;
    for (size_t s = 0; s < T.interior.size(); ++s)
        worst = std::max(worst, std::abs(scheme_residual(spec, g, T, u, s)));
    return worst;
}

// ---- policy iteration machinery ----

struct Csr {
    std::vector<int> row_ptr, col;
    std::vector<double> val;
    std::vector<double> rhs;
};

// Frozen linearization of the scheme around `u`: argmin/argmax directions, the
// operator's sensitivities to (mu_min, mu_max, |p|) by central differencing eval
// (exact away from kinks since each is piecewise linear), gradient direction frozen.
Csr build_policy_system(const OperatorSpec& spec, const PolarGrid& g, const StencilTable& T,
                        const std::vector<double>& u, const std::vector<int>& slot_of_node) {
    const size_t N = T.interior.size();
    Csr A;
    A.row_ptr.assign(N + 1, 0);
    A.rhs.assign(N, 0.0);

    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(32);
    vals.reserve(32);

    for (size_t s = 0; s < N; ++s) {
        int kmin, kmax;
        double mu_min, mu_max;
        std::array<double, 2> gtheta;
        scheme_residual(spec, g, T, u, s, &kmin, &kmax, &mu_min, &mu_max, &gtheta);

        const double gr = gtheta[0] * T.inv_r[s];
        const double gt = gtheta[1] * T.inv_r[s];
        const double pn = std::hypot(gr, gt);
        const std::array<double, 2> x = T.cart[s];

        auto F = [&](double a, double b, double pmag) {
            const SymMatrix M = SymMatrix::diagonal({a, b});
            const std::array<double, 2> p = {pmag, 0.0};
            return spec.eval(M, p, x);
        };
        const double scale = std::max({std::abs(mu_min), std::abs(mu_max), 1.0});
        const double dlt = 1e-7 * scale;
        const double c_min = (F(mu_min + dlt, mu_max, pn) - F(mu_min - dlt, mu_max, pn)) / (2 * dlt);
        const double c_max = (F(mu_min, mu_max + dlt, pn) - F(mu_min, mu_max - dlt, pn)) / (2 * dlt);
        const double dp = pn > 1e-14 ? (F(mu_min, mu_max, pn + dlt) - F(mu_min, mu_max, std::max(pn - dlt, 0.0))) /
                                           (dlt + std::min(dlt, pn))
                                     : 0.0;
        const double f0 = F(mu_min, mu_max, pn);
        // affine remainder so that the frozen map reproduces F at u exactly
        double affine = f0 - c_min * mu_min - c_max * mu_max - dp * pn;

        cols.clear();
        vals.clear();
        double diag = 0;

        auto add = [&](int node, double coef) {
            if (coef == 0) return;
            const int slot = slot_of_node[node];
            if (slot < 0) {
                A.rhs[s] -= coef * u[node];  // Dirichlet node
                return;
            }
            if (slot == static_cast<int>(s)) {
                diag += coef;
                return;
            }
            cols.push_back(slot);
            vals.push_back(coef);
        };

        auto add_direction = [&](int k, double coef) {
            const DirectionStencil& d = T.dirs[s * T.K + k];
            const double c = coef * T.inv_r2[s];
            for (int q = 0; q < 4; ++q) {
                add(d.plus.gather.idx[q], c * d.cp * d.plus.gather.w[q]);
                add(d.minus.gather.idx[q], c * d.cm * d.minus.gather.w[q]);
            }
            add(T.interior[s], c * d.cc);
            const double at = c * d.ct / (2 * g.dlog);
            const double ah = c * d.cth / (2 * g.dtheta);
            const auto& nb = T.grad_nodes[s];
            add(nb[0], at);
            add(nb[1], -at);
            add(nb[2], ah);
            add(nb[3], -ah);
        };

        add_direction(kmin, c_min);
        if (kmax == kmin) {
            add_direction(kmax, c_max);  // degenerate tie; same direction twice
        } else {
            add_direction(kmax, c_max);
        }

        if (dp != 0.0 && pn > 1e-14) {
            // d|p|/du through the central differences, gradient direction frozen
            const double xi_r = gr / pn, xi_t = gt / pn;
            const auto& nb = T.grad_nodes[s];
            const double cr = dp * xi_r * T.inv_r[s] / (2 * g.dlog);
            const double ct = dp * xi_t * T.inv_r[s] / (2 * g.dtheta);
            add(nb[0], cr);
            add(nb[1], -cr);
            add(nb[2], ct);
            add(nb[3], -ct);
        }

        A.rhs[s] -= affine;

        // row: diagonal first, then the rest sorted with duplicates merged
        std::vector<std::pair<int, double>> row;
        row.reserve(cols.size());
        for (size_t q = 0; q < cols.size(); ++q) row.push_back({cols[q], vals[q]});
        std::sort(row.begin(), row.end());
        A.col.push_back(static_cast<int>(s));
        A.val.push_back(diag);
        for (size_t q = 0; q < row.size(); ++q) {
            if (q > 0 && row[q].first == A.col.back()) {
                A.val.back() += row[q].second;
            } else {
                A.col.push_back(row[q].first);
                A.val.push_back(row[q].second);
            }
        }
        A.row_ptr[s + 1] = static_cast<int>(A.col.size());
    }
    return A;
}

void csr_multiply(const Csr& A, const std::vector<double>& x, std::vector<double>& y) {
    const size_t N = A.rhs.size();
    for (size_t i = 0; i < N; ++i) {
        double s = 0;
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q) s += A.val[q] * x[A.col[q]];
        y[i] = s;
    }
}

// Jacobi-scaled BiCGStab; returns achieved max-norm residual of the scaled system.
double bicgstab(const Csr& A_in, std::vector<double>& x, double rel_tol, int max_iter) {
    Csr A = A_in;
    const size_t N = A.rhs.size();
    // left-precondition by the diagonal
    for (size_t i = 0; i < N; ++i) {
        double d = 0;
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            if (A.col[q] == static_cast<int>(i)) d = A.val[q];
        const double inv = std::abs(d) > 1e-300 ? 1.0 / d : 1.0;
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q) A.val[q] *= inv;
        A.rhs[i] *= inv;
    }
    double rhs_norm = 0;
    for (double q : A.rhs) rhs_norm = std::max(rhs_norm, std::abs(q));
    const double tol = rel_tol * std::max(rhs_norm, 1e-30);

    std::vector<double> r(N), rhat(N), p(N, 0.0), v(N, 0.0), t(N), sv(N);
    csr_multiply(A, x, r);
    for (size_t i = 0; i < N; ++i) r[i] = A.rhs[i] - r[i];
    rhat = r;
    double rho = 1, alpha = 1, omega = 1;

    auto max_norm = [&](const std::vector<double>& z) {
        double m = 0;
        for (double q : z) m = std::max(m, std::abs(q));
        return m;
    };

    double rn = max_norm(r);
    for (int it = 0; it < max_iter && rn > tol; ++it) {
        const double rho1 = std::inner_product(rhat.begin(), rhat.end(), r.begin(), 0.0);
        if (std::abs(rho1) < 1e-290) { rhat = r; rho = 1; alpha = 1; omega = 1; p.assign(N, 0.0); v.assign(N, 0.0); continue; }
        const double beta = (rho1 / rho) * (alpha / omega);
        rho = rho1;
        for (size_t i = 0; i < N; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        csr_multiply(A, p, v);
        const double rv = std::inner_product(rhat.begin(), rhat.end(), v.begin(), 0.0);
        if (std::abs(rv) < 1e-290) { rhat = r; rho = 1; alpha = 1; omega = 1; p.assign(N, 0.0); v.assign(N, 0.0); continue; }
        alpha = rho / rv;
        for (size_t i = 0; i < N; ++i) sv[i] = r[i] - alpha * v[i];
        csr_multiply(A, sv, t);
        const double tt = std::inner_product(t.begin(), t.end(), t.begin(), 0.0);
        omega = tt > 1e-290 ? std::inner_product(t.begin(), t.end(), sv.begin(), 0.0) / tt : 0.0;
        for (size_t i = 0; i < N; ++i) x[i] += alpha * p[i] + omega * sv[i];
        for (size_t i = 0; i < N; ++i) r[i] = sv[i] - omega * t[i];
        rn = max_norm(r);
        if (omega == 0.0) { rhat = r; rho = 1; alpha = 1; omega = 1; p.assign(N, 0.0); v.assign(N, 0.0); }
    }
    return rn;
}

}  // namespace

PolarGrid build_grid(double r0, double r1, int Nr, int Ntheta, double theta0) {
    if (!(r0 > 0) || !(r1 > r0)) throw std::invalid_argument("build_grid: need 0 < r0 < r1");
    if (Nr < 8 || Ntheta < 8) throw std::invalid_argument("build_grid: need Nr, Ntheta >= 8");
    if (!(theta0 > 0) || !(theta0 < M_PI))
        throw std::invalid_argument("build_grid: theta0 must lie in (0, pi)");
    PolarGrid g;
    g.r0 = r0;
    g.r1 = r1;
    g.Nr = Nr;
    g.Ntheta = Ntheta;
    g.theta0 = theta0;
    g.dlog = std::log(r1 / r0) / (Nr - 1);
    g.dtheta = 2 * theta0 / (Ntheta - 1);
    return g;
}

double PolarField::sample(double r, double theta) const {
    const Gather gth = make_gather(grid, r * std::sin(theta), r * std::cos(theta));
    return gather_value(values, gth);
}

PolarField field_with_boundary(const PolarGrid& grid,
                               const std::function<double(double, double)>& g) {
    PolarField f(grid);
    for (int i = 0; i < grid.Nr; ++i)
        for (int j = 0; j < grid.Ntheta; ++j)
            if (grid.is_boundary(i, j)) f.at(i, j) = g(grid.r(i), grid.theta(j));
    return f;
}

double directional_second_difference(const PolarField& field, int i, int j,
                                     std::array<double, 2> direction, double h) {
    const PolarGrid& g = field.grid;
    if (g.is_boundary(i, j))
        throw std::invalid_argument("directional_second_difference: interior nodes only");
    const double dn = std::hypot(direction[0], direction[1]);
    const std::array<double, 2> e = {direction[0] / dn, direction[1] / dn};
    const auto P = g.cart(i, j);
    // Cartesian probes with bilinear interpolation; arms shrink to the boundary hit
    const double fp = boundary_fraction(g, P, e, h);
    const double fm = boundary_fraction(g, P, {-e[0], -e[1]}, h);
    const double hp = std::max(fp * h, 1e-14 * h);
    const double hm = std::max(fm * h, 1e-14 * h);
    const double up =
        gather_value(field.values, make_gather(g, P[0] + hp * e[0], P[1] + hp * e[1]));
    const double um =
        gather_value(field.values, make_gather(g, P[0] - hm * e[0], P[1] - hm * e[1]));
    return 2 * (hm * up - (hp + hm) * field.at(i, j) + hp * um) / (hp * hm * (hp + hm));
}

double apply_operator_fd(const OperatorSpec& spec, const PolarField& field, int i, int j,
                         const StencilSet& stencil) {
    const PolarGrid& g = field.grid;
    if (g.is_boundary(i, j)) throw std::invalid_argument("apply_operator_fd: interior nodes only");
    double mu_min = kInf, mu_max = -kInf;
    const double h = stencil.step_factor * g.r(i) * std::max(g.dlog, g.dtheta);
    for (int k = 0; k < stencil.num_directions; ++k) {
        const double ang = M_PI * k / stencil.num_directions;
        const double mu =
            directional_second_difference(field, i, j, {std::cos(ang), std::sin(ang)}, h);
        mu_min = std::min(mu_min, mu);
        mu_max = std::max(mu_max, mu);
    }
    const double ut = (field.at(i + 1, j) - field.at(i - 1, j)) / (2 * g.dlog);
    const double uh = (field.at(i, j + 1) - field.at(i, j - 1)) / (2 * g.dtheta);
    const double rr = g.r(i);
    const SymMatrix M = SymMatrix::diagonal({mu_min, mu_max});
    const std::array<double, 2> p = {std::hypot(ut / rr, uh / rr), 0.0};
    const auto x = g.cart(i, j);
    return spec.eval(M, p, x);
}

SolveReport solve_dirichlet_inplace(const OperatorSpec& spec, PolarField& field,
                                    const SolveConfig& config, const StencilSet& stencil) {
    const PolarGrid& g = field.grid;
    const StencilTable T = build_table(g, stencil);
    std::vector<double>& u = field.values;
    const size_t N = T.interior.size();

    SolveReport rep;
    rep.initial_residual = max_abs_residual(spec, g, T, u);
    auto good_enough = [&](double r) {
        return r <= std::max(config.tol, 1e-12 * rep.initial_residual);
    };

    if (config.method == SolveMethod::Damped) {
        const EllipticityParams ep = spec.ellipticity(2);
        const double tau = 1.0 / (2.0 * ep.Lambda * (1.0 + T.K));
        std::vector<double> res(N);
        int it = 0;
        for (; it < config.max_iter; ++it) {
            double worst = 0;
            for (size_t s = 0; s < N; ++s) {
                res[s] = scheme_residual(spec, g, T, u, s);
                worst = std::max(worst, std::abs(res[s]));
            }
            rep.final_residual = worst;
            if (worst <= config.tol) break;
            for (size_t s = 0; s < N; ++s) u[T.interior[s]] -= tau * T.update_scale[s] * res[s];
        }
        rep.iterations = it;
        rep.converged = good_enough(rep.final_residual);
        return rep;
    }

    // policy iteration; each outer step solves the frozen linearization
    std::vector<int> slot_of_node(g.size(), -1);
    for (size_t s = 0; s < N; ++s) slot_of_node[T.interior[s]] = static_cast<int>(s);

    double res = max_abs_residual(spec, g, T, u);
    rep.final_residual = res;
    int outer = 0;
    int total_iters = 0;
    const int max_outer = 200;
    int stagnant = 0;

    while (res > config.tol && outer < max_outer && total_iters < config.max_iter) {
        const Csr A = build_policy_system(spec, g, T, u, slot_of_node);
        std::vector<double> x(N);
        for (size_t s = 0; s < N; ++s) x[s] = u[T.interior[s]];
        bicgstab(A, x, 1e-12, 4000);
        total_iters += 1;

        // the frozen policy can cycle at argmin/argmax ties; a line search along the
        // policy step keeps the true residual decreasing
        std::vector<double> saved(N);
        for (size_t s = 0; s < N; ++s) saved[s] = u[T.interior[s]];
        double best_res = res;
        double best_t = 0;
        for (double t = 1.0; t >= 1.0 / 64; t *= 0.5) {
            for (size_t s = 0; s < N; ++s)
                u[T.interior[s]] = saved[s] + t * (x[s] - saved[s]);
            const double res_t = max_abs_residual(spec, g, T, u);
            if (res_t < best_res) {
                best_res = res_t;
                best_t = t;
                break;  // largest improving step wins
            }
        }
        for (size_t s = 0; s < N; ++s)
            u[T.interior[s]] = saved[s] + best_t * (x[s] - saved[s]);

        stagnant = best_res > 0.999 * res ? stagnant + 1 : 0;
        res = best_res;
        rep.final_residual = res;
        ++outer;
        if (stagnant >= 3) break;  // tie-cycling floor reached
    }
    rep.iterations = total_iters;
    rep.converged = good_enough(res);
    return rep;
}

std::pair<PolarField, SolveReport> solve_dirichlet(
    const OperatorSpec& spec, const PolarGrid& grid,
    const std::function<double(double, double)>& boundary, const SolveConfig& config,
    const StencilSet& stencil) {
    PolarField f = field_with_boundary(grid, boundary);
    SolveReport rep = solve_dirichlet_inplace(spec, f, config, stencil);
    return {std::move(f), rep};
}

RatioTrace ratio_diagnostics(const PolarField& field, const ProfileSolution& profile,
                             std::span<const double> r_list) {
    const PolarGrid& g = field.grid;
    RatioTrace out;
    for (const double r : r_list) {
        if (!(r >= g.r0 * (1 - 1e-12)) || !(2 * r <= g.r1 * (1 + 1e-12)))
            throw std::invalid_argument("ratio_diagnostics: [r, 2r] must lie inside [r0, r1]");
        double q = kInf, Q = -kInf;
        for (int i = 0; i < g.Nr; ++i) {
            const double rr = g.r(i);
            if (rr < r || rr > 2 * r) continue;
            for (int j = 2; j < g.Ntheta - 2; ++j) {  // one-cell lateral collar excluded
                const double psi = profile.value_polar(rr, std::abs(g.theta(j)));
                const double ratio = field.at(i, j) / psi;
                q = std::min(q, ratio);
                Q = std::max(Q, ratio);
            }
        }
        if (q == kInf) throw std::invalid_argument("ratio_diagnostics: empty annulus");
        out.r.push_back(r);
        out.q.push_back(q);
        out.Q.push_back(Q);
    }
    return out;
}

double hopf_exponent(const PolarField& field, std::span<const double> t_list) {
    if (t_list.size() < 2) throw std::invalid_argument("hopf_exponent: need at least two radii");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const double t : t_list) {
        const double v = field.sample(t, 0.0);
        if (!(v > 0)) throw std::invalid_argument("hopf_exponent: field not positive on the axis");
        const double lx = std::log(t), ly = std::log(v);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(t_list.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double harnack_ratio(const PolarField& u, const PolarField& v, double ra, double rb) {
    const PolarGrid& g = u.grid;
    double lo = kInf, hi = -kInf;
    for (int i = 0; i < g.Nr; ++i) {
        const double rr = g.r(i);
        if (rr < ra || rr > rb) continue;
        for (int j = 2; j < g.Ntheta - 2; ++j) {
            const double uu = u.at(i, j), vv = v.at(i, j);
            if (!(uu > 0) || !(vv > 0))
                throw std::invalid_argument("harnack_ratio: fields must be positive on the region");
            const double ratio = uu / vv;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    }
    if (lo == kInf) throw std::invalid_argument("harnack_ratio: empty region");
    return hi / lo;
}

SingularityExperiment experiment_singularity(const OperatorSpec& spec, const ConeSpec& cone,
                                             SingularityMode mode, double r0, int Nr, int Ntheta,
                                             std::span<const double> r_list,
                                             const ShootingConfig& shoot_config,
                                             const SolveConfig& solve_config,
                                             const StencilSet& stencil) {
    if (cone.dim != 2)
        throw std::invalid_argument("experiment_singularity: 2D cones only");
    SingularityExperiment ex;
    ex.plus = shoot(spec, cone, Branch::Plus, shoot_config);
    ex.minus = shoot(spec, cone, Branch::Minus, shoot_config);

    const PolarGrid grid = build_grid(r0, 1.0, Nr, Ntheta, cone.theta0);
    const double edge = grid.r0 * (1 + 1e-12);
    auto boundary = [&](double r, double theta) -> double {
        if (r <= edge) {
            if (mode == SingularityMode::Singular)
                return ex.plus.profile.value_polar(r, std::abs(theta));
            return std::abs(theta) < cone.theta0 * (1 - 1e-12) ? 1.0 : 0.0;
        }
        return 0.0;  // outer arc and lateral rays
    };
    auto [field, rep] = solve_dirichlet(spec, grid, boundary, solve_config, stencil);
    ex.field = std::move(field);
    ex.report = rep;
    ex.vs_plus = ratio_diagnostics(ex.field, ex.plus.profile, r_list);
    ex.vs_minus = ratio_diagnostics(ex.field, ex.minus.profile, r_list);
    return ex;
}

}  // namespace conex
