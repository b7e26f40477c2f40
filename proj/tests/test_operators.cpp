#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "conex/json_io.hpp"
#include "conex/operators.hpp"
#include "conex/rng.hpp"

using namespace conex;

namespace {

SymMatrix random_symmetric(int n, Rng& rng, double scale = 1.0) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m.set(i, j, scale * rng.normal());
    return m;
}

std::vector<double> random_vec(int n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

std::vector<double> random_point(int n, Rng& rng) {
    // |x| in [0.5, 2]
    std::vector<double> v = random_vec(n, rng);
    double s = 0;
    for (double x : v) s += x * x;
    const double target = rng.uniform(0.5, 2.0);
    for (double& x : v) x *= target / std::sqrt(s);
    return v;
}

Jet random_jet(int n, Rng& rng) {
    return Jet{random_symmetric(n, rng, 2.0), random_vec(n, rng, 2.0), random_point(n, rng)};
}

std::vector<OperatorSpec> sample_specs() {
    SymMatrix a11 = SymMatrix::diagonal({1.0, 1.5});
    SymMatrix a12 = SymMatrix::identity(2);
    a12.set(0, 1, 0.3);
    SymMatrix a21 = SymMatrix::diagonal({1.8, 1.1});
    SymMatrix a22 = SymMatrix::diagonal({1.2, 1.2});
    a22.set(0, 1, -0.25);
    return {
        OperatorSpec::laplacian(),
        OperatorSpec::pucci_plus_op(1.0, 2.0),
        OperatorSpec::pucci_minus_op(1.0, 2.0),
        OperatorSpec::extremal_plus(1.0, 2.0, 0.7),
        OperatorSpec::extremal_minus(1.0, 2.0, 0.7),
        OperatorSpec::isaacs({{a11, a12}, {a21, a22}}, {{0.0, 0.4}, {0.2, 0.1}}),
    };
}

}  // namespace

TEST_CASE("pucci formulas on worked inputs") {
    const EllipticityParams p{1.0, 2.0, 0.0};
    const SymMatrix m = SymMatrix::diagonal({1.0, -1.0});
    CHECK(pucci_plus(m, p) == doctest::Approx(1.0));
    CHECK(pucci_minus(m, p) == doctest::Approx(-1.0));
    CHECK(pucci_plus(SymMatrix::zero(3), p) == 0.0);
    CHECK(pucci_minus(SymMatrix::zero(3), p) == 0.0);
}

TEST_CASE("pucci sampling oracle never exceeds the formula and attains it when aligned") {
    const EllipticityParams p{1.0, 2.0, 0.0};
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 4);
        const SymMatrix m = random_symmetric(n, rng, 2.0);
        const double exact = pucci_plus(m, p);
        const double aligned = pucci_oracle(m, p, 0, 99, true);
        CHECK(aligned == doctest::Approx(exact).epsilon(1e-12));
        const double sampled = pucci_oracle(m, p, 400, 42 + trial, false);
        CHECK(sampled <= exact + 1e-12);
        CHECK(sampled >= pucci_minus(m, p) - 1e-12);
    }
    const double att = pucci_oracle(SymMatrix::diagonal({1.0, -1.0}), p, 0, 1, true);
    CHECK(att == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eval on worked examples") {
    const OperatorSpec fm = OperatorSpec::extremal_minus(1.0, 2.0, 3.0);
    const std::vector<double> pvec = {0.0, 1.0};
    const std::vector<double> x = {2.0, 0.0};
    CHECK(fm.eval(SymMatrix::zero(2), pvec, x) == doctest::Approx(-1.5));

    const OperatorSpec lap = OperatorSpec::laplacian();
    CHECK(lap.eval(SymMatrix::diagonal({2.0, 5.0}), std::vector<double>{0, 0},
                   std::vector<double>{1, 0}) == doctest::Approx(-7.0));

    for (const auto& spec : sample_specs()) {
        const std::vector<double> zero2 = {0.0, 0.0};
        CHECK(spec.eval(SymMatrix::zero(2), zero2, std::vector<double>{0.3, 0.4}) ==
              doctest::Approx(0.0));
    }
    CHECK_THROWS(lap.eval(SymMatrix::zero(3), std::vector<double>{0, 0},
                          std::vector<double>{1, 0}));
}

TEST_CASE("pucci inequality chain, rotation invariance, monotonicity, homogeneity") {
    const EllipticityParams prm{1.0, 2.5, 0.0};
    Rng rng(17);
    for (int trial = 0; trial < 3000; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        const SymMatrix M = random_symmetric(n, rng, 2.0);
        const SymMatrix N = random_symmetric(n, rng, 2.0);
        const double a = pucci_minus(M, prm) + pucci_minus(N, prm);
        const double b = pucci_minus(M + N, prm);
        const double c = pucci_minus(M, prm) + pucci_plus(N, prm);
        const double d = pucci_plus(M + N, prm);
        const double e = pucci_plus(M, prm) + pucci_plus(N, prm);
        CHECK(b - a >= -1e-12);
        CHECK(c - b >= -1e-12);
        CHECK(d - c >= -1e-12);
        CHECK(e - d >= -1e-12);
    }

    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 3);
        const SymMatrix M = random_symmetric(n, rng, 2.0);
        // orthogonal U from the eigenframe of another random symmetric matrix
        const EigenDecomposition d = eig_sym_full(random_symmetric(n, rng));
        SymMatrix rotated(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0;
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += d.vectors[i][k] * M(k, l) * d.vectors[j][l];
                rotated.set(i, j, s);
            }
        CHECK(pucci_plus(rotated, prm) == doctest::Approx(pucci_plus(M, prm)).epsilon(1e-10));
        CHECK(pucci_minus(rotated, prm) == doctest::Approx(pucci_minus(M, prm)).epsilon(1e-10));
    }

    // degenerate ellipticity and positive 1-homogeneity across all variants
    for (const auto& spec : sample_specs()) {
        for (int trial = 0; trial < 100; ++trial) {
            Jet jet = random_jet(2, rng);
            const SymMatrix bump = SymMatrix::outer(random_vec(2, rng));  // PSD
            const double lo = spec.eval(jet.M + bump, jet.p, jet.x);
            const double hi = spec.eval(jet.M, jet.p, jet.x);
            CHECK(lo <= hi + 1e-12);

            const double base = spec.eval(jet.M, jet.p, jet.x);
            for (double t : {0.0, 0.5, 2.0, 10.0}) {
                SymMatrix tm = jet.M;
                tm *= t;
                std::vector<double> tp = jet.p;
                for (double& v : tp) v *= t;
                CHECK(spec.eval(tm, tp, jet.x) ==
                      doctest::Approx(t * base).epsilon(1e-12).scale(1 + std::abs(base)));
            }
        }
    }
}

TEST_CASE("dilation invariance F(r^2 M, r p, x) = r^2 F(M, p, r x)") {
    Rng rng(23);
    for (const auto& spec : sample_specs()) {
        for (int trial = 0; trial < 50; ++trial) {
            const Jet jet = random_jet(2, rng);
            for (double r : {0.25, 0.5, 3.0}) {
                SymMatrix rm = jet.M;
                rm *= r * r;
                std::vector<double> rp = jet.p;
                for (double& v : rp) v *= r;
                std::vector<double> rx = jet.x;
                for (double& v : rx) v *= r;
                const double lhs = spec.eval(rm, rp, jet.x);
                const double rhs = r * r * spec.eval(jet.M, jet.p, rx);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11).scale(1 + std::abs(rhs)));
            }
        }
    }
}

TEST_CASE("ellipticity sandwich with each operator's own envelope") {
    Rng rng(29);
    for (const auto& spec : sample_specs()) {
        const EllipticityParams ep = spec.ellipticity(2);
        for (int trial = 0; trial < 200; ++trial) {
            const Jet a = random_jet(2, rng);
            Jet b = random_jet(2, rng);
            b.x = a.x;
            double nx = std::hypot(a.x[0], a.x[1]);
            std::vector<double> dp = {a.p[0] - b.p[0], a.p[1] - b.p[1]};
            const double drift = ep.mu * std::hypot(dp[0], dp[1]) / nx;
            const double diff = spec.eval(a.M, a.p, a.x) - spec.eval(b.M, b.p, b.x);
            const SymMatrix dM = a.M - b.M;
            CHECK(diff >= pucci_minus(dM, ep) - drift - 1e-10);
            CHECK(diff <= pucci_plus(dM, ep) + drift + 1e-10);
        }
    }
}

TEST_CASE("dual operator identities") {
    Rng rng(31);
    const OperatorSpec pm = OperatorSpec::pucci_minus_op(1.0, 2.0);
    const OperatorSpec pp = OperatorSpec::pucci_plus_op(1.0, 2.0);
    CHECK(pm.dual().eval(SymMatrix::diagonal({1.0, -1.0}), std::vector<double>{0, 0},
                         std::vector<double>{1, 0}) == doctest::Approx(1.0));

    const OperatorSpec em = OperatorSpec::extremal_minus(1.0, 2.0, 0.8);
    const OperatorSpec ep = OperatorSpec::extremal_plus(1.0, 2.0, 0.8);
    const OperatorSpec lap = OperatorSpec::laplacian();
    for (int trial = 0; trial < 100; ++trial) {
        const Jet jet = random_jet(3, rng);
        CHECK(pm.dual().eval(jet) == doctest::Approx(pp.eval(jet)).epsilon(1e-12));
        CHECK(em.dual().eval(jet) == doctest::Approx(ep.eval(jet)).epsilon(1e-12));
        CHECK(lap.dual().eval(jet) == doctest::Approx(lap.eval(jet)).epsilon(1e-12));
    }
    // eval(dual(F), jet) = -eval(F, -jet) and involution
    for (const auto& spec : sample_specs()) {
        for (int trial = 0; trial < 50; ++trial) {
            const Jet jet = random_jet(2, rng);
            Jet njet = jet;
            njet.M = -jet.M;
            for (size_t i = 0; i < njet.p.size(); ++i) njet.p[i] = -jet.p[i];
            const double v = spec.eval(jet);
            CHECK(spec.dual().eval(jet) ==
                  doctest::Approx(-spec.eval(njet)).epsilon(1e-12).scale(1 + std::abs(v)));
            CHECK(spec.dual().dual().eval(jet) ==
                  doctest::Approx(v).epsilon(1e-12).scale(1 + std::abs(v)));
        }
    }
}

TEST_CASE("inversion of the Laplacian carries the 2(n-2) drift") {
    Rng rng(37);
    const OperatorSpec lap = OperatorSpec::laplacian();
    for (int n : {2, 3, 4}) {
        const OperatorSpec inv = lap.inverted();
        for (int trial = 0; trial < 100; ++trial) {
            const Jet jet = random_jet(n, rng);
            double y2 = 0, yp = 0;
            for (int i = 0; i < n; ++i) {
                y2 += jet.x[i] * jet.x[i];
                yp += jet.x[i] * jet.p[i];
            }
            const double expected = -jet.M.trace() + 2.0 * (n - 2) * yp / y2;
            CHECK(inv.eval(jet) == doctest::Approx(expected).epsilon(1e-11));
        }
    }
}

TEST_CASE("double inversion is the identity pointwise") {
    Rng rng(41);
    for (const auto& spec : sample_specs()) {
        const OperatorSpec twice = spec.inverted().inverted();
        for (int trial = 0; trial < 100; ++trial) {
            const Jet jet = random_jet(2, rng);
            const double a = twice.eval(jet);
            const double b = spec.eval(jet);
            CHECK(a == doctest::Approx(b).epsilon(1e-10).scale(1 + std::abs(b)));
        }
    }
}

TEST_CASE("inverted operator satisfies the sandwich with the enlarged drift constant") {
    Rng rng(43);
    const OperatorSpec em = OperatorSpec::extremal_minus(1.0, 2.0, 0.5);
    for (int n : {2, 3}) {
        const OperatorSpec inv = em.inverted();
        const EllipticityParams ep = inv.ellipticity(n);
        CHECK(ep.mu == doctest::Approx(2.0 * ((n - 1) * 2.0 - 1.0) + 0.5));
        for (int trial = 0; trial < 200; ++trial) {
            Jet a = random_jet(n, rng);
            Jet b = random_jet(n, rng);
            b.x = a.x;
            double nx = 0, ndp = 0;
            for (int i = 0; i < n; ++i) {
                nx += a.x[i] * a.x[i];
                ndp += (a.p[i] - b.p[i]) * (a.p[i] - b.p[i]);
            }
            const double drift = ep.mu * std::sqrt(ndp / nx);
            const double diff = inv.eval(a) - inv.eval(b);
            const SymMatrix dM = a.M - b.M;
            CHECK(diff >= pucci_minus(dM, ep) - drift - 1e-9);
            CHECK(diff <= pucci_plus(dM, ep) + drift + 1e-9);
        }
    }
}

TEST_CASE("inverted function transport identity") {
    const OperatorSpec lap = OperatorSpec::laplacian();

    auto linear = [](std::span<const double> x) { return x[x.size() - 1]; };
    auto quad = [](std::span<const double> x) {
        return 0.5 * x[0] * x[0] - 0.3 * x[0] * x[x.size() - 1] + 0.1;
    };
    auto sq = [](std::span<const double> x) {
        double s = 0;
        for (double v : x) s += v * v;
        return s;
    };

    const std::vector<double> y = {0.4, -0.7, 0.5};
    {
        auto [lhs, rhs] = invert_function_residual(lap, linear, y, 1e-5);
        CHECK(std::abs(lhs) <= 5e-6);  // FD truncation of the inverted jet
        CHECK(std::abs(rhs) <= 5e-6);
    }
    {
        auto [lhs, rhs] = invert_function_residual(lap, quad, y, 1e-5);
        double y2 = 0;
        for (double v : y) y2 += v * v;
        // -tr D^2u = -1 for this quadratic
        CHECK(rhs == doctest::Approx(-1.0 / (y2 * y2)).epsilon(1e-6));
        CHECK(lhs == doctest::Approx(rhs).epsilon(2e-4).scale(1 + std::abs(rhs)));
    }
    {
        auto [lhs, rhs] = invert_function_residual(lap, sq, y, 1e-4);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6).scale(1 + std::abs(rhs)));
    }
    CHECK_THROWS(invert_function_residual(lap, sq, std::vector<double>{1e-6, 0.0}, 1e-4));
}

TEST_CASE("operator json round trip") {
    for (const auto& spec : sample_specs()) {
        const std::string text = operator_to_json(spec);
        const OperatorSpec back = operator_from_json_text(text);
        Rng rng(47);
        for (int trial = 0; trial < 20; ++trial) {
            const Jet jet = random_jet(2, rng);
            CHECK(back.eval(jet) == doctest::Approx(spec.eval(jet)).epsilon(1e-14));
        }
        CHECK(operator_to_json(back) == text);
    }
    const OperatorSpec wrapped = OperatorSpec::pucci_minus_op(1.0, 2.0).dual().inverted();
    const OperatorSpec back = operator_from_json_text(operator_to_json(wrapped));
    Rng rng(53);
    const Jet jet = random_jet(2, rng);
    CHECK(back.eval(jet) == doctest::Approx(wrapped.eval(jet)).epsilon(1e-14));
}
