#include "common.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace neckflow;

namespace {

// Independent transcription of the r-coordinate operator.
double oracle_F(double v, double v1, double v2, double r, int n) {
    return v * v2 - 0.5 * v1 * v1 + ((n - 1 - v) / r) * v1 + (2.0 * (n - 1) / (r * r)) * v * (1 - v);
}

Jet poly_jet(const std::vector<double>& c, double x) {
    double v = 0, d1 = 0, d2 = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        v += c[k] * std::pow(x, double(k));
        if (k >= 1) d1 += double(k) * c[k] * std::pow(x, double(k) - 1);
        if (k >= 2) d2 += double(k * (k - 1)) * c[k] * std::pow(x, double(k) - 2);
    }
    return make_jet(v, d1, d2);
}

} // namespace

TEST_SUITE("operators") {

TEST_CASE("F examples") {
    const FlowParams& p = nftest::p23();
    CHECK(apply_F(make_jet(1, 0, 0), 0.3, p) == 0.0);
    for (double r : {0.01, 0.1, 0.7}) {
        const double b = p.b, v = std::pow(r, 2 * b);
        const Jet j = make_jet(v, 2 * b * v / r, 2 * b * (2 * b - 1) * v / (r * r));
        const double expect = p.a * (1 + b) * std::pow(r, 2 * b - 2) + (2 * b * b - 4 * b - p.a) * std::pow(r, 4 * b - 2);
        CHECK(apply_F(j, r, p) == doctest::Approx(expect).epsilon(1e-12));
    }
    for (double c : {0.3, 2.0})
        for (double r : {0.1, 0.5}) {
            const Jet j = make_jet(1 - c * r * r, -2 * c * r, -2 * c);
            CHECK(apply_F(j, r, p) == doctest::Approx(-2 * p.n * c * c * r * r).epsilon(1e-12));
        }
}

TEST_CASE("L and Q examples") {
    const FlowParams& p = nftest::p23();
    CHECK(apply_L(make_jet(0.7, 0, 0), 0.2, p) == doctest::Approx(p.a * 0.7 / 0.04).epsilon(1e-14));
    const Jet u = make_jet(0.4, -1.1, 3.0);
    CHECK(apply_Q(u, Jet{0, 0, 0, 0}, 0.3, p) == 0.0);
}

TEST_CASE("property: F = L + Q, Q symmetric and bilinear") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2, 2), X(0.05, 1.0);
    for (int n : {2, 3, 6}) {
        const FlowParams p = derive_params(n, 5);
        for (int it = 0; it < 500; ++it) {
            std::vector<double> cu(5), cw(5);
            for (auto& c : cu) c = U(rng);
            for (auto& c : cw) c = U(rng);
            const double x = X(rng), al = U(rng);
            const Jet u = poly_jet(cu, x), w = poly_jet(cw, x);
            const double F = apply_F(u, x, p);
            const double LQ = apply_L(u, x, p) + apply_Q(u, u, x, p);
            CHECK(std::abs(F - LQ) <= 1e-12 * std::max(1.0, std::abs(F)));
            CHECK(F == doctest::Approx(oracle_F(u.v, u.d1, u.d2, x, n)).epsilon(1e-12));
            const double quw = apply_Q(u, w, x, p), qwu = apply_Q(w, u, x, p);
            CHECK(std::abs(quw - qwu) <= 1e-12 * std::max(1.0, std::abs(quw)));
            const Jet au = make_jet(al * u.v, al * u.d1, al * u.d2);
            CHECK(std::abs(apply_Q(au, w, x, p) - al * quw) <= 1e-12 * std::max(1.0, std::abs(al * quw)));
        }
    }
}

TEST_CASE("fnorm examples") {
    CHECK(fnorm(make_jet(1, 0, 0), 0.4) == 1.0);
    const double b = 1.0 / 3.0;
    for (double r : {0.1, 0.6}) {
        const double v = std::pow(r, 2 * b);
        const Jet j = make_jet(v, 2 * b * v / r, 2 * b * (2 * b - 1) * v / (r * r));
        CHECK(fnorm(j, r) == doctest::Approx((1 + 2 * b + 2 * b * std::abs(2 * b - 1)) * v).epsilon(1e-13));
        CHECK(fnorm(make_jet(r * r, 2 * r, 2), r) == doctest::Approx(5 * r * r).epsilon(1e-14));
    }
}

TEST_CASE("property: operator bound with the module constant") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-3, 3), X(0.1, 1.0);
    for (int n : {2, 4}) {
        const FlowParams p = derive_params(n, 3);
        const double C = opbnd_constant(p);
        CHECK(C == std::max(1.0, p.a) + 2.0);
        for (int it = 0; it < 1000; ++it) {
            std::vector<double> cu(4), cw(4);
            for (auto& c : cu) c = U(rng);
            for (auto& c : cw) c = U(rng);
            const double x = X(rng);
            const Jet u = poly_jet(cu, x), w = poly_jet(cw, x);
            CHECK(std::abs(apply_L(u, x, p)) <= C * fnorm(u, x) / (x * x) * (1 + 1e-12));
            CHECK(std::abs(apply_Q(u, w, x, p)) <= C * fnorm(u, x) * fnorm(w, x) / (x * x) * (1 + 1e-12));
        }
    }
}

TEST_CASE("parabolic linear operator") {
    const FlowParams& p = nftest::p23();
    for (double rho : {0.3, 1.0, 7.0}) {
        const double a = p.a, b = p.b, P = rho * rho + a;
        const double v = std::pow(P, 1 + b) / (rho * rho);
        const double v1 = 2 * (1 + b) * std::pow(P, b) / rho - 2 * std::pow(P, 1 + b) / std::pow(rho, 3);
        CHECK(apply_Lhat_rho(make_jet(v, v1, 0), rho, p) == doctest::Approx(b * v).epsilon(1e-12));
        CHECK(apply_Lhat_rho(make_jet(2.5, 0, 0), rho, p) == doctest::Approx(a * 2.5 / (rho * rho)).epsilon(1e-14));
        CHECK(apply_Lhat_rho(make_jet(rho * rho, 2 * rho, 2), rho, p) == doctest::Approx(2 * a + rho * rho).epsilon(1e-13));
    }
}

TEST_CASE("property: scaling identity F[v(lambda r)](r) = lambda^2 F[v](lambda r)") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1, 1), X(0.1, 1.0), Lm(0.3, 3.0);
    const FlowParams& p = nftest::p23();
    for (int it = 0; it < 500; ++it) {
        std::vector<double> c(5);
        for (auto& q : c) q = U(rng);
        const double x = X(rng), lam = Lm(rng);
        const Jet at = poly_jet(c, lam * x);
        const Jet w = make_jet(at.v, lam * at.d1, lam * lam * at.d2);
        const double lhs = apply_F(w, x, p), rhs = lam * lam * apply_F(at, lam * x, p);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("inner residual examples and consistency with the r-form") {
    const FlowParams& p = nftest::p23();
    CHECK(inner_residual(InnerJet{1, 0, 0, 0, 0}, 0.7, 0.1, p) == 0.0);
    // V(sigma, theta) = 1 - sigma^2 theta / (1 + sigma^2)
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> S(0.1, 5.0), T(0.01, 0.5);
    for (int it = 0; it < 200; ++it) {
        const double s = S(rng), th = T(rng);
        const double q = 1 + s * s;
        const double V = 1 - s * s * th / q;
        const double Vs = -2 * s * th / (q * q);
        const double Vss = -2 * th * (1 - 3 * s * s) / (q * q * q);
        const double Vt = -s * s / q;
        const double inner = inner_residual(InnerJet{V, 1 - V, Vs, Vss, Vt}, s, th, p);
        const auto [r, t] = from_inner(s, th, p);
        const double tht = theta_theta_t(t, p);
        CHECK(theta_theta_t_of_theta(th, p) == doctest::Approx(tht).epsilon(1e-12));
        const double theta_t = tht / th;
        // chain rule for v(r, t) = V(r / theta, theta)
        SpaceTimeJet j;
        j.v = V;
        j.om = 1 - V;
        j.v_r = Vs / th;
        j.v_rr = Vss / (th * th);
        j.v_t = Vt * theta_t - Vs * s * theta_t / th;
        const double rform = parabolic_residual(j, r, p);
        CHECK(std::abs(th * th * rform - inner) <= 1e-8 * std::max(1.0, std::abs(inner)));
    }
}

TEST_CASE("residual of exact and trivial candidates") {
    const FlowParams& p = nftest::p23();
    const double R0 = 1.3;
    SpaceTimeFunction sphere{"round", [&](double r, double t) {
                                 const double R2 = R0 * R0 - 2 * p.n * t;
                                 SpaceTimeJet j;
                                 j.v = 1 - r * r / R2;
                                 j.om = r * r / R2;
                                 j.v_r = -2 * r / R2;
                                 j.v_rr = -2 / R2;
                                 j.v_t = -2 * p.n * r * r / (R2 * R2);
                                 return j;
                             },
                             [](double r, double) { return r > 0 && r < 1; }};
    std::vector<std::pair<double, double>> pts;
    for (int i = 1; i < 20; ++i) pts.emplace_back(0.05 * i, 0.01 * i);
    pts.emplace_back(2.0, 0.1);
    const auto res = residual_parabolic_operator(sphere, pts, p);
    for (std::size_t i = 0; i + 1 < res.size(); ++i) {
        CHECK(res[i].valid);
        CHECK(std::abs(res[i].residual) < 1e-10);
    }
    CHECK_FALSE(res.back().valid);
    SpaceTimeFunction one{"one", [](double, double) { return SpaceTimeJet{1, 0, 0, 0, 0}; }, {}};
    for (const auto& s : residual_parabolic_operator(one, pts, p)) CHECK(s.residual == 0.0);
}

TEST_CASE("property: analytic derivatives of the formal solutions") {
    const FlowParams& p = nftest::p23();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> R(-3, -0.5), T(-6, -2);
    for (auto kind : {FormalKind::outer, FormalKind::parabolic, FormalKind::inner}) {
        const FormalSolution f = formal_solution(kind, p, nftest::profiles());
        // the inner family differentiates the tabulated correction profile
        const double tol = kind == FormalKind::inner ? 5e-3 : 1e-6;
        for (int it = 0; it < 50; ++it) {
            const double r = std::pow(10.0, R(rng)), t = std::pow(10.0, T(rng));
            CHECK(derivative_crosscheck(f.fn, r, t) <= tol);
        }
    }
}

}
