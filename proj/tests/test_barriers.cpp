#include "common.hpp"

#include <doctest.h>

#include <cmath>

using namespace neckflow;

TEST_SUITE("barriers") {

TEST_CASE("every family certifies on the base and refined grids") {
    const PipelineResult& r = nftest::pipeline();
    REQUIRE(r.reports.size() == 8);
    for (const auto& rep : r.reports) {
        INFO(rep.family);
        CHECK(rep.pass);
        CHECK(rep.min_margin > 0);
        CHECK(rep.nr == 4 * (200 - 1) + 1);
        CHECK(rep.samples > rep.clamped);
    }
}

TEST_CASE("selected constants") {
    const PipelineResult& r = nftest::pipeline();
    const BarrierConstants& c = r.constants;
    const FlowParams& p = nftest::p23();
    CHECK(c.rho_star == doctest::Approx(2 * std::sqrt(10.0)).epsilon(1e-12));
    CHECK(c.gamma_plus > 0);
    CHECK(c.gamma_minus > 0);
    for (double k : {c.kappa_plus, c.kappa_minus}) {
        CHECK(k > p.kappa0 / 2);
        CHECK(k < 2 * p.kappa0);
    }
    CHECK(c.t_star > 0);
    CHECK(c.tau_star == doctest::Approx(std::log(c.t_star)).epsilon(1e-12));
    CHECK(r.collar.T_alpha > 0);
    const auto [kp, km] = glue_kappas(c.D, c.sigma_star, c.gamma_plus, c.gamma_minus, p);
    CHECK(std::pow(kp, -2) == doctest::Approx((1 + c.gamma_plus) * std::pow(p.kappa0, -2) + c.D / (3 * c.sigma_star * c.sigma_star)).epsilon(1e-12));
    CHECK(std::pow(km, -2) == doctest::Approx((1 - c.gamma_minus) * std::pow(p.kappa0, -2) - c.D / (3 * c.sigma_star * c.sigma_star)).epsilon(1e-12));
}

TEST_CASE("crossing inequalities hold at sampled times up to t*") {
    const PipelineResult& r = nftest::pipeline();
    CHECK(r.glue.ok);
    const double ts = r.constants.t_star;
    for (int i = 0; i < 50; ++i) {
        const double t = ts * std::pow(1e-8, double(i) / 49);
        const CrossingCheck cc = crossing_inequalities(r.constants, nftest::profiles(), nftest::p23(), t);
        INFO(cc.worst);
        CHECK(cc.ok);
        CHECK(cc.min_gap > 0);
    }
}

TEST_CASE("composite barriers are ordered") {
    const PipelineResult& r = nftest::pipeline();
    const CompositeBarrier cb(r.constants, nftest::profiles(), nftest::p23());
    const double tl = std::min(cb.band_limit(), r.constants.t_star);
    for (double t : {tl, tl * 1e-3, tl * 1e-6})
        for (double lr = -12; lr < std::log10(r.constants.r_star); lr += 0.25) {
            const double x = std::pow(10.0, lr);
            CHECK(cb.upper(x, t).v >= cb.lower(x, t).v);
        }
}

TEST_CASE("halving rho* breaks the outer supersolution") {
    const PipelineResult& r = nftest::pipeline();
    const FlowParams& p = nftest::p23();
    auto certify = [&](double rho) {
        GridSpec g;
        g.t_hi = std::pow(0.5 / (3 * rho), 2);
        g.t_lo = g.t_hi * 1e-8;
        const auto fam = outer_families(0.1, 0.1, 0.5, rho, p);
        return std::make_pair(verify_subsuper(fam.first, g, p).pass, verify_subsuper(fam.second, g, p).pass);
    };
    CHECK(certify(r.constants.rho_star) == std::make_pair(true, true));
    CHECK(certify(r.constants.rho_star / 2) == std::make_pair(true, false));
}

TEST_CASE("serial and parallel certification agree") {
    const PipelineResult& r = nftest::pipeline();
    const FlowParams& p = nftest::p23();
    const FamilySet fs = build_families(r, nftest::profiles(), p);
    for (const auto& f : fs.families) {
        const GridSpec g = family_grid(f, r, SearchControls{});
        const CertificationReport a = verify_subsuper(f, g, p, Exec::serial);
        const CertificationReport b = verify_subsuper(f, g, p, Exec::parallel);
        CHECK(a.pass == b.pass);
        CHECK(a.min_margin == b.min_margin);
        CHECK(a.samples == b.samples);
    }
}

TEST_CASE("outer positivity and gluing function") {
    const FlowParams& p = nftest::p23();
    CHECK(outer_positivity(0.1, 0.5, p));
    CHECK(glue_H(1e6, 0.1, +1, p) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(glue_H(3.0, 0.1, +1, p) > glue_H(3.0, 0.1, -1, p));
}

TEST_CASE("compactness radius") {
    const FlowParams& p = nftest::p23();
    CHECK(compactness_radius(0.75, p) == doctest::Approx(0.7288).epsilon(1e-4));
    CHECK(compactness_radius(0.6, p) == doctest::Approx(std::pow(1.2 / 3.32, 1 / 2.4)).epsilon(1e-14));
    CHECK_THROWS_AS(compactness_radius(0.4, p), Error);
    CHECK_THROWS_AS(compactness_radius(1.0, p), Error);
}

TEST_CASE("collar pair") {
    CollarParams cp;
    cp.T_alpha = 1e-3;
    const auto [sub, sup] = collar_barriers(cp, nftest::p23());
    CHECK(sub.fn.eval(cp.r_bar, 0).v == doctest::Approx(cp.m_minus));
    CHECK(sup.fn.eval(cp.r_bar, 0).v == doctest::Approx(cp.m_plus));
    CHECK(sub.clamped(cp.r_bar + cp.alpha, 0));
    CHECK_FALSE(sub.fn.valid(cp.r_bar, 2e-3));
    cp.m_minus = 0.9;
    CHECK_THROWS_AS(collar_barriers(cp, nftest::p23()), Error);
}

TEST_CASE("pipeline JSON round trip") {
    const PipelineResult& r = nftest::pipeline();
    const PipelineResult q = pipeline_from_json(pipeline_json(r));
    CHECK(pipeline_json(q) == pipeline_json(r));
    CHECK(q.constants.D == r.constants.D);
    CHECK(q.constants.t_star == r.constants.t_star);
    CHECK(q.reports.size() == r.reports.size());
    const BarrierConstants c = constants_from_json(constants_json(r.constants));
    CHECK(c.sigma_star == r.constants.sigma_star);
    CHECK(c.kappa_minus == r.constants.kappa_minus);
}

}
