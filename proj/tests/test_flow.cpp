#include "common.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace neckflow;

namespace {

/// Short regularized run shared by the invariant checks.
const Trajectory& short_run() {
    static const Trajectory tr = [] {
        const InitialProfile init = build_initial(InitialDataSpec{nftest::p23()});
        RegularizationParams rp;
        rp.omega = 1e-3;
        rp.rho_star = 2 * std::sqrt(10.0);
        const InitialProfile reg = regularize(init, rp, nullptr, nftest::profiles());
        GaugeSpec g;
        g.track_tip = true;
        g.omega = rp.omega;
        EvolveControls c;
        c.t_end = 0.02;
        c.per_decade = 10;
        return evolve(discretize(reg, 128, g), c);
    }();
    return tr;
}

double sphere_error(std::size_t nodes, double t_end) {
    const FlowParams& p = nftest::p23();
    EvolveControls c;
    c.t_end = t_end;
    c.t_first = 1e-3;
    c.per_decade = 5;
    const Trajectory tr = evolve(round_sphere(1.0, nodes, p), c);
    double err = 0.0;
    for (const auto& s : tr.snapshots) {
        const double R = s.length / M_PI;
        err = std::max(err, std::abs(R * R / (1 - 2 * p.n * s.t) - 1));
    }
    return err;
}

} // namespace

TEST_SUITE("flow") {

TEST_CASE("gauge map") {
    const GaugeMap m = gauge_map(0.3, 0.0);
    CHECK(m.G == 0.3);
    CHECK(m.G_x == 1.0);
    for (double l : {0.5, 4.0, 10.0}) {
        const GaugeMap a = gauge_map(0.0, l), b = gauge_map(1.0, l);
        CHECK(a.G == 0.0);
        CHECK(b.G == doctest::Approx(1.0).epsilon(1e-14));
        const double h = 1e-6;
        CHECK(gauge_map(0.4, l).G_x == doctest::Approx((gauge_map(0.4 + h, l).G - gauge_map(0.4 - h, l).G) / (2 * h)).epsilon(1e-8));
        CHECK(gauge_map(0.4, l).G_l == doctest::Approx((gauge_map(0.4, l + h).G - gauge_map(0.4, l - h).G) / (2 * h)).epsilon(1e-6));
    }
    const double lam = gauge_lambda(1e-4, 100, 2.0, 30.0);
    CHECK(2.0 * gauge_map(0.0, lam).G_x / 100 == doctest::Approx(1e-4).epsilon(1e-9));
    CHECK(gauge_lambda(1.0, 100, 2.0, 30.0) == 0.0);
}

TEST_CASE("snapshot times") {
    EvolveControls c;
    c.t_end = 0.1;
    c.t_first = 1e-4;
    c.per_decade = 10;
    const auto ts = snapshot_times(c);
    CHECK(ts.front() == 0.0);
    CHECK(ts[1] == doctest::Approx(1e-4));
    CHECK(ts.back() == doctest::Approx(0.1));
    CHECK(ts.size() == 32);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] > ts[i - 1]);
}

TEST_CASE("initial data") {
    const FlowParams& p = nftest::p23();
    const InitialProfile init = build_initial(InitialDataSpec{p});
    for (double r : {1e-6, 1e-3, 0.1, 0.4}) CHECK(init.v(r) == doctest::Approx(std::pow(r, 2 * p.b)).epsilon(1e-12));
    CHECK(std::abs(init.A_measured - 1) < 1e-3);
    const FlowState st = discretize(init, 256, GaugeSpec{});
    CHECK(st.psi.front() == 0.0);
    CHECK(st.psi.back() == 0.0);
    const NodeGeometry g = geometry(st);
    for (double s : g.psi_s) CHECK(std::abs(s) <= 1 + 1e-9);
}

TEST_CASE("round sphere radius follows R^2 = R0^2 - 2nt") {
    const double e128 = sphere_error(128, 0.125);
    const double e256 = sphere_error(256, 0.125);
    CHECK(e128 < 1e-4);
    CHECK(e256 <= e128);
}

TEST_CASE("round sphere keeps K = L") {
    const FlowParams& p = nftest::p23();
    EvolveControls c;
    c.t_end = 0.125;
    c.t_first = 1e-3;
    c.per_decade = 5;
    const Trajectory tr = evolve(round_sphere(1.0, 256, p), c);
    REQUIRE_FALSE(tr.halted);
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
        const NodeGeometry g = geometry(tr.snapshots[i]);
        const double R2 = 1 - 2 * p.n * tr.snapshots[i].t;
        for (std::size_t j = 0; j < g.K.size(); ++j) {
            CHECK(g.K[j] * R2 == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(g.L[j] * R2 == doctest::Approx(1.0).epsilon(1e-3));
        }
        CHECK(tr.diag[i].pole_dev < 1e-6);
    }
}

TEST_CASE("slope extraction") {
    const FlowParams& p = nftest::p23();
    const FlowState st = round_sphere(1.5, 512, p);
    std::vector<double> r;
    for (double x = 0.01; x < 1.4; x += 0.05) r.push_back(x);
    const auto v = extract_v(st, r);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(v[i] == doctest::Approx(1 - r[i] * r[i] / 2.25).epsilon(1e-5));
    const InitialProfile init = build_initial(InitialDataSpec{p});
    const FlowState s2 = discretize(init, 512, GaugeSpec{0.0, false, 0.0, 0.1, 12.0});
    const auto w = extract_v(s2, std::vector<double>{0.05, 0.2, 0.4});
    CHECK(w[1] == doctest::Approx(init.v(0.2)).epsilon(1e-3));
    CHECK(w[2] == doctest::Approx(init.v(0.4)).epsilon(1e-4));
}

TEST_CASE("nested spheres stay ordered") {
    const FlowParams& p = nftest::p23();
    EvolveControls c;
    c.t_end = 0.1;
    c.t_first = 1e-3;
    c.per_decade = 5;
    std::vector<double> r;
    for (double x = 0.02; x < 0.9; x += 0.02) r.push_back(x);
    const OrderingReport o = ordering_check(round_sphere(1.0, 128, p), round_sphere(1.2, 128, p), c, r);
    CHECK(o.initial_margin > 0);
    CHECK(o.min_margin >= -1e-8);
}

TEST_CASE("rate fit on a synthetic power law") {
    std::vector<std::pair<double, double>> s;
    for (double t = 1e-3; t < 1.0; t *= 1.2) s.emplace_back(t, 3.0 * std::pow(t, -4.0 / 3.0));
    const RateFit f = fit_rate(s, 1e-2, 1e-1);
    CHECK(f.slope == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(f.rms < 1e-12);
    CHECK(f.points >= 3);
    CHECK_THROWS_AS(fit_rate(s, 1e-2, 2e-2), Error);
}

TEST_CASE("preserved quantities on a regularized run") {
    const Trajectory& tr = short_run();
    REQUIRE_FALSE(tr.halted);
    CHECK(tr.max_slope_all <= 1 + 1e-9);
    for (std::size_t i = 0; i < tr.diag.size(); ++i) {
        const NodeGeometry g = geometry(tr.snapshots[i]);
        for (std::size_t j = 1; j + 1 < g.psi_s.size(); ++j) CHECK(std::abs(g.psi_s[j]) <= 1 + 1e-9);
        if (i > 0) CHECK(tr.diag[i].sup_r2KL <= 1.01 * tr.diag[i - 1].sup_r2KL);
        CHECK(tr.diag[i].pole_dev < 1e-3);
    }
    const auto series = curvature_series(tr);
    CHECK(series.size() == tr.diag.size() - 1);
}

TEST_CASE("snapshot round trip") {
    const Trajectory& tr = short_run();
    const auto dir = std::filesystem::temp_directory_path() / "nf_traj_rt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_trajectory(dir, tr);
    CHECK(std::filesystem::exists(dir / "diagnostics.csv"));
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir / "snapshots")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    REQUIRE(files.size() == tr.snapshots.size());
    const FlowState back = read_snapshot(files.back(), nftest::p23());
    CHECK(back.t == tr.snapshots.back().t);
    CHECK(back.psi == tr.snapshots.back().psi);
    std::filesystem::remove_all(dir);
}

}
