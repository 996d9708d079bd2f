#include "common.hpp"

#include "neckflow/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

using namespace neckflow;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string f(const char* fmt, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, x);
    return buf;
}

/// Default regularized run (omega = 1e-3, defaults of the run configuration).
const Trajectory& default_run() {
    static const Trajectory tr = [] {
        const RunConfig cfg;
        const FlowParams& p = nftest::p23();
        RegularizationParams rp;
        rp.omega = cfg.omegas.front();
        rp.rho_star = nftest::pipeline().constants.rho_star;
        const CompositeBarrier comp(nftest::pipeline().constants, nftest::profiles(), p);
        const InitialProfile reg = regularize(build_initial(initial_spec(cfg, p)), rp, &comp, nftest::profiles());
        GaugeSpec g;
        g.track_tip = true;
        g.omega = rp.omega;
        g.tip_fraction = cfg.tip_fraction;
        return evolve(discretize(reg, std::size_t(cfg.nodes), g), evolve_controls(cfg));
    }();
    return tr;
}

Outcome c1() {
    const auto t0 = Clock::now();
    const SolitonProfile B = solve_bryant(nftest::p23(), 200.0, 1e-12);
    const double secs = since(t0);
    const double e30 = std::abs(900 * B.eval(30).v - 1), e60 = std::abs(3600 * B.eval(60).v - 1);
    const double e0 = std::abs(B.eval(B.sigma0).v - 1);
    Outcome o;
    o.pass = e30 <= 0.02 && e60 <= 0.005 && e0 <= 1e-4 && B.b2 < 0 && secs < 5;
    o.detail = "|s^2B-1| at 30: " + f("%.2e", e30) + ", at 60: " + f("%.2e", e60) + ", |B(s0)-1| " + f("%.1e", e0) +
               ", b2 " + f("%.10f", B.b2) + ", " + f("%.2f", secs) + " s";
    return o;
}

Outcome c2() {
    const FlowParams& p = nftest::p23();
    const auto t0 = Clock::now();
    const CorrectionProfile C = solve_correction(nftest::profiles().bryant, p, 200.0);
    const double secs = since(t0);
    const double coarse = correction_discrete_residual(solve_correction(nftest::profiles().bryant, p, 200.0, 2001));
    const double fine = correction_discrete_residual(C);
    bool positive = true;
    for (double s : C.table.sigma) positive = positive && C.eval(s).v > 0;
    const double tail = std::abs(C.eval(C.sigma_max / 2).v / (2 / p.a) - 1);
    Outcome o;
    o.pass = coarse / fine >= 3.5 && positive && tail <= 0.05 && secs < 5;
    o.detail = "residual ratio " + f("%.2f", coarse / fine) + ", C>0 " + (positive ? "yes" : "no") +
               ", tail deviation " + f("%.2e", tail) + ", " + f("%.2f", secs) + " s";
    return o;
}

Outcome c3() {
    const FlowParams& p = nftest::p23();
    const double id = std::abs(std::pow(p.kappa0, -2) / std::pow(p.a, 1 + p.b) - 1);
    const double s = 40.0, k0 = p.kappa0;
    const double lead = std::abs(s * s * nftest::profiles().bryant->eval(k0 * s).v / std::pow(p.a, 1 + p.b) - 1);
    const double next =
        std::abs(nftest::profiles().correction->eval(k0 * s).v / (k0 * k0) / (2 * std::pow(p.a, p.b)) - 1);
    Outcome o;
    o.pass = id <= 1e-12 && lead <= 0.02 && next <= 0.05;
    o.detail = "identity " + f("%.1e", id) + ", leading tail " + f("%.2e", lead) + ", theta theta_t tail " + f("%.2e", next);
    return o;
}

Outcome c4() {
    const auto t0 = Clock::now();
    const PipelineResult& r = nftest::pipeline();
    const FlowParams& p = nftest::p23();
    SearchControls sc;
    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    int n = 0;
    for (const auto& fam : build_families(r, nftest::profiles(), p).families) {
        const GridSpec g = family_grid(fam, r, sc);
        const CertificationReport base = verify_subsuper(fam, g, p);
        const CertificationReport fine = verify_refined(fam, g, sc.refine, p);
        all = all && base.pass && fine.pass && base.nr == 200 && base.nt == 200;
        worst = std::min({worst, base.min_margin, fine.min_margin});
        ++n;
    }
    const double secs = since(t0);
    Outcome o;
    o.pass = all && n == 8 && secs < 120;
    o.detail = std::to_string(n) + " families, smallest margin " + f("%.2e", worst) + ", " + f("%.1f", secs) + " s";
    return o;
}

Outcome c5() {
    const PipelineResult& r = nftest::pipeline();
    const BarrierConstants& c = r.constants;
    const double k0 = nftest::p23().kappa0;
    const bool gam = c.gamma_plus > 0 && c.gamma_minus > 0;
    bool range = true;
    for (double k : {c.kappa_plus, c.kappa_minus}) range = range && k > k0 / 2 && k < 2 * k0;
    const bool order = c.kappa_minus < k0 && k0 < c.kappa_plus;
    bool cross = true;
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) {
        const double t = c.t_star * std::pow(1e-8, double(i) / 49);
        const CrossingCheck cc = crossing_inequalities(c, nftest::profiles(), nftest::p23(), t);
        cross = cross && cc.ok;
        gap = std::min(gap, cc.min_gap);
    }
    Outcome o;
    o.pass = gam && range && order && cross;
    o.detail = "gamma+- " + f("%.5f", c.gamma_plus) + "/" + f("%.5f", c.gamma_minus) + ", kappa+ " + f("%.5f", c.kappa_plus) +
               ", kappa0 " + f("%.5f", k0) + ", kappa- " + f("%.5f", c.kappa_minus) + ", ordering " +
               (order ? "holds" : "reversed") + ", crossings " + (cross ? "hold" : "fail") + " (gap " + f("%.2e", gap) + ")";
    return o;
}

Outcome c6() {
    const auto t0 = Clock::now();
    const PipelineResult& r = nftest::pipeline();
    const FlowParams& p = nftest::p23();
    const double omega = 1e-3;
    const CompositeBarrier comp(r.constants, nftest::profiles(), p);
    RegularizationParams rp;
    rp.omega = omega;
    rp.rho_star = r.constants.rho_star;
    const InitialProfile reg = regularize(build_initial(InitialDataSpec{p}), rp, &comp, nftest::profiles());
    GaugeSpec g;
    g.track_tip = true;
    g.omega = omega;
    EvolveControls ec;
    ec.t_end = 1e-3;
    ec.t_first = 1e-5;
    const Trajectory tr = evolve(discretize(reg, 2048, g), ec);
    const TrappingSeries ts = monitor_trapping(tr, comp, r.collar, omega, p);
    const double secs = since(t0);
    Outcome o;
    o.pass = !tr.halted && ts.applicable && ts.min_margin > 0 && secs < 300;
    o.detail = ts.applicable ? "min margin " + f("%.2e", ts.min_margin) : "not applicable: " + ts.note;
    o.detail += ", t* " + f("%.2e", r.constants.t_star) + ", " + f("%.1f", secs) + " s";
    return o;
}

Outcome c7() {
    const Trajectory& tr = default_run();
    const RateFit fit = fit_rate(curvature_series(tr), 1e-2, 1e-1);
    const double target = -(1 + nftest::p23().b);
    // round sphere control, fitted against T - t
    const FlowParams& p = nftest::p23();
    EvolveControls ec;
    ec.t_end = 0.245;
    ec.t_first = 1e-3;
    ec.per_decade = 20;
    const Trajectory sp = evolve(round_sphere(1.0, 256, p), ec);
    const double T = 1.0 / (2 * p.n);
    std::vector<std::pair<double, double>> rs;
    for (const auto& [t, k] : curvature_series(sp)) rs.emplace_back(T - t, k);
    std::sort(rs.begin(), rs.end());
    const RateFit ctrl = fit_rate(rs, 1e-2, 1e-1);
    Outcome o;
    o.pass = !tr.halted && std::abs(fit.slope - target) <= 0.15 && std::abs(ctrl.slope + 1) <= 0.05;
    o.detail = "slope " + f("%.4f", fit.slope) + " vs " + f("%.4f", target) + " (rms " + f("%.1e", fit.rms) +
               "), round-sphere control " + f("%.4f", ctrl.slope);
    return o;
}

Outcome c8() {
    const FlowParams& p = nftest::p23();
    EvolveControls ec;
    ec.t_end = 0.125;
    ec.t_first = 1e-3;
    ec.per_decade = 10;
    const Trajectory tr = evolve(round_sphere(1.0, 256, p), ec);
    double err = 0.0, kl = 0.0;
    for (const auto& s : tr.snapshots) {
        const double R2 = 1 - 2 * p.n * s.t, R = s.length / M_PI;
        err = std::max(err, std::abs(R * R / R2 - 1));
        const NodeGeometry g = geometry(s);
        for (std::size_t i = 0; i < g.K.size(); ++i) kl = std::max(kl, std::abs(g.K[i] - g.L[i]) * R2);
    }
    Outcome o;
    o.pass = !tr.halted && err <= 1e-4 && kl <= 1e-3;
    o.detail = "max relative R^2 error " + f("%.2e", err) + ", max R^2|K-L| " + f("%.2e", kl);
    return o;
}

Outcome c9() {
    const FlowParams& p = nftest::p23();
    const PipelineResult& r = nftest::pipeline();
    auto state = [&](double c) {
        InitialDataSpec s{p};
        s.power_c = c;
        RegularizationParams rp;
        rp.omega = 1e-3;
        rp.rho_star = r.constants.rho_star;
        GaugeSpec g;
        g.track_tip = true;
        g.omega = rp.omega;
        return discretize(regularize(build_initial(s), rp, nullptr, nftest::profiles()), std::size_t(RunConfig{}.nodes), g);
    };
    EvolveControls ec;
    ec.t_end = 0.1;
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(1e-4 * std::pow(0.5 / 1e-4, i / 400.0));
    const OrderingReport o = ordering_check(state(0.0), state(0.2), ec, grid);
    Outcome out;
    out.pass = o.min_margin >= -1e-8;
    out.detail = "min margin " + f("%.2e", o.min_margin) + " at r " + f("%.3g", o.argmin_r) + ", t " + f("%.3g", o.argmin_t) +
                 ", initial " + f("%.2e", o.initial_margin);
    return out;
}

Outcome c10() {
    const FlowParams& p = nftest::p23();
    const double check = compactness_radius(0.75, p);
    const LowerBoundReport lb = lower_bound_check(default_run(), 0.6, p);
    Outcome o;
    o.pass = lb.pass && std::abs(check - 0.729) < 1e-3;
    o.detail = "r1 " + f("%.4f", lb.r1) + ", t1 " + f("%.3g", lb.t1) + ", min margin " + f("%.2e", lb.min_margin) +
               ", r1(0.75) " + f("%.4f", check);
    return o;
}

Outcome c11() {
    const auto t0 = Clock::now();
    const RunConfig cfg;
    const FlowParams& p = nftest::p23();
    const double rho = nftest::pipeline().constants.rho_star;
    const auto runs = omega_runs(build_initial(initial_spec(cfg, p)), cfg.omegas, rho, nftest::profiles(),
                                 std::size_t(cfg.nodes), evolve_controls(cfg), 1);
    const ConvergenceReport rep = convergence_distances(runs, cfg.omegas, 0.05, 0.01, cfg.r_star, rho);
    const double secs = since(t0);
    bool ok = rep.initial_outer_distance == 0.0 && secs < 900;
    for (double q : rep.ratios) ok = ok && q >= 1.5;
    for (std::size_t i = 1; i < rep.distances.size(); ++i) ok = ok && rep.distances[i] < rep.distances[i - 1];
    Outcome o;
    o.pass = ok;
    o.detail = "distances";
    for (double d : rep.distances) o.detail += " " + f("%.4g", d);
    o.detail += ", ratios";
    for (double q : rep.ratios) o.detail += " " + f("%.3f", q);
    o.detail += ", t=0 outer distance " + f("%.1e", rep.initial_outer_distance) + ", " + f("%.0f", secs) + " s";
    return o;
}

Outcome c12() {
    const Trajectory& tr = default_run();
    double slope = tr.max_slope_all, worst = 0.0;
    for (const auto& s : tr.snapshots) {
        const NodeGeometry g = geometry(s);
        for (std::size_t j = 1; j + 1 < g.psi_s.size(); ++j) slope = std::max(slope, std::abs(g.psi_s[j]));
    }
    for (std::size_t i = 1; i < tr.diag.size(); ++i)
        worst = std::max(worst, tr.diag[i].sup_r2KL / tr.diag[i - 1].sup_r2KL - 1);
    Outcome o;
    o.pass = !tr.halted && slope <= 1 + 1e-9 && worst <= 0.01;
    o.detail = "max |psi_s| " + f("%.12f", slope) + ", largest relative rise of sup r^2|K-L| " + f("%.2e", worst);
    return o;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> all{c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (int i = 1; i <= 12; ++i) which.push_back(i);
    bool ok = true;
    for (int i : which) {
        if (i < 1 || i > 12) {
            std::fprintf(stderr, "unknown criterion %d\n", i);
            return 2;
        }
        Outcome o;
        try {
            o = all[std::size_t(i - 1)]();
        } catch (const std::exception& e) {
            o.detail = std::string("error: ") + e.what();
        }
        std::printf("criterion %2d: %s  %s\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
