#include "neckflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace neckflow {

namespace {

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> r(count);
    for (int i = 0; i < count; ++i) r[i] = lo * std::pow(hi / lo, double(i) / (count - 1));
    return r;
}

double max_radius(const FlowState& st) {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < st.size() && st.psi[i + 1] > st.psi[i]; ++i) m = st.psi[i + 1];
    return m;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

} // namespace

TrappingSeries monitor_trapping(const Trajectory& traj, const CompositeBarrier& composite,
                                const CollarParams& collar, double omega, const FlowParams& p) {
    TrappingSeries ts;
    const BarrierConstants& c = composite.constants();
    if (!(c.t_star > 0.0)) {
        ts.note = "no certified horizon t*";
        return ts;
    }
    if (omega > c.t_star / 10) {
        ts.note = "omega=" + fmt17(omega) + " exceeds t*/10=" + fmt17(c.t_star / 10) + "; no snapshot lies inside the certified horizon";
        return ts;
    }
    ts.applicable = true;
    ts.min_margin = std::numeric_limits<double>::infinity();
    const auto [csub, csup] = collar_barriers(collar, p);
    const std::vector<double> r = log_grid(c.r_star * 1e-6, c.r_star, 2000);
    for (const auto& st : traj.snapshots) {
        const double T = st.t + omega;
        if (T > c.t_star) break;
        const std::vector<double> v = extract_v(st, r);
        double lo = std::numeric_limits<double>::infinity(), up = lo;
        for (std::size_t i = 0; i < r.size(); ++i) {
            lo = std::min(lo, v[i] - composite.lower(r[i], T).v);
            up = std::min(up, composite.upper(r[i], T).v - v[i]);
        }
        ts.t.push_back(st.t);
        ts.lower.push_back(lo);
        ts.upper.push_back(up);
        double cl = std::numeric_limits<double>::quiet_NaN(), cu = cl;
        if (collar.T_alpha <= 0.0 || st.t < collar.T_alpha) {
            const double vb = extract_v(st, std::vector<double>{collar.r_bar})[0];
            cl = vb - csub.fn.eval(collar.r_bar, st.t).v;
            cu = csup.fn.eval(collar.r_bar, st.t).v - vb;
        }
        ts.collar_lower.push_back(cl);
        ts.collar_upper.push_back(cu);
        ts.min_margin = std::min({ts.min_margin, lo, up});
    }
    if (ts.t.empty()) {
        ts.applicable = false;
        ts.note = "no snapshot with t + omega <= t*";
    }
    return ts;
}

OrderingReport ordering_check(const FlowState& a, const FlowState& b, const EvolveControls& c,
                              const std::vector<double>& r_grid) {
    EvolveControls cc = c;
    cc.keep_states = true;
    const Trajectory ta = evolve(a, cc), tb = evolve(b, cc);
    if (ta.halted || tb.halted) throw Error(ErrorKind::numerical, "ordering run halted: " + ta.halt_reason + tb.halt_reason);
    OrderingReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    const std::size_t m = std::min(ta.snapshots.size(), tb.snapshots.size());
    for (std::size_t k = 0; k < m; ++k) {
        const FlowState &sa = ta.snapshots[k], &sb = tb.snapshots[k];
        const double top = std::min(max_radius(sa), max_radius(sb));
        std::vector<double> r;
        for (double q : r_grid)
            if (q > 0.0 && q <= top) r.push_back(q);
        if (r.empty()) continue;
        const std::vector<double> va = extract_v(sa, r), vb = extract_v(sb, r);
        double snap_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double d = vb[i] - va[i];
            if (d < snap_min) snap_min = d;
            if (d < rep.min_margin) {
                rep.min_margin = d;
                rep.argmin_r = r[i];
                rep.argmin_t = sa.t;
            }
        }
        if (k == 0) rep.initial_margin = snap_min;
    }
    return rep;
}

std::vector<std::pair<double, double>> curvature_series(const Trajectory& traj) {
    std::vector<std::pair<double, double>> out;
    for (const auto& d : traj.diag)
        if (d.t > 0.0) out.emplace_back(d.t, d.sup_curv);
    return out;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& series, double t_lo, double t_hi) {
    if (!(t_lo > 0.0 && t_hi >= t_lo * std::sqrt(10.0)))
        throw Error(ErrorKind::usage, "rate window must be positive and span at least half a decade");
    const double tol = 1e-9;
    std::vector<double> xs, ys;
    for (const auto& [t, k] : series) {
        if (t < t_lo * (1 - tol) || t > t_hi * (1 + tol)) continue;
        if (!(k > 0.0)) throw Error(ErrorKind::numerical, "non-positive curvature at t=" + fmt17(t));
        xs.push_back(std::log(t));
        ys.push_back(std::log(k));
    }
    if (xs.size() < 3) throw Error(ErrorKind::usage, "fewer than 3 snapshots in the rate window");
    const double n = double(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = int(xs.size());
    double ss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (f.intercept + f.slope * xs[i]);
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

LowerBoundReport lower_bound_check(const Trajectory& traj, double b_star, const FlowParams& p) {
    if (!(b_star > std::max(0.5, p.b) && b_star < 1.0))
        throw Error(ErrorKind::usage, "b* must lie in (max(1/2, b), 1)");
    if (traj.snapshots.empty()) throw Error(ErrorKind::usage, "lower bound check needs stored snapshots");
    LowerBoundReport rep;
    rep.b_star = b_star;
    rep.r1 = compactness_radius(b_star, p);
    const double floor1 = std::pow(rep.r1, 2 * b_star);
    // t1: last snapshot before v(r1, t) first drops to r1^{2b*}
    std::size_t last = 0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& st = traj.snapshots[k];
        if (max_radius(st) < rep.r1 || extract_v(st, std::vector<double>{rep.r1})[0] <= floor1) break;
        last = k + 1;
    }
    if (last == 0) {
        rep.pass = false;
        rep.min_margin = -std::numeric_limits<double>::infinity();
        return rep;
    }
    rep.t1 = traj.snapshots[last - 1].t;
    const std::vector<double> r = log_grid(rep.r1 * 1e-5, rep.r1 * (1 - 1e-9), 1000);
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < last; ++k) {
        const auto& st = traj.snapshots[k];
        const std::vector<double> v = extract_v(st, r);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double m = v[i] - std::pow(r[i], 2 * b_star);
            if (m < rep.min_margin) {
                rep.min_margin = m;
                rep.argmin_r = r[i];
                rep.argmin_t = st.t;
            }
        }
    }
    rep.arclength_to_r1 = std::pow(rep.r1, 1 - b_star) / (1 - b_star);
    rep.pass = rep.min_margin >= 0.0;
    return rep;
}

ConvergenceReport convergence_distances(const std::vector<Trajectory>& runs,
                                        const std::vector<double>& omegas, double r1, double t1,
                                        double r_max, double rho_star) {
    if (runs.size() != omegas.size() || runs.size() < 2)
        throw Error(ErrorKind::usage, "convergence study needs at least two runs, one per omega");
    ConvergenceReport rep;
    rep.omegas = omegas;
    const std::vector<double> r_all = log_grid(1e-3 * r_max, r_max, 600);
    std::vector<double> r_out;
    for (double q : r_all)
        if (q >= r1) r_out.push_back(q);
    const double r_coinc = rho_star * std::sqrt(*std::max_element(omegas.begin(), omegas.end()));
    for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
        const Trajectory &A = runs[j], &B = runs[j + 1];
        double dist = 0.0;
        for (const auto& sa : A.snapshots) {
            auto it = std::find_if(B.snapshots.begin(), B.snapshots.end(),
                                   [&](const FlowState& s) { return same_time(s.t, sa.t); });
            if (it == B.snapshots.end()) continue;
            const FlowState& sb = *it;
            if (sa.t == 0.0) {
                // exact initial profiles; no discretization involved
                for (double q : r_all) {
                    if (q >= r1) dist = std::max(dist, std::abs(sa.initial_v(q) - sb.initial_v(q)));
                    if (q >= r_coinc)
                        rep.initial_outer_distance = std::max(rep.initial_outer_distance, std::abs(sa.initial_v(q) - sb.initial_v(q)));
                }
                continue;
            }
            const std::vector<double>& r = sa.t >= t1 * (1 - 1e-12) ? r_all : r_out;
            const std::vector<double> va = extract_v(sa, r), vb = extract_v(sb, r);
            for (std::size_t i = 0; i < r.size(); ++i) dist = std::max(dist, std::abs(va[i] - vb[i]));
        }
        rep.distances.push_back(dist);
    }
    for (std::size_t j = 0; j + 1 < rep.distances.size(); ++j)
        rep.ratios.push_back(rep.distances[j + 1] > 0.0 ? rep.distances[j] / rep.distances[j + 1]
                                                         : std::numeric_limits<double>::infinity());
    return rep;
}

std::vector<Trajectory> omega_runs(const InitialProfile& init, const std::vector<double>& omegas,
                                   double rho_star, const Profiles& prof, std::size_t nodes,
                                   const EvolveControls& c, int jobs) {
    auto one = [&](double om) {
        RegularizationParams rp;
        rp.omega = om;
        rp.rho_star = rho_star;
        const InitialProfile reg = regularize(init, rp, nullptr, prof);
        GaugeSpec g;
        g.track_tip = true;
        g.omega = om;
        Trajectory tr = evolve(discretize(reg, nodes, g), c);
        if (tr.halted) throw Error(ErrorKind::numerical, "run with omega=" + fmt17(om) + " halted: " + tr.halt_reason);
        return tr;
    };
    std::vector<Trajectory> out(omegas.size());
    const std::size_t width = std::size_t(std::max(1, jobs));
    for (std::size_t start = 0; start < omegas.size(); start += width) {
        std::vector<std::future<Trajectory>> fs;
        for (std::size_t i = start; i < std::min(omegas.size(), start + width); ++i)
            fs.push_back(std::async(std::launch::async, one, omegas[i]));
        for (std::size_t i = 0; i < fs.size(); ++i) out[start + i] = fs[i].get();
    }
    return out;
}

} // namespace neckflow
