#include "neckflow/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace neckflow {

namespace {

GridSpec span_grid(const SearchControls& sc, double t_hi) {
    GridSpec g;
    g.nr = sc.nr;
    g.nt = sc.nt;
    g.t_hi = t_hi;
    g.t_lo = t_hi * sc.t_span;
    return g;
}

bool both_pass(const std::pair<BarrierFamily, BarrierFamily>& fam, const GridSpec& g,
               const FlowParams& p, Exec exec) {
    return verify_subsuper(fam.second, g, p, exec).pass && verify_subsuper(fam.first, g, p, exec).pass;
}

std::vector<double> log_times(double t_hi, double span, int count) {
    std::vector<double> ts(count);
    for (int i = 0; i < count; ++i)
        ts[i] = t_hi * std::pow(span, 1.0 - double(i) / std::max(1, count - 1));
    return ts;
}

// Smallest relative gap among the four outer/parabolic crossings at time t.
double outer_para_gap(double eps, double delta, double rho_star, double gp, double gm, double D,
                      double t, const FlowParams& p) {
    const double st = std::sqrt(t);
    const double q1 = rho_star * st, q3 = 3 * rho_star * st;
    auto rel = [](double hi, double lo) { return (hi - lo) / std::max(std::abs(hi), std::abs(lo)); };
    auto pp = [&](double r) { return parabolic_jet(1 + gp, 1, D, r, t, p).v; };
    auto pm = [&](double r) { return parabolic_jet(1 - gm, -1, D, r, t, p).v; };
    auto op = [&](double r) { return outer_jet(1 + delta, 1 + eps, r, t, p).v; };
    auto om = [&](double r) { return outer_jet(1 - delta, 1 - eps, r, t, p).v; };
    return std::min({rel(op(q1), pp(q1)), rel(pp(q3), op(q3)), rel(pm(q1), om(q1)), rel(om(q3), pm(q3))});
}

} // namespace

OuterResult outer_barriers(double delta, double epsilon, double r_star, const FlowParams& p,
                           const SearchControls& sc) {
    if (!(delta > 0 && delta < 0.5 && epsilon > 0 && epsilon < 0.5))
        throw Error(ErrorKind::usage, "delta and epsilon must lie in (0, 0.5)");
    if (!outer_positivity(delta, r_star, p))
        throw Error(ErrorKind::usage, "r_star too large: F[(1 +- delta) r^{2b}] is not positive on (0, r_star]");
    const double start = 2.0 / std::sqrt(epsilon);
    const double cap = sc.rho_cap_factor / std::sqrt(epsilon);
    const double rho_h = std::sqrt(p.a * p.b * (1 + epsilon) / epsilon);
    for (double rho = start; rho <= cap * (1 + 1e-12); rho *= 2) {
        if (rho <= rho_h) continue;
        auto fam = outer_families(delta, epsilon, r_star, rho, p);
        const GridSpec g = span_grid(sc, std::pow(r_star / (3 * rho), 2));
        OuterResult res;
        res.super_report = verify_subsuper(fam.second, g, p, sc.exec);
        if (!res.super_report.pass) continue;
        res.sub_report = verify_subsuper(fam.first, g, p, sc.exec);
        if (!res.sub_report.pass) continue;
        res.sub = fam.first;
        res.super = fam.second;
        res.rho_star = rho;
        return res;
    }
    throw Error(ErrorKind::certification, "outer rho* search exceeded " + fmt17(cap));
}

OuterParabolicGlue glue_outer_parabolic(double epsilon, double delta, double rho_star, double D,
                                        const FlowParams& p, const SearchControls& sc) {
    OuterParabolicGlue g;
    const double hp = glue_H(2 * rho_star, epsilon, +1, p);
    const double hm = glue_H(2 * rho_star, epsilon, -1, p);
    g.gamma_plus = (1 + delta) * hp - 1;
    g.gamma_minus = 1 - (1 - delta) * hm;
    if (!(g.gamma_plus > 0 && g.gamma_minus > 0))
        throw Error(ErrorKind::certification, "gluing infeasible: gamma_pm <= 0 at rho*=" + fmt17(rho_star));
    if (!(g.gamma_plus < 1 && g.gamma_minus < 1))
        throw Error(ErrorKind::certification, "gamma_pm >= 1 rejected");
    double t = std::min(1.0, std::pow(0.5 / (3 * rho_star), 2));
    for (int halvings = 0; halvings < 200; ++halvings, t *= 0.5) {
        bool ok = true;
        for (double s : log_times(t, sc.t_span, sc.glue_samples))
            if (!(outer_para_gap(epsilon, delta, rho_star, g.gamma_plus, g.gamma_minus, D, s, p) > 0)) {
                ok = false;
                break;
            }
        if (ok) {
            g.tau_star_bound = std::log(t);
            return g;
        }
    }
    throw Error(ErrorKind::certification, "outer/parabolic crossings fail at every sampled time");
}

bool parabolic_leading_ok(double D, double gp, double gm, double rho_lo, double rho_hi, int samples,
                          const FlowParams& p) {
    const double a = p.a, b = p.b;
    for (int i = 0; i < samples; ++i) {
        const double rho = rho_lo * std::pow(rho_hi / rho_lo, double(i) / (samples - 1));
        const double r2 = rho * rho, P = r2 + a, Pb = std::pow(P, b);
        const Jet v1{Pb * P / r2, 1.0 - Pb * P / r2,
                     2 * (1 + b) * Pb / rho - 2 * Pb * P / (r2 * rho),
                     4 * b * (1 + b) * Pb / P - 6 * (1 + b) * Pb / r2 + 6 * Pb * P / (r2 * r2)};
        const double w = D / (r2 * r2);
        const Jet v2{w, 1.0 - w, -4 * w / rho, 20 * w / r2};
        const double lin = 2 * b * v2.v - apply_Lhat_rho(v2, rho, p);
        const double q = apply_Q(v1, v1, rho, p);
        if (!(lin - (1 + gp) * (1 + gp) * q > 0)) return false;
        if (!(-lin - (1 - gm) * (1 - gm) * q < 0)) return false;
    }
    return true;
}

double collar_time(CollarParams cp, const FlowParams& p, const SearchControls& sc) {
    double T = cp.alpha * cp.alpha;
    for (int h = 0; h < 60; ++h, T *= 0.5) {
        cp.T_alpha = 0.0;
        auto fam = collar_barriers(cp, p);
        GridSpec g = span_grid(sc, T);
        if (both_pass(fam, g, p, sc.exec)) return T;
    }
    throw Error(ErrorKind::certification, "collar validity time search failed");
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Profiles& prof, const FlowParams& p) {
    const auto& sc = cfg.search;
    PipelineResult res;
    auto& c = res.constants;
    c.epsilon = cfg.epsilon;
    c.delta = cfg.delta;
    c.r_star = cfg.r_star;

    // (r*, eps) -> rho*
    const OuterResult outer = outer_barriers(cfg.delta, cfg.epsilon, cfg.r_star, p, sc);
    c.rho_star = outer.rho_star;
    double t_bound = std::pow(cfg.r_star / (3 * c.rho_star), 2);
    res.notes.push_back({"rho_star", fmt17(c.rho_star)});

    // (eps, delta) -> gamma
    OuterParabolicGlue og = glue_outer_parabolic(cfg.epsilon, cfg.delta, c.rho_star, 0.0, p, sc);
    c.gamma_plus = og.gamma_plus;
    c.gamma_minus = og.gamma_minus;

    // rho* -> D
    double Dl = 1.0;
    while (!parabolic_leading_ok(Dl, c.gamma_plus, c.gamma_minus, 1e-4, 3 * c.rho_star, 400, p)) {
        Dl *= 2;
        if (Dl > 1e30) throw Error(ErrorKind::certification, "no D satisfies the leading parabolic inequality");
    }
    res.D_leading = Dl;
    res.C_tail = tail_remainder_constant(*prof.bryant, p);
    c.D = 2 * std::max(Dl, 2 * res.C_tail);
    res.notes.push_back({"D", fmt17(c.D)});

    og = glue_outer_parabolic(cfg.epsilon, cfg.delta, c.rho_star, c.D, p, sc);
    t_bound = std::min(t_bound, std::exp(og.tau_star_bound));

    // (rho*, D) -> sigma*, then kappa
    const double k0 = p.kappa0;
    bool found = false;
    for (double s = 1.0; s <= sc.sigma_cap; s *= sc.sigma_growth) {
        const auto [kp, km] = glue_kappas(c.D, s, c.gamma_plus, c.gamma_minus, p);
        if (!(kp > 0.5 * k0 && kp < 2 * k0 && km > 0.5 * k0 && km < 2 * k0)) continue;
        if (!(glue_inner_limit(s, kp, c.gamma_plus, c.D, +1, prof, p) > 0 &&
              glue_inner_limit(3 * s, kp, c.gamma_plus, c.D, +1, prof, p) < 0))
            continue;
        if (!(glue_inner_limit(s, km, c.gamma_minus, c.D, -1, prof, p) < 0 &&
              glue_inner_limit(3 * s, km, c.gamma_minus, c.D, -1, prof, p) > 0))
            continue;
        const double t_hi = std::min(std::pow(c.rho_star / (3 * s), 2.0 / p.b), t_bound);
        auto para = parabolic_barriers(c.gamma_plus, c.gamma_minus, c.D, s, c.rho_star, p);
        if (!both_pass(para, span_grid(sc, t_hi), p, sc.exec)) continue;
        c.sigma_star = s;
        c.kappa_plus = kp;
        c.kappa_minus = km;
        t_bound = t_hi;
        found = true;
        break;
    }
    if (!found) throw Error(ErrorKind::certification, "sigma* search exceeded its cap");
    res.kappa_discrepancy = !(c.kappa_minus < k0 && k0 < c.kappa_plus);
    res.notes.push_back({"sigma_star", fmt17(c.sigma_star)});
    if (res.kappa_discrepancy)
        res.notes.push_back({"kappa_order", "kappa_plus < kappa0 < kappa_minus (limit equation ordering)"});

    // inner t* by halving
    auto inner = inner_barriers(c.kappa_plus, c.kappa_minus, c.epsilon, c.sigma_star, prof, p);
    {
        int h = 0;
        while (!both_pass(inner, span_grid(sc, t_bound), p, sc.exec)) {
            t_bound *= 0.5;
            if (++h > 200) throw Error(ErrorKind::certification, "inner t* search failed");
        }
    }

    // gluing crossings at sampled times
    {
        int h = 0;
        for (;;) {
            c.t_star = t_bound;
            bool ok = true;
            for (double s : log_times(t_bound, sc.t_span, sc.glue_samples)) {
                const CrossingCheck cc = crossing_inequalities(c, prof, p, s);
                if (!cc.ok) {
                    ok = false;
                    res.glue = cc;
                    break;
                }
            }
            if (ok) break;
            t_bound *= 0.5;
            if (++h > 200) throw Error(ErrorKind::certification, "crossing " + res.glue.worst + " fails at every t");
        }
        res.glue = CrossingCheck{std::numeric_limits<double>::infinity(), "", true};
        for (double s : log_times(t_bound, sc.t_span, sc.glue_samples)) {
            const CrossingCheck cc = crossing_inequalities(c, prof, p, s);
            if (cc.min_gap < res.glue.min_gap) res.glue = cc;
        }
    }
    c.t_star = t_bound;
    c.tau_star = std::log(t_bound);

    res.collar = cfg.collar;
    res.collar.T_alpha = collar_time(cfg.collar, p, sc);

    // final certification on the search grid and its refinement
    for (const auto& f : build_families(res, prof, p).families)
        res.reports.push_back(verify_refined(f, family_grid(f, res, sc), sc.refine, p, sc.exec));
    return res;
}

FamilySet build_families(const PipelineResult& res, const Profiles& prof, const FlowParams& p) {
    const auto& c = res.constants;
    FamilySet s;
    auto add = [&](std::pair<BarrierFamily, BarrierFamily> f) {
        s.families.push_back(std::move(f.first));
        s.families.push_back(std::move(f.second));
    };
    add(outer_families(c.delta, c.epsilon, c.r_star, c.rho_star, p));
    add(parabolic_barriers(c.gamma_plus, c.gamma_minus, c.D, c.sigma_star, c.rho_star, p));
    add(inner_barriers(c.kappa_plus, c.kappa_minus, c.epsilon, c.sigma_star, prof, p));
    CollarParams cp = res.collar;
    add(collar_barriers(cp, p));
    return s;
}

GridSpec family_grid(const BarrierFamily& f, const PipelineResult& res, const SearchControls& sc) {
    const double t_hi = f.kind == FamilyKind::collar
                            ? res.collar.T_alpha * (1 - 1e-9)
                            : res.constants.t_star;
    return span_grid(sc, t_hi);
}

} // namespace neckflow
