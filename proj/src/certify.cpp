#include "neckflow/barriers.hpp"

#include <cmath>
#include <limits>

#include <omp.h>

namespace neckflow {

namespace {

struct RowResult {
    double min_margin = std::numeric_limits<double>::infinity();
    double r = 0.0;
    double t = 0.0;
    long samples = 0;
    long clamped = 0;
    bool strict = true;
};

double grid_time(const GridSpec& g, int i) {
    if (g.nt == 1) return g.t_hi;
    const double lo = g.t_lo > 0.0 ? g.t_lo : g.t_hi * 1e-8;
    return lo * std::pow(g.t_hi / lo, double(i) / (g.nt - 1));
}

RowResult certify_row(const BarrierFamily& f, const GridSpec& g, const FlowParams& p, int it) {
    RowResult row;
    const double t = grid_time(g, it);
    const double sgn = f.sign == Sign::super ? 1.0 : -1.0;
    auto [r0, r1] = f.r_range(t);
    for (int j = 0; j < g.nr; ++j) {
        const double s = g.nr == 1 ? 0.0 : double(j) / (g.nr - 1);
        const double r = f.log_r ? r0 * std::pow(r1 / r0, s) : r0 + (r1 - r0) * s;
        if (!(r > 0.0) || (f.fn.valid && !f.fn.valid(r, t))) continue;
        ++row.samples;
        const bool cl = f.clamped && f.clamped(r, t);
        double margin = 0.0;
        if (cl) {
            ++row.clamped;
            continue;
        } else {
            const SpaceTimeJet jet = f.fn.eval(r, t);
            double F = apply_F(Jet{jet.v, jet.om, jet.v_r, jet.v_rr}, r, p);
            double res = jet.v_t - F;
            if (f.residual) {
                res = f.residual(r, t);
                F = jet.v_t - res;
            }
            const double scale = std::abs(jet.v_t) + std::abs(F);
            margin = scale > 0.0 ? sgn * res / scale : 0.0;
            if (!(margin > 0.0)) row.strict = false;
            if (!std::isfinite(margin)) margin = -std::numeric_limits<double>::infinity();
        }
        if (margin < row.min_margin) {
            row.min_margin = margin;
            row.r = r;
            row.t = t;
        }
    }
    return row;
}

} // namespace

CertificationReport verify_subsuper(const BarrierFamily& f, const GridSpec& g, const FlowParams& p,
                                    Exec exec) {
    if (g.nr < 2 || g.nt < 1 || !(g.t_hi > 0.0))
        throw Error(ErrorKind::usage, "certification grid needs nr >= 2, nt >= 1 and t_hi > 0");
    std::vector<RowResult> rows(g.nt);
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < g.nt; ++i) rows[i] = certify_row(f, g, p, i);
    } else {
        for (int i = 0; i < g.nt; ++i) rows[i] = certify_row(f, g, p, i);
    }
    CertificationReport rep;
    rep.family = f.fn.name.empty() ? f.name() : f.fn.name;
    rep.region = to_string(f.kind);
    rep.nr = g.nr;
    rep.nt = g.nt;
    rep.t_lo = grid_time(g, 0);
    rep.t_hi = g.t_hi;
    rep.min_margin = std::numeric_limits<double>::infinity();
    bool strict = true;
    for (const auto& row : rows) {
        rep.samples += row.samples;
        rep.clamped += row.clamped;
        strict = strict && row.strict;
        if (row.min_margin < rep.min_margin) {
            rep.min_margin = row.min_margin;
            rep.argmin_r = row.r;
            rep.argmin_t = row.t;
        }
    }
    rep.pass = strict && rep.samples > 0;
    return rep;
}

CertificationReport verify_refined(const BarrierFamily& f, const GridSpec& g, int factor,
                                   const FlowParams& p, Exec exec) {
    CertificationReport coarse = verify_subsuper(f, g, p, exec);
    if (!coarse.pass || factor <= 1) return coarse;
    GridSpec fine = g;
    fine.nr = (g.nr - 1) * factor + 1;
    fine.nt = (g.nt - 1) * factor + 1;
    return verify_subsuper(f, fine, p, exec);
}

} // namespace neckflow
