#pragma once

#include "neckflow/barriers.hpp"
#include "neckflow/flow.hpp"
#include "neckflow/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace nftest {

/// n=2, k=3 parameters.
inline const neckflow::FlowParams& p23() {
    static const neckflow::FlowParams p = neckflow::derive_params(2, 3);
    return p;
}

/// Profiles for the default scenario, solved once per process.
inline const neckflow::Profiles& profiles() {
    static const neckflow::Profiles prof = [] {
        auto B = std::make_shared<neckflow::SolitonProfile>(neckflow::solve_bryant(p23(), 200.0, 1e-12));
        auto C = std::make_shared<neckflow::CorrectionProfile>(neckflow::solve_correction(B, p23(), 200.0));
        return neckflow::Profiles{B, C};
    }();
    return prof;
}

/// Default pipeline, run once per process.
inline const neckflow::PipelineResult& pipeline() {
    static const neckflow::PipelineResult r = neckflow::run_pipeline(neckflow::PipelineConfig{}, profiles(), p23());
    return r;
}

/// Fixed-step RK4 oracle for the steady profile equation, independent of the library integrator.
/// Returns (sigma, w, w') samples; w'' = (w'^2/2 - ((n-1-w)/s) w' - a w (1-w)/s^2) / w.
struct OracleProfile {
    std::vector<double> s, w, dw;
};
inline OracleProfile oracle_bryant(int n, double b2, double s_max, int steps_per_unit) {
    const double a = 2.0 * (n - 1);
    auto rhs = [&](double s, double w, double dw) {
        return (0.5 * dw * dw - ((n - 1 - w) / s) * dw - a * w * (1 - w) / (s * s)) / w;
    };
    // series start: w = 1 + b2 s^2 + b4 s^4, b4 from the s^2 balance
    // order s^2 of F: collect from w = 1 + b2 s^2 + b4 s^4 by hand below
    const double s0 = 1e-3;
    // numerical b4: solve the s^2 balance by a two-point fit of F at small s
    auto F_at = [&](double s, double b4) {
        const double w = 1 + b2 * s * s + b4 * s * s * s * s;
        const double dw = 2 * b2 * s + 4 * b4 * s * s * s;
        const double d2 = 2 * b2 + 12 * b4 * s * s;
        return w * d2 - 0.5 * dw * dw + ((n - 1 - w) / s) * dw + a * w * (1 - w) / (s * s);
    };
    const double sp = 1e-2;
    const double f0 = F_at(sp, 0.0), f1 = F_at(sp, 1.0);
    const double b4 = -f0 / (f1 - f0);
    double s = s0, w = 1 + b2 * s0 * s0 + b4 * s0 * s0 * s0 * s0, dw = 2 * b2 * s0 + 4 * b4 * s0 * s0 * s0;
    OracleProfile out;
    const double h = 1.0 / steps_per_unit;
    out.s.push_back(s);
    out.w.push_back(w);
    out.dw.push_back(dw);
    while (s < s_max - 1e-12) {
        // the first-derivative damping rate (n-1-w)/(s w) makes the tail stiff
        const double stiff = s * std::abs(w) / std::max(1e-300, std::abs(n - 1 - w));
        const double hh = std::min({h * std::max(s, 0.01), 0.5 * stiff, s_max - s});
        const double k1w = dw, k1d = rhs(s, w, dw);
        const double k2w = dw + 0.5 * hh * k1d, k2d = rhs(s + 0.5 * hh, w + 0.5 * hh * k1w, dw + 0.5 * hh * k1d);
        const double k3w = dw + 0.5 * hh * k2d, k3d = rhs(s + 0.5 * hh, w + 0.5 * hh * k2w, dw + 0.5 * hh * k2d);
        const double k4w = dw + hh * k3d, k4d = rhs(s + hh, w + hh * k3w, dw + hh * k3d);
        w += hh / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
        dw += hh / 6 * (k1d + 2 * k2d + 2 * k3d + k4d);
        s += hh;
        out.s.push_back(s);
        out.w.push_back(w);
        out.dw.push_back(dw);
    }
    return out;
}

} // namespace nftest
