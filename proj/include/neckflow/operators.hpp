#pragma once

#include "neckflow/core_model.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace neckflow {

/// Value, deficit 1 - value, and two space derivatives at one point.
struct Jet {
    double v = 0.0;
    double om = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Jet with the deficit computed from the value.
inline Jet make_jet(double v, double d1, double d2) { return {v, 1.0 - v, d1, d2}; }
/// Jet built from an accurately known deficit.
inline Jet make_jet_om(double om, double d1, double d2) { return {1.0 - om, om, d1, d2}; }

/// Ricci flow operator v v'' - v'^2/2 + ((n-1-v)/x) v' + (a/x^2) v (1-v).
double apply_F(const Jet& j, double x, const FlowParams& p);
/// Linear part ((a/2) x v' + a v)/x^2.
double apply_L(const Jet& j, double x, const FlowParams& p);
/// Symmetric bilinear part; F = L + Q.
double apply_Q(const Jet& u, const Jet& w, double x, const FlowParams& p);
/// Pointwise norm |v| + x|v'| + x^2|v''|.
double fnorm(const Jet& j, double x);
/// Uniform constant for |L| <= C[v]/x^2 and |Q| <= C[u][w]/x^2.
double opbnd_constant(const FlowParams& p);
/// Linearization dF[w0]{w1} = L[w1] + 2Q[w0,w1].
double apply_dF(const Jet& w0, const Jet& w1, double x, const FlowParams& p);
/// Parabolic-coordinate linear operator L_rho + (rho/2) v_rho.
double apply_Lhat_rho(const Jet& j, double rho, const FlowParams& p);

GridFunction apply_F(const GridFunction& v, const FlowParams& p);
GridFunction apply_L(const GridFunction& v, const FlowParams& p);
GridFunction apply_Q(const GridFunction& u, const GridFunction& w, const FlowParams& p);
GridFunction fnorm(const GridFunction& v);

/// Inner-coordinate sample: value, deficit, sigma derivatives and theta derivative.
struct InnerJet {
    double v = 0.0;
    double om = 0.0;
    double v_sigma = 0.0;
    double v_sigmasigma = 0.0;
    double v_theta = 0.0;
};

/// theta theta_t (theta v_theta - sigma v_sigma) - F_sigma[v].
double inner_residual(const InnerJet& j, double sigma, double theta, const FlowParams& p);
/// theta theta_t written as a function of theta.
double theta_theta_t_of_theta(double theta, const FlowParams& p);

/// Analytic space-time sample (r,t) -> value with derivatives.
struct SpaceTimeJet {
    double v = 0.0;
    double om = 0.0;
    double v_r = 0.0;
    double v_rr = 0.0;
    double v_t = 0.0;
};

/// Closed-form candidate with its validity region.
struct SpaceTimeFunction {
    std::string name;
    std::function<SpaceTimeJet(double r, double t)> eval;
    std::function<bool(double r, double t)> valid;
};

/// Residual (d/dt - F_r) at one sample.
struct ResidualSample {
    double r = 0.0;
    double t = 0.0;
    double residual = 0.0;
    double scale = 0.0;
    bool valid = false;
};

/// v_t - F_r[v] from analytic derivatives.
double parabolic_residual(const SpaceTimeJet& j, double r, const FlowParams& p);

/// Residuals at the given points; out-of-region points come back with valid = false.
std::vector<ResidualSample> residual_parabolic_operator(
    const SpaceTimeFunction& f, const std::vector<std::pair<double, double>>& points,
    const FlowParams& p);

/// CSV r,t,residual,region.
void write_residual_csv(const std::filesystem::path& path, const std::vector<ResidualSample>& s,
                        const std::string& region);

/// Largest relative mismatch between analytic and central-difference derivatives.
double derivative_crosscheck(const SpaceTimeFunction& f, double r, double t);

} // namespace neckflow
