#pragma once

#include "neckflow/core_model.hpp"
#include "neckflow/operators.hpp"
#include "neckflow/profiles.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace neckflow {

enum class FamilyKind { outer, parabolic, inner, collar, composite, exact };
enum class Sign { sub, super };

std::string to_string(FamilyKind k);
std::string to_string(Sign s);

/// One-sided barrier with analytic derivatives and a region in (r,t).
struct BarrierFamily {
    FamilyKind kind = FamilyKind::outer;
    Sign sign = Sign::super;
    SpaceTimeFunction fn;
    /// r-interval of the region at time t.
    std::function<std::pair<double, double>(double t)> r_range;
    /// True where a clamp is active (residual identically zero there).
    std::function<bool(double r, double t)> clamped;
    /// Optional residual (d/dt - F_r) written to avoid cancellation.
    std::function<double(double r, double t)> residual;
    bool log_r = true;

    std::string name() const { return to_string(kind) + "_" + to_string(sign); }
};

/// Every constant of the barrier construction.
struct BarrierConstants {
    double epsilon = 0.1;
    double delta = 0.1;
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
    double D = 0.0;
    double kappa_plus = 0.0;
    double kappa_minus = 0.0;
    double r_star = 0.5;
    double rho_star = 0.0;
    double sigma_star = 0.0;
    double t_star = 0.0;
    double tau_star = 0.0;
};

/// Collar pair around r_bar.
struct CollarParams {
    double m_minus = 0.2;
    double m_plus = 0.8;
    double alpha = 0.05;
    double r_bar = 0.5;
    double T_alpha = 0.0;
    double sub_rate = 3.0;
    double super_rate = 3.0;
};

/// Grid of a certification run.
struct GridSpec {
    int nr = 200;
    int nt = 200;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double sigma_floor = 1e-3;
};

/// Outcome of a sign certification.
struct CertificationReport {
    std::string family;
    std::string region;
    int nr = 0;
    int nt = 0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double min_margin = 0.0;
    double argmin_r = 0.0;
    double argmin_t = 0.0;
    long samples = 0;
    long clamped = 0;
    bool pass = false;
};

enum class Exec { serial, parallel };

/// Sign certification on a log-spaced (r,t) grid; margin = signed residual/(|v_t|+|F|).
CertificationReport verify_subsuper(const BarrierFamily& f, const GridSpec& g, const FlowParams& p,
                                    Exec exec = Exec::parallel);
/// Certification on g, then on a grid refined by the factor.
CertificationReport verify_refined(const BarrierFamily& f, const GridSpec& g, int factor,
                                   const FlowParams& p, Exec exec = Exec::parallel);

/// (1 +- delta) r^{2b} + (1 +- eps) t F[(1 +- delta) r^{2b}], closed form.
SpaceTimeJet outer_jet(double c_delta, double c_eps, double r, double t, const FlowParams& p);
/// (1 +- gamma)(r^2 + a t)^{1+b}/r^2 +- D t^{2+2b}/r^4.
SpaceTimeJet parabolic_jet(double amp, double s_D, double D, double r, double t, const FlowParams& p);

std::pair<BarrierFamily, BarrierFamily> outer_families(double delta, double epsilon, double r_star,
                                                       double rho_star, const FlowParams& p);
std::pair<BarrierFamily, BarrierFamily> parabolic_barriers(double gamma_plus, double gamma_minus,
                                                           double D, double sigma_star,
                                                           double rho_star, const FlowParams& p);
std::pair<BarrierFamily, BarrierFamily> inner_barriers(double kappa_plus, double kappa_minus,
                                                       double epsilon, double sigma_star,
                                                       const Profiles& prof, const FlowParams& p);
std::pair<BarrierFamily, BarrierFamily> collar_barriers(const CollarParams& cp, const FlowParams& p);

/// F[(1 +- delta) r^{2b}] > 0 on (0, r_star].
bool outer_positivity(double delta, double r_star, const FlowParams& p);

/// Search and certification controls.
struct SearchControls {
    int nr = 200;
    int nt = 200;
    int refine = 4;
    double t_span = 1e-8;
    double rho_cap_factor = 1024.0;
    double sigma_growth = 1.25;
    double sigma_cap = 1e7;
    int glue_samples = 50;
    Exec exec = Exec::parallel;
};

struct OuterResult {
    BarrierFamily sub, super;
    double rho_star = 0.0;
    CertificationReport sub_report, super_report;
};

/// Doubling search for rho_star from 2/sqrt(eps).
OuterResult outer_barriers(double delta, double epsilon, double r_star, const FlowParams& p,
                           const SearchControls& sc);

/// H(rho) = (1 + (1 +- eps)(1+b) a rho^-2)/(1 + a rho^-2)^{1+b}.
double glue_H(double rho, double epsilon, int pm, const FlowParams& p);

struct OuterParabolicGlue {
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
    double tau_star_bound = 0.0;
};

/// gamma_pm from H(2 rho*); tau bound by backward search from tau = 0.
OuterParabolicGlue glue_outer_parabolic(double epsilon, double delta, double rho_star, double D,
                                        const FlowParams& p, const SearchControls& sc);

/// Remainder constant of sigma^2 (B(kappa sigma) - (kappa sigma)^-2) over kappa in [kappa0/2, 2 kappa0].
double tail_remainder_constant(const SolitonProfile& B, const FlowParams& p);

struct ParabolicInnerGlue {
    double D = 0.0;
    double sigma_star = 0.0;
    double kappa_plus = 0.0;
    double kappa_minus = 0.0;
    double t_star_bound = 0.0;
    bool kappa_discrepancy = true;
};

/// (kappa_plus, kappa_minus) from kappa^-2 = (1 +- gamma) kappa0^-2 +- D/(3 sigma*^2).
std::pair<double, double> glue_kappas(double D, double sigma_star, double gamma_plus,
                                      double gamma_minus, const FlowParams& p);

/// t -> 0 limit of sigma^2 (v_para - v_in) at sigma; pm = +1 super, -1 sub.
double glue_inner_limit(double sigma, double kappa, double gamma, double D, int pm,
                        const Profiles& prof, const FlowParams& p);

/// Crossing inequalities at time t; returns the smallest signed gap and which failed.
struct CrossingCheck {
    double min_gap = 0.0;
    std::string worst;
    bool ok = false;
};
CrossingCheck crossing_inequalities(const BarrierConstants& c, const Profiles& prof,
                                    const FlowParams& p, double t);

/// Piecewise min (upper) and max (lower) assembly.
class CompositeBarrier {
public:
    CompositeBarrier() = default;
    CompositeBarrier(BarrierConstants c, Profiles prof, FlowParams p);

    const BarrierConstants& constants() const { return c_; }
    /// Largest t at which the bands are ordered.
    double band_limit() const;
    /// Upper barrier jet and the active family.
    SpaceTimeJet upper(double r, double t, FamilyKind* active = nullptr) const;
    SpaceTimeJet lower(double r, double t, FamilyKind* active = nullptr) const;
    BarrierFamily as_family(Sign s) const;

private:
    BarrierConstants c_;
    Profiles prof_;
    FlowParams p_;
};

/// Full selection run along the dependency order.
struct PipelineConfig {
    double epsilon = 0.1;
    double delta = 0.1;
    double r_star = 0.5;
    CollarParams collar;
    SearchControls search;
};

struct StageNote {
    std::string stage;
    std::string detail;
};

struct PipelineResult {
    BarrierConstants constants;
    CollarParams collar;
    double D_leading = 0.0;
    double C_tail = 0.0;
    std::vector<CertificationReport> reports;
    std::vector<StageNote> notes;
    bool kappa_discrepancy = true;
    CrossingCheck glue;
};

PipelineResult run_pipeline(const PipelineConfig& cfg, const Profiles& prof, const FlowParams& p);

/// All families built from final constants.
struct FamilySet {
    std::vector<BarrierFamily> families;
};
FamilySet build_families(const PipelineResult& res, const Profiles& prof, const FlowParams& p);

/// Region grid for a family under final constants.
GridSpec family_grid(const BarrierFamily& f, const PipelineResult& res, const SearchControls& sc);

/// Leading-order parabolic inequalities on rho in [rho_lo, rho_hi].
bool parabolic_leading_ok(double D, double gamma_plus, double gamma_minus, double rho_lo,
                          double rho_hi, int samples, const FlowParams& p);

/// Collar validity time by halving.
double collar_time(CollarParams cp, const FlowParams& p, const SearchControls& sc);

/// r1 = (a b*/(2 b*^2 + b* + a))^{1/(4 b*)}.
double compactness_radius(double b_star, const FlowParams& p);

/// JSON helpers for reports and constants.
std::string report_json(const CertificationReport& r);
std::string constants_json(const BarrierConstants& c);
BarrierConstants constants_from_json(const std::string& text);
/// Whole pipeline result, reports included; round-trips exactly.
std::string pipeline_json(const PipelineResult& r);
PipelineResult pipeline_from_json(const std::string& text);

} // namespace neckflow
