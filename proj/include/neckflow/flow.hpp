#pragma once

#include "neckflow/barriers.hpp"
#include "neckflow/core_model.hpp"
#include "neckflow/profiles.hpp"

#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace neckflow {

/// Singular initial data: v = r^{2b}(1 + c r^{2b}) near the pole, blended into a round cap.
struct InitialDataSpec {
    FlowParams params;
    double power_c = 0.0;
    double R_cap = 2.0;
    double blend_lo = 0.5;
    double blend_hi = 0.9;
};

/// v as a function of r on the north branch; round with radius R_cap beyond r_round.
struct InitialProfile {
    InitialDataSpec spec;
    std::function<double(double)> v;
    std::function<double(double)> v_r;
    double r_round = 0.0;
    double A_measured = 0.0;
    double r_sharp = 0.0;
    bool singular = true;
};

/// Sinh grading s = L sinh(lambda x)/sinh(lambda); lambda may follow a tip scale.
struct GaugeSpec {
    double lambda = 0.0;
    bool track_tip = false;
    double omega = 0.0;
    /// Target pole spacing h = tip_fraction (t + omega)^{(1+b)/2}.
    double tip_fraction = 0.1;
    double lambda_max = 12.0;
};

/// Metric phi^2 dx^2 + psi^2 g_sphere on a fixed x-grid.
struct FlowState {
    FlowParams params;
    std::vector<double> x;
    std::vector<double> phi;
    std::vector<double> psi;
    double t = 0.0;
    double length = 0.0;
    double lambda = 0.0;
    GaugeSpec gauge;
    double length0 = 0.0;
    /// Exact v(r) of the construction, kept for t = 0 comparisons.
    std::function<double(double)> initial_v;

    std::size_t size() const { return x.size(); }
    /// Arclength from the north pole at node i.
    double s(std::size_t i) const;
};

/// Map value, derivatives in x and derivative in lambda of the sinh grading.
struct GaugeMap {
    double G = 0.0, G_x = 0.0, G_xx = 0.0, G_l = 0.0;
};
GaugeMap gauge_map(double x, double lambda);
/// lambda for pole spacing h given N intervals and total length L.
double gauge_lambda(double h, std::size_t intervals, double length, double lambda_max);

InitialProfile build_initial(const InitialDataSpec& spec);
/// Round sphere of radius R.
FlowState round_sphere(double R, std::size_t nodes, const FlowParams& p, const GaugeSpec& g = {});
/// Discretize a profile on nodes + 1 grid points; throws on |psi_s| >= 1 away from the pole.
FlowState discretize(const InitialProfile& prof, std::size_t nodes, const GaugeSpec& g);

struct RegularizationParams {
    double omega = 1e-3;
    double rho_star = 0.0;
    double kappa = 0.0;
    double A_slack = 0.1;
};

struct RegularizationReport {
    bool trapping_checked = false;
    double trap_lower = 0.0;
    double trap_upper = 0.0;
    double A_ratio = 0.0;
    std::string note;
};

/// Inner formal solution at time omega blended into v_init over [rho* sqrt(omega)/2, rho* sqrt(omega)].
InitialProfile regularize(const InitialProfile& init, const RegularizationParams& rp,
                          const CompositeBarrier* composite, const Profiles& prof,
                          RegularizationReport* report = nullptr);

/// Pointwise geometric quantities on the grid.
struct NodeGeometry {
    std::vector<double> s, psi_s, psi_ss, K, L;
    /// psi_s extrapolated to each pole.
    double pole_slope_north = 0.0, pole_slope_south = 0.0;
};
NodeGeometry geometry(const FlowState& st);

struct EvolveControls {
    double t_end = 0.1;
    double safety = 0.2;
    double t_first = 1e-4;
    int per_decade = 20;
    long max_steps = 50'000'000;
    double dt_min = 1e-16;
    double slope_tol = 1e-9;
    bool keep_states = true;
};

struct SnapshotDiag {
    double t = 0.0;
    double sup_curv = 0.0;
    double min_psi = 0.0;
    double max_psi = 0.0;
    double max_slope = 0.0;
    double sup_r2KL = 0.0;
    double pole_dev = 0.0;
    double trap_lower = std::numeric_limits<double>::quiet_NaN();
    double trap_upper = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
    std::vector<FlowState> snapshots;
    std::vector<SnapshotDiag> diag;
    long steps = 0;
    long rejected = 0;
    /// Largest |psi_s| seen at any accepted step.
    double max_slope_all = 0.0;
    bool halted = false;
    std::string halt_reason;
};

/// Snapshot times: 0, then geometric from t_first to t_end.
std::vector<double> snapshot_times(const EvolveControls& c);
/// Right-hand side d psi/dt at fixed x and dL/dt.
void flow_rhs(const FlowState& st, std::vector<double>& dpsi, double& dlength,
              double* max_speed = nullptr);
Trajectory evolve(FlowState state, const EvolveControls& c);

/// v = psi_s^2 at psi = r on the increasing north branch.
GridFunction extract_v(const FlowState& st, const RadialGrid& r);
std::vector<double> extract_v(const FlowState& st, const std::vector<double>& r);

struct TrappingSeries {
    bool applicable = false;
    std::string note;
    std::vector<double> t, lower, upper, collar_lower, collar_upper;
    double min_margin = 0.0;
};
TrappingSeries monitor_trapping(const Trajectory& traj, const CompositeBarrier& composite,
                                const CollarParams& collar, double omega, const FlowParams& p);

struct OrderingReport {
    double min_margin = 0.0;
    double argmin_r = 0.0;
    double argmin_t = 0.0;
    double initial_margin = 0.0;
};
OrderingReport ordering_check(const FlowState& a, const FlowState& b, const EvolveControls& c,
                              const std::vector<double>& r_grid);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
    int points = 0;
};
std::vector<std::pair<double, double>> curvature_series(const Trajectory& traj);
RateFit fit_rate(const std::vector<std::pair<double, double>>& series, double t_lo, double t_hi);

struct LowerBoundReport {
    double b_star = 0.0;
    double r1 = 0.0;
    double t1 = 0.0;
    double min_margin = 0.0;
    double argmin_r = 0.0;
    double argmin_t = 0.0;
    double arclength_to_r1 = 0.0;
    bool pass = false;
};
LowerBoundReport lower_bound_check(const Trajectory& traj, double b_star, const FlowParams& p);

struct ConvergenceReport {
    std::vector<double> omegas;
    std::vector<double> distances;
    std::vector<double> ratios;
    double initial_outer_distance = 0.0;
};
/// Sup-distance of v between consecutive runs on {r >= r1} u {t >= t1}, r <= r_max.
ConvergenceReport convergence_distances(const std::vector<Trajectory>& runs,
                                        const std::vector<double>& omegas, double r1, double t1,
                                        double r_max, double rho_star);
/// Regularize and evolve one run per omega (threads bounded by jobs).
std::vector<Trajectory> omega_runs(const InitialProfile& init, const std::vector<double>& omegas,
                                   double rho_star, const Profiles& prof, std::size_t nodes,
                                   const EvolveControls& c, int jobs);

/// Snapshot CSVs x,phi,psi and diagnostics.csv.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj);
FlowState read_snapshot(const std::filesystem::path& file, const FlowParams& p);

} // namespace neckflow
