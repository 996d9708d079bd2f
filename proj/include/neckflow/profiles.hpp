#pragma once

#include "neckflow/core_model.hpp"
#include "neckflow/operators.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace neckflow {

/// Nodes uniform in log(sigma) carrying a value, first and second derivative.
struct HermiteTable {
    double log_lo = 0.0;
    double dlog = 0.0;
    std::vector<double> sigma;
    std::vector<double> f;
    std::vector<double> d1;
    std::vector<double> d2;

    double lo() const { return sigma.front(); }
    double hi() const { return sigma.back(); }
    /// Quintic Hermite value and derivatives at s inside [lo, hi].
    void eval(double s, double& f_out, double& d1_out, double& d2_out) const;
};

/// Bryant profile: F_sigma[B] = 0, B(0) = 1, sigma^2 B -> 1.
class SolitonProfile {
public:
    double sigma0 = 1e-3;
    double sigma_max = 0.0;
    double ode_tol = 1e-10;
    double b2 = 0.0;
    double b4 = 0.0;
    double b2_error = 0.0;
    double c_inf = 0.0;
    double tail_coefficient = 0.0;
    FlowParams params;
    HermiteTable table;

    /// B, 1 - B, B' and the B'' implied by the profile equation.
    Jet eval(double sigma) const;
    /// Same, but with the interpolant's own second derivative.
    Jet eval_interp(double sigma) const;
    /// Raw table interpolation, no series or tail.
    Jet eval_table(double sigma) const;
    /// Max |F_sigma[B]| at table midpoints using the interpolant's derivatives.
    double table_residual() const;

    void save(const std::filesystem::path& dir) const;
    static SolitonProfile load(const std::filesystem::path& dir);
};

/// Series coefficient b4 from the order sigma^2 balance, with b2 given.
double bryant_b4(double b2, const FlowParams& p);

/// Bryant profile by integration from the series seed and rescaling.
SolitonProfile solve_bryant(const FlowParams& p, double sigma_max, double ode_tol);

/// B'' from the profile equation given B, 1 - B and B'.
double bryant_second(double v, double om, double d1, double sigma, const FlowParams& p);

/// Bounded positive solution of dF[B]{C} = -sigma B'.
class CorrectionProfile {
public:
    double sigma0 = 0.0;
    double sigma_max = 0.0;
    double M = 0.0;
    double tail_value = 0.0;
    double boundary_value = 0.0;
    std::size_t nodes = 0;
    std::string lambda_note;
    std::shared_ptr<const SolitonProfile> bryant;
    HermiteTable table;

    /// C, 1 - C, C' and the C'' implied by the linearized equation.
    Jet eval(double sigma) const;

    void save(const std::filesystem::path& dir) const;
    static CorrectionProfile load(const std::filesystem::path& dir,
                                  std::shared_ptr<const SolitonProfile> bryant);
};

/// Finite-difference solve of the correction problem on nodes uniform in log(sigma).
CorrectionProfile solve_correction(std::shared_ptr<const SolitonProfile> bryant, const FlowParams& p,
                                   double sigma_max, std::size_t nodes = 4001);

/// C'' from the linearized equation.
double correction_second(const Jet& B, double c, double c1, double sigma, const FlowParams& p);

/// Max interior residual of dF[B]{C} + sigma B' using 5-point differences of the nodal solution.
double correction_discrete_residual(const CorrectionProfile& c);
/// Same residual for phi = -sigma B' in the homogeneous equation on c's nodes.
double homogeneous_discrete_residual(const CorrectionProfile& c);

/// The three formal solutions.
enum class FormalKind { outer, parabolic, inner };

struct FormalSolution {
    FormalKind kind = FormalKind::outer;
    FlowParams params;
    SpaceTimeFunction fn;
};

struct Profiles {
    std::shared_ptr<const SolitonProfile> bryant;
    std::shared_ptr<const CorrectionProfile> correction;
};

FormalSolution formal_solution(FormalKind kind, const FlowParams& p, const Profiles& prof = {});

/// B(kappa sigma) + c_e kappa^{-2} C(kappa sigma) theta theta_t as an (r,t) jet.
SpaceTimeJet inner_family_jet(const Profiles& prof, const FlowParams& p, double kappa, double c_e,
                              double r, double t);
/// (d/dt - F_r) of the same family, using F[B] = 0 and dF[B]{C} = -X B' inside the profile table.
double inner_family_residual(const Profiles& prof, const FlowParams& p, double kappa, double c_e,
                             double r, double t);

} // namespace neckflow
