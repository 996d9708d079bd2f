#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace neckflow {

/// Failure categories; the CLI maps them onto exit codes.
enum class ErrorKind { usage, certification, numerical };

/// Exception carrying an ErrorKind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Dimension and exponent constants shared by every formula.
struct FlowParams {
    int n = 2;
    std::optional<int> k = 3;
    double b = 1.0 / 3.0;
    double a = 2.0;
    double kappa0 = 0.0;
};

/// Parameters from n and an odd integer k >= 3, so b = 1 - 2/k.
FlowParams derive_params(int n, int k);

/// Parameters from n and a real exponent b in (0,1).
FlowParams derive_params_b(int n, double b);

/// theta * d(theta)/dt = (b+1)/2 * t^b.
double theta_theta_t(double t, const FlowParams& p);

/// Node spacing style.
enum class Grading { uniform, geometric, custom };

/// Strictly increasing radial nodes, r_i >= 0, at least 8 of them.
class RadialGrid {
public:
    RadialGrid() = default;
    explicit RadialGrid(std::vector<double> nodes, Grading grading = Grading::custom);

    /// count equally spaced nodes on [r0, r1].
    static RadialGrid uniform(double r0, double r1, std::size_t count);
    /// Nodes r1*q^{-j} down to r_min; optionally prepends r = 0.
    static RadialGrid geometric(double r_min, double r1, double ratio, bool include_zero);

    const std::vector<double>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }
    Grading grading() const { return grading_; }

private:
    std::vector<double> nodes_;
    Grading grading_ = Grading::custom;
};

/// Finite-difference weights for derivatives 0..m at x0 from stencil xs.
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs, int m);

/// Samples of a radial profile on a RadialGrid.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(RadialGrid grid, std::vector<double> values);

    const RadialGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    /// First derivative: 3-point centered inside, 3-point one-sided at ends.
    std::vector<double> derivative() const;
    /// Second derivative: 3-point centered inside, 4-point one-sided at ends.
    std::vector<double> second_derivative() const;
    /// Piecewise-linear evaluation; throws outside the grid.
    double interpolate(double r) const;

    void write_csv(const std::filesystem::path& path) const;
    static GridFunction read_csv(const std::filesystem::path& path);

private:
    RadialGrid grid_;
    std::vector<double> values_;
};

/// K and L on the positive nodes; r = 0 is excluded rather than evaluated.
struct CurvatureField {
    GridFunction K;
    GridFunction L;
    double supnorm = 0.0;
    std::vector<double> excluded_nodes;
};

/// K = -v_r/(2r), L = (1-v)/r^2 via the grid stencils.
CurvatureField curvatures_from_v(const GridFunction& v, const FlowParams& p);

/// Result of integrating v^{-1/2}.
struct ArclengthResult {
    double length = 0.0;
    bool divergent = false;
    double endpoint_exponent = 0.0;
};

/// Arclength between r0 and r1, with a power-law rule on each interval.
ArclengthResult arclength(const GridFunction& v, double r0, double r1);

/// (r,t) together with its parabolic and inner coordinates.
struct CoordinatePoint {
    double r = 0.0;
    double t = 0.0;
    double rho = 0.0;
    double tau = 0.0;
    double sigma = 0.0;
    double theta = 0.0;
};

CoordinatePoint make_point(double r, double t, const FlowParams& p);
std::pair<double, double> to_parabolic(double r, double t);
std::pair<double, double> from_parabolic(double rho, double tau);
std::pair<double, double> to_inner(double r, double t, const FlowParams& p);
std::pair<double, double> from_inner(double sigma, double theta, const FlowParams& p);

/// Shortest round-trip formatting used for every artifact.
std::string fmt17(double x);

} // namespace neckflow
