#include "neckflow/core_model.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>

namespace neckflow {

FlowParams derive_params(int n, int k) {
    if (n < 2) throw Error(ErrorKind::usage, "n must be >= 2");
    if (k % 2 == 0) throw Error(ErrorKind::usage, "k must be odd");
    if (k < 3) throw Error(ErrorKind::usage, "k must be >= 3");
    FlowParams p = derive_params_b(n, 1.0 - 2.0 / k);
    p.k = k;
    return p;
}

FlowParams derive_params_b(int n, double b) {
    if (n < 2) throw Error(ErrorKind::usage, "n must be >= 2");
    if (!(b > 0.0 && b < 1.0)) throw Error(ErrorKind::usage, "b must lie in (0,1)");
    FlowParams p;
    p.n = n;
    p.k.reset();
    p.b = b;
    p.a = 2.0 * (n - 1);
    p.kappa0 = std::pow(p.a, -(b + 1.0) / 2.0);
    return p;
}

double theta_theta_t(double t, const FlowParams& p) {
    return 0.5 * (p.b + 1.0) * std::pow(t, p.b);
}

RadialGrid::RadialGrid(std::vector<double> nodes, Grading grading)
    : nodes_(std::move(nodes)), grading_(grading) {
    if (nodes_.size() < 8) throw Error(ErrorKind::usage, "radial grid needs at least 8 nodes");
    if (nodes_.front() < 0.0) throw Error(ErrorKind::usage, "radial grid nodes must be >= 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1]))
            throw Error(ErrorKind::usage, "radial grid must be strictly increasing");
    }
}

RadialGrid RadialGrid::uniform(double r0, double r1, std::size_t count) {
    std::vector<double> x(count);
    for (std::size_t i = 0; i < count; ++i)
        x[i] = r0 + (r1 - r0) * static_cast<double>(i) / static_cast<double>(count - 1);
    x.back() = r1;
    return RadialGrid(std::move(x), Grading::uniform);
}

RadialGrid RadialGrid::geometric(double r_min, double r1, double ratio, bool include_zero) {
    if (!(ratio > 1.0) || !(r_min > 0.0) || !(r1 > r_min))
        throw Error(ErrorKind::usage, "geometric grid needs ratio > 1 and 0 < r_min < r1");
    std::vector<double> x;
    const auto m = static_cast<int>(std::ceil(std::log(r1 / r_min) / std::log(ratio)));
    const double q = std::pow(r1 / r_min, 1.0 / m);
    for (int j = 0; j <= m; ++j) x.push_back(r_min * std::pow(q, j));
    x.back() = r1;
    if (include_zero) x.insert(x.begin(), 0.0);
    return RadialGrid(std::move(x), Grading::geometric);
}

// Fornberg's recursion.
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs, int m) {
    const int npts = static_cast<int>(xs.size());
    std::vector<std::vector<double>> c(m + 1, std::vector<double>(npts, 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < npts; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

GridFunction::GridFunction(RadialGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw Error(ErrorKind::usage, "grid function length differs from grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorKind::numerical, "non-finite grid function value");
}

namespace {

double stencil_apply(const std::vector<double>& x, const std::vector<double>& f, std::size_t i,
                     std::size_t lo, std::size_t count, int order) {
    std::vector<double> xs(x.begin() + lo, x.begin() + lo + count);
    const auto w = fd_weights(x[i], xs, order);
    double s = 0.0;
    for (std::size_t j = 0; j < count; ++j) s += w[order][j] * f[lo + j];
    return s;
}

std::vector<double> differentiate(const std::vector<double>& x, const std::vector<double>& f,
                                  int order) {
    const std::size_t n = x.size();
    const std::size_t edge = order == 1 ? 3 : 4;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            d[i] = stencil_apply(x, f, i, 0, edge, order);
        } else if (i + 1 == n) {
            d[i] = stencil_apply(x, f, i, n - edge, edge, order);
        } else {
            d[i] = stencil_apply(x, f, i, i - 1, 3, order);
        }
    }
    return d;
}

} // namespace

std::vector<double> GridFunction::derivative() const {
    return differentiate(grid_.nodes(), values_, 1);
}

std::vector<double> GridFunction::second_derivative() const {
    return differentiate(grid_.nodes(), values_, 2);
}

double GridFunction::interpolate(double r) const {
    const auto& x = grid_.nodes();
    if (r < x.front() || r > x.back())
        throw Error(ErrorKind::usage, "interpolation outside grid at r=" + fmt17(r));
    auto it = std::upper_bound(x.begin(), x.end(), r);
    std::size_t j = it == x.end() ? x.size() - 1 : static_cast<std::size_t>(it - x.begin());
    if (j == 0) j = 1;
    const double w = (r - x[j - 1]) / (x[j] - x[j - 1]);
    return (1.0 - w) * values_[j - 1] + w * values_[j];
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void GridFunction::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::usage, "cannot write " + path.string());
    os << "r,value\n";
    for (std::size_t i = 0; i < size(); ++i) os << fmt17(grid_[i]) << ',' << fmt17(values_[i]) << '\n';
}

GridFunction GridFunction::read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::usage, "cannot read " + path.string());
    std::string line;
    std::getline(is, line);
    if (line != "r,value") throw Error(ErrorKind::usage, "bad grid function header in " + path.string());
    std::vector<double> r, v;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorKind::usage, "bad csv row in " + path.string());
        r.push_back(std::stod(line.substr(0, comma)));
        v.push_back(std::stod(line.substr(comma + 1)));
    }
    return GridFunction(RadialGrid(std::move(r)), std::move(v));
}

CurvatureField curvatures_from_v(const GridFunction& v, const FlowParams&) {
    const auto& x = v.grid().nodes();
    const auto dv = v.derivative();
    std::vector<double> r, K, L;
    CurvatureField out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0) {
            out.excluded_nodes.push_back(x[i]);
            continue;
        }
        r.push_back(x[i]);
        K.push_back(-dv[i] / (2.0 * x[i]));
        L.push_back((1.0 - v[i]) / (x[i] * x[i]));
        out.supnorm = std::max(out.supnorm, std::abs(K.back()) + std::abs(L.back()));
    }
    RadialGrid g(r);
    out.K = GridFunction(g, std::move(K));
    out.L = GridFunction(g, std::move(L));
    return out;
}

namespace {

// integral of (c r^p)^{-1/2} over [ra, rb] with c r^p through both endpoints
double power_segment(double ra, double va, double rb, double vb) {
    if (ra <= 0.0) return 0.5 * (rb - ra) * (1.0 / std::sqrt(va) + 1.0 / std::sqrt(vb));
    const double p = std::log(vb / va) / std::log(rb / ra);
    const double e = 1.0 - 0.5 * p;
    const double ca = 1.0 / std::sqrt(va);
    if (std::abs(e) < 1e-12) return ca * ra * std::log(rb / ra);
    return ca * ra * (std::pow(rb / ra, e) - 1.0) / e;
}

double power_value(double ra, double va, double rb, double vb, double r) {
    if (ra <= 0.0) return va + (vb - va) * (r - ra) / (rb - ra);
    const double p = std::log(vb / va) / std::log(rb / ra);
    return va * std::pow(r / ra, p);
}

} // namespace

ArclengthResult arclength(const GridFunction& v, double r0, double r1) {
    const auto& x = v.grid().nodes();
    const auto& f = v.values();
    if (!(r0 < r1) || r0 < x.front() || r1 > x.back())
        throw Error(ErrorKind::usage, "arclength interval outside grid");
    ArclengthResult res;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double lo = std::max(r0, x[i]);
        const double hi = std::min(r1, x[i + 1]);
        if (!(lo < hi)) continue;
        if (x[i] <= 0.0 && f[i] <= 0.0) {
            // v ~ c r^{2 beta} near the pole, exponent from the next two nodes
            if (x.size() < i + 3 || f[i + 1] <= 0.0 || f[i + 2] <= 0.0)
                throw Error(ErrorKind::numerical, "cannot resolve endpoint exponent");
            const double p = std::log(f[i + 2] / f[i + 1]) / std::log(x[i + 2] / x[i + 1]);
            res.endpoint_exponent = 0.5 * p;
            if (res.endpoint_exponent >= 1.0 - 1e-3) {
                res.divergent = true;
                res.length = std::numeric_limits<double>::infinity();
                return res;
            }
            const double c = f[i + 1] / std::pow(x[i + 1], p);
            const double e = 1.0 - 0.5 * p;
            res.length += (std::pow(hi, e) - std::pow(lo, e)) / (std::sqrt(c) * e);
            continue;
        }
        if (f[i] <= 0.0 || f[i + 1] <= 0.0)
            throw Error(ErrorKind::numerical, "v must be positive inside the arclength interval");
        const double va = power_value(x[i], f[i], x[i + 1], f[i + 1], lo);
        const double vb = power_value(x[i], f[i], x[i + 1], f[i + 1], hi);
        res.length += power_segment(lo, va, hi, vb);
    }
    return res;
}

CoordinatePoint make_point(double r, double t, const FlowParams& p) {
    if (!(t > 0.0)) throw Error(ErrorKind::usage, "coordinate maps need t > 0");
    CoordinatePoint c;
    c.r = r;
    c.t = t;
    c.rho = r / std::sqrt(t);
    c.tau = std::log(t);
    c.theta = std::pow(t, 0.5 * (p.b + 1.0));
    c.sigma = r / c.theta;
    return c;
}

std::pair<double, double> to_parabolic(double r, double t) {
    if (!(t > 0.0)) throw Error(ErrorKind::usage, "coordinate maps need t > 0");
    return {r / std::sqrt(t), std::log(t)};
}

std::pair<double, double> from_parabolic(double rho, double tau) {
    return {rho * std::exp(0.5 * tau), std::exp(tau)};
}

std::pair<double, double> to_inner(double r, double t, const FlowParams& p) {
    if (!(t > 0.0)) throw Error(ErrorKind::usage, "coordinate maps need t > 0");
    const double theta = std::pow(t, 0.5 * (p.b + 1.0));
    return {r / theta, theta};
}

std::pair<double, double> from_inner(double sigma, double theta, const FlowParams& p) {
    if (!(theta > 0.0)) throw Error(ErrorKind::usage, "coordinate maps need theta > 0");
    return {sigma * theta, std::pow(theta, 2.0 / (p.b + 1.0))};
}

} // namespace neckflow
