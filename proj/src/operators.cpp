#include "neckflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace neckflow {

double apply_F(const Jet& j, double x, const FlowParams& p) {
    return j.v * j.d2 - 0.5 * j.d1 * j.d1 + ((p.n - 1 - j.v) / x) * j.d1 +
           (p.a / (x * x)) * j.v * j.om;
}

double apply_L(const Jet& j, double x, const FlowParams& p) {
    return (0.5 * p.a * x * j.d1 + p.a * j.v) / (x * x);
}

double apply_Q(const Jet& u, const Jet& w, double x, const FlowParams& p) {
    return 0.5 * (u.v * w.d2 + w.v * u.d2) - 0.5 * u.d1 * w.d1 -
           0.5 * (u.v * w.d1 + w.v * u.d1) / x - p.a * u.v * w.v / (x * x);
}

double fnorm(const Jet& j, double x) {
    return std::abs(j.v) + x * std::abs(j.d1) + x * x * std::abs(j.d2);
}

double opbnd_constant(const FlowParams& p) { return std::max(1.0, p.a) + 2.0; }

double apply_dF(const Jet& w0, const Jet& w1, double x, const FlowParams& p) {
    return apply_L(w1, x, p) + 2.0 * apply_Q(w0, w1, x, p);
}

double apply_Lhat_rho(const Jet& j, double rho, const FlowParams& p) {
    return (0.5 * p.a * rho * j.d1 + p.a * j.v) / (rho * rho) + 0.5 * rho * j.d1;
}

namespace {

template <class Op>
GridFunction pointwise(const GridFunction& v, Op op) {
    const auto& x = v.grid().nodes();
    const auto d1 = v.derivative();
    const auto d2 = v.second_derivative();
    std::vector<double> r, out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0) continue;
        r.push_back(x[i]);
        out.push_back(op(make_jet(v[i], d1[i], d2[i]), x[i]));
    }
    return GridFunction(RadialGrid(std::move(r)), std::move(out));
}

} // namespace

GridFunction apply_F(const GridFunction& v, const FlowParams& p) {
    return pointwise(v, [&](const Jet& j, double x) { return apply_F(j, x, p); });
}

GridFunction apply_L(const GridFunction& v, const FlowParams& p) {
    return pointwise(v, [&](const Jet& j, double x) { return apply_L(j, x, p); });
}

GridFunction apply_Q(const GridFunction& u, const GridFunction& w, const FlowParams& p) {
    if (u.grid().nodes() != w.grid().nodes())
        throw Error(ErrorKind::usage, "Q needs both arguments on the same grid");
    const auto& x = u.grid().nodes();
    const auto u1 = u.derivative(), u2 = u.second_derivative();
    const auto w1 = w.derivative(), w2 = w.second_derivative();
    std::vector<double> r, out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0) continue;
        r.push_back(x[i]);
        out.push_back(apply_Q(make_jet(u[i], u1[i], u2[i]), make_jet(w[i], w1[i], w2[i]), x[i], p));
    }
    return GridFunction(RadialGrid(std::move(r)), std::move(out));
}

GridFunction fnorm(const GridFunction& v) {
    return pointwise(v, [](const Jet& j, double x) { return fnorm(j, x); });
}

double theta_theta_t_of_theta(double theta, const FlowParams& p) {
    return 0.5 * (p.b + 1.0) * std::pow(theta, 2.0 * p.b / (p.b + 1.0));
}

double inner_residual(const InnerJet& j, double sigma, double theta, const FlowParams& p) {
    const double tt = theta_theta_t_of_theta(theta, p);
    const Jet s{j.v, j.om, j.v_sigma, j.v_sigmasigma};
    return tt * (theta * j.v_theta - sigma * j.v_sigma) - apply_F(s, sigma, p);
}

double parabolic_residual(const SpaceTimeJet& j, double r, const FlowParams& p) {
    return j.v_t - apply_F(Jet{j.v, j.om, j.v_r, j.v_rr}, r, p);
}

std::vector<ResidualSample> residual_parabolic_operator(
    const SpaceTimeFunction& f, const std::vector<std::pair<double, double>>& points,
    const FlowParams& p) {
    std::vector<ResidualSample> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto [r, t] = points[i];
        auto& s = out[i];
        s.r = r;
        s.t = t;
        s.valid = r > 0.0 && (!f.valid || f.valid(r, t));
        if (!s.valid) continue;
        const auto j = f.eval(r, t);
        s.residual = parabolic_residual(j, r, p);
        s.scale = std::abs(j.v_t) + std::abs(apply_F(Jet{j.v, j.om, j.v_r, j.v_rr}, r, p));
    }
    return out;
}

void write_residual_csv(const std::filesystem::path& path, const std::vector<ResidualSample>& s,
                        const std::string& region) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::usage, "cannot write " + path.string());
    os << "r,t,residual,region\n";
    for (const auto& x : s) {
        if (!x.valid) continue;
        os << fmt17(x.r) << ',' << fmt17(x.t) << ',' << fmt17(x.residual) << ',' << region << '\n';
    }
}

double derivative_crosscheck(const SpaceTimeFunction& f, double r, double t) {
    const auto j = f.eval(r, t);
    const double hr = 1e-4 * r;
    const double ht = 1e-4 * t;
    const auto rp = f.eval(r + hr, t), rm = f.eval(r - hr, t);
    const auto tp = f.eval(r, t + ht), tm = f.eval(r, t - ht);
    const double vr = (rp.v - rm.v) / (2 * hr);
    const double vrr = (rp.v_r - rm.v_r) / (2 * hr);
    const double vt = (tp.v - tm.v) / (2 * ht);
    auto rel = [](double exact, double approx, double scale) {
        return std::abs(exact - approx) / std::max(std::abs(exact), scale);
    };
    const double scale = 1e-12 + std::abs(j.v);
    return std::max({rel(j.v_r, vr, scale / r), rel(j.v_rr, vrr, scale / (r * r)),
                     rel(j.v_t, vt, scale / t)});
}

} // namespace neckflow
