#include "neckflow/profiles.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <json.hpp>

namespace neckflow {

namespace {

using State = std::array<double, 2>;

std::vector<std::vector<double>> read_columns(const std::filesystem::path& path,
                                              const std::string& header, std::size_t ncol) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::usage, "cannot read " + path.string());
    std::string line;
    std::getline(is, line);
    if (line != header) throw Error(ErrorKind::usage, "unexpected header in " + path.string());
    std::vector<std::vector<double>> cols(ncol);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t c = 0; c < ncol; ++c) {
            if (!std::getline(ss, cell, ','))
                throw Error(ErrorKind::usage, "short row in " + path.string());
            cols[c].push_back(std::stod(cell));
        }
    }
    return cols;
}

nlohmann::json params_json(const FlowParams& p) {
    nlohmann::json j;
    j["n"] = p.n;
    if (p.k) j["k"] = *p.k;
    j["b"] = p.b;
    j["a"] = p.a;
    j["kappa0"] = p.kappa0;
    return j;
}

FlowParams params_from_json(const nlohmann::json& j) {
    if (j.contains("k")) return derive_params(j["n"].get<int>(), j["k"].get<int>());
    return derive_params_b(j["n"].get<int>(), j["b"].get<double>());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::usage, "cannot read " + path.string());
    return nlohmann::json::parse(is);
}

} // namespace

void HermiteTable::eval(double s, double& f_out, double& d1_out, double& d2_out) const {
    const std::size_t last = sigma.size() - 2;
    const double pos = (std::log(s) - log_lo) / dlog;
    std::size_t i = pos <= 0.0 ? 0 : static_cast<std::size_t>(pos);
    if (i > last) i = last;
    if (s < sigma[i] && i > 0) --i;
    if (s > sigma[i + 1] && i < last) ++i;
    const double h = sigma[i + 1] - sigma[i];
    const double t = (s - sigma[i]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    // basis polynomials with their first and second t-derivatives
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h0p = -30 * t2 + 60 * t3 - 30 * t4;
    const double h0pp = -60 * t + 180 * t2 - 120 * t3;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h1p = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double h1pp = -36 * t + 96 * t2 - 60 * t3;
    const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    const double h2p = t - 4.5 * t2 + 6 * t3 - 2.5 * t4;
    const double h2pp = 1 - 9 * t + 18 * t2 - 10 * t3;
    const double g1 = -4 * t3 + 7 * t4 - 3 * t5;
    const double g1p = -12 * t2 + 28 * t3 - 15 * t4;
    const double g1pp = -24 * t + 84 * t2 - 60 * t3;
    const double g2 = 0.5 * t3 - t4 + 0.5 * t5;
    const double g2p = 1.5 * t2 - 4 * t3 + 2.5 * t4;
    const double g2pp = 3 * t - 12 * t2 + 10 * t3;
    const double f0 = f[i], f1 = f[i + 1];
    const double a0 = h * d1[i], a1 = h * d1[i + 1];
    const double b0 = h * h * d2[i], b1 = h * h * d2[i + 1];
    f_out = f0 * h0 + f1 * (1 - h0) + a0 * h1 + a1 * g1 + b0 * h2 + b1 * g2;
    d1_out = ((f0 - f1) * h0p + a0 * h1p + a1 * g1p + b0 * h2p + b1 * g2p) / h;
    d2_out = ((f0 - f1) * h0pp + a0 * h1pp + a1 * g1pp + b0 * h2pp + b1 * g2pp) / (h * h);
}

double bryant_second(double v, double om, double d1, double sigma, const FlowParams& p) {
    return (0.5 * d1 * d1 - ((p.n - 1 - v) / sigma) * d1 - (p.a / (sigma * sigma)) * v * om) / v;
}

double bryant_b4(double b2, const FlowParams& p) {
    auto balance = [&](double b4) {
        auto g = [&](double s) {
            const double s2 = s * s;
            const double om = -b2 * s2 - b4 * s2 * s2;
            const Jet j{1.0 - om, om, 2 * b2 * s + 4 * b4 * s2 * s, 2 * b2 + 12 * b4 * s2};
            return apply_F(j, s, p) / s2;
        };
        const double s1 = 1e-2;
        return (4.0 * g(s1) - g(2 * s1)) / 3.0;
    };
    const double c0 = balance(0.0);
    const double c1 = balance(1.0);
    return -c0 / (c1 - c0);
}

namespace {

struct BryantRaw {
    std::vector<double> sigma, y, yp;
};

BryantRaw integrate_bryant(const FlowParams& p, double s0, double s_end, double tol,
                           std::size_t per_decade) {
    namespace odeint = boost::numeric::odeint;
    const double b2 = -1.0;
    const double b4 = bryant_b4(b2, p);
    const double nm2 = p.n - 2.0;
    auto rhs = [&](const State& x, State& dx, double s) {
        const double y = x[0], yp = x[1];
        const double w = 1.0 - y;
        if (!(w > 0.0) || !std::isfinite(y) || !std::isfinite(yp))
            throw Error(ErrorKind::numerical, "Bryant integration failed at sigma=" + fmt17(s));
        dx[0] = yp;
        dx[1] = (-0.5 * yp * yp - ((nm2 + y) / s) * yp + (p.a / (s * s)) * w * y) / w;
    };
    const auto count = static_cast<std::size_t>(std::ceil(std::log10(s_end / s0) * per_decade));
    std::vector<double> times(count + 1);
    for (std::size_t i = 0; i <= count; ++i)
        times[i] = s0 * std::exp(std::log(s_end / s0) * static_cast<double>(i) / count);
    times.back() = s_end;
    State x{-b2 * s0 * s0 - b4 * std::pow(s0, 4), -2 * b2 * s0 - 4 * b4 * std::pow(s0, 3)};
    BryantRaw out;
    auto stepper = odeint::make_dense_output(tol * 1e-4, tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3 * s0,
                            [&](const State& st, double s) {
                                if (!(st[0] < 1.0) || !std::isfinite(st[1]))
                                    throw Error(ErrorKind::numerical,
                                                "Bryant integration failed at sigma=" + fmt17(s));
                                out.sigma.push_back(s);
                                out.y.push_back(st[0]);
                                out.yp.push_back(st[1]);
                            });
    return out;
}

// w = c/s^2 + beta c^2/s^4 solved for c
double tail_constant(double w, double s, const FlowParams& p) {
    const double beta = (6.0 - p.a) / p.a;
    double c = s * s * w;
    for (int it = 0; it < 50; ++it) c = s * s * w / (1.0 + beta * c / (s * s));
    return c;
}

SolitonProfile build_bryant(const FlowParams& p, double sigma_max, double tol) {
    const double s0 = 1e-3;
    const std::size_t per_decade = 400;
    auto raw = integrate_bryant(p, s0, sigma_max, tol, per_decade);
    const double c = tail_constant(1.0 - raw.y.back(), sigma_max, p);
    // the table in rescaled units must reach sigma_max
    if (std::sqrt(c) > 1.0) raw = integrate_bryant(p, s0, sigma_max * std::sqrt(c) * 1.01, tol, per_decade);
    SolitonProfile B;
    B.params = p;
    B.ode_tol = tol;
    B.c_inf = c;
    const double sc = std::sqrt(c);
    const double b2_seed = -1.0;
    B.b2 = b2_seed * c;
    B.b4 = bryant_b4(b2_seed, p) * c * c;
    B.sigma0 = s0 / sc;
    auto& T = B.table;
    const std::size_t m = raw.sigma.size();
    T.sigma.resize(m);
    T.f.resize(m);
    T.d1.resize(m);
    T.d2.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        T.sigma[i] = raw.sigma[i] / sc;
        T.f[i] = raw.y[i];
        T.d1[i] = raw.yp[i] * sc;
    }
    T.log_lo = std::log(T.sigma.front());
    T.dlog = (std::log(T.sigma.back()) - T.log_lo) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i)
        T.d2[i] = -bryant_second(1.0 - T.f[i], T.f[i], -T.d1[i], T.sigma[i], p);
    B.sigma_max = T.hi();
    const double sm = sigma_max;
    B.tail_coefficient = sm * sm * B.eval(sm).v;
    return B;
}

} // namespace

SolitonProfile solve_bryant(const FlowParams& p, double sigma_max, double ode_tol) {
    if (sigma_max < 30.0) throw Error(ErrorKind::usage, "sigma_max must be >= 30");
    if (ode_tol > 1e-8) throw Error(ErrorKind::usage, "ode_tol must be <= 1e-8");
    SolitonProfile B = build_bryant(p, sigma_max, ode_tol);
    // tail settling: the same estimate taken at sigma_max/2 in the unscaled variable
    const double half = 0.5 * sigma_max / std::sqrt(B.c_inf);
    const double c_half = B.c_inf * tail_constant(B.eval_table(half).v, half, p);
    if (std::abs(c_half - B.c_inf) > 1e-2 * B.c_inf)
        throw Error(ErrorKind::numerical, "Bryant tail not converged at sigma_max=" + fmt17(sigma_max));
    const SolitonProfile fine = build_bryant(p, sigma_max, ode_tol * 0.1);
    B.b2_error = std::abs(fine.b2 - B.b2) + std::abs(c_half - B.c_inf) * std::abs(B.b2) / B.c_inf;
    return B;
}

Jet SolitonProfile::eval_interp(double sigma) const {
    if (sigma <= table.lo()) {
        const double s2 = sigma * sigma;
        const double om = -b2 * s2 - b4 * s2 * s2;
        return Jet{1.0 - om, om, 2 * b2 * sigma + 4 * b4 * s2 * sigma, 2 * b2 + 12 * b4 * s2};
    }
    if (sigma >= table.hi()) {
        const double beta = (6.0 - params.a) / params.a;
        const double x2 = 1.0 / (sigma * sigma), x4 = x2 * x2;
        const double v = x2 + beta * x4;
        return Jet{v, 1.0 - v, (-2.0 * x2 - 4.0 * beta * x4) / sigma,
                   (6.0 * x2 + 20.0 * beta * x4) * x2};
    }
    return eval_table(sigma);
}

Jet SolitonProfile::eval_table(double sigma) const {
    double y, yp, ypp;
    table.eval(sigma, y, yp, ypp);
    return Jet{1.0 - y, y, -yp, -ypp};
}

Jet SolitonProfile::eval(double sigma) const {
    Jet j = eval_interp(sigma);
    if (sigma < table.hi() && sigma > 0.0) j.d2 = bryant_second(j.v, j.om, j.d1, sigma, params);
    return j;
}

double SolitonProfile::table_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < table.sigma.size(); ++i) {
        const double s = std::sqrt(table.sigma[i] * table.sigma[i + 1]);
        worst = std::max(worst, std::abs(apply_F(eval_interp(s), s, params)));
    }
    return worst;
}

void SolitonProfile::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "bryant.csv");
    os << "sigma,B,Bprime,deficit\n";
    for (std::size_t i = 0; i < table.sigma.size(); ++i)
        os << fmt17(table.sigma[i]) << ',' << fmt17(1.0 - table.f[i]) << ',' << fmt17(-table.d1[i])
           << ',' << fmt17(table.f[i]) << '\n';
    nlohmann::json j;
    j["params"] = params_json(params);
    j["sigma0"] = sigma0;
    j["sigma_max"] = sigma_max;
    j["ode_tol"] = ode_tol;
    j["b2"] = b2;
    j["b2_error"] = b2_error;
    j["b4"] = b4;
    j["c_inf"] = c_inf;
    j["tail_coefficient"] = tail_coefficient;
    j["log_lo"] = table.log_lo;
    j["dlog"] = table.dlog;
    std::ofstream js(dir / "bryant.json");
    js << j.dump(2) << '\n';
}

SolitonProfile SolitonProfile::load(const std::filesystem::path& dir) {
    const auto j = read_json(dir / "bryant.json");
    SolitonProfile B;
    B.params = params_from_json(j["params"]);
    B.sigma0 = j["sigma0"];
    B.sigma_max = j["sigma_max"];
    B.ode_tol = j["ode_tol"];
    B.b2 = j["b2"];
    B.b2_error = j["b2_error"];
    B.b4 = j["b4"];
    B.c_inf = j["c_inf"];
    B.tail_coefficient = j["tail_coefficient"];
    B.table.log_lo = j["log_lo"];
    B.table.dlog = j["dlog"];
    auto cols = read_columns(dir / "bryant.csv", "sigma,B,Bprime,deficit", 4);
    B.table.sigma = cols[0];
    B.table.f = cols[3];
    B.table.d1.resize(cols[0].size());
    B.table.d2.resize(cols[0].size());
    for (std::size_t i = 0; i < cols[0].size(); ++i) {
        B.table.d1[i] = -cols[2][i];
        B.table.d2[i] = -bryant_second(1.0 - B.table.f[i], B.table.f[i], cols[2][i],
                                       B.table.sigma[i], B.params);
    }
    return B;
}

double correction_second(const Jet& B, double c, double c1, double sigma, const FlowParams& p) {
    const double s = sigma;
    const double k1 = 0.5 * p.a / s - B.d1 - B.v / s;
    const double k0 = p.a / (s * s) + B.d2 - B.d1 / s - 2.0 * p.a * B.v / (s * s);
    return (-s * B.d1 - k1 * c1 - k0 * c) / B.v;
}

namespace {

struct LogCoefficients {
    double A2, A1, A0, f;
};

// dF[B]{w} = -sigma B' multiplied by sigma^2 and written in u = log sigma
LogCoefficients log_coefficients(const SolitonProfile& B, double s, const FlowParams& p) {
    const Jet j = B.eval(s);
    return {j.v, 0.5 * p.a - s * j.d1 - 2.0 * j.v,
            p.a + s * s * j.d2 - s * j.d1 - 2.0 * p.a * j.v, -s * s * s * j.d1};
}

double five_point_residual(const std::vector<double>& w, const std::vector<double>& sigma, double h,
                           const SolitonProfile& B, const FlowParams& p, bool homogeneous) {
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < w.size(); ++i) {
        const double wu = (-w[i + 2] + 8 * w[i + 1] - 8 * w[i - 1] + w[i - 2]) / (12 * h);
        const double wuu =
            (-w[i + 2] + 16 * w[i + 1] - 30 * w[i] + 16 * w[i - 1] - w[i - 2]) / (12 * h * h);
        const auto c = log_coefficients(B, sigma[i], p);
        const double rhs = homogeneous ? 0.0 : c.f;
        worst = std::max(worst, std::abs(c.A2 * wuu + c.A1 * wu + c.A0 * w[i] - rhs));
    }
    return worst;
}

} // namespace

CorrectionProfile solve_correction(std::shared_ptr<const SolitonProfile> bryant, const FlowParams& p,
                                   double sigma_max, std::size_t nodes) {
    const SolitonProfile& B = *bryant;
    if (sigma_max > B.sigma_max * (1 + 1e-12))
        throw Error(ErrorKind::usage, "Bryant table does not reach the correction sigma_max");
    if (nodes < 16) throw Error(ErrorKind::usage, "correction grid too coarse");
    const double s0 = 1e-3;
    const double u0 = std::log(s0), u1 = std::log(sigma_max);
    const std::size_t N = nodes - 1;
    const double h = (u1 - u0) / static_cast<double>(N);
    std::vector<double> sigma(nodes);
    for (std::size_t i = 0; i <= N; ++i) sigma[i] = std::exp(u0 + h * static_cast<double>(i));
    sigma.back() = sigma_max;

    // tail 2/a plus its logarithmic sigma^-2 term
    const double right = 2.0 / p.a + (16.0 / (p.a * p.a)) * std::log(sigma_max) / (sigma_max * sigma_max);

    std::vector<double> lo(nodes, 0.0), di(nodes, 0.0), up(nodes, 0.0), rhs(nodes, 0.0);
    for (std::size_t i = 1; i < N; ++i) {
        const auto c = log_coefficients(B, sigma[i], p);
        lo[i] = c.A2 / (h * h) - c.A1 / (2 * h);
        di[i] = -2 * c.A2 / (h * h) + c.A0;
        up[i] = c.A2 / (h * h) + c.A1 / (2 * h);
        rhs[i] = c.f;
    }
    // w_u = 2w at the left end, second-order one-sided; the w2 term folded in via row 1
    {
        const double c00 = -3.0 / (2 * h) - 2.0, c01 = 4.0 / (2 * h), c02 = -1.0 / (2 * h);
        const double q = c02 / up[1];
        di[0] = c00 - q * lo[1];
        up[0] = c01 - q * di[1];
        rhs[0] = -q * rhs[1];
    }
    di[N] = 1.0;
    rhs[N] = right;

    // Thomas sweep
    std::vector<double> cp(nodes), dp(nodes), w(nodes);
    cp[0] = up[0] / di[0];
    dp[0] = rhs[0] / di[0];
    for (std::size_t i = 1; i <= N; ++i) {
        const double m = di[i] - lo[i] * cp[i - 1];
        if (std::abs(m) < 1e-300 || !std::isfinite(m))
            throw Error(ErrorKind::numerical, "singular correction system; grid too coarse");
        cp[i] = up[i] / m;
        dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / m;
    }
    w[N] = dp[N];
    for (std::size_t i = N; i-- > 0;) w[i] = dp[i] - cp[i] * w[i + 1];

    for (std::size_t i = 0; i <= N; ++i) {
        if (!(w[i] > 0.0))
            throw Error(ErrorKind::numerical, "correction profile negative at sigma=" + fmt17(sigma[i]));
    }

    CorrectionProfile C;
    C.bryant = bryant;
    C.sigma0 = s0;
    C.sigma_max = sigma_max;
    C.nodes = nodes;
    C.M = w[0] / (s0 * s0);
    C.tail_value = 2.0 / p.a;
    C.boundary_value = right;
    C.lambda_note = "homogeneous component lambda*phi, phi=-sigma*B', fixed by the boundary-value selection";
    auto& T = C.table;
    T.sigma = sigma;
    T.f = w;
    T.d1.resize(nodes);
    T.d2.resize(nodes);
    T.log_lo = u0;
    T.dlog = h;
    std::vector<double> ulog(nodes);
    for (std::size_t i = 0; i <= N; ++i) ulog[i] = u0 + h * static_cast<double>(i);
    for (std::size_t i = 0; i <= N; ++i) {
        const std::size_t lo5 = i < 2 ? 0 : (i + 2 > N ? N - 4 : i - 2);
        std::vector<double> xs(ulog.begin() + lo5, ulog.begin() + lo5 + 5);
        const auto wt = fd_weights(ulog[i], xs, 1);
        double wu = 0.0;
        for (std::size_t k = 0; k < 5; ++k) wu += wt[1][k] * w[lo5 + k];
        T.d1[i] = wu / sigma[i];
        T.d2[i] = correction_second(B.eval(sigma[i]), w[i], T.d1[i], sigma[i], p);
    }
    return C;
}

Jet CorrectionProfile::eval(double sigma) const {
    const FlowParams& p = bryant->params;
    if (sigma >= table.hi()) {
        const double k = 16.0 / (p.a * p.a);
        const double x2 = 1.0 / (sigma * sigma), L = std::log(sigma);
        const double c = tail_value + k * L * x2;
        return Jet{c, 1.0 - c, k * (1.0 - 2.0 * L) * x2 / sigma, k * (6.0 * L - 5.0) * x2 * x2};
    }
    double c, c1, c2;
    if (sigma <= table.lo()) {
        c = M * sigma * sigma;
        c1 = 2.0 * M * sigma;
    } else {
        table.eval(sigma, c, c1, c2);
    }
    if (sigma <= 0.0) return Jet{0.0, 1.0, 0.0, 2.0 * M};
    c2 = correction_second(bryant->eval(sigma), c, c1, sigma, p);
    return Jet{c, 1.0 - c, c1, c2};
}

double correction_discrete_residual(const CorrectionProfile& c) {
    return five_point_residual(c.table.f, c.table.sigma, c.table.dlog, *c.bryant, c.bryant->params,
                               false);
}

double homogeneous_discrete_residual(const CorrectionProfile& c) {
    std::vector<double> phi(c.table.sigma.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = -c.table.sigma[i] * c.bryant->eval(c.table.sigma[i]).d1;
    return five_point_residual(phi, c.table.sigma, c.table.dlog, *c.bryant, c.bryant->params, true);
}

void CorrectionProfile::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "correction.csv");
    os << "sigma,C,Cprime\n";
    for (std::size_t i = 0; i < table.sigma.size(); ++i)
        os << fmt17(table.sigma[i]) << ',' << fmt17(table.f[i]) << ',' << fmt17(table.d1[i]) << '\n';
    nlohmann::json j;
    j["params"] = params_json(bryant->params);
    j["sigma0"] = sigma0;
    j["sigma_max"] = sigma_max;
    j["nodes"] = nodes;
    j["M"] = M;
    j["tail_value"] = tail_value;
    j["boundary_value"] = boundary_value;
    j["lambda_note"] = lambda_note;
    j["log_lo"] = table.log_lo;
    j["dlog"] = table.dlog;
    std::ofstream js(dir / "correction.json");
    js << j.dump(2) << '\n';
}

CorrectionProfile CorrectionProfile::load(const std::filesystem::path& dir,
                                          std::shared_ptr<const SolitonProfile> bryant) {
    const auto j = read_json(dir / "correction.json");
    CorrectionProfile C;
    C.bryant = std::move(bryant);
    C.sigma0 = j["sigma0"];
    C.sigma_max = j["sigma_max"];
    C.nodes = j["nodes"];
    C.M = j["M"];
    C.tail_value = j["tail_value"];
    C.boundary_value = j["boundary_value"];
    C.lambda_note = j["lambda_note"];
    C.table.log_lo = j["log_lo"];
    C.table.dlog = j["dlog"];
    auto cols = read_columns(dir / "correction.csv", "sigma,C,Cprime", 3);
    C.table.sigma = cols[0];
    C.table.f = cols[1];
    C.table.d1 = cols[2];
    C.table.d2.resize(cols[0].size());
    for (std::size_t i = 0; i < cols[0].size(); ++i)
        C.table.d2[i] = correction_second(C.bryant->eval(cols[0][i]), cols[1][i], cols[2][i],
                                          cols[0][i], C.bryant->params);
    return C;
}

SpaceTimeJet inner_family_jet(const Profiles& prof, const FlowParams& p, double kappa, double c_e,
                              double r, double t) {
    const double theta = std::pow(t, 0.5 * (1.0 + p.b));
    const double sigma = r / theta;
    const double X = kappa * sigma;
    const double g = 0.5 * (1.0 + p.b) * std::pow(t, p.b);
    const double gt = p.b * g / t;
    const double sigma_t = -0.5 * (1.0 + p.b) * sigma / t;
    const Jet B = prof.bryant->eval(X);
    const Jet C = prof.correction->eval(X);
    const double ck = c_e / (kappa * kappa);
    SpaceTimeJet j;
    j.v = B.v + ck * C.v * g;
    j.om = B.om - ck * C.v * g;
    j.v_r = (kappa * B.d1 + ck * kappa * C.d1 * g) / theta;
    j.v_rr = (kappa * kappa * B.d2 + c_e * C.d2 * g) / (theta * theta);
    j.v_t = kappa * B.d1 * sigma_t + ck * (C.d1 * kappa * sigma_t * g + C.v * gt);
    return j;
}

double inner_family_residual(const Profiles& prof, const FlowParams& p, double kappa, double c_e,
                             double r, double t) {
    const double theta = std::pow(t, 0.5 * (1.0 + p.b));
    const double X = kappa * r / theta;
    const double g = 0.5 * (1.0 + p.b) * std::pow(t, p.b);
    const double e = c_e / (kappa * kappa) * g;
    const double e_t = p.b * e / t;
    const Jet B = prof.bryant->eval(X);
    const Jet C = prof.correction->eval(X);
    const double h = 0.5 * (1.0 + p.b) / t;
    const double scale = kappa * kappa / (theta * theta);
    // F_X[B] vanishes identically where B'' comes from the profile equation
    const double FB = X < prof.bryant->table.hi() ? 0.0 : apply_F(B, X, p);
    const double QC = apply_Q(C, C, X, p);
    return (c_e - 1.0) * h * X * B.d1 - h * X * e * C.d1 + e_t * C.v - scale * (FB + e * e * QC);
}

FormalSolution formal_solution(FormalKind kind, const FlowParams& p, const Profiles& prof) {
    FormalSolution f;
    f.kind = kind;
    f.params = p;
    const double a = p.a, b = p.b;
    switch (kind) {
    case FormalKind::outer:
        f.fn.name = "outer";
        f.fn.eval = [a, b](double r, double t) {
            const double q = a * (1 + b);
            SpaceTimeJet j;
            j.v = std::pow(r, 2 * b) + q * t * std::pow(r, 2 * b - 2);
            j.om = 1.0 - j.v;
            j.v_r = 2 * b * std::pow(r, 2 * b - 1) + q * (2 * b - 2) * t * std::pow(r, 2 * b - 3);
            j.v_rr = 2 * b * (2 * b - 1) * std::pow(r, 2 * b - 2) +
                     q * (2 * b - 2) * (2 * b - 3) * t * std::pow(r, 2 * b - 4);
            j.v_t = q * std::pow(r, 2 * b - 2);
            return j;
        };
        f.fn.valid = [](double r, double t) { return r > 0.0 && t >= 0.0; };
        break;
    case FormalKind::parabolic:
        f.fn.name = "parabolic";
        f.fn.eval = [a, b](double r, double t) {
            if (!(t > 0.0)) throw Error(ErrorKind::usage, "parabolic formal solution needs t > 0");
            const double P = r * r + a * t;
            const double Pb = std::pow(P, b);
            const double r2 = r * r;
            SpaceTimeJet j;
            j.v = Pb * P / r2;
            j.om = 1.0 - j.v;
            j.v_r = 2 * (1 + b) * Pb / r - 2 * Pb * P / (r2 * r);
            j.v_rr = 4 * b * (1 + b) * Pb / P - 6 * (1 + b) * Pb / r2 + 6 * Pb * P / (r2 * r2);
            j.v_t = (1 + b) * a * Pb / r2;
            return j;
        };
        f.fn.valid = [](double r, double t) { return r > 0.0 && t > 0.0; };
        break;
    case FormalKind::inner:
        if (!prof.bryant || !prof.correction)
            throw Error(ErrorKind::usage, "inner formal solution needs both profiles");
        f.fn.name = "inner";
        f.fn.eval = [prof, p](double r, double t) {
            if (!(t > 0.0)) throw Error(ErrorKind::usage, "inner formal solution needs t > 0");
            return inner_family_jet(prof, p, p.kappa0, 1.0, r, t);
        };
        f.fn.valid = [](double r, double t) { return r > 0.0 && t > 0.0; };
        break;
    }
    return f;
}

} // namespace neckflow
