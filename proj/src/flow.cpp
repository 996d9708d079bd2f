#include "neckflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace neckflow {

GaugeMap gauge_map(double x, double lambda) {
    GaugeMap m;
    if (lambda < 1e-6) {
        m.G = x;
        m.G_x = 1.0;
        return m;
    }
    const double S = std::sinh(lambda), C = std::cosh(lambda);
    const double sx = std::sinh(lambda * x), cx = std::cosh(lambda * x);
    m.G = sx / S;
    m.G_x = lambda * cx / S;
    m.G_xx = lambda * lambda * sx / S;
    m.G_l = (x * cx * S - sx * C) / (S * S);
    return m;
}

double gauge_lambda(double h, std::size_t intervals, double length, double lambda_max) {
    const double q = h * double(intervals) / length;
    if (q >= 1.0) return 0.0;
    auto f = [](double l) { return l / std::sinh(l); };
    if (f(lambda_max) >= q) return lambda_max;
    double lo = 0.0, hi = lambda_max;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mid > 0 && f(mid) < q ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

double FlowState::s(std::size_t i) const { return length * gauge_map(x[i], lambda).G; }

namespace {

double tip_lambda(const FlowState& st, double t) {
    // capped at half the uniform spacing; near uniform spacing d(lambda)/dt is unbounded
    const double h_cap = 0.5 * st.length0 / double(st.size() - 1);
    const double h = std::min(h_cap, st.gauge.tip_fraction * std::pow(t + st.gauge.omega, 0.5 * (1 + st.params.b)));
    return gauge_lambda(h, st.size() - 1, st.length0, st.gauge.lambda_max);
}

double tip_lambda_rate(const FlowState& st, double t) {
    if (!st.gauge.track_tip) return 0.0;
    const double d = 1e-6 * (t + st.gauge.omega);
    return (tip_lambda(st, t + d) - tip_lambda(st, std::max(0.0, t - d))) / (t + d - std::max(0.0, t - d));
}

// psi = s + c3 s^3 + c5 s^5 through two nodes next to a pole.
double pole_c3(double s1, double p1, double s2, double p2) {
    const double r1 = (p1 - s1) / (s1 * s1 * s1), r2 = (p2 - s2) / (s2 * s2 * s2);
    // r = c3 + c5 s^2
    return (r1 * s2 * s2 - r2 * s1 * s1) / (s2 * s2 - s1 * s1);
}

// Leading slope c1 of psi = c1 s + c3 s^3 + c5 s^5 through three nodes.
double pole_c1(const double s[3], const double p[3]) {
    double A[3][4];
    for (int i = 0; i < 3; ++i) {
        A[i][0] = s[i];
        A[i][1] = s[i] * s[i] * s[i];
        A[i][2] = A[i][1] * s[i] * s[i];
        A[i][3] = p[i];
    }
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = A[r][c] / A[c][c];
            for (int k = c; k < 4; ++k) A[r][k] -= f * A[c][k];
        }
    }
    return A[0][3] / A[0][0];
}

struct Workspace {
    std::vector<double> K, I, s, G;
};

} // namespace

void flow_rhs(const FlowState& st, std::vector<double>& dpsi, double& dlength, double* max_speed) {
    thread_local Workspace w;
    const std::size_t N = st.size() - 1;
    const double dx = 1.0 / double(N);
    const double n = st.params.n, L = st.length;
    const double lam_t = tip_lambda_rate(st, st.t);
    const auto& y = st.psi;
    dpsi.assign(N + 1, 0.0);
    w.K.assign(N + 1, 0.0);
    w.I.assign(N + 1, 0.0);
    w.s.resize(N + 1);
    w.G.resize(N + 1);
    std::vector<double>& K = w.K;
    thread_local std::vector<double> ps, gl;
    ps.assign(N + 1, 0.0);
    gl.assign(N + 1, 0.0);
    auto at = [&](long i) { return i < 0 ? -y[-i] : y[i]; };
    for (std::size_t i = 0; i <= N; ++i) {
        const GaugeMap m = gauge_map(st.x[i], st.lambda);
        w.s[i] = L * m.G;
        w.G[i] = m.G;
        gl[i] = m.G_l;
        if (i == 0 || i + 1 >= N) continue;
        const double phi = L * m.G_x, phi_x = L * m.G_xx;
        // odd reflection through the north pole; the sinh map is odd in x
        const long k = long(i);
        const double yx = (-at(k + 2) + 8 * at(k + 1) - 8 * at(k - 1) + at(k - 2)) / (12 * dx);
        const double yxx = (-at(k + 2) + 16 * at(k + 1) - 30 * at(k) + 16 * at(k - 1) - at(k - 2)) / (12 * dx * dx);
        const double p_s = yx / phi;
        const double p_ss = (yxx - p_s * phi_x) / (phi * phi);
        ps[i] = p_s;
        K[i] = -p_ss / y[i];
        dpsi[i] = p_ss - (n - 1) * (1 - p_s * p_s) / y[i];
    }
    {
        // south neighbour from psi = s' + c3 s'^3 + c5 s'^5 through nodes N-1, N-2
        const double q = L - w.s[N - 1], q2 = L - w.s[N - 2];
        const double c3 = pole_c3(q, y[N - 1], q2, y[N - 2]);
        const double c5 = ((y[N - 1] - q) / (q * q * q) - c3) / (q * q);
        const double e = 3 * c3 + 5 * c5 * q * q, den = 1 + c3 * q * q + c5 * q * q * q * q;
        const double p_ss = 6 * c3 * q + 20 * c5 * q * q * q;
        ps[N - 1] = -(1 + e * q * q);
        K[N - 1] = -p_ss / y[N - 1];
        dpsi[N - 1] = p_ss + (n - 1) * e * q * (2 + e * q * q) / den;
    }
    K[0] = -6 * pole_c3(w.s[1], y[1], w.s[2], y[2]);
    K[N] = -6 * pole_c3(L - w.s[N - 1], y[N - 1], L - w.s[N - 2], y[N - 2]);
    for (std::size_t i = 1; i <= N; ++i)
        w.I[i] = w.I[i - 1] + 0.5 * (K[i] + K[i - 1]) * (w.s[i] - w.s[i - 1]);
    dlength = -n * w.I[N];
    for (std::size_t i = 1; i < N; ++i) {
        const double vel = n * w.I[i] + dlength * w.G[i] + L * gl[i] * lam_t;
        dpsi[i] += ps[i] * vel;
        if (max_speed) *max_speed = std::max(*max_speed, std::abs(vel));
    }
}

NodeGeometry geometry(const FlowState& st) {
    const std::size_t N = st.size() - 1;
    const double dx = 1.0 / double(N);
    const auto& y = st.psi;
    NodeGeometry g;
    g.s.resize(N + 1);
    g.psi_s.assign(N + 1, 0.0);
    g.psi_ss.assign(N + 1, 0.0);
    g.K.assign(N + 1, 0.0);
    g.L.assign(N + 1, 0.0);
    auto at = [&](long i) { return i < 0 ? -y[-i] : y[i]; };
    for (std::size_t i = 0; i <= N; ++i) {
        const GaugeMap m = gauge_map(st.x[i], st.lambda);
        g.s[i] = st.length * m.G;
        if (i == 0 || i == N) continue;
        const double phi = st.length * m.G_x, phi_x = st.length * m.G_xx;
        double yx, yxx;
        const long k = long(i);
        if (i + 2 <= N) {
            yx = (-at(k + 2) + 8 * at(k + 1) - 8 * at(k - 1) + at(k - 2)) / (12 * dx);
            yxx = (-at(k + 2) + 16 * at(k + 1) - 30 * at(k) + 16 * at(k - 1) - at(k - 2)) / (12 * dx * dx);
        } else {
            yx = (y[i + 1] - y[i - 1]) / (2 * dx);
            yxx = (y[i + 1] - 2 * y[i] + y[i - 1]) / (dx * dx);
        }
        g.psi_s[i] = yx / phi;
        g.psi_ss[i] = (yxx - g.psi_s[i] * phi_x) / (phi * phi);
        g.K[i] = -g.psi_ss[i] / y[i];
        g.L[i] = (1 - g.psi_s[i] * g.psi_s[i]) / (y[i] * y[i]);
    }
    const double L = st.length;
    {
        const double s3[3] = {g.s[1], g.s[2], g.s[3]}, p3[3] = {y[1], y[2], y[3]};
        g.pole_slope_north = pole_c1(s3, p3);
        const double c3 = pole_c3(g.s[1], y[1], g.s[2], y[2]);
        g.K[0] = g.L[0] = -6 * c3;
        g.psi_s[0] = g.pole_slope_north;
    }
    {
        const double s3[3] = {L - g.s[N - 1], L - g.s[N - 2], L - g.s[N - 3]};
        const double p3[3] = {y[N - 1], y[N - 2], y[N - 3]};
        g.pole_slope_south = pole_c1(s3, p3);
        const double c3 = pole_c3(s3[0], p3[0], s3[1], p3[1]);
        g.K[N] = g.L[N] = -6 * c3;
        g.psi_s[N] = -g.pole_slope_south;
        // node N-1 has no symmetric stencil: use the pole expansion there
        const double q = s3[0], r3 = (p3[0] - q) / (q * q * q), c5 = (r3 - c3) / (q * q);
        const double ps = 1 + 3 * c3 * q * q + 5 * c5 * q * q * q * q;
        const double pss = 6 * c3 * q + 20 * c5 * q * q * q;
        g.psi_s[N - 1] = -ps;
        g.psi_ss[N - 1] = pss;
        g.K[N - 1] = -pss / p3[0];
        const double e = 3 * c3 + 5 * c5 * q * q, den = 1 + c3 * q * q + c5 * q * q * q * q;
        g.L[N - 1] = -e * (2 + e * q * q) / (den * den);
    }
    return g;
}

std::vector<double> snapshot_times(const EvolveControls& c) {
    std::vector<double> ts{0.0};
    if (!(c.t_end > 0.0)) return ts;
    if (c.t_first >= c.t_end) {
        ts.push_back(c.t_end);
        return ts;
    }
    const int k_end = int(std::ceil(c.per_decade * std::log10(c.t_end / c.t_first) - 1e-9));
    for (int k = 0; k < k_end; ++k) ts.push_back(c.t_first * std::pow(10.0, double(k) / c.per_decade));
    ts.push_back(c.t_end);
    return ts;
}

namespace {

SnapshotDiag diagnose(const FlowState& st) {
    const NodeGeometry g = geometry(st);
    const std::size_t N = st.size() - 1;
    SnapshotDiag d;
    d.t = st.t;
    d.min_psi = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i <= N; ++i) {
        d.sup_curv = std::max(d.sup_curv, std::abs(g.K[i]) + std::abs(g.L[i]));
        d.max_psi = std::max(d.max_psi, st.psi[i]);
        d.max_slope = std::max(d.max_slope, std::abs(g.psi_s[i]));
        if (i > 0 && i < N) {
            const double y = st.psi[i];
            d.sup_r2KL = std::max(d.sup_r2KL, std::abs(y * y * (g.K[i] - g.L[i])));
            if (st.psi[i - 1] > y && st.psi[i + 1] > y && !(d.min_psi <= y)) d.min_psi = y;
        }
    }
    d.pole_dev = std::max(std::abs(g.pole_slope_north - 1), std::abs(g.pole_slope_south - 1));
    return d;
}

double max_fd_slope(const FlowState& st) {
    // adjacent secants; each equals psi_s somewhere in its cell
    const std::size_t N = st.size() - 1;
    double m = 0.0, prev = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
        const double s = st.length * gauge_map(st.x[i], st.lambda).G;
        m = std::max(m, std::abs(st.psi[i] - st.psi[i - 1]) / (s - prev));
        prev = s;
    }
    return m;
}

double min_spacing(const FlowState& st) {
    const std::size_t N = st.size() - 1;
    double h = std::numeric_limits<double>::infinity();
    double prev = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
        const double s = st.length * gauge_map(st.x[i], st.lambda).G;
        h = std::min(h, s - prev);
        prev = s;
    }
    return h;
}

} // namespace

Trajectory evolve(FlowState st, const EvolveControls& c) {
    if (!(c.t_end > st.t)) throw Error(ErrorKind::usage, "t_end must exceed the start time");
    if (st.size() < 8) throw Error(ErrorKind::usage, "flow grid needs at least 8 nodes");
    Trajectory tr;
    std::vector<double> times;
    for (double s : snapshot_times(c))
        if (s >= st.t) times.push_back(s);
    const std::size_t N = st.size() - 1;
    const double n = st.params.n;
    auto set_time = [&](FlowState& s, double t) {
        s.t = t;
        if (s.gauge.track_tip) s.lambda = tip_lambda(s, t);
    };
    auto refresh_phi = [&](FlowState& s) {
        s.phi.resize(N + 1);
        for (std::size_t i = 0; i <= N; ++i) s.phi[i] = s.length * gauge_map(s.x[i], s.lambda).G_x;
    };
    FlowState work = st;
    set_time(work, work.t);
    refresh_phi(work);
    std::vector<double> k1, k2;
    double dl1 = 0.0, dl2 = 0.0;
    std::size_t next = 0;
    auto record = [&](const FlowState& s) {
        tr.diag.push_back(diagnose(s));
        if (c.keep_states) tr.snapshots.push_back(s);
    };
    while (next < times.size() && times[next] <= work.t + 1e-15 * std::max(1.0, work.t)) {
        record(work);
        ++next;
    }
    double dt_prev = 0.0;
    while (next < times.size()) {
        if (tr.steps >= c.max_steps) {
            tr.halted = true;
            tr.halt_reason = "step limit reached at t=" + fmt17(work.t);
            break;
        }
        const double h = min_spacing(work);
        double dt = c.safety * h * h / (2.0 * std::max(1.0, n - 1));
        double speed = 0.0;
        flow_rhs(work, k1, dl1, &speed);
        if (speed > 0.0) dt = std::min(dt, 0.5 * h / speed);
        if (dt_prev > 0.0) dt = std::min(dt, 2.0 * dt_prev);
        bool snap = false;
        if (work.t + dt >= times[next]) {
            dt = times[next] - work.t;
            snap = true;
        }
        for (;;) {
            if (dt < c.dt_min) {
                tr.halted = true;
                tr.halt_reason = "time step underflow at t=" + fmt17(work.t);
                break;
            }
            FlowState mid = work;
            for (std::size_t i = 1; i < N; ++i) mid.psi[i] += 0.5 * dt * k1[i];
            mid.length += 0.5 * dt * dl1;
            set_time(mid, work.t + 0.5 * dt);
            flow_rhs(mid, k2, dl2);
            FlowState nxt = work;
            for (std::size_t i = 1; i < N; ++i) nxt.psi[i] += dt * k2[i];
            nxt.length += dt * dl2;
            set_time(nxt, work.t + dt);
            bool ok = nxt.length > 0.0;
            for (std::size_t i = 1; i < N && ok; ++i) ok = nxt.psi[i] > 0.0 && std::isfinite(nxt.psi[i]);
            double slope = ok ? max_fd_slope(nxt) : 2.0;
            if (ok && slope > 1.0 + c.slope_tol) ok = false;
            if (!ok) {
                ++tr.rejected;
                dt *= 0.5;
                snap = false;
                continue;
            }
            tr.max_slope_all = std::max(tr.max_slope_all, slope);
            if (snap) nxt.t = times[next];
            work = std::move(nxt);
            ++tr.steps;
            dt_prev = dt;
            break;
        }
        if (tr.halted) break;
        if (snap || work.t >= times[next]) {
            refresh_phi(work);
            record(work);
            ++next;
        }
    }
    return tr;
}

std::vector<double> extract_v(const FlowState& st, const std::vector<double>& r) {
    const NodeGeometry g = geometry(st);
    const std::size_t N = st.size() - 1;
    std::size_t top = 0;
    while (top < N && st.psi[top + 1] > st.psi[top]) ++top;
    const auto& y = st.psi;
    std::vector<double> out(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double q = r[k];
        if (q < 0.0 || q > y[top]) throw Error(ErrorKind::usage, "r=" + fmt17(q) + " beyond the increasing branch");
        const auto it = std::upper_bound(y.begin(), y.begin() + top + 1, q);
        std::size_t j = std::size_t(it - y.begin());
        if (j == 0) j = 1;
        if (j > top) j = top;
        const std::size_t i = j - 1;
        // cubic Hermite in psi with dv/dpsi = 2 psi_ss
        const double h = y[j] - y[i];
        const double u = (q - y[i]) / h;
        const double v0 = g.psi_s[i] * g.psi_s[i], v1 = g.psi_s[j] * g.psi_s[j];
        const double m0 = 2 * g.psi_ss[i] * h, m1 = 2 * g.psi_ss[j] * h;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
        out[k] = h00 * v0 + h10 * m0 + h01 * v1 + h11 * m1;
    }
    return out;
}

GridFunction extract_v(const FlowState& st, const RadialGrid& r) {
    return GridFunction(r, extract_v(st, r.nodes()));
}

void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj) {
    std::filesystem::create_directories(dir / "snapshots");
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& s = traj.snapshots[k];
        char name[32];
        std::snprintf(name, sizeof name, "snap_%05zu.csv", k);
        std::ofstream os(dir / "snapshots" / name);
        os << "# t=" << fmt17(s.t) << " length=" << fmt17(s.length) << " lambda=" << fmt17(s.lambda) << '\n';
        os << "x,phi,psi\n";
        for (std::size_t i = 0; i < s.size(); ++i)
            os << fmt17(s.x[i]) << ',' << fmt17(s.phi[i]) << ',' << fmt17(s.psi[i]) << '\n';
    }
    std::ofstream os(dir / "diagnostics.csv");
    os << "t,sup_curv,min_psi,trap_lower,trap_upper\n";
    for (const auto& d : traj.diag)
        os << fmt17(d.t) << ',' << fmt17(d.sup_curv) << ',' << fmt17(d.min_psi) << ',' << fmt17(d.trap_lower)
           << ',' << fmt17(d.trap_upper) << '\n';
}

FlowState read_snapshot(const std::filesystem::path& file, const FlowParams& p) {
    std::ifstream is(file);
    if (!is) throw Error(ErrorKind::usage, "cannot read " + file.string());
    FlowState st;
    st.params = p;
    std::string line;
    std::getline(is, line);
    if (line.rfind("# ", 0) == 0) {
        std::istringstream hs(line.substr(2));
        std::string kv;
        while (hs >> kv) {
            const auto eq = kv.find('=');
            const std::string k = kv.substr(0, eq);
            const double v = std::stod(kv.substr(eq + 1));
            if (k == "t") st.t = v;
            else if (k == "length") st.length = v;
            else if (k == "lambda") st.lambda = v;
        }
        std::getline(is, line);
    }
    if (line != "x,phi,psi") throw Error(ErrorKind::usage, "bad snapshot header in " + file.string());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double a, b, c;
        char c1, c2;
        std::istringstream ls(line);
        if (!(ls >> a >> c1 >> b >> c2 >> c)) throw Error(ErrorKind::usage, "bad snapshot row: " + line);
        st.x.push_back(a);
        st.phi.push_back(b);
        st.psi.push_back(c);
    }
    st.length0 = st.length;
    return st;
}

} // namespace neckflow
