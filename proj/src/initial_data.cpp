#include "neckflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>

namespace neckflow {

namespace {

// Quintic smoothstep and its derivative on [0,1].
double smooth5(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * u * (10 - 15 * u + 6 * u * u);
}
double smooth5_d(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return 30 * u * u * (1 - u) * (1 - u);
}

double A_of(const InitialProfile& p, double r) {
    return std::abs(1 - p.v(r) + 0.5 * r * p.v_r(r));
}

// sup |1 - v + (r/2) v_r| and the end of the increasing stretch from the pole.
void measure(InitialProfile& p) {
    const int M = 20000;
    double A = 0.0;
    p.r_sharp = p.r_round;
    bool inc = true;
    for (int i = 0; i <= M; ++i) {
        const double r = 1e-8 * std::pow(p.r_round / 1e-8, double(i) / M);
        A = std::max(A, A_of(p, r));
        const double v = p.v(r);
        if (!(v > 0.0 && v < 1.0 + 1e-15) && r > 0)
            throw Error(ErrorKind::usage, "initial profile has |psi_s| >= 1 or v <= 0 at r=" + fmt17(r));
        if (inc && p.v_r(r) <= 0.0 && p.singular) {
            p.r_sharp = r;
            inc = false;
        }
    }
    p.A_measured = A;
}

} // namespace

InitialProfile build_initial(const InitialDataSpec& spec) {
    const double b = spec.params.b, c = spec.power_c, R = spec.R_cap;
    const double lo = spec.blend_lo, hi = spec.blend_hi;
    if (!(0 < lo && lo < hi && hi < R)) throw Error(ErrorKind::usage, "need 0 < blend_lo < blend_hi < R_cap");
    InitialProfile p;
    p.spec = spec;
    p.singular = true;
    p.r_round = hi;
    auto pw = [b, c](double r) {
        const double q = std::pow(r, 2 * b);
        return q * (1 + c * q);
    };
    auto pw_r = [b, c](double r) {
        const double q = std::pow(r, 2 * b);
        return (2 * b * q + 4 * b * c * q * q) / r;
    };
    p.v = [=](double r) {
        if (r <= lo) return pw(r);
        const double cap = 1 - r * r / (R * R);
        if (r >= hi) return cap;
        const double w = smooth5((r - lo) / (hi - lo));
        return (1 - w) * pw(r) + w * cap;
    };
    p.v_r = [=](double r) {
        if (r <= lo) return pw_r(r);
        const double cap_r = -2 * r / (R * R);
        if (r >= hi) return cap_r;
        const double u = (r - lo) / (hi - lo);
        const double w = smooth5(u), w_r = smooth5_d(u) / (hi - lo);
        return (1 - w) * pw_r(r) + w * cap_r + w_r * (1 - r * r / (R * R) - pw(r));
    };
    measure(p);
    return p;
}

FlowState round_sphere(double R, std::size_t nodes, const FlowParams& p, const GaugeSpec& g) {
    if (nodes < 8) throw Error(ErrorKind::usage, "flow grid needs at least 8 nodes");
    FlowState st;
    st.params = p;
    st.gauge = g;
    st.length = st.length0 = M_PI * R;
    st.lambda = g.lambda;
    const std::size_t N = nodes - 1;
    st.x.resize(nodes);
    st.psi.resize(nodes);
    st.phi.resize(nodes);
    for (std::size_t i = 0; i <= N; ++i) {
        st.x[i] = double(i) / double(N);
        const GaugeMap m = gauge_map(st.x[i], st.lambda);
        st.psi[i] = R * std::sin(M_PI * m.G);
        st.phi[i] = st.length * m.G_x;
    }
    st.psi[0] = st.psi[N] = 0.0;
    st.initial_v = [R](double r) { return 1 - r * r / (R * R); };
    return st;
}

FlowState discretize(const InitialProfile& prof, std::size_t nodes, const GaugeSpec& g) {
    namespace ode = boost::numeric::odeint;
    if (nodes < 8) throw Error(ErrorKind::usage, "flow grid needs at least 8 nodes");
    const double b = prof.spec.params.b, R = prof.spec.R_cap, rr = prof.r_round;
    // start of integration: analytic power law for singular data
    const double r0 = prof.singular ? 1e-9 : 0.0;
    const double s0 = prof.singular ? std::pow(r0, 1 - b) / (1 - b) : 0.0;
    using State = std::array<double, 1>;
    auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());

    // arclength to the round part
    State sr{s0};
    ode::integrate_adaptive(stepper, [&](const State&, State& d, double r) { d[0] = 1.0 / std::sqrt(prof.v(r)); },
                            sr, std::max(r0, 1e-300), rr, 1e-4);
    const double s_round = sr[0];
    const double alpha = std::asin(rr / R);
    const double L = s_round + R * (M_PI - alpha);

    FlowState st;
    st.params = prof.spec.params;
    st.gauge = g;
    st.length = st.length0 = L;
    st.lambda = g.track_tip
                    ? gauge_lambda(g.tip_fraction * std::pow(g.omega, 0.5 * (1 + b)), nodes - 1, L, g.lambda_max)
                    : g.lambda;
    const std::size_t N = nodes - 1;
    st.x.resize(nodes);
    st.psi.assign(nodes, 0.0);
    st.phi.resize(nodes);
    std::vector<double> s_in;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i <= N; ++i) {
        st.x[i] = double(i) / double(N);
        const GaugeMap m = gauge_map(st.x[i], st.lambda);
        st.phi[i] = L * m.G_x;
        const double s = L * m.G;
        if (i == 0 || i == N) continue;
        if (s >= s_round) st.psi[i] = R * std::sin(alpha + (s - s_round) / R);
        else if (s <= s0) st.psi[i] = std::pow((1 - b) * s, 1 / (1 - b));
        else {
            s_in.push_back(s);
            idx.push_back(i);
        }
    }
    if (!s_in.empty()) {
        State y{r0};
        std::vector<double> times{s0};
        times.insert(times.end(), s_in.begin(), s_in.end());
        std::size_t k = 0;
        ode::integrate_times(
            stepper,
            [&](const State& q, State& d, double) { d[0] = std::sqrt(std::max(0.0, prof.v(std::max(q[0], 0.0)))); },
            y, times.begin(), times.end(), 1e-6,
            [&](const State& q, double) {
                if (k > 0) st.psi[idx[k - 1]] = q[0];
                ++k;
            });
    }
    st.initial_v = prof.v;
    for (std::size_t i = 1; i < N; ++i)
        if (!(st.psi[i] > 0.0)) throw Error(ErrorKind::numerical, "discretized radius not positive at node " + std::to_string(i));
    return st;
}

InitialProfile regularize(const InitialProfile& init, const RegularizationParams& rp,
                          const CompositeBarrier* composite, const Profiles& prof,
                          RegularizationReport* report) {
    const FlowParams p = init.spec.params;
    if (!(rp.omega > 0.0 && rp.rho_star > 0.0)) throw Error(ErrorKind::usage, "regularize needs omega > 0 and rho* > 0");
    const double kappa = rp.kappa > 0.0 ? rp.kappa : p.kappa0;
    const double hi = rp.rho_star * std::sqrt(rp.omega), lo = 0.5 * hi;
    if (hi >= init.r_round) throw Error(ErrorKind::usage, "blend radius reaches the cap");
    const double om = rp.omega;
    InitialProfile out = init;
    out.singular = false;
    auto vin = [prof, p, kappa, om](double r) {
        if (r <= 0.0) return SpaceTimeJet{1.0, 0.0, 0.0, 0.0, 0.0};
        return inner_family_jet(prof, p, kappa, 1.0, r, om);
    };
    const auto v0 = init.v, v0_r = init.v_r;
    out.v = [=](double r) {
        if (r >= hi) return v0(r);
        if (r <= 0.0) return 1.0;
        const double a = vin(r).v;
        if (r <= lo) return a;
        const double w = smooth5((r - lo) / (hi - lo));
        return (1 - w) * a + w * v0(r);
    };
    out.v_r = [=](double r) {
        if (r >= hi) return v0_r(r);
        if (r <= 0.0) return 0.0;
        const SpaceTimeJet j = vin(r);
        if (r <= lo) return j.v_r;
        const double u = (r - lo) / (hi - lo);
        const double w = smooth5(u), w_r = smooth5_d(u) / (hi - lo);
        return (1 - w) * j.v_r + w * v0_r(r) + w_r * (v0(r) - j.v);
    };
    measure(out);
    RegularizationReport rep;
    rep.A_ratio = out.A_measured / init.A_measured;
    if (rep.A_ratio > 1 + rp.A_slack)
        throw Error(ErrorKind::numerical, "regularized |r^2(K-L)| exceeds the measured bound by " + fmt17(rep.A_ratio));
    if (composite && composite->constants().t_star > 0.0) {
        const double t_star = composite->constants().t_star;
        if (rp.omega <= t_star / 10) {
            rep.trapping_checked = true;
            rep.trap_lower = rep.trap_upper = std::numeric_limits<double>::infinity();
            const double r_star = composite->constants().r_star;
            for (int i = 1; i <= 4000; ++i) {
                const double r = r_star * std::pow(1e-6, 1.0 - double(i) / 4000);
                const double v = out.v(r);
                const double lo_m = v - composite->lower(r, om).v, up_m = composite->upper(r, om).v - v;
                rep.trap_lower = std::min(rep.trap_lower, lo_m);
                rep.trap_upper = std::min(rep.trap_upper, up_m);
                if (!(lo_m > 0 && up_m > 0))
                    throw Error(ErrorKind::certification, "regularized data not trapped at r=" + fmt17(r));
            }
        } else {
            rep.note = "trapping not checked: omega=" + fmt17(rp.omega) + " exceeds t*/10=" + fmt17(t_star / 10);
        }
    }
    if (report) *report = rep;
    return out;
}

} // namespace neckflow
