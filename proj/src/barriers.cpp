#include "neckflow/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace neckflow {

std::string to_string(FamilyKind k) {
    switch (k) {
    case FamilyKind::outer: return "outer";
    case FamilyKind::parabolic: return "parabolic";
    case FamilyKind::inner: return "inner";
    case FamilyKind::collar: return "collar";
    case FamilyKind::composite: return "composite";
    case FamilyKind::exact: return "exact";
    }
    return "unknown";
}

std::string to_string(Sign s) { return s == Sign::super ? "super" : "sub"; }

SpaceTimeJet outer_jet(double cd, double ce, double r, double t, const FlowParams& p) {
    const double b = p.b, a = p.a;
    const double K1 = cd * a * (1 + b), e1 = 2 * b - 2;
    const double K2 = cd * cd * (2 * b * b - 4 * b - a), e2 = 4 * b - 2;
    const double r2b = std::pow(r, 2 * b);
    const double re1 = r2b / (r * r), re2 = r2b * r2b / (r * r);
    const double f = K1 * re1 + K2 * re2;
    const double f_r = (K1 * e1 * re1 + K2 * e2 * re2) / r;
    const double f_rr = (K1 * e1 * (e1 - 1) * re1 + K2 * e2 * (e2 - 1) * re2) / (r * r);
    SpaceTimeJet j;
    j.v = cd * r2b + ce * t * f;
    j.om = 1.0 - j.v;
    j.v_r = cd * 2 * b * r2b / r + ce * t * f_r;
    j.v_rr = cd * 2 * b * (2 * b - 1) * r2b / (r * r) + ce * t * f_rr;
    j.v_t = ce * f;
    return j;
}

SpaceTimeJet parabolic_jet(double amp, double sD, double D, double r, double t, const FlowParams& p) {
    const double a = p.a, b = p.b;
    const double r2 = r * r;
    const double P = r2 + a * t;
    const double Pb = std::pow(P, b);
    const double E = D * std::pow(t, 2 + 2 * b) / (r2 * r2);
    SpaceTimeJet j;
    j.v = amp * Pb * P / r2 + sD * E;
    j.om = 1.0 - j.v;
    j.v_r = amp * (2 * (1 + b) * Pb / r - 2 * Pb * P / (r2 * r)) - sD * 4 * E / r;
    j.v_rr = amp * (4 * b * (1 + b) * Pb / P - 6 * (1 + b) * Pb / r2 + 6 * Pb * P / (r2 * r2)) +
             sD * 20 * E / r2;
    j.v_t = amp * (1 + b) * a * Pb / r2 + sD * (2 + 2 * b) * E / t;
    return j;
}

namespace {

double theta_of(double t, const FlowParams& p) { return std::pow(t, 0.5 * (1 + p.b)); }

} // namespace

bool outer_positivity(double delta, double r_star, const FlowParams& p) {
    for (double cd : {1.0 - delta, 1.0 + delta}) {
        const double K1 = cd * p.a * (1 + p.b);
        const double K2 = cd * cd * (2 * p.b * p.b - 4 * p.b - p.a);
        // F = r^{2b-2}(K1 + K2 r^{2b}) with K2 < 0: worst at r_star
        if (!(K1 + K2 * std::pow(r_star, 2 * p.b) > 0.0)) return false;
    }
    return true;
}

std::pair<BarrierFamily, BarrierFamily> outer_families(double delta, double epsilon, double r_star,
                                                       double rho_star, const FlowParams& p) {
    auto make = [&](Sign s) {
        const double pm = s == Sign::super ? 1.0 : -1.0;
        const double cd = 1 + pm * delta, ce = 1 + pm * epsilon;
        BarrierFamily f;
        f.kind = FamilyKind::outer;
        f.sign = s;
        f.fn.name = "outer_" + to_string(s);
        f.fn.eval = [cd, ce, p](double r, double t) { return outer_jet(cd, ce, r, t, p); };
        f.fn.valid = [rho_star, r_star](double r, double t) {
            return r > 0.0 && t >= 0.0 && r >= rho_star * std::sqrt(t) * (1 - 1e-12) &&
                   r <= r_star * (1 + 1e-12);
        };
        f.r_range = [rho_star, r_star](double t) {
            return std::make_pair(rho_star * std::sqrt(t), r_star);
        };
        return f;
    };
    return {make(Sign::sub), make(Sign::super)};
}

std::pair<BarrierFamily, BarrierFamily> parabolic_barriers(double gamma_plus, double gamma_minus,
                                                           double D, double sigma_star,
                                                           double rho_star, const FlowParams& p) {
    if (!(gamma_plus > 0 && gamma_plus < 1 && gamma_minus > 0 && gamma_minus < 1))
        throw Error(ErrorKind::usage, "parabolic barriers need gamma in (0,1)");
    auto make = [&](Sign s) {
        const double pm = s == Sign::super ? 1.0 : -1.0;
        const double amp = s == Sign::super ? 1 + gamma_plus : 1 - gamma_minus;
        BarrierFamily f;
        f.kind = FamilyKind::parabolic;
        f.sign = s;
        f.fn.name = "parabolic_" + to_string(s);
        f.fn.eval = [amp, pm, D, p](double r, double t) { return parabolic_jet(amp, pm, D, r, t, p); };
        f.fn.valid = [sigma_star, rho_star, p](double r, double t) {
            return t > 0.0 && r >= sigma_star * theta_of(t, p) * (1 - 1e-12) &&
                   r <= 3 * rho_star * std::sqrt(t) * (1 + 1e-12);
        };
        f.r_range = [sigma_star, rho_star, p](double t) {
            return std::make_pair(sigma_star * theta_of(t, p), 3 * rho_star * std::sqrt(t));
        };
        return f;
    };
    return {make(Sign::sub), make(Sign::super)};
}

std::pair<BarrierFamily, BarrierFamily> inner_barriers(double kappa_plus, double kappa_minus,
                                                       double epsilon, double sigma_star,
                                                       const Profiles& prof, const FlowParams& p) {
    for (double k : {kappa_plus, kappa_minus})
        if (!(k >= 0.5 * p.kappa0 && k <= 2 * p.kappa0))
            throw Error(ErrorKind::usage, "inner barrier kappa outside [kappa0/2, 2 kappa0]");
    auto make = [&](Sign s) {
        const double kappa = s == Sign::super ? kappa_plus : kappa_minus;
        const double ce = s == Sign::super ? 1 - epsilon : 1 + epsilon;
        BarrierFamily f;
        f.kind = FamilyKind::inner;
        f.sign = s;
        f.fn.name = "inner_" + to_string(s);
        f.fn.eval = [prof, p, kappa, ce](double r, double t) {
            return inner_family_jet(prof, p, kappa, ce, r, t);
        };
        f.residual = [prof, p, kappa, ce](double r, double t) {
            return inner_family_residual(prof, p, kappa, ce, r, t);
        };
        f.fn.valid = [sigma_star, p](double r, double t) {
            return t > 0.0 && r > 0.0 && r <= 3 * sigma_star * theta_of(t, p) * (1 + 1e-12);
        };
        f.r_range = [sigma_star, p](double t) {
            const double th = theta_of(t, p);
            return std::make_pair(1e-3 * th, 3 * sigma_star * th);
        };
        return f;
    };
    return {make(Sign::sub), make(Sign::super)};
}

std::pair<BarrierFamily, BarrierFamily> collar_barriers(const CollarParams& cp, const FlowParams&) {
    if (!(0 < cp.m_minus && cp.m_minus < cp.m_plus && cp.m_plus < 1))
        throw Error(ErrorKind::usage, "collar needs 0 < m_minus < m_plus < 1");
    const double al = cp.alpha, rb = cp.r_bar, T = cp.T_alpha;
    BarrierFamily sub;
    sub.kind = FamilyKind::collar;
    sub.sign = Sign::sub;
    sub.fn.name = "collar_sub";
    const double ks = cp.sub_rate, kp = cp.super_rate, mm = cp.m_minus, mp = cp.m_plus;
    sub.fn.eval = [=](double r, double t) {
        const double x = (r - rb) / al;
        const double m = mm * std::exp(-ks * t / (al * al));
        SpaceTimeJet j;
        if (m - x * x <= 0.0) {
            j.om = 1.0;
            return j;
        }
        j.v = m - x * x;
        j.om = 1.0 - j.v;
        j.v_r = -2 * x / al;
        j.v_rr = -2 / (al * al);
        j.v_t = -ks * m / (al * al);
        return j;
    };
    sub.clamped = [=](double r, double t) {
        const double x = (r - rb) / al;
        return mm * std::exp(-ks * t / (al * al)) - x * x <= 0.0;
    };
    BarrierFamily sup = sub;
    sup.sign = Sign::super;
    sup.fn.name = "collar_super";
    sup.fn.eval = [=](double r, double t) {
        const double x = (r - rb) / al;
        const double m = mp * std::exp(kp * t / (al * al));
        SpaceTimeJet j;
        if (m + x * x >= 1.0) {
            j.v = 1.0;
            return j;
        }
        j.v = m + x * x;
        j.om = 1.0 - j.v;
        j.v_r = 2 * x / al;
        j.v_rr = 2 / (al * al);
        j.v_t = kp * m / (al * al);
        return j;
    };
    sup.clamped = [=](double r, double t) {
        const double x = (r - rb) / al;
        return mp * std::exp(kp * t / (al * al)) + x * x >= 1.0;
    };
    for (auto* f : {&sub, &sup}) {
        f->fn.valid = [=](double r, double t) {
            return t >= 0.0 && (T <= 0.0 || t < T) && std::abs(r - rb) <= al * (1 + 1e-12);
        };
        f->r_range = [=](double) { return std::make_pair(rb - al, rb + al); };
        f->log_r = false;
    }
    return {sub, sup};
}

double glue_H(double rho, double epsilon, int pm, const FlowParams& p) {
    const double x = p.a / (rho * rho);
    return (1 + (1 + pm * epsilon) * (1 + p.b) * x) / std::pow(1 + x, 1 + p.b);
}

double tail_remainder_constant(const SolitonProfile& B, const FlowParams& p) {
    // sup_x |x^4 B(x) - x^2| on a log grid, times kappa^-4 at kappa = kappa0/2
    double worst = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double x = std::pow(10.0, -2.0 + 6.0 * i / 4000.0);
        const Jet j = B.eval(x);
        const double x2 = x * x;
        worst = std::max(worst, std::abs(x2 * (x2 * j.v - 1.0)));
    }
    const double k = 0.5 * p.kappa0;
    return worst / (k * k * k * k);
}

std::pair<double, double> glue_kappas(double D, double sigma_star, double gamma_plus,
                                      double gamma_minus, const FlowParams& p) {
    const double k02 = 1.0 / (p.kappa0 * p.kappa0);
    const double shift = D / (3.0 * sigma_star * sigma_star);
    const double ip = (1 + gamma_plus) * k02 + shift;
    const double im = (1 - gamma_minus) * k02 - shift;
    const double kp = 1.0 / std::sqrt(ip);
    const double km = im > 0.0 ? 1.0 / std::sqrt(im) : std::numeric_limits<double>::infinity();
    return {kp, km};
}

double glue_inner_limit(double sigma, double kappa, double gamma, double D, int pm,
                        const Profiles& prof, const FlowParams& p) {
    const double s2 = sigma * sigma;
    const double para = (1 + pm * gamma) * std::pow(p.a, 1 + p.b) / s2 + pm * D / (s2 * s2);
    return s2 * (para - prof.bryant->eval(kappa * sigma).v);
}

CrossingCheck crossing_inequalities(const BarrierConstants& c, const Profiles& prof,
                                    const FlowParams& p, double t) {
    const double th = theta_of(t, p), st = std::sqrt(t);
    const auto in_p = [&](double r) { return inner_family_jet(prof, p, c.kappa_plus, 1 - c.epsilon, r, t).v; };
    const auto in_m = [&](double r) { return inner_family_jet(prof, p, c.kappa_minus, 1 + c.epsilon, r, t).v; };
    const auto pa_p = [&](double r) { return parabolic_jet(1 + c.gamma_plus, 1, c.D, r, t, p).v; };
    const auto pa_m = [&](double r) { return parabolic_jet(1 - c.gamma_minus, -1, c.D, r, t, p).v; };
    const auto ou_p = [&](double r) { return outer_jet(1 + c.delta, 1 + c.epsilon, r, t, p).v; };
    const auto ou_m = [&](double r) { return outer_jet(1 - c.delta, 1 - c.epsilon, r, t, p).v; };
    struct Gap {
        const char* name;
        double hi, lo;
    };
    const double r1 = c.sigma_star * th, r3 = 3 * c.sigma_star * th;
    const double q1 = c.rho_star * st, q3 = 3 * c.rho_star * st;
    const Gap gaps[] = {
        {"super: in < para at sigma*", pa_p(r1), in_p(r1)},
        {"super: para < in at 3sigma*", in_p(r3), pa_p(r3)},
        {"super: para < out at rho*", ou_p(q1), pa_p(q1)},
        {"super: out < para at 3rho*", pa_p(q3), ou_p(q3)},
        {"sub: in > para at sigma*", in_m(r1), pa_m(r1)},
        {"sub: para > in at 3sigma*", pa_m(r3), in_m(r3)},
        {"sub: para > out at rho*", pa_m(q1), ou_m(q1)},
        {"sub: out > para at 3rho*", ou_m(q3), pa_m(q3)},
    };
    CrossingCheck out;
    out.min_gap = std::numeric_limits<double>::infinity();
    for (const auto& g : gaps) {
        const double rel = (g.hi - g.lo) / std::max(std::abs(g.hi), std::abs(g.lo));
        if (rel < out.min_gap) {
            out.min_gap = rel;
            out.worst = g.name;
        }
    }
    out.ok = out.min_gap > 0.0;
    return out;
}

CompositeBarrier::CompositeBarrier(BarrierConstants c, Profiles prof, FlowParams p)
    : c_(c), prof_(std::move(prof)), p_(p) {}

double CompositeBarrier::band_limit() const {
    const double t1 = std::pow(c_.rho_star / (3 * c_.sigma_star), 2.0 / p_.b);
    const double t2 = std::pow(c_.r_star / (3 * c_.rho_star), 2.0);
    return std::min(t1, t2);
}

namespace {

SpaceTimeJet pick(const SpaceTimeJet& x, FamilyKind kx, const SpaceTimeJet& y, FamilyKind ky,
                  bool take_min, FamilyKind* active) {
    const bool first = take_min ? x.v <= y.v : x.v >= y.v;
    if (active) *active = first ? kx : ky;
    return first ? x : y;
}

} // namespace

SpaceTimeJet CompositeBarrier::upper(double r, double t, FamilyKind* active) const {
    const auto& c = c_;
    if (t <= 0.0) {
        if (active) *active = FamilyKind::outer;
        return outer_jet(1 + c.delta, 1 + c.epsilon, r, 0.0, p_);
    }
    if (t > band_limit() * (1 + 1e-12))
        throw Error(ErrorKind::numerical, "composite evaluated past its band limit at t=" + fmt17(t));
    const double sigma = r / theta_of(t, p_), rho = r / std::sqrt(t);
    auto in = [&] { return inner_family_jet(prof_, p_, c.kappa_plus, 1 - c.epsilon, r, t); };
    auto pa = [&] { return parabolic_jet(1 + c.gamma_plus, 1, c.D, r, t, p_); };
    auto ou = [&] { return outer_jet(1 + c.delta, 1 + c.epsilon, r, t, p_); };
    FamilyKind k = FamilyKind::inner;
    SpaceTimeJet j;
    if (sigma <= c.sigma_star) j = in();
    else if (sigma <= 3 * c.sigma_star) j = pick(in(), FamilyKind::inner, pa(), FamilyKind::parabolic, true, &k);
    else if (rho <= c.rho_star) j = pa(), k = FamilyKind::parabolic;
    else if (rho <= 3 * c.rho_star) j = pick(pa(), FamilyKind::parabolic, ou(), FamilyKind::outer, true, &k);
    else j = ou(), k = FamilyKind::outer;
    if (active) *active = k;
    return j;
}

SpaceTimeJet CompositeBarrier::lower(double r, double t, FamilyKind* active) const {
    const auto& c = c_;
    if (t <= 0.0) {
        if (active) *active = FamilyKind::outer;
        return outer_jet(1 - c.delta, 1 - c.epsilon, r, 0.0, p_);
    }
    if (t > band_limit() * (1 + 1e-12))
        throw Error(ErrorKind::numerical, "composite evaluated past its band limit at t=" + fmt17(t));
    const double sigma = r / theta_of(t, p_), rho = r / std::sqrt(t);
    auto in = [&] { return inner_family_jet(prof_, p_, c.kappa_minus, 1 + c.epsilon, r, t); };
    auto pa = [&] { return parabolic_jet(1 - c.gamma_minus, -1, c.D, r, t, p_); };
    auto ou = [&] { return outer_jet(1 - c.delta, 1 - c.epsilon, r, t, p_); };
    FamilyKind k = FamilyKind::inner;
    SpaceTimeJet j;
    if (sigma <= c.sigma_star) j = in();
    else if (sigma <= 3 * c.sigma_star) j = pick(in(), FamilyKind::inner, pa(), FamilyKind::parabolic, false, &k);
    else if (rho <= c.rho_star) j = pa(), k = FamilyKind::parabolic;
    else if (rho <= 3 * c.rho_star) j = pick(pa(), FamilyKind::parabolic, ou(), FamilyKind::outer, false, &k);
    else j = ou(), k = FamilyKind::outer;
    if (active) *active = k;
    return j;
}

BarrierFamily CompositeBarrier::as_family(Sign s) const {
    BarrierFamily f;
    f.kind = FamilyKind::composite;
    f.sign = s;
    f.fn.name = "composite_" + to_string(s);
    const CompositeBarrier self = *this;
    if (s == Sign::super) f.fn.eval = [self](double r, double t) { return self.upper(r, t); };
    else f.fn.eval = [self](double r, double t) { return self.lower(r, t); };
    const double rs = c_.r_star;
    const FlowParams p = p_;
    f.fn.valid = [rs, self](double r, double t) {
        return r > 0.0 && r <= rs * (1 + 1e-12) && t > 0.0 && t <= self.band_limit() * (1 + 1e-12);
    };
    f.r_range = [rs, p](double t) { return std::make_pair(1e-3 * theta_of(t, p), rs); };
    return f;
}

double compactness_radius(double b_star, const FlowParams& p) {
    if (!(b_star > 0.5 && b_star < 1.0)) throw Error(ErrorKind::usage, "b* must lie in (1/2, 1)");
    return std::pow(p.a * b_star / (2 * b_star * b_star + b_star + p.a), 1.0 / (4 * b_star));
}

std::string report_json(const CertificationReport& r) {
    nlohmann::ordered_json j;
    j["family"] = r.family;
    j["region"] = r.region;
    j["grid"] = {{"nr", r.nr}, {"nt", r.nt}, {"t_lo", r.t_lo}, {"t_hi", r.t_hi}};
    j["min_margin"] = r.min_margin;
    j["argmin"] = {{"r", r.argmin_r}, {"t", r.argmin_t}};
    j["samples"] = r.samples;
    j["clamped"] = r.clamped;
    j["pass"] = r.pass;
    return j.dump(2);
}

std::string constants_json(const BarrierConstants& c) {
    nlohmann::ordered_json j;
    j["epsilon"] = c.epsilon;
    j["delta"] = c.delta;
    j["r_star"] = c.r_star;
    j["rho_star"] = c.rho_star;
    j["gamma_plus"] = c.gamma_plus;
    j["gamma_minus"] = c.gamma_minus;
    j["D"] = c.D;
    j["sigma_star"] = c.sigma_star;
    j["kappa_plus"] = c.kappa_plus;
    j["kappa_minus"] = c.kappa_minus;
    j["t_star"] = c.t_star;
    j["tau_star"] = c.tau_star;
    return j.dump(2);
}

BarrierConstants constants_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    BarrierConstants c;
    c.epsilon = j.at("epsilon");
    c.delta = j.at("delta");
    c.r_star = j.at("r_star");
    c.rho_star = j.at("rho_star");
    c.gamma_plus = j.at("gamma_plus");
    c.gamma_minus = j.at("gamma_minus");
    c.D = j.at("D");
    c.sigma_star = j.at("sigma_star");
    c.kappa_plus = j.at("kappa_plus");
    c.kappa_minus = j.at("kappa_minus");
    c.t_star = j.at("t_star");
    c.tau_star = j.at("tau_star");
    return c;
}

namespace {

nlohmann::ordered_json report_obj(const CertificationReport& r) { return nlohmann::ordered_json::parse(report_json(r)); }

CertificationReport report_from(const nlohmann::json& j) {
    CertificationReport r;
    r.family = j.at("family");
    r.region = j.at("region");
    r.nr = j.at("grid").at("nr");
    r.nt = j.at("grid").at("nt");
    r.t_lo = j.at("grid").at("t_lo");
    r.t_hi = j.at("grid").at("t_hi");
    r.min_margin = j.at("min_margin");
    r.argmin_r = j.at("argmin").at("r");
    r.argmin_t = j.at("argmin").at("t");
    r.samples = j.at("samples");
    r.clamped = j.at("clamped");
    r.pass = j.at("pass");
    return r;
}

} // namespace

std::string pipeline_json(const PipelineResult& r) {
    nlohmann::ordered_json j;
    j["constants"] = nlohmann::ordered_json::parse(constants_json(r.constants));
    const auto& c = r.collar;
    j["collar"] = {{"m_minus", c.m_minus}, {"m_plus", c.m_plus}, {"alpha", c.alpha},     {"r_bar", c.r_bar},
                   {"T_alpha", c.T_alpha}, {"sub_rate", c.sub_rate}, {"super_rate", c.super_rate}};
    j["D_leading"] = r.D_leading;
    j["C_tail"] = r.C_tail;
    j["kappa_discrepancy"] = r.kappa_discrepancy;
    j["glue"] = {{"min_gap", r.glue.min_gap}, {"worst", r.glue.worst}, {"ok", r.glue.ok}};
    j["notes"] = nlohmann::ordered_json::array();
    for (const auto& n : r.notes) j["notes"].push_back({{"stage", n.stage}, {"detail", n.detail}});
    j["reports"] = nlohmann::ordered_json::array();
    for (const auto& rep : r.reports) j["reports"].push_back(report_obj(rep));
    return j.dump(2);
}

PipelineResult pipeline_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PipelineResult r;
    r.constants = constants_from_json(j.at("constants").dump());
    const auto& c = j.at("collar");
    r.collar.m_minus = c.at("m_minus");
    r.collar.m_plus = c.at("m_plus");
    r.collar.alpha = c.at("alpha");
    r.collar.r_bar = c.at("r_bar");
    r.collar.T_alpha = c.at("T_alpha");
    r.collar.sub_rate = c.at("sub_rate");
    r.collar.super_rate = c.at("super_rate");
    r.D_leading = j.at("D_leading");
    r.C_tail = j.at("C_tail");
    r.kappa_discrepancy = j.at("kappa_discrepancy");
    r.glue.min_gap = j.at("glue").at("min_gap");
    r.glue.worst = j.at("glue").at("worst");
    r.glue.ok = j.at("glue").at("ok");
    for (const auto& n : j.at("notes")) r.notes.push_back({n.at("stage"), n.at("detail")});
    for (const auto& rep : j.at("reports")) r.reports.push_back(report_from(rep));
    return r;
}

} // namespace neckflow
