#include "neckflow/artifacts.hpp"
#include "neckflow/barriers.hpp"
#include "neckflow/config.hpp"
#include "neckflow/flow.hpp"
#include "neckflow/profiles.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>

using namespace neckflow;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
    std::string config_path;
    std::string out;
    int jobs = 1;
    std::map<std::string, std::string> overrides;
};

// Every config key becomes --<last component>, e.g. --k or --epsilon.
void add_overrides(CLI::App* cmd, Globals& g) {
    for (const auto& key : config_keys()) {
        if (key == "output.dir") continue;
        const std::string flag = "--" + key.substr(key.find('.') + 1);
        cmd->add_option_function<std::string>(flag, [&g, key](const std::string& v) { g.overrides[key] = v; },
                                              "override " + key);
    }
}

RunConfig resolve(const Globals& g, FlowParams& p) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = load_config(g.config_path);
    for (const auto& [k, v] : g.overrides) set_config_value(cfg, k, v);
    if (!g.out.empty()) cfg.out_dir = g.out;
    p = validate_config(cfg);
    return cfg;
}

Profiles load_profiles(const fs::path& root) {
    auto B = std::make_shared<SolitonProfile>(SolitonProfile::load(require_stage(root, "bryant", "bryant")));
    auto C = std::make_shared<CorrectionProfile>(
        CorrectionProfile::load(require_stage(root, "correction", "correction"), B));
    return {B, C};
}

PipelineResult load_pipeline(const fs::path& root) {
    return pipeline_from_json(read_text(require_stage(root, "barriers", "barriers") / "pipeline.json"));
}

ojson params_obj(const FlowParams& p) {
    ojson j;
    j["n"] = p.n;
    if (p.k) j["k"] = *p.k;
    j["b"] = p.b;
    j["a"] = p.a;
    j["kappa0"] = p.kappa0;
    j["curvature_exponent"] = -(1 + p.b);
    return j;
}

int cmd_params(const RunConfig& cfg, const FlowParams& p) {
    const ojson j = params_obj(p);
    const fs::path dir = new_stage_dir(cfg.out_dir, "params");
    write_text(dir / "params.json", j.dump(2) + "\n");
    write_manifest(dir, "params", cfg);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bryant(const RunConfig& cfg, const FlowParams& p) {
    const SolitonProfile B = solve_bryant(p, cfg.sigma_max, cfg.ode_tol);
    const fs::path dir = new_stage_dir(cfg.out_dir, "bryant");
    B.save(dir);
    ojson r{{"b2", B.b2}, {"b2_error", B.b2_error}, {"b4", B.b4}, {"c_inf", B.c_inf},
            {"table_residual", B.table_residual()}};
    write_manifest(dir, "bryant", cfg, r.dump());
    std::printf("bryant: b2=%s (+-%s) written to %s\n", fmt17(B.b2).c_str(), fmt17(B.b2_error).c_str(),
                dir.string().c_str());
    return 0;
}

int cmd_correction(const RunConfig& cfg, const FlowParams& p) {
    auto B = std::make_shared<SolitonProfile>(SolitonProfile::load(require_stage(cfg.out_dir, "bryant", "bryant")));
    const CorrectionProfile C = solve_correction(B, p, cfg.sigma_max);
    const fs::path dir = new_stage_dir(cfg.out_dir, "correction");
    C.save(dir);
    ojson r{{"M", C.M}, {"tail_value", C.tail_value}, {"discrete_residual", correction_discrete_residual(C)}};
    write_manifest(dir, "correction", cfg, r.dump());
    std::printf("correction: M=%s tail=%s written to %s\n", fmt17(C.M).c_str(), fmt17(C.tail_value).c_str(),
                dir.string().c_str());
    return 0;
}

int cmd_barriers(const RunConfig& cfg, const FlowParams& p) {
    const Profiles prof = load_profiles(cfg.out_dir);
    const PipelineResult res = run_pipeline(pipeline_config(cfg), prof, p);
    const fs::path dir = new_stage_dir(cfg.out_dir, "barriers");
    write_text(dir / "pipeline.json", pipeline_json(res) + "\n");
    write_text(dir / "constants.json", constants_json(res.constants) + "\n");
    bool ok = res.glue.ok;
    for (const auto& r : res.reports) ok = ok && r.pass;
    write_manifest(dir, "barriers", cfg, ojson{{"pass", ok}}.dump());
    std::cout << constants_json(res.constants) << "\n";
    for (const auto& n : res.notes) std::printf("note [%s]: %s\n", n.stage.c_str(), n.detail.c_str());
    if (!ok) {
        std::fprintf(stderr, "certification failed; see %s\n", (dir / "pipeline.json").string().c_str());
        return 1;
    }
    return 0;
}

int cmd_verify(const RunConfig& cfg, const FlowParams& p, const std::string& family) {
    const Profiles prof = load_profiles(cfg.out_dir);
    const PipelineResult res = load_pipeline(cfg.out_dir);
    const FamilySet set = build_families(res, prof, p);
    const SearchControls sc = pipeline_config(cfg).search;
    const fs::path dir = new_stage_dir(cfg.out_dir, "verify");
    ojson reps = ojson::array();
    bool ok = true, any = false;
    for (const auto& f : set.families) {
        if (family != "all" && to_string(f.kind) != family) continue;
        any = true;
        const CertificationReport r = verify_refined(f, family_grid(f, res, sc), sc.refine, p);
        ok = ok && r.pass;
        reps.push_back(ojson::parse(report_json(r)));
        std::printf("%-16s %s min_margin=%s samples=%ld\n", r.family.c_str(), r.pass ? "pass" : "FAIL",
                    fmt17(r.min_margin).c_str(), r.samples);
    }
    if (!any) throw Error(ErrorKind::usage, "unknown family '" + family + "' (outer, parabolic, inner, collar, all)");
    write_text(dir / "reports.json", reps.dump(2) + "\n");
    write_manifest(dir, "verify", cfg, ojson{{"family", family}, {"pass", ok}}.dump());
    if (!ok) {
        std::fprintf(stderr, "certification failed; see %s\n", (dir / "reports.json").string().c_str());
        return 1;
    }
    return 0;
}

int cmd_evolve(const RunConfig& cfg, const FlowParams& p, double omega) {
    const Profiles prof = load_profiles(cfg.out_dir);
    std::optional<PipelineResult> res;
    if (latest_stage_dir(cfg.out_dir, "barriers")) res = load_pipeline(cfg.out_dir);
    const double rho_star = res ? res->constants.rho_star : 2.0 / std::sqrt(cfg.epsilon);
    const InitialProfile init = build_initial(initial_spec(cfg, p));
    RegularizationParams rp;
    rp.omega = omega;
    rp.rho_star = rho_star;
    RegularizationReport rep;
    std::optional<CompositeBarrier> comp;
    if (res) comp.emplace(res->constants, prof, p);
    const InitialProfile reg = regularize(init, rp, comp ? &*comp : nullptr, prof, &rep);
    GaugeSpec g;
    g.track_tip = true;
    g.omega = omega;
    g.tip_fraction = cfg.tip_fraction;
    Trajectory tr = evolve(discretize(reg, std::size_t(cfg.nodes), g), evolve_controls(cfg));
    ojson r{{"omega", omega}, {"steps", tr.steps}, {"rejected", tr.rejected}, {"max_slope", tr.max_slope_all},
            {"A_ratio", rep.A_ratio}, {"halted", tr.halted}};
    std::string trap_note = rep.note;
    if (comp) {
        const TrappingSeries ts = monitor_trapping(tr, *comp, res->collar, omega, p);
        for (std::size_t i = 0; i < ts.t.size() && i < tr.diag.size(); ++i) {
            tr.diag[i].trap_lower = ts.lower[i];
            tr.diag[i].trap_upper = ts.upper[i];
        }
        if (!ts.applicable) trap_note = ts.note;
        else r["trap_min_margin"] = ts.min_margin;
    } else {
        trap_note = "no barrier constants; run `neckflow barriers` to enable trapping checks";
    }
    r["trapping_note"] = trap_note;
    const fs::path dir = new_stage_dir(cfg.out_dir, "evolve");
    write_trajectory(dir, tr);
    write_manifest(dir, "evolve", cfg, r.dump());
    std::printf("evolve: %ld steps, max |psi_s| = %.12f, written to %s\n", tr.steps, tr.max_slope_all,
                dir.string().c_str());
    if (!trap_note.empty()) std::printf("trapping: %s\n", trap_note.c_str());
    if (tr.halted) {
        std::fprintf(stderr, "run halted: %s\n", tr.halt_reason.c_str());
        return 3;
    }
    return 0;
}

std::vector<std::pair<double, double>> read_curvature(const fs::path& file) {
    std::istringstream is(read_text(file));
    std::string line;
    std::getline(is, line);
    if (line.rfind("t,sup_curv", 0) != 0) throw Error(ErrorKind::usage, "bad diagnostics header in " + file.string());
    std::vector<std::pair<double, double>> s;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string a, b;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        const double t = std::stod(a);
        if (t > 0.0) s.emplace_back(t, std::stod(b));
    }
    return s;
}

int cmd_rate(const RunConfig& cfg, const FlowParams& p, const std::string& window) {
    const auto colon = window.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::usage, "--window expects lo:hi");
    const double lo = std::stod(window.substr(0, colon)), hi = std::stod(window.substr(colon + 1));
    const fs::path run = require_stage(cfg.out_dir, "evolve", "evolve");
    const RateFit f = fit_rate(read_curvature(run / "diagnostics.csv"), lo, hi);
    const fs::path dir = new_stage_dir(cfg.out_dir, "rate");
    ojson j{{"run", run.string()},   {"window", {lo, hi}},          {"slope", f.slope},
            {"intercept", f.intercept}, {"rms", f.rms},             {"points", f.points},
            {"predicted", -(1 + p.b)}, {"deviation", f.slope + 1 + p.b}};
    write_text(dir / "rate.json", j.dump(2) + "\n");
    write_manifest(dir, "rate", cfg, j.dump());
    std::printf("rate: slope=%.6f predicted=%.6f over [%g, %g] (%d points)\n", f.slope, -(1 + p.b), lo, hi, f.points);
    return 0;
}

int cmd_converge(const RunConfig& cfg, const FlowParams& p, int jobs) {
    const Profiles prof = load_profiles(cfg.out_dir);
    std::optional<PipelineResult> res;
    if (latest_stage_dir(cfg.out_dir, "barriers")) res = load_pipeline(cfg.out_dir);
    const double rho_star = res ? res->constants.rho_star : 2.0 / std::sqrt(cfg.epsilon);
    const InitialProfile init = build_initial(initial_spec(cfg, p));
    const auto runs = omega_runs(init, cfg.omegas, rho_star, prof, std::size_t(cfg.nodes), evolve_controls(cfg), jobs);
    const ConvergenceReport rep = convergence_distances(runs, cfg.omegas, 0.05, 0.01, cfg.r_star, rho_star);
    bool ok = rep.initial_outer_distance == 0.0;
    for (std::size_t i = 0; i < rep.ratios.size(); ++i) ok = ok && rep.ratios[i] >= 1.5;
    ojson j{{"omegas", rep.omegas}, {"distances", rep.distances}, {"ratios", rep.ratios},
            {"initial_outer_distance", rep.initial_outer_distance}, {"pass", ok}};
    const fs::path dir = new_stage_dir(cfg.out_dir, "converge");
    write_text(dir / "convergence.json", j.dump(2) + "\n");
    write_manifest(dir, "converge", cfg, j.dump());
    for (std::size_t i = 0; i < rep.distances.size(); ++i)
        std::printf("d(omega=%g, %g) = %s\n", rep.omegas[i], rep.omegas[i + 1], fmt17(rep.distances[i]).c_str());
    if (!ok) {
        std::fprintf(stderr, "convergence criterion failed; see %s\n", (dir / "convergence.json").string().c_str());
        return 1;
    }
    return 0;
}

ojson maybe_json(const fs::path& root, const std::string& stage, const std::string& file) {
    const auto d = latest_stage_dir(root, stage);
    if (!d || !fs::exists(*d / file)) return nullptr;
    return ojson::parse(read_text(*d / file));
}

int cmd_report(const RunConfig& cfg, const FlowParams& p) {
    const ojson pipe = maybe_json(cfg.out_dir, "barriers", "pipeline.json");
    if (pipe.is_null()) throw Error(ErrorKind::usage, "missing barriers artifacts; run `neckflow barriers` first");
    const ojson verify = maybe_json(cfg.out_dir, "verify", "reports.json");
    const ojson rate = maybe_json(cfg.out_dir, "rate", "rate.json");
    const ojson conv = maybe_json(cfg.out_dir, "converge", "convergence.json");
    // latest verify results override the pipeline's own reports family by family
    ojson reports = pipe["reports"];
    if (!verify.is_null())
        for (const auto& v : verify)
            for (auto& r : reports)
                if (r["family"] == v["family"]) r = v;
    const auto& c = pipe["constants"];
    auto status = [&](const std::string& name) -> std::string {
        for (const auto& r : reports)
            if (r["family"] == name) return std::string(r["pass"] ? "pass" : "FAIL") + " (" + fmt17(r["min_margin"].get<double>()) + ")";
        return "n/a";
    };
    std::string md = "| region | barrier | domain | constants | sub | super |\n|---|---|---|---|---|---|\n";
    md += "| outer | (1+-delta) v0 + (1+-eps) t F[(1+-delta) v0] | rho* sqrt(t) < r < r* | delta=" +
          fmt17(c["delta"]) + ", eps=" + fmt17(c["epsilon"]) + ", rho*=" + fmt17(c["rho_star"]) + " | " +
          status("outer_sub") + " | " + status("outer_super") + " |\n";
    md += "| parabolic | (1+-gamma) v_para e^{b tau} +- D rho^-4 e^{2 b tau} | sigma* e^{b tau/2} < rho < 3 rho* | gamma+=" +
          fmt17(c["gamma_plus"]) + ", gamma-=" + fmt17(c["gamma_minus"]) + ", D=" + fmt17(c["D"]) + " | " +
          status("parabolic_sub") + " | " + status("parabolic_super") + " |\n";
    md += "| inner | B(kappa sigma) + (1-+eps) theta theta_t kappa^-2 C(kappa sigma) | 0 < sigma < 3 sigma* | kappa+=" +
          fmt17(c["kappa_plus"]) + ", kappa-=" + fmt17(c["kappa_minus"]) + ", sigma*=" + fmt17(c["sigma_star"]) +
          " | " + status("inner_sub") + " | " + status("inner_super") + " |\n";
    md += "| collar | m +- rate t near r_bar | |r - r_bar| < alpha, t < T_alpha | T_alpha=" +
          fmt17(pipe["collar"]["T_alpha"]) + " | " + status("collar_sub") + " | " + status("collar_super") + " |\n";
    md += "\nt* = " + fmt17(c["t_star"]) + ", tau* = " + fmt17(c["tau_star"]) + "\n";
    md += "\n| quantity | predicted | measured |\n|---|---|---|\n";
    md += "| curvature exponent | " + fmt17(-(1 + p.b)) + " | " + (rate.is_null() ? "n/a" : fmt17(rate["slope"])) + " |\n";
    if (!conv.is_null()) {
        md += "| omega-distance ratios | >= 1.5 | ";
        for (const auto& r : conv["ratios"]) md += fmt17(r) + " ";
        md += "|\n";
    }
    ojson summary{{"params", params_obj(p)}, {"constants", c}, {"reports", reports}, {"rate", rate}, {"convergence", conv}};
    const fs::path dir = new_stage_dir(cfg.out_dir, "report");
    write_text(dir / "summary.md", md);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_manifest(dir, "report", cfg);
    std::cout << md;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ricci flow out of a degenerate neckpinch: profiles, barriers, flow"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "key = value config file");
    app.add_option("--out", g.out, "run directory root");
    app.add_option("--jobs", g.jobs, "worker threads for omega runs")->check(CLI::PositiveNumber);

    std::string family = "all", window = "1e-2:1e-1";
    double omega = -1.0;
    auto* params = app.add_subcommand("params", "derive and print the exponent constants");
    auto* bryant = app.add_subcommand("bryant", "solve the soliton profile");
    auto* correction = app.add_subcommand("correction", "solve the correction profile");
    auto* barriers = app.add_subcommand("barriers", "select constants and certify all barrier families");
    auto* verify = app.add_subcommand("verify", "re-certify barrier families from stored constants");
    verify->add_option("--family", family, "outer, parabolic, inner, collar or all");
    auto* evolve_cmd = app.add_subcommand("evolve", "evolve one regularized run");
    evolve_cmd->add_option("--omega", omega, "regularization scale (default: first of flow.omegas)");
    auto* rate = app.add_subcommand("rate", "fit the curvature exponent of the latest run");
    rate->add_option("--window", window, "t_lo:t_hi");
    auto* converge = app.add_subcommand("converge", "omega convergence study");
    auto* report = app.add_subcommand("report", "aggregate certification and exponents");
    for (auto* c : {params, bryant, correction, barriers, verify, evolve_cmd, rate, converge, report}) {
        add_overrides(c, g);
        c->add_option("--out", g.out, "run directory root");
        c->add_option("--config", g.config_path, "key = value config file");
        c->add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        FlowParams p;
        const RunConfig cfg = resolve(g, p);
        if (params->parsed()) return cmd_params(cfg, p);
        if (bryant->parsed()) return cmd_bryant(cfg, p);
        if (correction->parsed()) return cmd_correction(cfg, p);
        if (barriers->parsed()) return cmd_barriers(cfg, p);
        if (verify->parsed()) return cmd_verify(cfg, p, family);
        if (evolve_cmd->parsed()) return cmd_evolve(cfg, p, omega > 0.0 ? omega : cfg.omegas.front());
        if (rate->parsed()) return cmd_rate(cfg, p, window);
        if (converge->parsed()) return cmd_converge(cfg, p, g.jobs);
        if (report->parsed()) return cmd_report(cfg, p);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.kind()) {
        case ErrorKind::usage: return 2;
        case ErrorKind::certification: return 1;
        case ErrorKind::numerical: return 3;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}
