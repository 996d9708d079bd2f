#pragma once

#include "neckflow/barriers.hpp"
#include "neckflow/core_model.hpp"
#include "neckflow/flow.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace neckflow {

/// Every tunable of a run; defaults give the n=2, k=3 scenario.
struct RunConfig {
    int n = 2;
    int k = 3;
    std::optional<double> b;

    double sigma_max = 200.0;
    double ode_tol = 1e-12;

    double epsilon = 0.1;
    double delta = 0.1;
    double r_star = 0.5;
    double rho_cap_factor = 1024.0;
    double sigma_cap = 1e7;
    int grid_nr = 200;
    int grid_nt = 200;
    int refine = 4;

    int nodes = 512;
    double R_cap = 2.0;
    double power_c = 0.0;
    std::vector<double> omegas{1e-3, 5e-4, 2.5e-4};
    double t_end = 0.1;
    double t_first = 1e-4;
    int per_decade = 10;
    double tip_fraction = 0.1;

    std::string out_dir = "runs";
};

/// Dotted key list in canonical order.
const std::vector<std::string>& config_keys();

/// Set one dotted key from text; throws usage errors on unknown keys or bad values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// key = value lines; '#' comments; [section] headers prefix later keys.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& file, RunConfig base = {});
/// Canonical text; parse_config(to_text(c)) reproduces c.
std::string config_text(const RunConfig& cfg);
/// Range checks plus the parameter derivation.
FlowParams validate_config(const RunConfig& cfg);

PipelineConfig pipeline_config(const RunConfig& cfg);
InitialDataSpec initial_spec(const RunConfig& cfg, const FlowParams& p);
EvolveControls evolve_controls(const RunConfig& cfg);

} // namespace neckflow
