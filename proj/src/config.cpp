#include "neckflow/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace neckflow {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    std::size_t used = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw Error(ErrorKind::usage, key + ": expected a number, got '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    int x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw Error(ErrorKind::usage, key + ": expected an integer, got '" + v + "'");
    return x;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw Error(ErrorKind::usage, key + ": empty list");
    return out;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define NF_DOUBLE(K, M) \
    Field{K, [](RunConfig& c, const std::string& v) { c.M = to_double(K, v); }, [](const RunConfig& c) { return fmt17(c.M); }}
#define NF_INT(K, M) \
    Field{K, [](RunConfig& c, const std::string& v) { c.M = to_int(K, v); }, \
          [](const RunConfig& c) { return std::to_string(c.M); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        NF_INT("params.n", n),
        NF_INT("params.k", k),
        Field{"params.b",
              [](RunConfig& c, const std::string& v) {
                  if (v.empty() || v == "none") c.b.reset();
                  else c.b = to_double("params.b", v);
              },
              [](const RunConfig& c) { return c.b ? fmt17(*c.b) : std::string("none"); }},
        NF_DOUBLE("profiles.sigma_max", sigma_max),
        NF_DOUBLE("profiles.ode_tol", ode_tol),
        NF_DOUBLE("barriers.epsilon", epsilon),
        NF_DOUBLE("barriers.delta", delta),
        NF_DOUBLE("barriers.r_star", r_star),
        NF_DOUBLE("barriers.rho_cap_factor", rho_cap_factor),
        NF_DOUBLE("barriers.sigma_cap", sigma_cap),
        NF_INT("barriers.grid_nr", grid_nr),
        NF_INT("barriers.grid_nt", grid_nt),
        NF_INT("barriers.refine", refine),
        NF_INT("flow.nodes", nodes),
        NF_DOUBLE("flow.R_cap", R_cap),
        NF_DOUBLE("flow.power_c", power_c),
        Field{"flow.omegas", [](RunConfig& c, const std::string& v) { c.omegas = to_list("flow.omegas", v); },
              [](const RunConfig& c) {
                  std::string s;
                  for (std::size_t i = 0; i < c.omegas.size(); ++i) s += (i ? "," : "") + fmt17(c.omegas[i]);
                  return s;
              }},
        NF_DOUBLE("flow.t_end", t_end),
        NF_DOUBLE("flow.t_first", t_first),
        NF_INT("flow.per_decade", per_decade),
        NF_DOUBLE("flow.tip_fraction", tip_fraction),
        Field{"output.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
              [](const RunConfig& c) { return c.out_dir; }},
    };
    return f;
}

#undef NF_DOUBLE
#undef NF_INT

const Field& find_field(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return f;
    throw Error(ErrorKind::usage, "unknown config key '" + key + "'");
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    find_field(key).set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorKind::usage, "line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::usage, "line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        set_config_value(base, key, trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& file, RunConfig base) {
    std::ifstream is(file);
    if (!is) throw Error(ErrorKind::usage, "cannot read config " + file.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string config_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

FlowParams validate_config(const RunConfig& c) {
    const FlowParams p = c.b ? derive_params_b(c.n, *c.b) : derive_params(c.n, c.k);
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw Error(ErrorKind::usage, msg);
    };
    need(c.sigma_max >= 50.0, "profiles.sigma_max must be >= 50");
    need(c.ode_tol > 0.0 && c.ode_tol < 1e-4, "profiles.ode_tol must lie in (0, 1e-4)");
    need(c.epsilon > 0.0 && c.epsilon < 1.0, "barriers.epsilon must lie in (0,1)");
    need(c.delta > 0.0 && c.delta < 1.0, "barriers.delta must lie in (0,1)");
    need(c.r_star > 0.0 && c.r_star < 1.0, "barriers.r_star must lie in (0,1)");
    need(c.grid_nr >= 2 && c.grid_nt >= 2 && c.refine >= 1, "barrier grid too small");
    need(c.nodes >= 8, "flow.nodes must be >= 8");
    need(c.R_cap > 0.9, "flow.R_cap must exceed the blend end 0.9");
    for (double w : c.omegas) need(w > 0.0, "flow.omegas must be positive");
    need(c.t_end > 0.0 && c.t_first > 0.0 && c.per_decade >= 1, "flow snapshot schedule invalid");
    need(c.tip_fraction > 0.0, "flow.tip_fraction must be positive");
    return p;
}

PipelineConfig pipeline_config(const RunConfig& c) {
    PipelineConfig pc;
    pc.epsilon = c.epsilon;
    pc.delta = c.delta;
    pc.r_star = c.r_star;
    pc.collar.r_bar = c.r_star;
    pc.search.nr = c.grid_nr;
    pc.search.nt = c.grid_nt;
    pc.search.refine = c.refine;
    pc.search.rho_cap_factor = c.rho_cap_factor;
    pc.search.sigma_cap = c.sigma_cap;
    return pc;
}

InitialDataSpec initial_spec(const RunConfig& c, const FlowParams& p) {
    InitialDataSpec s;
    s.params = p;
    s.power_c = c.power_c;
    s.R_cap = c.R_cap;
    return s;
}

EvolveControls evolve_controls(const RunConfig& c) {
    EvolveControls e;
    e.t_end = c.t_end;
    e.t_first = c.t_first;
    e.per_decade = c.per_decade;
    return e;
}

} // namespace neckflow
