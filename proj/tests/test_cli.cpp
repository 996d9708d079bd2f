#include "neckflow/artifacts.hpp"
#include "neckflow/config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

using namespace neckflow;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

/// Run the CLI with arguments, capturing stdout and stderr together.
Run cli(const std::string& args, const fs::path& root) {
    const fs::path log = root / "cli.log";
    const std::string cmd = std::string(NECKFLOW_CLI) + " " + args + " --out " + root.string() + " > " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = read_text(log);
    return r;
}

fs::path fresh_root(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("config text round trip") {
    RunConfig c;
    c.n = 3;
    c.k = 7;
    c.b = 0.42;
    c.omegas = {2e-3, 1e-3};
    c.tip_fraction = 0.05;
    c.out_dir = "elsewhere";
    const RunConfig d = parse_config(config_text(c));
    CHECK(config_text(d) == config_text(c));
    for (const auto& k : config_keys()) CHECK(get_config_value(d, k) == get_config_value(c, k));
}

TEST_CASE("config sections, comments and errors") {
    const RunConfig c = parse_config("# comment\n[params]\nn = 4\nk = 5\n\n[flow]\nnodes = 256 # trailing\nomegas = 1e-3, 5e-4\n");
    CHECK(c.n == 4);
    CHECK(c.k == 5);
    CHECK(c.nodes == 256);
    CHECK(c.omegas == std::vector<double>{1e-3, 5e-4});
    CHECK_THROWS_AS(parse_config("[params]\nbogus = 1\n"), Error);
    CHECK_THROWS_AS(parse_config("params.n = two\n"), Error);
    CHECK_THROWS_AS(parse_config("just text\n"), Error);
    RunConfig bad;
    bad.k = 4;
    CHECK_THROWS_WITH_AS(validate_config(bad), "k must be odd", Error);
}

TEST_CASE("stage directories are append-only") {
    const fs::path root = fresh_root("nf_stage_rt");
    CHECK_FALSE(latest_stage_dir(root, "bryant"));
    const fs::path a = new_stage_dir(root, "bryant");
    CHECK(a.filename() == "v001");
    CHECK_FALSE(latest_stage_dir(root, "bryant"));
    write_manifest(a, "bryant", RunConfig{});
    CHECK(*latest_stage_dir(root, "bryant") == a);
    CHECK(new_stage_dir(root, "bryant").filename() == "v002");
    const auto j = nlohmann::json::parse(read_text(a / "manifest.json"));
    CHECK(j["command"] == "bryant");
    CHECK(j["version"] == kVersion);
    CHECK(j.contains("created_utc"));
    CHECK_THROWS_AS(require_stage(root, "barriers", "barriers"), Error);
    fs::remove_all(root);
}

TEST_CASE("command line exit codes and messages") {
    const fs::path root = fresh_root("nf_cli_codes");
    Run r = cli("params --k 4", root);
    CHECK(r.code == 2);
    CHECK(r.out.find("k must be odd") != std::string::npos);
    r = cli("params", root);
    CHECK(r.code == 0);
    CHECK(r.out.find("kappa0") != std::string::npos);
    r = cli("frobnicate", root);
    CHECK(r.code == 2);
    r = cli("rate", root);
    CHECK(r.code == 2);
    CHECK(r.out.find("neckflow evolve") != std::string::npos);
    r = cli("correction", root);
    CHECK(r.code == 2);
    CHECK(r.out.find("neckflow bryant") != std::string::npos);
    fs::remove_all(root);
}

TEST_CASE("profile and barrier stages produce artifacts") {
    const fs::path root = fresh_root("nf_cli_chain");
    CHECK(cli("bryant", root).code == 0);
    CHECK(cli("correction", root).code == 0);
    CHECK(cli("barriers", root).code == 0);
    const fs::path b = *latest_stage_dir(root, "barriers");
    CHECK(fs::exists(b / "pipeline.json"));
    CHECK(fs::exists(b / "constants.json"));
    const Run v = cli("verify --family outer", root);
    CHECK(v.code == 0);
    CHECK(cli("verify --family nonsense", root).code == 2);
    const Run rep = cli("report", root);
    CHECK(rep.code == 0);
    CHECK(fs::exists(*latest_stage_dir(root, "report") / "summary.md"));
    fs::remove_all(root);
}

}
