#include "neckflow/artifacts.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace neckflow {

namespace fs = std::filesystem;

namespace {

int version_of(const fs::path& p) {
    const std::string name = p.filename().string();
    if (name.size() != 4 || name[0] != 'v') return -1;
    for (std::size_t i = 1; i < 4; ++i)
        if (name[i] < '0' || name[i] > '9') return -1;
    return std::stoi(name.substr(1));
}

} // namespace

std::optional<fs::path> latest_stage_dir(const fs::path& root, const std::string& stage) {
    const fs::path base = root / stage;
    if (!fs::is_directory(base)) return std::nullopt;
    int best = -1;
    for (const auto& e : fs::directory_iterator(base))
        if (e.is_directory() && fs::exists(e.path() / "manifest.json")) best = std::max(best, version_of(e.path()));
    if (best < 0) return std::nullopt;
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%03d", best);
    return base / buf;
}

fs::path new_stage_dir(const fs::path& root, const std::string& stage) {
    const fs::path base = root / stage;
    fs::create_directories(base);
    int next = 1;
    for (const auto& e : fs::directory_iterator(base)) next = std::max(next, version_of(e.path()) + 1);
    if (next > 999) throw Error(ErrorKind::usage, "too many versions under " + base.string());
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%03d", next);
    const fs::path dir = base / buf;
    fs::create_directory(dir);
    return dir;
}

fs::path require_stage(const fs::path& root, const std::string& stage, const std::string& producer) {
    auto d = latest_stage_dir(root, stage);
    if (!d) throw Error(ErrorKind::usage, "missing " + stage + " artifacts under " + root.string() + "; run `neckflow " + producer + "` first");
    return *d;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::string& extra_json) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["compiler"] = __VERSION__;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char ts[32];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["created_utc"] = ts;
    nlohmann::ordered_json c;
    for (const auto& k : config_keys()) c[k] = get_config_value(cfg, k);
    j["config"] = c;
    j["result"] = nlohmann::ordered_json::parse(extra_json);
    write_text(dir / "manifest.json", j.dump(2) + "\n");
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error(ErrorKind::usage, "cannot write " + file.string());
    os << text;
}

std::string read_text(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw Error(ErrorKind::usage, "cannot read " + file.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace neckflow
