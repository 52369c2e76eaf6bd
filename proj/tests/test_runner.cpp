#include "imjet/runner.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace imjet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("imjet_runner_" + name);
    fs::remove_all(d);
    return d;
}

json read(const fs::path& p) {
    std::ifstream is(p);
    return json::parse(is);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json sell_cfg() {
    return json{{"model", {{"name", "sell"}, {"K", 6}}},
                {"ladder", {{"n", 2}}},
                {"solver", {{"T", 8.0}, {"dt", 0.01}, {"tol", 1e-13}}},
                {"seed", 7}};
}

} // namespace

TEST_CASE("config validation names the offending path") {
    auto cfg = sell_cfg();
    CHECK_NOTHROW(validate_config(cfg));
    cfg["solver"]["bogus"] = 1;
    try {
        validate_config(cfg);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("solver") != std::string::npos);
    }
    auto bad_model = sell_cfg();
    bad_model["model"]["name"] = "navier-stokes";
    CHECK_THROWS_AS(validate_config(bad_model), SchemaError);
    auto bad_tasks = sell_cfg();
    bad_tasks["tasks"] = {"fly"};
    CHECK_THROWS_AS(validate_config(bad_tasks), SchemaError);
}

TEST_CASE("overrides and config hashes") {
    auto cfg = sell_cfg();
    apply_override(cfg, "model.K=8");
    apply_override(cfg, "output_dir=somewhere");
    CHECK(cfg["model"]["K"] == 8);
    CHECK(cfg["output_dir"] == "somewhere");
    const auto h = config_hash(cfg);
    CHECK(h.size() == 16);
    CHECK(h == config_hash(json::parse(cfg.dump())));
    apply_override(cfg, "ladder.epsilon=0.04");
    CHECK(h != config_hash(cfg));
}

TEST_CASE("empty task list writes only the manifest") {
    const auto out = scratch("empty");
    auto cfg = sell_cfg();
    cfg["tasks"] = json::array();
    CHECK(run_experiment(cfg, {out.string(), std::nullopt, std::nullopt}) == kExitOk);
    int files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(out)) ++files;
    CHECK(files == 1);
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("gap audit on reaction-diffusion with L = 3") {
    const auto out = scratch("gap");
    const json cfg{{"model", {{"name", "rds"}, {"a", 1.0}, {"K", 16}}}, {"ladder", {{"n", 1}, {"L", 3.0}}},
                   {"tasks", {"gap-audit"}}};
    CHECK(run_experiment(cfg, {out.string(), std::nullopt, std::nullopt}) == kExitOk);
    const auto rep = read(out / "gap-audit.report.json");
    CHECK(rep["N1"] == 3);
    CHECK(rep["theta_window"][0].get<double>() == doctest::Approx(12.0));
    CHECK(rep["theta_window"][1].get<double>() == doctest::Approx(13.0));
    CHECK(rep["config_hash"] == config_hash(cfg.contains("output_dir") ? cfg : [&] {
              json c = cfg;
              c["output_dir"] = out.string();
              return c;
          }()));
    CHECK(rep.contains("version"));
}

TEST_CASE("error exit codes") {
    auto schema = sell_cfg();
    schema["tasks"] = {"gap-audit"};
    schema["unknown"] = true;
    const auto out = scratch("schema");
    CHECK(run_experiment(schema, {out.string(), std::nullopt, std::nullopt}) == kExitSchema);
    CHECK(read(out / "error.report.json")["exit_code"] == kExitSchema);

    auto ladder = sell_cfg();
    ladder["ladder"]["n"] = 3;
    ladder["tasks"] = {"gap-audit"};
    const auto out3 = scratch("ladder");
    CHECK(run_experiment(ladder, {out3.string(), std::nullopt, std::nullopt}) == kExitLadder);
    CHECK(read(out3 / "error.report.json")["kind"] == "infeasible_ladder");
}

TEST_CASE("output directory is locked during a run") {
    const auto out = scratch("lock");
    fs::create_directories(out);
    std::ofstream(out / ".imjet.lock").put('x');
    auto cfg = sell_cfg();
    cfg["tasks"] = json::array();
    CHECK(run_experiment(cfg, {out.string(), std::nullopt, std::nullopt}) == kExitSchema);
    fs::remove(out / ".imjet.lock");
    CHECK(run_experiment(cfg, {out.string(), std::nullopt, std::nullopt}) == kExitOk);
    CHECK_FALSE(fs::exists(out / ".imjet.lock"));
}

TEST_CASE("jets reuse the trajectory cache written by build-im") {
    const auto out = scratch("cache");
    auto cfg = sell_cfg();
    cfg["task_options"] = {{"build-im", {{"base_points", {0.05, 0.1}}, {"norm_check", false}}},
                           {"jets", {{"base_points", {0.05, 0.1}}}}};
    cfg["tasks"] = {"build-im"};
    CHECK(run_experiment(cfg, {out.string(), std::nullopt, std::nullopt}) == kExitOk);
    cfg["tasks"] = {"jets"};
    CHECK(run_experiment(cfg, {out.string(), std::nullopt, std::nullopt}) == kExitOk);
    const auto rep = read(out / "jets.report.json");
    CHECK(rep["cache_hits"] == 2);
    CHECK(read(out / "jets.json")["jets"].size() == 2);
}

TEST_CASE("reports are byte-identical across reruns") {
    auto cfg = sell_cfg();
    cfg["tasks"] = {"track"};
    cfg["task_options"] = {{"track", {{"seeds", 2}, {"extended", false}}}};
    const auto a = scratch("det_a"), b = scratch("det_b");
    run_experiment(cfg, {a.string(), std::nullopt, std::nullopt});
    run_experiment(cfg, {b.string(), std::nullopt, std::nullopt});
    // The output directory is part of the config, so compare everything but the hash line.
    auto strip = [](std::string s) {
        const auto k = s.find("\"config_hash\"");
        return s.erase(k, s.find('\n', k) - k);
    };
    CHECK(strip(slurp(a / "track.report.json")) == strip(slurp(b / "track.report.json")));
    CHECK(slurp(a / "track.csv") == slurp(b / "track.csv"));
}

TEST_CASE("command-line entry point") {
    const char* cli = std::getenv("IMJET_CLI");
    if (!cli) {
        MESSAGE("IMJET_CLI not set; skipping");
        return;
    }
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    auto cfg = sell_cfg();
    cfg["tasks"] = {"gap-audit"};
    std::ofstream(dir / "cfg.json") << cfg.dump();
    const auto run = [&](const std::string& args) {
        const int status = std::system((std::string(cli) + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    const std::string c = (dir / "cfg.json").string();
    CHECK(run("run --config " + c + " --out " + (dir / "a").string()) == 0);
    CHECK(fs::exists(dir / "a" / "gap-audit.report.json"));
    CHECK(run("gap-audit --config " + c + " --out " + (dir / "b").string() + " --set ladder.n=3") == 3);
    CHECK(run("run --config " + c + " --out " + (dir / "c").string() + " --set solver.nope=1") == 2);
    CHECK(run("run --config " + c + " --out " + (dir / "d").string() + " --tasks gap-audit,sell-demo --seed 3") == 0);
    CHECK(read(dir / "d" / "manifest.json")["config"]["seed"] == 3);
    CHECK(run("compat-check --config " + c + " --out " + (dir / "e").string() + " --order 2") == 0);
    const auto rep = read(dir / "e" / "compat-check.report.json");
    CHECK(rep["compat"].contains("slope"));
    CHECK(rep["compat"].contains("threshold"));
}
