#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

using std::string;

namespace {

#ifndef AOI_SIM_CLI_PATH
#error "AOI_SIM_CLI_PATH must be defined by the build"
#endif

void shell(const string& cmd) {
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc == 0);
}

int run_cli(const string& args) {
    const string cmd = string(AOI_SIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

string slurp(const string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

string write_tiny_config(const string& name) {
    const string path = "/tmp/" + name;
    std::ofstream out(path);
    out << R"({
        "horizon_slots": 1500,
        "seed": 4,
        "experiment": {"replications": 2, "gamma_grid_ms": [0, 30, 60, 90]}
    })";
    return path;
}

}  // namespace

TEST_CASE("validate-config accepts the shipped config") {
    REQUIRE(run_cli("validate-config --config configs/default.json") == 0);
    REQUIRE(run_cli("validate-config --config configs/paper.toml") == 0);
}

TEST_CASE("missing or invalid configs exit with status 1") {
    REQUIRE(run_cli("validate-config --config /nonexistent.json") == 1);
    const string bad = "/tmp/aoi_sim_cli_bad.json";
    std::ofstream(bad) << "{\"flete\": {}}";
    REQUIRE(run_cli("validate-config --config " + bad) == 1);
    std::remove(bad.c_str());
}

TEST_CASE("unknown subcommands and flags are rejected") {
    REQUIRE(run_cli("frobnicate") != 0);
    REQUIRE(run_cli("sweep-mat --no-such-flag") != 0);
}

TEST_CASE("sweep-mat writes the expected CSV artifact") {
    const string cfg = write_tiny_config("aoi_sim_cli_sweep.json");
    const string outdir = "/tmp/aoi_sim_cli_out";
    shell(("rm -rf " + outdir + " && mkdir -p " + outdir).c_str());
    REQUIRE(run_cli("sweep-mat --config " + cfg + " --out " + outdir + " --format both") == 0);
    const string csv = slurp(outdir + "/sweep_mat.csv");
    REQUIRE(csv.rfind("gamma_ms,psnr_mean", 0) == 0);
    // Four grid points -> header plus four rows.
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 5);
    REQUIRE(slurp(outdir + "/sweep_mat_psnr.svg").find("<svg") == 0);
    std::remove(cfg.c_str());
    shell(("rm -rf " + outdir).c_str());
}

TEST_CASE("run subcommand emits per-slot records deterministically") {
    const string cfg = write_tiny_config("aoi_sim_cli_run.json");
    const string out_a = "/tmp/aoi_sim_cli_run_a";
    const string out_b = "/tmp/aoi_sim_cli_run_b";
    shell(("rm -rf " + out_a + " " + out_b + " && mkdir -p " + out_a + " " + out_b).c_str());
    REQUIRE(run_cli("run --config " + cfg + " --out " + out_a) == 0);
    REQUIRE(run_cli("run --config " + cfg + " --out " + out_b) == 0);
    const string a = slurp(out_a + "/run.csv");
    REQUIRE(a.rfind("slot,aoi_1", 0) == 0);
    REQUIRE(a == slurp(out_b + "/run.csv"));
    std::remove(cfg.c_str());
    shell(("rm -rf " + out_a + " " + out_b).c_str());
}
