// Integration tests that drive the knnball-lab executable end to end: exit
// codes, the shape of the JSON/CSV reports, byte-for-byte determinism across
// repeated and multi-threaded runs, config-file handling, and the plain-text
// subcommands (rate-function, regime, sample).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "knnball/analytic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
};

// Runs the lab binary with `args`, capturing stdout; stderr is discarded.
CmdResult run_cmd(const std::string& args) {
    const std::string cmd = std::string("\"") + KNNBALL_LAB_BIN + "\" " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("knnball_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// The tool prints plain numbers with %.17g; reproduce that exactly.
std::string printed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    return buf;
}

std::size_t count_occ(const std::string& s, const std::string& needle) {
    std::size_t c = 0, pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        ++c;
        pos += needle.size();
    }
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// plain-text subcommands
// ---------------------------------------------------------------------------

TEST_CASE("rate-function prints analytic values one per line") {
    CmdResult r = run_cmd("rate-function --x 1.0");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "0\n");  // I_1(alpha_1) with alpha_1 = 1

    r = run_cmd("rate-function --alpha --k 3");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "0.5\n");  // 1/2!

    r = run_cmd("rate-function --entropy 1.0");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "0\n");

    // alpha first, then the rates, then the entropy values
    r = run_cmd("rate-function --alpha --x 1.0 --entropy 1.0");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "1\n0\n0\n");

    // %.17g round-trips of in-process values
    r = run_cmd("rate-function --x 2.0");
    CHECK(r.out == printed(knnball::rate_I_k(2.0, 1, 0.0)));
    r = run_cmd("rate-function --entropy 2.0");
    CHECK(r.out == printed(knnball::entropy_H(2.0)));
    r = run_cmd("rate-function --alpha --k 4 --s0 1.0");
    CHECK(r.out == printed(knnball::alpha_k(4, 1.0)));

    // asking for nothing is an error
    r = run_cmd("rate-function");
    CHECK(r.exit_code == 1);
}

TEST_CASE("regime classifies schedules from the ladder trend") {
    CmdResult r = run_cmd("regime --n 100 1000 10000 --a-rule frac-log --a-param 0.6");
    CHECK(r.exit_code == 0);
    CHECK(count_occ(r.out, "n=") == 3);
    CHECK(count_occ(r.out, "slope_per_decade=") == 1);
    CHECK(r.out.find("regime=ldp\n") != std::string::npos);

    r = run_cmd("regime --n 100 1000 10000 --a-param 1.5");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("regime=m0\n") != std::string::npos);

    r = run_cmd("regime --n 100 1000 10000 --a-rule boundary");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("regime=boundary\n") != std::string::npos);

    // an explicit schedule is classified from the resulting b_n trend
    r = run_cmd("regime --n 100 1000 10000 --a 3 4 5");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("regime=ldp\n") != std::string::npos);
}

TEST_CASE("sample emits CSV with coordinate and mark headers") {
    CmdResult marked = run_cmd("sample --dim 2 --n 50 --a 1 --seed 3");
    CHECK(marked.exit_code == 0);
    CHECK(marked.out.rfind("x_1,x_2,mark\n", 0) == 0);

    CmdResult raw = run_cmd("sample --dim 2 --n 50 --raw --seed 3");
    CHECK(raw.exit_code == 0);
    CHECK(raw.out.rfind("x_1,x_2\n", 0) == 0);

    // binomial raw draws have exactly n data rows
    CmdResult bin = run_cmd("sample --dim 1 --n 25 --raw --input binomial --seed 4");
    CHECK(bin.exit_code == 0);
    CHECK(bin.out.rfind("x_1\n", 0) == 0);
    CHECK(count_occ(bin.out, "\n") == 26);

    CmdResult lim = run_cmd("sample --limit --b 40 --k 1 --s0 0.5 --dim 3 --seed 2");
    CHECK(lim.exit_code == 0);
    CHECK(lim.out.rfind("x_1,x_2,x_3,mark\n", 0) == 0);

    // --out writes the very same bytes to a file instead of stdout
    fs::path dir = fresh_dir("sample");
    fs::path file = dir / "atoms.csv";
    CmdResult tofile = run_cmd("sample --dim 2 --n 50 --a 1 --seed 3 --out " + file.string());
    CHECK(tofile.exit_code == 0);
    CHECK(tofile.out.empty());
    CHECK(read_file(file) == marked.out);
}

// ---------------------------------------------------------------------------
// exit codes
// ---------------------------------------------------------------------------

TEST_CASE("exit codes: 0 for help, 1 for usage and configuration errors") {
    CHECK(run_cmd("--help").exit_code == 0);
    CHECK(run_cmd("mean-t --help").exit_code == 0);
    CHECK(run_cmd("definitely-not-a-subcommand").exit_code == 1);
    CHECK(run_cmd("mean-t").exit_code == 1);                     // --n is required
    CHECK(run_cmd("mean-t --n 100 --a 2 --dim 99 --reps 100 --seed 1").exit_code == 1);
    CHECK(run_cmd("mean-t --n 100 --a 2 --a-rule frac-log --reps 100").exit_code == 1);
    CHECK(run_cmd("mean-t --n 100 --a-rule explicit --reps 100").exit_code == 1);
    CHECK(run_cmd("intensity --n 400 --a 4 --reps 100 --box-lo 0.1 0.1").exit_code == 1);
}

// ---------------------------------------------------------------------------
// estimator reports
// ---------------------------------------------------------------------------

TEST_CASE("mean-t prints a JSON report that echoes the configuration") {
    CmdResult r = run_cmd("mean-t --dim 2 --n 300 --a 3 --reps 2000 --seed 5");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["tool"] == "knnball-lab");
    CHECK(j["estimator"] == "mean-t");
    CHECK(j["config"]["dim"] == 2);
    CHECK(j["config"]["k"] == 1);
    CHECK(j["config"]["a_rule"] == "explicit");
    CHECK(j["config"]["n_ladder"] == json::array({300.0}));
    CHECK(j["config"]["a_list"] == json::array({3.0}));
    CHECK(j["config"]["input"] == "poisson");
    CHECK(j["config"]["reps"] == 2000);
    CHECK(j["config"]["seed"] == 5);
    REQUIRE(j["points"].size() == 1);
    const json& p = j["points"][0];
    CHECK(p["n"].get<double>() == 300.0);
    CHECK(p["a_n"].get<double>() == 3.0);
    CHECK(p["b_n"].get<double>() == knnball::scaling_b_n(300.0, 3.0, 1));
    CHECK(p["stats"]["reference"].get<double>() ==
          knnball::expected_low_degree_count(300.0, 3.0, 1, 0.0));
    CHECK(p["stats"].contains("estimate"));
    CHECK(p["stats"].contains("stderr"));
    CHECK(p["stats"].contains("ci_lo"));
    CHECK(p["stats"].contains("ci_hi"));
    CHECK(j["pass"].is_boolean());

    // the mean sits well inside its 99% interval here, so --check passes too
    CmdResult chk = run_cmd("mean-t --dim 2 --n 300 --a 3 --reps 2000 --seed 5 --check");
    CHECK(chk.exit_code == 0);
}

TEST_CASE("--out mirrors the report into a directory") {
    fs::path dir = fresh_dir("outdir") / "rep";
    CmdResult r = run_cmd("mean-t --dim 1 --n 200 --a 2 --reps 500 --seed 7 --out " +
                          dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "report.json"));
    REQUIRE(fs::exists(dir / "report.csv"));
    REQUIRE(fs::exists(dir / "meta.json"));
    CHECK(read_file(dir / "report.json") == r.out);

    std::string csv = read_file(dir / "report.csv");
    CHECK(csv.rfind("estimator,n,a_n,b_n,key,value\n", 0) == 0);
    CHECK(csv.find("mean-t,200,2,") != std::string::npos);
    CHECK(csv.find(",reference,") != std::string::npos);

    json meta = json::parse(read_file(dir / "meta.json"));
    CHECK(meta["tool"] == "knnball-lab");
    CHECK(meta["threads"] == 1);
    CHECK(meta["command"].get<std::string>().find("mean-t") != std::string::npos);
    CHECK(meta.contains("timestamp"));
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
    fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2"), d3 = fresh_dir("det3");
    const std::string base = "pmf-tv --dim 1 --n 80 160 320 --a-param 0.6 --reps 300 --seed 11";
    CmdResult r1 = run_cmd(base + " --out " + d1.string());
    CmdResult r2 = run_cmd(base + " --out " + d2.string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(r1.out == r2.out);
    CHECK(read_file(d1 / "report.json") == read_file(d2 / "report.json"));
    CHECK(read_file(d1 / "report.csv") == read_file(d2 / "report.csv"));
    CHECK(read_file(d1 / "report.json") == r1.out);

    CmdResult r3 = run_cmd(base + " --threads 3 --out " + d3.string());
    REQUIRE(r3.exit_code == 0);
    CHECK(r3.out == r1.out);
    CHECK(read_file(d3 / "report.csv") == read_file(d1 / "report.csv"));

    // shape of the trend summary, and the reference equals b_n when alpha = 1
    json j = json::parse(r1.out);
    REQUIRE(j["points"].size() == 3);
    for (const json& p : j["points"]) {
        CHECK(p["stats"]["reference"] == p["b_n"]);
        CHECK(p["stats"]["tv"].is_number());
        CHECK(p["stats"]["mean_T"].is_number());
        CHECK(p["stats"]["mean_exact"].is_number());
    }
    CHECK(j["summary"]["trend_rho"].is_number());
    CHECK(j["summary"]["trend_p"].is_number());
    CHECK(j["summary"]["tv_top"].is_number());
}

TEST_CASE("--check turns a failed report into exit code 2") {
    // s0 = 5 makes retained points so rare that no replication sees one: the
    // estimate is censored, the report fails, and --check surfaces that.
    const std::string base = "rare-event --dim 1 --n 500 --a-param 1.5 --s0 5 --reps 60 --seed 3";
    CmdResult plain = run_cmd(base);
    REQUIRE(plain.exit_code == 0);
    json j = json::parse(plain.out);
    CHECK(j["pass"] == false);
    REQUIRE(j["points"].size() == 1);
    CHECK(j["points"][0]["censored"] == true);
    CHECK(j["points"][0]["warnings"].size() >= 1);

    CmdResult chk = run_cmd(base + " --check");
    CHECK(chk.exit_code == 2);
}

TEST_CASE("config files supply defaults and the command line wins") {
    fs::path dir = fresh_dir("ini");
    fs::path ini = dir / "lab.ini";
    {
        std::ofstream out(ini);
        out << "dim=1\n"
            << "reps=400\n"
            << "seed=3\n"
            << "s0=0.25\n";
    }
    CmdResult r = run_cmd("mean-t --config " + ini.string() + " --n 200 --a 2 --seed 9");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["config"]["dim"] == 1);
    CHECK(j["config"]["reps"] == 400);
    CHECK(j["config"]["s0"] == 0.25);
    CHECK(j["config"]["seed"] == 9);  // command line overrides the file
}

TEST_CASE("intensity accepts a region box and mark levels") {
    CmdResult r = run_cmd("intensity --dim 2 --n 400 --a 4 --reps 500 --seed 2 "
                          "--u 0 1 --box-hi 0.5 0.5");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["estimator"] == "intensity");
    const json& s = j["points"][0]["stats"];
    CHECK(s["x0_level"].get<double>() == 0.0);
    CHECK(s["x1_level"].get<double>() == 1.0);
    CHECK(s["x0_reference"].get<double>() == knnball::intensity_tail(400.0, 4.0, 1, 0.0, 0.25));
    CHECK(s["x1_reference"].get<double>() == knnball::intensity_tail(400.0, 4.0, 1, 1.0, 0.25));
    CHECK(s["x0_estimate"].is_number());
    CHECK(s["x1_stderr"].is_number());
}

TEST_CASE("m0 and coupling subcommands run with their extra options") {
    CmdResult r = run_cmd("m0 --dim 2 --n 400 --a-param 1.5 --reps 300 --seed 2 "
                          "--u1-lo 0 --u1-hi 1 --eps1 0.2");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["estimator"] == "m0");
    CHECK(j["points"][0]["stats"].contains("reference"));
    CHECK(j["points"][0]["stats"].contains("ratio"));

    r = run_cmd("coupling --dim 2 --n 200 --a-param 1 --eps 0.3 --reps 400 --seed 2");
    REQUIRE(r.exit_code == 0);
    j = json::parse(r.out);
    CHECK(j["estimator"] == "coupling");
    CHECK(j["config"]["eps_list"] == json::array({0.3}));
    const json& s = j["points"][0]["stats"];
    CHECK(s["eta"].get<double>() == 0.3);
    CHECK(s["bound"].is_number());
    CHECK(s["tail_p"].is_number());
}
