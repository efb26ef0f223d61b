#include "bilevel/records.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BILEVEL_CLI_PATH;
const std::string kConfigs = BILEVEL_CONFIG_DIR;

int run(const std::string& args, const std::string& capture = "/dev/null") {
    const std::string command = kCli + " " + args + " > " + capture + " 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("bilevel_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("run writes one row per episode") {
    const fs::path dir = scratch("run");
    const std::string out = (dir / "r.csv").string();
    REQUIRE(run("run --config " + kConfigs + "/poisson.cfg --episodes 600 --seed 7 --out " + out) == 0);
    const auto records = bilevel::read_records(out);
    CHECK(records.size() == 600);
    CHECK(records.front().k == 1);
    CHECK(records.back().k == 600);
    // a second run is byte-identical
    const std::string again = (dir / "r2.csv").string();
    REQUIRE(run("run --config " + kConfigs + "/poisson.cfg --episodes 600 --seed 7 --out " + again) == 0);
    CHECK(slurp(out) == slurp(again));
}

TEST_CASE("oracle prints b_star and the curve") {
    const fs::path dir = scratch("oracle");
    const std::string capture = (dir / "oracle.txt").string();
    REQUIRE(run("oracle --config " + kConfigs + "/scaled.cfg", capture) == 0);
    std::istringstream text(slurp(capture));
    std::string line;
    std::getline(text, line);
    CHECK(line.rfind("# b_star=", 0) == 0);
    std::getline(text, line);
    CHECK(line == "b,L_star,total");
    std::size_t rows = 0;
    while (std::getline(text, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 121);
}

TEST_CASE("sweep names one file per cell") {
    const fs::path dir = scratch("sweep");
    REQUIRE(run("sweep --config " + kConfigs + "/scaled.cfg --episodes 30 --set warmup=10 "
                "--algorithms blol fixed:4 decoupled --seeds 1 2 3 4 5 --jobs 2 --out-dir " + dir.string()) == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 15);
    for (const char* label : {"blol", "fixed_b4", "decoupled"})
        for (int seed = 1; seed <= 5; ++seed)
            CHECK(fs::exists(dir / (std::string(label) + "_seed" + std::to_string(seed) + ".csv")));
    CHECK(bilevel::read_records((dir / "decoupled_seed3.csv").string()).size() == 30);
}

TEST_CASE("gen-trace feeds a trace-mode run") {
    const fs::path dir = scratch("trace");
    const std::string trace = (dir / "bursty.csv").string();
    REQUIRE(run("gen-trace --out " + trace + " --bins 20000 --seed 3") == 0);
    CHECK(run("run --set arrival=trace --set trace_path=" + trace + " --episodes 40 --set warmup=10 --out " +
              (dir / "t.csv").string()) == 0);
    CHECK(bilevel::read_records((dir / "t.csv").string()).size() == 40);
}

TEST_CASE("inspect dumps counts and a solvable LP") {
    const fs::path dir = scratch("inspect");
    const std::string counts = (dir / "counts.txt").string();
    const std::string lp = (dir / "step.lp").string();
    REQUIRE(run("inspect --config " + kConfigs + "/scaled.cfg --episodes 20 --set warmup=5 --budget 8 --dump-counts " +
                counts + " --dump-lp " + lp) == 0);
    CHECK(fs::file_size(counts) > 0);
    CHECK(slurp(lp).rfind("lp ", 0) == 0);
    const std::string capture = (dir / "solve.txt").string();
    CHECK(run("inspect --solve " + lp, capture) == 0);
    CHECK(slurp(capture).find("status") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run("run --no-such-flag") == 1);
    CHECK(run("run --config /nonexistent/file.cfg") == 1);
    CHECK(run("run --set horizon=0") == 1);
    CHECK(run("run --set nonsense=1") == 1);
    CHECK(run("frobnicate") == 1);
    const fs::path dir = scratch("codes");
    // an unreadable trace is a runtime failure
    CHECK(run("run --set arrival=trace --set trace_path=" + (dir / "missing.csv").string() + " --out " +
              (dir / "x.csv").string()) == 2);
}
