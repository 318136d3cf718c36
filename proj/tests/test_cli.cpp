#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "flex/instance.hpp"
#include "flex/nn.hpp"

using namespace flex;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "flex_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run(const std::string& args) {
    const fs::path out_file = work_dir() / "cli_out.txt";
    const std::string cmd = "cd " + work_dir().string() + " && " + FDP_BIN + " " + args + " > " +
                            out_file.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    res.out = ss.str();
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// report.csv minus its wallclock_s column
std::string strip_wallclock(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        out << line.substr(0, pos) << '\n';
    }
    return out.str();
}

} // namespace

TEST_CASE("gen writes valid scenario instances and rejects unknown names") {
    CliResult r = run("gen auto --k 16");
    CHECK(r.exit_code == 0);
    Instance inst = load_instance((work_dir() / "auto.json").string());
    CHECK(inst.m == 8);
    CHECK(inst.n == 16);
    CHECK(inst.budget == 16);

    CHECK(run("gen fashion --k 10").exit_code == 0);

    CliResult bad = run("gen nosuch");
    CHECK(bad.exit_code == 3);
    CHECK(bad.out.find("auto") != std::string::npos); // lists the valid names
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("eval --bogus-flag x").exit_code == 2);
    CHECK(run("").exit_code == 2);
    CHECK(run("--help").exit_code == 0);
}

TEST_CASE("heuristic outputs are byte-identical across reruns") {
    run("gen auto --k 4 --out small.json");
    CliResult a = run("greedy --instance small.json --omega 40 --seed 11 --out run_a");
    CliResult b = run("greedy --instance small.json --omega 40 --seed 11 --out run_b");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(work_dir() / "run_a/design.json") == slurp(work_dir() / "run_b/design.json"));
    CHECK(slurp(work_dir() / "run_a/trace.json") == slurp(work_dir() / "run_b/trace.json"));
    CHECK(slurp(work_dir() / "run_a/design.json").find("arcs") != std::string::npos);
}

TEST_CASE("eval: determinism, empty design, budget violation, engines") {
    run("gen auto --k 4 --out small.json");
    {
        std::ofstream d(work_dir() / "empty.json");
        d << R"({"m": 8, "n": 16, "arcs": []})";
    }
    CliResult e = run("eval --instance small.json --design empty.json --samples 200 --seed 3");
    CHECK(e.exit_code == 0);
    CHECK(e.out.find("objective 0.000000  stderr 0.000000") != std::string::npos);

    run("greedy --instance small.json --omega 40 --seed 11 --out run_e");
    CliResult x = run("eval --instance small.json --design run_e/design.json --samples 500 --seed 3");
    CliResult y = run("eval --instance small.json --design run_e/design.json --samples 500 --seed 3");
    CHECK(x.exit_code == 0);
    CHECK(x.out == y.out);
    CliResult ref =
        run("eval --instance small.json --design run_e/design.json --samples 500 --seed 3 "
            "--engine reference");
    CHECK(ref.exit_code == 0);
    CHECK(ref.out == x.out);

    // six arcs against a budget of four
    {
        std::ofstream d(work_dir() / "toolarge.json");
        d << R"({"m": 8, "n": 16, "arcs": [[0,0],[0,1],[0,2],[0,3],[0,4],[0,5]]})";
    }
    CHECK(run("eval --instance small.json --design toolarge.json").exit_code == 3);
}

TEST_CASE("train runs are reproducible apart from the wallclock column") {
    run("gen auto --k 2 --out tiny.json");
    const std::string flags =
        " --hidden 8 --episodes 16 --omega 4 --eval-samples 32 --designs 8 "
        "--policy-iters 5 --value-iters 5 --max-steps 96 --seed 7";
    CliResult a = run("train --instance tiny.json --out t_a" + flags);
    CliResult b = run("train --instance tiny.json --out t_b" + flags);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(strip_wallclock(slurp(work_dir() / "t_a/report.csv")) ==
          strip_wallclock(slurp(work_dir() / "t_b/report.csv")));
    CHECK(slurp(work_dir() / "t_a/design.json") == slurp(work_dir() / "t_b/design.json"));
    CHECK(slurp(work_dir() / "t_a/checkpoint.bin") == slurp(work_dir() / "t_b/checkpoint.bin"));

    CliResult c = run("train --instance tiny.json --out t_c" + flags + "1"); // seed 71
    REQUIRE(c.exit_code == 0);
    CHECK(strip_wallclock(slurp(work_dir() / "t_a/report.csv")) !=
          strip_wallclock(slurp(work_dir() / "t_c/report.csv")));

    CliResult p = run("train --instance tiny.json --out t_p --emit-plotdata" + flags);
    REQUIRE(p.exit_code == 0);
    const std::string plot = slurp(work_dir() / "t_p/plotdata.csv");
    CHECK(plot.find("step,metric,value") == 0);
    CHECK(plot.find("mean_return") != std::string::npos);
    CHECK(plot.find("eval_profit") != std::string::npos);
}

TEST_CASE("meta-train then adapt: zero-step adaptation keeps the meta weights") {
    run("gen auto --k 3 --out meta_inst.json");
    const std::string rl_flags =
        " --hidden 8 --episodes 8 --omega 4 --eval-samples 16 --designs 4 "
        "--policy-iters 3 --value-iters 3";
    CliResult m = run("meta-train --instance meta_inst.json --k-values 2 3 --meta-epochs 2" +
                      rl_flags + " --seed 5 --out m_run");
    REQUIRE(m.exit_code == 0);
    Checkpoint meta = load_checkpoint((work_dir() / "m_run/meta_checkpoint.bin").string());
    CHECK(meta.extra_json.find("k_values") != std::string::npos);

    CliResult a = run("adapt --instance meta_inst.json --meta m_run/meta_checkpoint.bin --k 2" +
                      rl_flags + " --max-steps 0 --seed 6 --out a_run");
    REQUIRE(a.exit_code == 0);
    Checkpoint adapted = load_checkpoint((work_dir() / "a_run/checkpoint.bin").string());
    CHECK(flatten(adapted.policy) == flatten(meta.policy));
    CHECK(flatten(adapted.value) == flatten(meta.value));

    // one real epoch moves the weights
    CliResult a2 = run("adapt --instance meta_inst.json --meta m_run/meta_checkpoint.bin --k 2" +
                       rl_flags + " --max-steps 16 --seed 6 --out a_run2");
    REQUIRE(a2.exit_code == 0);
    Checkpoint moved = load_checkpoint((work_dir() / "a_run2/checkpoint.bin").string());
    CHECK(flatten(moved.policy) != flatten(meta.policy));
}

TEST_CASE("compare emits the results table with one shared sample seed per K") {
    run("gen auto --k 4 --out cmp.json");
    CliResult r = run("compare --instance cmp.json --k-list 2 3 --methods greedy sp "
                      "--omega-heur 30 --samples 300 --seed 1 --out cmp_run");
    REQUIRE(r.exit_code == 0);
    const std::string results = slurp(work_dir() / "cmp_run/results.csv");
    CHECK(results.find("method,k,objective,stderr") == 0);
    CHECK(results.find("greedy,2,") != std::string::npos);
    CHECK(results.find("sp,3,") != std::string::npos);
    const std::string table = slurp(work_dir() / "cmp_run/table.csv");
    CHECK(table.find("method,K=2,K=3") == 0);
    const std::string manifest = slurp(work_dir() / "cmp_run/manifest.json");
    CHECK(manifest.find("eval_seeds") != std::string::npos);

    CHECK(run("compare --instance cmp.json --k-list 2 --methods nosuch").exit_code == 3);
}

TEST_CASE("fctp conversion through the CLI") {
    {
        std::ofstream f(work_dir() / "fctp.json");
        f << R"({"capacities": [5, 5], "demands": [4, 4],
                 "transport_cost": [[1, 2], [3, 4]],
                 "fixed_charge": [[0, 0], [0, 0]]})";
    }
    CliResult r = run("gen fctp --fctp fctp.json --k 3 --out conv.json");
    REQUIRE(r.exit_code == 0);
    Instance inst = load_instance((work_dir() / "conv.json").string());
    CHECK(inst.unit_profit(0, 0) == 3.0);
    CHECK(inst.unit_profit(1, 1) == 0.0);
    CHECK(inst.budget == 3);
    CHECK(inst.demand.sigma[0] == doctest::Approx(3.2));
}
