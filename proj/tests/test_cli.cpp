#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    auto p = fs::temp_directory_path() / ("wrf_cli_" + tag + "_" + std::to_string(::getpid()) +
                                          "_" + std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

CmdResult run_cli(const std::string& args) {
    auto dir = fresh_dir("io");
    auto out = dir / "out.txt", err = dir / "err.txt";
    std::string cmd = std::string(WRF_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                      err.string();
    int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = WEXITSTATUS(rc);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("cli: list-scenarios prints the bundled catalogue") {
    auto r = run_cli("list-scenarios --scenarios-dir " WRF_SCENARIOS_DIR);
    CHECK(r.code == 0);
    CHECK(r.out.find("blackwell") != std::string::npos);
    CHECK(r.out.find("cramer_arith") != std::string::npos);
}

TEST_CASE("cli: run on the bundled baseline scenario") {
    auto dir = fresh_dir("run");
    write_file(dir / "config.json",
               std::string("{\"scenarios\": [\"") + WRF_SCENARIOS_DIR +
                   "/blackwell.json\"], \"out_dir\": \"" + (dir / "out").string() + "\"}");
    auto r = run_cli("run --config " + (dir / "config.json").string());
    CHECK(r.code == 0);
    std::string csv = slurp(dir / "out" / "blackwell.csv");
    REQUIRE(!csv.empty());
    CHECK(csv.rfind("x,delta,value,residual_bound,n_max,method,predicted,ratio,pass", 0) == 0);
    // every row passes and the ratio column sits at 1 within 1e-3
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);  // header
    int rows = 0;
    while (std::getline(lines, line)) {
        auto last_comma = line.rfind(',');
        CHECK(line.substr(last_comma + 1) == "1");
        ++rows;
    }
    CHECK(rows == 201);
    auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(summary["all_pass"] == true);
}

TEST_CASE("cli: same config and seed give byte-identical output") {
    auto dir = fresh_dir("det");
    std::string scenario = R"({
      "id": "mc_small",
      "model": {"kind": "lattice", "offset": -1, "probs": [0.2, 0.0, 0.5, 0.3]},
      "weights": {"kind": "constant", "c": 1.0},
      "formula": "weighted",
      "grid": {"points": [40, 60]},
      "delta": 1.0,
      "method": "mc",
      "mc_paths": 20000,
      "tolerance": 0.05,
      "seed": 31
    })";
    write_file(dir / "s.json", scenario);
    write_file(dir / "c.json", "{\"scenarios\": [\"s.json\"], \"out_dir\": \"" +
                                   (dir / "o").string() + "\"}");
    auto r1 = run_cli("run --config " + (dir / "c.json").string() + " --out " +
                      (dir / "o1").string());
    auto r2 = run_cli("run --config " + (dir / "c.json").string() + " --out " +
                      (dir / "o2").string());
    CHECK(r1.code == 0);
    CHECK(r2.code == 0);
    CHECK(slurp(dir / "o1" / "mc_small.csv") == slurp(dir / "o2" / "mc_small.csv"));
    CHECK(!slurp(dir / "o1" / "mc_small.csv").empty());
}

TEST_CASE("cli: unknown config keys are rejected with the field path") {
    auto dir = fresh_dir("schema");
    write_file(dir / "bad.json", R"({"scenarios": [], "typo_key": 1})");
    auto r = run_cli("run --config " + (dir / "bad.json").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("typo_key") != std::string::npos);
}

TEST_CASE("cli: nonpositive delta is rejected naming the field") {
    auto dir = fresh_dir("delta");
    write_file(dir / "s.json", R"({
      "id": "bad_delta",
      "model": {"kind": "lattice", "offset": 1, "probs": [0.5, 0.5]},
      "weights": {"kind": "constant", "c": 1.0},
      "formula": "weighted",
      "grid": {"points": [10]},
      "delta": -1.0
    })");
    write_file(dir / "c.json",
               "{\"scenarios\": [\"s.json\"], \"out_dir\": \"" + (dir / "o").string() + "\"}");
    auto r = run_cli("run --config " + (dir / "c.json").string());
    CHECK(r.code == 2);
    CHECK(r.err.find(".delta") != std::string::npos);
}

TEST_CASE("cli: failing scenarios exit 1 and leave no partial csv") {
    auto dir = fresh_dir("fail");
    write_file(dir / "s.json", R"({
      "id": "diverging",
      "model": {"kind": "lattice", "offset": -1, "probs": [0.2, 0.0, 0.5, 0.3],
                "left_tail": {"index": 2.0, "const": 1.0}},
      "weights": {"kind": "power", "gamma": 1.0},
      "formula": "weighted",
      "grid": {"points": [50]},
      "delta": 1.0
    })");
    write_file(dir / "c.json",
               "{\"scenarios\": [\"s.json\"], \"out_dir\": \"" + (dir / "o").string() + "\"}");
    auto r = run_cli("run --config " + (dir / "c.json").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("diverging") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o" / "diverging.csv"));
}

TEST_CASE("cli: predict emits a serialized prediction") {
    auto r = run_cli("predict --formula weighted"
                     " --model '{\"kind\":\"lattice\",\"offset\":1,\"probs\":[0.5,0.5]}'"
                     " --weights '{\"kind\":\"constant\",\"c\":1.0}' --x 200 --delta 1");
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["formula"] == "weighted");
    CHECK(std::abs(j["value"].get<double>() - 2.0 / 3.0) < 1e-12);
    CHECK(j["inputs"]["x"] == 200.0);
}

TEST_CASE("cli: exact prints value and residual rows") {
    auto r = run_cli("exact --model '{\"kind\":\"lattice\",\"offset\":1,\"probs\":[1.0]}'"
                     " --weights '{\"kind\":\"constant\",\"c\":1.0}' --x 7 --delta 1");
    CHECK(r.code == 0);
    CHECK(r.out.find("x,delta,value,residual_bound,n_max,method") != std::string::npos);
    CHECK(r.out.find("7,1,1,") != std::string::npos);
}

TEST_CASE("cli: condition checks set the exit code by verdict") {
    std::string model = "'{\"kind\":\"lattice\",\"offset\":1,\"probs\":[0.5,0.5],"
                        "\"left_tail\":{\"index\":2.0,\"const\":1.0}}'";
    auto r = run_cli("check --condition aW --model " + model +
                     " --weights '{\"kind\":\"power\",\"gamma\":1.0}' --grid 10000");
    CHECK(r.code == 1);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["verdict"] == "divergent");

    auto r2 = run_cli("check --lemma3 --model '{\"kind\":\"lattice\",\"offset\":1,"
                      "\"probs\":[0.5,0.5]}' --n 50 --x 20 --delta 1");
    CHECK(r2.code == 0);
    auto j2 = nlohmann::json::parse(r2.out);
    CHECK(j2["pass"] == true);
}

TEST_CASE("cli: scan prints the error table") {
    auto r = run_cli("scan --model '{\"kind\":\"lattice\",\"offset\":1,\"probs\":[0.5,0.5]}'"
                     " --n 25,100");
    CHECK(r.code == 0);
    CHECK(r.out.rfind("n,sup_error", 0) == 0);
    CHECK(r.out.find("\n25,") != std::string::npos);
    CHECK(r.out.find("\n100,") != std::string::npos);
}

TEST_CASE("cli: dist-info reports span, moments, and mgf domain") {
    auto r = run_cli("dist-info --model '{\"kind\":\"lattice\",\"offset\":-1,"
                     "\"probs\":[0.25,0.0,0.75]}'");
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["span"] == 2);
    CHECK(std::abs(j["mean"].get<double>() - 0.5) < 1e-12);
}
