#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "sdsim/builtin_models.hpp"
#include "sdsim/config.hpp"
#include "sdsim/errors.hpp"
#include "sdsim/experiments.hpp"

using namespace sds;
namespace fs = std::filesystem;

namespace {

const char* kSampleConfig = R"(# demo experiment
[experiment]
kind = convergence
paths = 64
deltas = 2^-6 2^-7 2^-8
delta_ref = 2^-11
q = 1
alpha = 0.05
seed = 12345

[model]
name = volatility31

[scheme]
variant = truncated-finite
delta = 2^-6
horizon = 1
x0 = 1 1
r0 = 2

[output]
dir = out
svg = off
)";

fs::path fresh_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "sdsim_cli_tests" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

int run_cli(const std::string& args, const fs::path& dir, std::string* output = nullptr) {
    const fs::path log = dir / "cli_output.log";
    const std::string cmd =
        std::string(SDSIM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (output) *output = read_file(log);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("config parse, canonical serialize and reparse are an identity") {
    const auto cfg = config::parse_string(kSampleConfig);
    CHECK(cfg.kind == "convergence");
    CHECK(cfg.paths == 64);
    REQUIRE(cfg.deltas.size() == 3);
    CHECK(cfg.deltas[0] == std::ldexp(1.0, -6));
    CHECK(cfg.deltas[2] == std::ldexp(1.0, -8));
    CHECK(cfg.delta_ref == std::ldexp(1.0, -11));
    CHECK(cfg.q == 1);
    CHECK(cfg.alpha == 0.05);
    CHECK(cfg.seed.has_value());
    CHECK(*cfg.seed == 12345);
    CHECK(cfg.model == "volatility31");
    CHECK(cfg.variant == "truncated-finite");
    CHECK(cfg.x0 == std::vector<double>{1.0, 1.0});
    CHECK(cfg.r0 == 1);  // 1-based in the file
    CHECK_FALSE(cfg.svg);

    const std::string canon = config::serialize(cfg);
    const auto back = config::parse_string(canon);
    CHECK(back == cfg);
    CHECK(config::serialize(back) == canon);
    CHECK(canon.find("r0 = 2") != std::string::npos);
    CHECK(canon.find("deltas = 2^-6 2^-7 2^-8") != std::string::npos);
}

TEST_CASE("config parser reports malformed input with line numbers") {
    CHECK_THROWS_AS(config::parse_string("[experiment]\npaths = 5\npaths = 6\n"),
                    ConfigError);
    CHECK_THROWS_AS(config::parse_string("[experiment]\nvolume = 5\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_string("[engine]\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_string("paths = 5\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_string("[experiment]\npaths = many\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_string("[scheme]\nr0 = 0\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_string("[experiment\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_string("[experiment]\nseed = -4\n"), ConfigError);
    try {
        config::parse_string("[experiment]\n\nq = one\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("step-size tokens accept dyadic powers") {
    CHECK(config::parse_delta_token("2^-9") == std::ldexp(1.0, -9));
    CHECK(config::parse_delta_token("2^3") == 8.0);
    CHECK(config::parse_delta_token("0.125") == 0.125);
    CHECK_THROWS_AS(config::parse_delta_token("2^"), ConfigError);
    CHECK_THROWS_AS(config::parse_delta_token("2^-9.5"), ConfigError);
    CHECK_THROWS_AS(config::parse_delta_token("banana"), ConfigError);

    CHECK(config::format_delta(std::ldexp(1.0, -13)) == "2^-13");
    CHECK(config::parse_delta_token(config::format_delta(0.3)) == 0.3);
    const double third = 1.0 / 3.0;
    CHECK(std::stod(config::format_number(third)) == third);
}

TEST_CASE("config validation enforces the structural invariants") {
    auto good = config::parse_string(kSampleConfig);
    CHECK_NOTHROW(config::validate(good));

    auto c = good;
    c.kind = "teleport";
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.model.clear();
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.seed.reset();
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.variant = "magic";
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.mode = "sideways";
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.paths = 0;
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.q = 3;
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.alpha = 1.0;
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.deltas = {0.25, 0.5};
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.deltas = {0.25, 0.25};
    CHECK_THROWS_AS(config::validate(c), ConfigError);
    c = good;
    c.deltas = {2.0, 1.0};
    CHECK_THROWS_AS(config::validate(c), ConfigError);

    c = good;
    c.seed.reset();
    CHECK_THROWS_AS(config::serialize(c), ConfigError);
}

TEST_CASE("model registry lists exactly the three built-ins") {
    const auto names = model::builtin_names();
    REQUIRE(names.size() == 3);
    CHECK(names[0] == "volatility31");
    CHECK(names[1] == "ginzburg32");
    CHECK(names[2] == "ginzburg53");
    const std::string listing = experiments::describe_models();
    for (const auto& n : names) CHECK(listing.find(n) != std::string::npos);
}

TEST_CASE("binary lists models and rejects broken invocations") {
    const auto dir = fresh_dir("listing");
    std::string out;
    CHECK(run_cli("list-models", dir, &out) == 0);
    CHECK(out.find("volatility31") != std::string::npos);
    CHECK(out.find("ginzburg32") != std::string::npos);
    CHECK(out.find("ginzburg53") != std::string::npos);

    CHECK(run_cli("simulate --config /nonexistent/file.cfg", dir) == 2);
    CHECK(run_cli("frobnicate", dir) == 2);

    const fs::path bad = dir / "bad.cfg";
    write_text(bad, "[experiment]\nvolume = 11\nseed = 1\n");
    CHECK(run_cli("simulate --config " + bad.string(), dir, &out) == 2);
    CHECK(out.find("config error") != std::string::npos);

    const fs::path mismatched = dir / "mismatched.cfg";
    write_text(mismatched, std::string(kSampleConfig));
    CHECK(run_cli("stability --config " + mismatched.string(), dir, &out) == 2);
    CHECK(out.find("does not match") != std::string::npos);
}

TEST_CASE("binary writes a reproducible trajectory and manifest") {
    const auto dir = fresh_dir("simulate");
    const fs::path cfg_path = dir / "run.cfg";
    write_text(cfg_path, "[experiment]\n"
                         "kind = simulate\n"
                         "seed = 42\n"
                         "[model]\n"
                         "name = volatility31\n"
                         "[scheme]\n"
                         "delta = 2^-4\n"
                         "horizon = 1\n"
                         "[output]\n"
                         "svg = off\n");
    const fs::path out_a = dir / "a";
    const fs::path out_b = dir / "b";
    const fs::path out_c = dir / "c";

    std::string out;
    CHECK(run_cli("simulate --config " + cfg_path.string() + " --out " + out_a.string(),
                  dir, &out) == 0);
    const std::string path_csv = read_file(out_a / "path.csv");
    CHECK(path_csv.rfind("k,t,r,y1,y2,ytilde1,ytilde2\n", 0) == 0);
    CHECK(std::count(path_csv.begin(), path_csv.end(), '\n') == 18);  // header + 17 rows

    const auto manifest = config::parse_file((out_a / "manifest.txt").string());
    CHECK(manifest.kind == "simulate");
    CHECK(*manifest.seed == 42);
    CHECK(manifest.delta == std::ldexp(1.0, -4));
    CHECK(manifest.x0 == std::vector<double>{1.0, 1.0});  // preset default resolved
    CHECK(manifest.variant == "truncated-finite");

    CHECK(run_cli("simulate --config " + cfg_path.string() + " --out " + out_b.string(),
                  dir) == 0);
    CHECK(read_file(out_b / "path.csv") == path_csv);

    CHECK(run_cli("simulate --config " + cfg_path.string() + " --out " + out_c.string() +
                      " --seed 99",
                  dir) == 0);
    CHECK(read_file(out_c / "path.csv") != path_csv);
    const auto reseeded = config::parse_file((out_c / "manifest.txt").string());
    CHECK(*reseeded.seed == 99);
}
