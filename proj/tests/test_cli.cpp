#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
    const char* b = std::getenv("HYPERLAP_BIN");
    REQUIRE_MESSAGE(b != nullptr, "HYPERLAP_BIN is not set");
    return b;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hyperlap_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p;
}

std::size_t count_files(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

const char* kSmallPair =
    R"({"version": 1, "mode": "pair", "ss": [20, 30, 40], "samples": 1, "beta": 1, "min_dist_ma": 0.3})";

}  // namespace

TEST_CASE("hessian default run writes three files with the documented schema") {
    const fs::path out = scratch("hessian") / "nested" / "dir";
    REQUIRE(run("hessian --out " + out.string()) == 0);
    CHECK(count_files(out) == 3);
    const std::string csv = slurp(out / "hessian.csv");
    CHECK(csv.rfind("rho,det,det_expected,det_rel_error,max_entry_error,gradient_residual\n", 0) == 0);
    CHECK(csv.find('\r') == std::string::npos);
    const json s = json::parse(slurp(out / "hessian_summary.json"));
    REQUIRE(s["rows"].size() == 3);
    const double rhos[] = {0.0, 0.3, 0.6};
    for (int i = 0; i < 3; ++i) {
        const json& r = s["rows"][i];
        CHECK(r["rho"].get<double>() == rhos[i]);
        CHECK(r["det_expected"].get<double>() == doctest::Approx(16.0 * (1.0 - rhos[i] * rhos[i])));
        CHECK(r["det_rel_error"].get<double>() < 1e-5);
        CHECK(r["hessian"].size() == 4);
        for (const char* key : {"det", "max_entry_error", "gradient_residual"}) CHECK(r.contains(key));
    }
    const json rec = json::parse(slurp(out / "run.json"));
    CHECK(rec["command"] == "hessian");
    CHECK(rec["config"]["rhos"].size() == 3);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const fs::path dir = scratch("determinism");
    const fs::path cfg = write_config(dir, "pair.json", kSmallPair);
    REQUIRE(run("decay --config " + cfg.string() + " --seed 5 --threads 1 --out " + (dir / "a").string()) == 0);
    REQUIRE(run("decay --config " + cfg.string() + " --seed 5 --threads 2 --out " + (dir / "b").string()) == 0);
    for (const char* f : {"decay_pair.csv", "decay_summary.json", "run.json"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    REQUIRE(run("decay --config " + cfg.string() + " --seed 6 --out " + (dir / "c").string()) == 0);
    CHECK(slurp(dir / "a" / "decay_pair.csv") != slurp(dir / "c" / "decay_pair.csv"));
    CHECK(json::parse(slurp(dir / "c" / "run.json"))["seed"] == 6);
}

TEST_CASE("svg plots only on request") {
    const fs::path dir = scratch("svg");
    const fs::path cfg = write_config(dir, "pair.json", kSmallPair);
    REQUIRE(run("decay --config " + cfg.string() + " --out " + (dir / "plain").string()) == 0);
    CHECK_FALSE(fs::exists(dir / "plain" / "decay_pair.svg"));
    REQUIRE(run("decay --config " + cfg.string() + " --svg --out " + (dir / "plot").string()) == 0);
    const std::string svg = slurp(dir / "plot" / "decay_pair.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("slope") != std::string::npos);
}

TEST_CASE("hecke tables, dichotomy scan and amplifier bookkeeping") {
    const fs::path dir = scratch("hecke");
    const fs::path cfg = write_config(
        dir, "h.json", R"({"version": 1, "qs": [2, 9], "table_radius": 2, "dichotomy_q_max": 13, "N": 40})");
    REQUIRE(run("hecke --config " + cfg.string() + " --out " + (dir / "o").string()) == 0);
    const json tables = json::parse(slurp(dir / "o" / "hecke_products.json"));
    bool found = false;
    for (const json& t : tables) {
        CHECK(t.contains("coefficients"));
        if (t["q"] == 9 && t["a"] == 1 && t["b"] == 1) {
            found = true;
            CHECK(t["coefficients"]["0"] == "90");
            CHECK(t["coefficients"]["1"] == "8");
            CHECK(t["coefficients"]["2"] == "1");
        }
    }
    CHECK(found);
    const json s = json::parse(slurp(dir / "o" / "hecke_summary.json"));
    CHECK(s["relations_hold"] == true);
    CHECK(s["dichotomy_points"] == 2 * 1000 * 9);  // prime powers 2, 3, 4, 5, 7, 8, 9, 11, 13
    const json amp = json::parse(slurp(dir / "o" / "hecke_amplifier.json"));
    for (const json& v : amp["places"]) CHECK(v["eigenvalue"] == "1");
    CHECK(amp["a_O"] == amp["l2sq"]);
}

TEST_CASE("usage errors exit with code 2") {
    const fs::path dir = scratch("usage");
    CHECK(run("nonexistent") == 2);
    CHECK(run("hessian --config " + (dir / "missing.json").string()) == 2);
    CHECK(run("hessian --config " + write_config(dir, "u.json", R"({"version": 1, "bogus": 3})").string() +
              " --out " + (dir / "o").string()) == 2);
    CHECK(run("hessian --config " + write_config(dir, "e.json", R"({"version": 1, "rhos": []})").string() +
              " --out " + (dir / "o").string()) == 2);
    CHECK(run("hessian --config " + write_config(dir, "nv.json", R"({"rhos": [0.1]})").string() + " --out " +
              (dir / "o").string()) == 2);
    CHECK(run("hessian --config " + write_config(dir, "m.json", R"({"version": 1, "rhos": [0.1)").string() +
              " --out " + (dir / "o").string()) == 2);
    CHECK(run("ktilde --config " + write_config(dir, "r.json", R"({"version": 1, "eps": 3.0})").string() +
              " --out " + (dir / "o").string()) == 2);
    CHECK(run("hessian --config " + write_config(dir, "c.json", R"({"version": 1, "command": "beams"})").string() +
              " --out " + (dir / "o").string()) == 2);
    CHECK(run("tubes --config " +
              write_config(dir, "t.json", R"({"version": 1, "settings": [{"delta": 0.1, "radius": 2}]})").string() +
              " --out " + (dir / "o").string()) == 2);
}

TEST_CASE("resource and accuracy failures map to exit codes 3 and 4") {
    const fs::path dir = scratch("codes");
    const fs::path blocker = write_config(dir, "file.txt", "x");
    CHECK(run("hessian --out " + (blocker / "sub").string()) == 3);
    const fs::path cfg = write_config(dir, "a.json", R"({"version": 1, "qs": [2], "dichotomy_q_max": 3, "N": 40,
                                                         "max_constant": "1/100000"})");
    CHECK(run("hecke --config " + cfg.string() + " --out " + (dir / "o").string()) == 4);
}
