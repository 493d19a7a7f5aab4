#include <doctest.h>

#include "erma/config.hpp"
#include "erma/fixed_point.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace erma;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("erma_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args, const fs::path& dir) {
    std::string cmd = std::string(ERMA_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                      " 2> " + (dir / "stderr.txt").string();
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

const char* kRidge = R"({
  "loss": "squared", "n": 120, "seed": 4,
  "model": {"kind": "gaussian_linear", "p": 60, "theta_star": {"random_unit": 2, "scale": 1.0}, "sigma_eps": 1.0},
  "regularizer": {"kind": "ridge", "lambda": 0.5},
  "solver": {"panel_size": 6000, "tol": 1e-11},
  "replications": 4, "test_points": 4000, "score_points": 4000
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve matches the ridge closed form") {
    fs::path d = scratch("solve");
    write(d / "c.json", kRidge);
    REQUIRE(run("solve --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 0);
    Json j = Json::parse(slurp(d / "o" / "solution.json"));
    CHECK(j["solution"]["converged"] == true);
    CHECK(j.contains("config"));
    ExperimentConfig c = load_config((d / "c.json").string());
    RidgeClosedForm cf = ridge_closed_form(c.model.moments(), c.model.theta_star(), 1.0,
                                           Vec::Zero(60), c.reg.hess0(), 120);
    double nu = j["solution"]["nu_star"];
    CHECK(std::fabs(nu - cf.nu_star) <= 1e-6 * cf.nu_star);
    CHECK(std::fabs(double(j["ridge_closed_form"]["nu_star"]) - cf.nu_star) <= 1e-14);
}

TEST_CASE("missing loss is a config error") {
    fs::path d = scratch("noloss");
    Json j = Json::parse(kRidge);
    j.erase("loss");
    write(d / "c.json", j.dump());
    CHECK(run("solve --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 1);
    CHECK(slurp(d / "stderr.txt").find("'loss'") != std::string::npos);
    CHECK(run("solve", d) == 1);
    CHECK(run("frobnicate --config x", d) == 1);
    CHECK(run("solve --config " + (d / "missing.json").string(), d) == 1);
}

TEST_CASE("degenerate config converges and is flagged") {
    fs::path d = scratch("degenerate");
    Json j = Json::parse(kRidge);
    j["model"]["theta_star"] = "zeros";
    j["model"]["sigma_eps"] = 0.0;
    write(d / "c.json", j.dump());
    REQUIRE(run("solve --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 0);
    Json s = Json::parse(slurp(d / "o" / "solution.json"))["solution"];
    CHECK(s["converged"] == true);
    CHECK(s["degenerate"] == true);
    CHECK(double(s["alpha_star"]) <= 1e-10);
}

TEST_CASE("non-convergence exits 2") {
    fs::path d = scratch("noconv");
    Json j = Json::parse(kRidge);
    j["solver"]["max_iters"] = 2;
    write(d / "c.json", j.dump());
    CHECK(run("solve --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 2);
    Json s = Json::parse(slurp(d / "o" / "solution.json"))["solution"];
    CHECK(s["converged"] == false);
}

TEST_CASE("compare with two replications and reproducible output") {
    fs::path d = scratch("compare");
    Json j = Json::parse(kRidge);
    j["replications"] = 2;
    write(d / "c.json", j.dump());
    std::string cfg = " --config " + (d / "c.json").string();
    REQUIRE(run("compare" + cfg + " --out " + (d / "a").string(), d) == 0);
    REQUIRE(run("compare" + cfg + " --out " + (d / "b").string() + " --threads 3", d) == 0);
    auto rows = read_csv(d / "a" / "compare.csv");
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"quantity", "theory", "empirical", "stderr", "rel_gap"});
    CHECK(rows[4][0] == "alpha_sq");
    CHECK(std::isfinite(std::stod(rows[4][3])));
    CHECK(slurp(d / "a" / "compare.csv") == slurp(d / "b" / "compare.csv"));
    std::string ja = slurp(d / "a" / "compare.json"), jb = slurp(d / "b" / "compare.json");
    Json pa = Json::parse(ja), pb = Json::parse(jb);
    pa["config"].erase("out");
    pb["config"].erase("out");
    CHECK(pa == pb);
    REQUIRE(run("compare" + cfg + " --out " + (d / "c").string() + " --seed 11", d) == 0);
    Json pc = Json::parse(slurp(d / "c" / "compare.json"));
    CHECK(pc["config"]["seed"] == 11);
    CHECK(slurp(d / "a" / "compare.csv") != slurp(d / "c" / "compare.csv"));
}

TEST_CASE("lambda sweep on a gaussian design") {
    fs::path d = scratch("sweep");
    Json j = Json::parse(kRidge);
    j["sweep"] = {{"parameter", "lambda"}, {"grid", {0.1, 0.5, 2.0}}};
    j["score_points"] = 20000;
    write(d / "c.json", j.dump());
    REQUIRE(run("sweep --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 0);
    auto rows = read_csv(d / "o" / "sweep.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].size() == 9);
    CHECK(rows[0][0] == "lambda");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double t = std::stod(rows[i][1]), gs = std::stod(rows[i][2]), gd = std::stod(rows[i][3]);
        CHECK(std::fabs(t - gs) <= 1e-9 * t);
        CHECK(std::fabs(t - gd) <= 1e-6 * t);
        CHECK(rows[i][8] == "ok");
    }
}

TEST_CASE("score histogram on a gaussian design") {
    fs::path d = scratch("hist");
    Json j = Json::parse(R"({
      "loss": "squared", "n": 100, "seed": 2,
      "model": {"kind": "gaussian_linear", "p": 200, "theta_star": {"basis": 0, "scale": 0.5}, "sigma_eps": 1.0},
      "regularizer": {"kind": "ridge", "lambda": 0.2},
      "solver": {"panel_size": 4000},
      "replications": 3, "test_points": 3000, "score_points": 200000
    })");
    write(d / "c.json", j.dump());
    REQUIRE(run("score-hist --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 0);
    auto rows = read_csv(d / "o" / "score_hist.csv");
    REQUIRE(rows.size() == 61);
    CHECK(rows[0] == std::vector<std::string>{"bin_left", "bin_right", "theory_pdf", "baseline_pdf",
                                              "count_class_0"});
    double sup = 0;
    long total = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 5);
        sup = std::max(sup, std::fabs(std::stod(rows[i][2]) - std::stod(rows[i][3])));
        total += std::stol(rows[i][4]);
    }
    MESSAGE("sup |theory - baseline| pdf " << sup);
    CHECK(sup <= 1e-3);
    CHECK(total == 3 * 3000);
    Json h = Json::parse(slurp(d / "o" / "score_hist.json"));
    CHECK(h["classes"].size() == 1);
}

TEST_CASE("score histogram columns follow the class count") {
    fs::path d = scratch("hist2");
    Json j = Json::parse(R"({
      "loss": "logistic", "n": 80, "seed": 2,
      "model": {"kind": "mixture_classes", "p": 20, "classes": [
         {"prior": 0.5, "mean": {"basis": 0, "scale": -1}}, {"prior": 0.5, "mean": {"basis": 0, "scale": 1}}]},
      "regularizer": {"kind": "ridge", "lambda": 0.2},
      "solver": {"panel_size": 4000},
      "replications": 2, "test_points": 2000, "score_points": 4000, "histogram": {"bins": 20}
    })");
    write(d / "c.json", j.dump());
    REQUIRE(run("score-hist --config " + (d / "c.json").string() + " --out " + (d / "o").string(), d) == 0);
    auto rows = read_csv(d / "o" / "score_hist.csv");
    REQUIRE(rows.size() == 21);
    CHECK(rows[0].size() == 6);
    CHECK(rows[0][4] == "count_class_-1");
    CHECK(rows[0][5] == "count_class_1");
}

}
