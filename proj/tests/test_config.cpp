#include <doctest.h>

#include "erma/config.hpp"

using namespace erma;

namespace {

Json base() {
    return Json::parse(R"({
        "loss": "squared",
        "n": 100,
        "model": {"kind": "gaussian_linear", "p": 10, "theta_star": {"basis": 0, "scale": 1.0}, "sigma_eps": 0.5},
        "regularizer": {"kind": "ridge", "lambda": 0.5}
    })");
}

std::string error_of(const Json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults are resolved into the embedded config") {
    ExperimentConfig c = parse_config(base());
    CHECK(c.model.dim() == 10);
    CHECK(c.n == 100);
    CHECK(c.seed == 1);
    CHECK(c.replications == 20);
    CHECK(c.resolved["solver"]["tol"] == 1e-8);
    CHECK(c.resolved["solver"]["panel_size"] == 100000);
    CHECK(c.resolved.contains("out"));
    CHECK_FALSE(c.resolved.contains("threads"));
    CHECK(c.reg.hess0()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("seed override and derived seeds") {
    ConfigOverrides ov;
    ov.seed = 99;
    ExperimentConfig c = parse_config(base(), ov);
    CHECK(c.seed == 99);
    CHECK(c.resolved["seed"] == 99);
    ExperimentConfig d = parse_config(base());
    CHECK(c.panel_seed() != d.panel_seed());
    CHECK(c.test_seed() != c.replication_seed());
}

TEST_CASE("errors name the field") {
    Json j = base();
    j.erase("loss");
    CHECK(error_of(j).find("'loss'") != std::string::npos);
    j = base();
    j["loss"] = "hinge";
    CHECK(error_of(j).find("hinge") != std::string::npos);
    j = base();
    j["model"]["theta_star"] = {1.0, 2.0};
    CHECK(error_of(j).find("model.theta_star") != std::string::npos);
    j = base();
    j["regularizer"]["lambda"] = -1;
    CHECK_FALSE(error_of(j).empty());
    j = base();
    j["loss"] = "logistic";
    CHECK(error_of(j).find("classification") != std::string::npos);
    j = base();
    j["solver"] = {{"damping", 2.0}};
    CHECK(error_of(j).find("solver.damping") != std::string::npos);
    j = base();
    j["model"]["kind"] = "nope";
    CHECK(error_of(j).find("model.kind") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("vector and matrix specs") {
    Vec v = parse_vector(Json{{"angle", M_PI / 2}, {"scale", 2.0}}, 4, "a");
    CHECK(std::fabs(v(0)) < 1e-15);
    CHECK(v(1) == doctest::Approx(2.0));
    v = parse_vector(Json{{"angle", 0.0}}, 3, "a");
    CHECK(v(0) == -1.0);
    v = parse_vector(Json{{"random_unit", 3}, {"scale", 1.5}}, 50, "t");
    CHECK(v.norm() == doctest::Approx(1.5));
    CHECK(parse_vector("zeros", 3, "z").norm() == 0.0);
    CHECK(parse_vector(Json{{"fill", 0.5}}, 4, "f").sum() == 2.0);
    Mat m = parse_matrix(Json{{"diag", {1.0, 2.0}}}, 2, "C");
    CHECK(m(1, 1) == 2.0);
    CHECK(parse_matrix(Json{{"scaled_identity", 3.0}}, 2, "C")(0, 0) == 3.0);
    CHECK_THROWS_AS(parse_matrix(Json{{"diag", {1.0}}}, 2, "C"), ConfigError);
}

TEST_CASE("model kinds parse") {
    Json j = base();
    j["model"] = Json::parse(R"({"kind": "mixture_classes", "p": 6, "classes": [
        {"prior": 0.5, "mean": {"basis": 0, "scale": -1}},
        {"prior": 0.5, "mean": {"basis": 0, "scale": 1}, "bimodal": [{"coordinate": 1, "c": 3, "s": 0.5}]}]})");
    j["loss"] = "logistic";
    ExperimentConfig c = parse_config(j);
    CHECK(c.model.class_count() == 2);
    CHECK(c.model.classification());

    j["model"] = Json::parse(R"({"kind": "lfmm", "p": 8, "signal": [1.0, 0.5], "basis": "identity",
                                 "noise": {"bimodal": {"c": 2, "s": 0.5}}})");
    c = parse_config(j);
    CHECK(c.model.signal_directions().size() == 2);

    j = base();
    j["model"] = {{"kind", "csv"}, {"path", "three_rows.csv"}};
    c = parse_config(j, {}, ERMA_TEST_DATA);
    CHECK(c.model.dim() == 2);
}

TEST_CASE("sweep spec") {
    Json j = base();
    j["sweep"] = {{"parameter", "lambda"}, {"grid", {0.1, 1.0}}};
    ExperimentConfig c = parse_config(j);
    REQUIRE(c.sweep);
    CHECK(c.sweep->grid.size() == 2);
    j["sweep"] = {{"parameter", "gamma"}, {"grid", {0.1}}};
    CHECK(error_of(j).find("sweep.parameter") != std::string::npos);
    Regularizer r = make_regularizer(Json{{"kind", "smooth_separable"}, {"lambda", 1.0}, {"eps", 0.2}}, 3);
    CHECK_FALSE(r.is_quadratic());
}

}
