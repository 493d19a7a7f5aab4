#include "erma/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace erma {

namespace {

std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

const Json& require(const Json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError("missing field '" + join(where, key) + "'");
    return j.at(key);
}

double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("field '" + path + "' must be a number");
    return v.get<double>();
}

long long as_integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer() && !(v.is_number() && std::floor(v.get<double>()) == v.get<double>()))
        throw ConfigError("field '" + path + "' must be an integer");
    return v.is_number_integer() ? v.get<long long>() : static_cast<long long>(v.get<double>());
}

std::uint64_t as_seed(const Json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    long long s = as_integer(v, path);
    if (s < 0) throw ConfigError("field '" + path + "' must be nonnegative");
    return static_cast<std::uint64_t>(s);
}

std::string as_string(const Json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("field '" + path + "' must be a string");
    return v.get<std::string>();
}

bool as_bool(const Json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError("field '" + path + "' must be true or false");
    return v.get<bool>();
}

double num_or(Json& j, const std::string& key, double dflt, const std::string& where) {
    if (!j.contains(key)) j[key] = dflt;
    return as_number(j[key], join(where, key));
}

long long int_or(Json& j, const std::string& key, long long dflt, const std::string& where) {
    if (!j.contains(key)) j[key] = dflt;
    return as_integer(j[key], join(where, key));
}

bool bool_or(Json& j, const std::string& key, bool dflt, const std::string& where) {
    if (!j.contains(key)) j[key] = dflt;
    return as_bool(j[key], join(where, key));
}

Mat random_orthogonal(int p, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0, 21);
    std::normal_distribution<double> normal;
    Mat G(p, p);
    for (int c = 0; c < p; ++c)
        for (int r = 0; r < p; ++r) G(r, c) = normal(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ();
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j)
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);
    return Q;
}

}  // namespace

Vec parse_vector(const Json& spec, int p, const std::string& where) {
    if (spec.is_array()) {
        if (static_cast<int>(spec.size()) != p)
            throw ConfigError("field '" + where + "' has " + std::to_string(spec.size()) +
                              " entries, expected " + std::to_string(p));
        Vec v(p);
        for (int i = 0; i < p; ++i) v(i) = as_number(spec[i], where + "[" + std::to_string(i) + "]");
        return v;
    }
    if (spec.is_string() && spec.get<std::string>() == "zeros") return Vec::Zero(p);
    if (!spec.is_object()) throw ConfigError("field '" + where + "' must be an array or a vector spec");
    double scale = spec.contains("scale") ? as_number(spec["scale"], where + ".scale") : 1.0;
    if (spec.contains("zeros")) return Vec::Zero(p);
    if (spec.contains("fill")) return Vec::Constant(p, as_number(spec["fill"], where + ".fill"));
    if (spec.contains("basis")) {
        long long k = as_integer(spec["basis"], where + ".basis");
        if (k < 0 || k >= p) throw ConfigError("field '" + where + ".basis' out of range");
        return scale * Vec::Unit(p, k);
    }
    if (spec.contains("random_unit")) {
        Rng rng = make_rng(as_seed(spec["random_unit"], where + ".random_unit"), 0, 17);
        std::normal_distribution<double> normal;
        Vec v(p);
        for (int i = 0; i < p; ++i) v(i) = normal(rng);
        return p > 0 ? Vec(scale * v / v.norm()) : v;
    }
    if (spec.contains("angle")) {
        if (p < 2) throw ConfigError("field '" + where + ".angle' needs p >= 2");
        double phi = as_number(spec["angle"], where + ".angle");
        Vec v = Vec::Zero(p);
        v(0) = -std::cos(phi);
        v(1) = std::sin(phi);
        return scale * v;
    }
    throw ConfigError("field '" + where + "': unknown vector spec (use an array, zeros, fill, basis, "
                      "random_unit or angle)");
}

Mat parse_matrix(const Json& spec, int p, const std::string& where) {
    if (spec.is_string()) {
        if (spec.get<std::string>() == "identity") return Mat::Identity(p, p);
        throw ConfigError("field '" + where + "': unknown matrix spec '" + spec.get<std::string>() + "'");
    }
    if (spec.is_array()) {
        if (static_cast<int>(spec.size()) != p)
            throw ConfigError("field '" + where + "' must have " + std::to_string(p) + " rows");
        Mat M(p, p);
        for (int i = 0; i < p; ++i) {
            Vec row = parse_vector(spec[i], p, where + "[" + std::to_string(i) + "]");
            M.row(i) = row.transpose();
        }
        return M;
    }
    if (spec.is_object()) {
        if (spec.contains("scaled_identity"))
            return as_number(spec["scaled_identity"], where + ".scaled_identity") * Mat::Identity(p, p);
        if (spec.contains("diag")) return parse_vector(spec["diag"], p, where + ".diag").asDiagonal();
    }
    throw ConfigError("field '" + where + "': unknown matrix spec (use identity, scaled_identity, diag "
                      "or a nested array)");
}

Regularizer make_regularizer(const Json& spec, int p, const std::string& where) {
    std::string kind = as_string(require(spec, "kind", where), join(where, "kind"));
    auto lam = [&] { return as_number(require(spec, "lambda", where), join(where, "lambda")); };
    auto shift = [&] {
        return spec.contains("a") ? parse_vector(spec["a"], p, join(where, "a")) : Vec(Vec::Zero(p));
    };
    try {
        if (kind == "ridge") return Regularizer::ridge(lam(), p);
        if (kind == "shifted_ridge") return Regularizer::shifted_ridge(shift(), lam());
        if (kind == "quadratic")
            return Regularizer::quadratic(shift(), parse_matrix(require(spec, "H", where), p, join(where, "H")));
        if (kind == "smooth_separable")
            return Regularizer::smooth_separable(
                shift(), lam(), as_number(require(spec, "eps", where), join(where, "eps")));
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError("field '" + join(where, "kind") + "': unknown regularizer '" + kind +
                      "' (expected ridge, shifted_ridge, quadratic or smooth_separable)");
}

namespace {

DataModel make_model(Json& spec, const std::string& base_dir) {
    const std::string where = "model";
    std::string kind = as_string(require(spec, "kind", where), "model.kind");
    if (kind == "csv") {
        std::filesystem::path path = as_string(require(spec, "path", where), "model.path");
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        return load_csv(path.string());
    }
    long long pl = as_integer(require(spec, "p", where), "model.p");
    if (pl < 1 || pl > 20000) throw ConfigError("field 'model.p' must be in [1, 20000]");
    int p = static_cast<int>(pl);
    try {
        if (kind == "gaussian_linear" || kind == "bimodal_linear") {
            if (!spec.contains("mu_x")) spec["mu_x"] = "zeros";
            if (!spec.contains("C_x")) spec["C_x"] = "identity";
            Vec mu = parse_vector(spec["mu_x"], p, "model.mu_x");
            Mat C = parse_matrix(spec["C_x"], p, "model.C_x");
            Vec th = parse_vector(require(spec, "theta_star", where), p, "model.theta_star");
            double sig = num_or(spec, "sigma_eps", 1.0, where);
            if (kind == "gaussian_linear") return DataModel::gaussian_linear(mu, C, th, sig);
            long long k = int_or(spec, "coordinate", 0, where);
            double c = num_or(spec, "c", 3.0, where), s = num_or(spec, "s", 0.5, where);
            return DataModel::bimodal_linear(mu, C, th, sig, static_cast<int>(k), c, s);
        }
        if (kind == "mixture_classes") {
            const Json& classes = require(spec, "classes", where);
            if (!classes.is_array() || classes.empty())
                throw ConfigError("field 'model.classes' must be a nonempty array");
            std::vector<double> priors, labels;
            std::vector<Vec> means;
            std::vector<Mat> covs;
            std::vector<std::vector<LatentLaw>> laws;
            for (std::size_t l = 0; l < classes.size(); ++l) {
                Json& c = spec["classes"][l];
                std::string w = "model.classes[" + std::to_string(l) + "]";
                priors.push_back(as_number(require(c, "prior", w), w + ".prior"));
                if (c.contains("label")) labels.push_back(as_number(c["label"], w + ".label"));
                if (!c.contains("cov")) c["cov"] = "identity";
                means.push_back(parse_vector(require(c, "mean", w), p, w + ".mean"));
                covs.push_back(parse_matrix(c["cov"], p, w + ".cov"));
                std::vector<LatentLaw> lw(p, LatentLaw::gaussian());
                if (c.contains("bimodal")) {
                    for (std::size_t b = 0; b < c["bimodal"].size(); ++b) {
                        Json& bm = c["bimodal"][b];
                        std::string wb = w + ".bimodal[" + std::to_string(b) + "]";
                        long long k = as_integer(require(bm, "coordinate", wb), wb + ".coordinate");
                        if (k < 0 || k >= p) throw ConfigError("field '" + wb + ".coordinate' out of range");
                        lw[k] = LatentLaw::bimodal(num_or(bm, "c", 3.0, wb), num_or(bm, "s", 0.5, wb));
                    }
                }
                laws.push_back(std::move(lw));
            }
            if (!labels.empty() && labels.size() != priors.size())
                throw ConfigError("either every class or no class of 'model.classes' has a label");
            return DataModel::mixture_classes(priors, means, covs, laws, labels);
        }
        if (kind == "lfmm") {
            const Json& sig = require(spec, "signal", where);
            if (!sig.is_array() || sig.empty() || static_cast<int>(sig.size()) > p)
                throw ConfigError("field 'model.signal' must be a nonempty array of length <= p");
            Vec s(sig.size());
            for (std::size_t i = 0; i < sig.size(); ++i) s(i) = as_number(sig[i], "model.signal");
            double prior = num_or(spec, "prior", 0.5, where);
            if (!spec.contains("basis")) spec["basis"] = Json{{"random_orthogonal", 1}};
            Mat V;
            if (spec["basis"].is_string() && spec["basis"].get<std::string>() == "identity")
                V = Mat::Identity(p, p);
            else if (spec["basis"].is_object() && spec["basis"].contains("random_orthogonal"))
                V = random_orthogonal(p, as_seed(spec["basis"]["random_orthogonal"],
                                                 "model.basis.random_orthogonal"));
            else
                throw ConfigError("field 'model.basis' must be \"identity\" or {\"random_orthogonal\": seed}");
            std::vector<LatentLaw> noise(p, LatentLaw::gaussian());
            if (!spec.contains("noise")) spec["noise"] = "gaussian";
            const Json& nz = spec["noise"];
            if (nz.is_object() && nz.contains("bimodal")) {
                Json b = nz["bimodal"];
                noise.assign(p, LatentLaw::bimodal(num_or(b, "c", 3.0, "model.noise.bimodal"),
                                                   num_or(b, "s", 0.5, "model.noise.bimodal")));
            } else if (!(nz.is_string() && nz.get<std::string>() == "gaussian")) {
                throw ConfigError("field 'model.noise' must be \"gaussian\" or {\"bimodal\": {...}}");
            }
            return DataModel::lfmm(V, s, noise, prior);
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    throw ConfigError("field 'model.kind': unknown model '" + kind +
                      "' (expected gaussian_linear, bimodal_linear, mixture_classes, lfmm or csv)");
}

}  // namespace

std::uint64_t ExperimentConfig::panel_seed() const { return panel.seed; }
std::uint64_t ExperimentConfig::replication_seed() const { return derive_seed(seed, 0, 200); }
std::uint64_t ExperimentConfig::test_seed() const { return derive_seed(seed, 0, 300); }
std::uint64_t ExperimentConfig::law_seed() const { return derive_seed(seed, 0, 400); }

ExperimentConfig parse_config(const Json& doc, const ConfigOverrides& ov, const std::string& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    Json res = doc;
    ExperimentConfig cfg;
    if (ov.seed) res["seed"] = *ov.seed;
    if (ov.out_dir) res["out"] = *ov.out_dir;
    if (ov.threads) res["threads"] = *ov.threads;
    if (!res.contains("seed")) res["seed"] = 1;
    cfg.seed = as_seed(res["seed"], "seed");

    cfg.loss = loss_from_name(as_string(require(res, "loss", ""), "loss"));
    if (!res.contains("model")) throw ConfigError("missing field 'model'");
    cfg.model = make_model(res["model"], base_dir);
    int p = cfg.model.dim();
    res["model"]["p"] = p;
    if (cfg.loss.kind == LossKind::Logistic && !cfg.model.classification())
        throw ConfigError("field 'loss': logistic loss needs a classification model");

    long long n = as_integer(require(res, "n", ""), "n");
    if (n < 1) throw ConfigError("field 'n' must be positive");
    cfg.n = static_cast<std::size_t>(n);

    if (!res.contains("regularizer")) throw ConfigError("missing field 'regularizer'");
    cfg.regularizer_spec = res["regularizer"];
    cfg.reg = make_regularizer(cfg.regularizer_spec, p);

    Json& sv = res["solver"];
    if (sv.is_null()) sv = Json::object();
    cfg.solve.tol = num_or(sv, "tol", 1e-8, "solver");
    cfg.solve.max_iters = static_cast<int>(int_or(sv, "max_iters", 500, "solver"));
    cfg.solve.damping = num_or(sv, "damping", 0.5, "solver");
    cfg.solve.alpha_floor = num_or(sv, "alpha_floor", 1e-10, "solver");
    cfg.solve.multistart = static_cast<int>(int_or(sv, "multistart", 0, "solver"));
    cfg.solve.multistart_seed = derive_seed(cfg.seed, 0, 500);
    long long auto_m = std::min<long long>(100000, std::max<long long>(20000, 10000000LL / p));
    cfg.panel.size = static_cast<std::size_t>(int_or(sv, "panel_size", auto_m, "solver"));
    cfg.panel.quadrature_order = static_cast<int>(int_or(sv, "quadrature_order", 41, "solver"));
    cfg.panel.antithetic = bool_or(sv, "antithetic", true, "solver");
    cfg.panel.moment_match = bool_or(sv, "moment_match", true, "solver");
    if (!sv.contains("panel_seed")) sv["panel_seed"] = derive_seed(cfg.seed, 0, 100);
    cfg.panel.seed = as_seed(sv["panel_seed"], "solver.panel_seed");
    cfg.refit.max_refits = static_cast<int>(int_or(sv, "max_refits", 5, "solver"));
    cfg.refit.mu_tol = num_or(sv, "refit_tol", 1e-6, "solver");
    if (!(cfg.solve.tol > 0)) throw ConfigError("field 'solver.tol' must be positive");
    if (!(cfg.solve.damping > 0 && cfg.solve.damping <= 1))
        throw ConfigError("field 'solver.damping' must be in (0, 1]");
    if (cfg.solve.max_iters < 1) throw ConfigError("field 'solver.max_iters' must be positive");
    if (cfg.panel.size < 2) throw ConfigError("field 'solver.panel_size' must be at least 2");
    sv["tol"] = cfg.solve.tol;
    sv["max_iters"] = cfg.solve.max_iters;
    sv["damping"] = cfg.solve.damping;
    sv["alpha_floor"] = cfg.solve.alpha_floor;
    sv["multistart"] = cfg.solve.multistart;
    sv["panel_size"] = cfg.panel.size;
    sv["quadrature_order"] = cfg.panel.quadrature_order;
    sv["antithetic"] = cfg.panel.antithetic;
    sv["moment_match"] = cfg.panel.moment_match;
    sv["max_refits"] = cfg.refit.max_refits;
    sv["refit_tol"] = cfg.refit.mu_tol;

    cfg.replications = static_cast<int>(int_or(res, "replications", 20, ""));
    if (cfg.replications < 2) throw ConfigError("field 'replications' must be at least 2");
    cfg.test_points = static_cast<std::size_t>(int_or(res, "test_points", 100000, ""));
    cfg.score_points = static_cast<std::size_t>(int_or(res, "score_points", 100000, ""));
    if (cfg.test_points < 1 || cfg.score_points < 1)
        throw ConfigError("fields 'test_points' and 'score_points' must be positive");
    cfg.threshold = num_or(res, "threshold", 0.0, "");
    cfg.threads = static_cast<int>(int_or(res, "threads", 0, ""));
    res["replications"] = cfg.replications;
    res["test_points"] = cfg.test_points;
    res["score_points"] = cfg.score_points;
    res["threshold"] = cfg.threshold;

    Json& hist = res["histogram"];
    if (hist.is_null()) hist = Json::object();
    cfg.hist_bins = static_cast<int>(int_or(hist, "bins", 60, "histogram"));
    if (cfg.hist_bins < 1) throw ConfigError("field 'histogram.bins' must be positive");
    hist["bins"] = cfg.hist_bins;

    if (res.contains("sweep")) {
        Json& sw = res["sweep"];
        SweepSpec spec;
        spec.parameter = as_string(require(sw, "parameter", "sweep"), "sweep.parameter");
        if (spec.parameter != "lambda" && spec.parameter != "phi")
            throw ConfigError("field 'sweep.parameter' must be lambda or phi");
        const Json& grid = require(sw, "grid", "sweep");
        if (!grid.is_array() || grid.empty()) throw ConfigError("field 'sweep.grid' must be a nonempty array");
        for (std::size_t i = 0; i < grid.size(); ++i)
            spec.grid.push_back(as_number(grid[i], "sweep.grid[" + std::to_string(i) + "]"));
        if (spec.parameter == "phi") {
            spec.phi_scale = num_or(sw, "scale", 1.0, "sweep");
            if (p < 2) throw ConfigError("phi sweep needs p >= 2");
        }
        if (spec.parameter == "lambda" && !cfg.regularizer_spec.contains("lambda"))
            throw ConfigError("lambda sweep needs a regularizer with a 'lambda' field");
        cfg.sweep = spec;
    }
    if (!res.contains("out")) res["out"] = "out";
    cfg.out_dir = as_string(res["out"], "out");
    res.erase("threads");
    cfg.resolved = res;
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const ConfigOverrides& ov) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    std::string base = std::filesystem::path(path).parent_path().string();
    return parse_config(doc, ov, base.empty() ? "." : base);
}

}  // namespace erma
