#include "erma/experiments.hpp"
#include "erma/parallel.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace erma {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& file) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    return dir / file;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const ExperimentConfig& cfg, const std::string& file, const Json& j) {
    write_text(out_path(cfg, file), j.dump(2) + "\n");
}

Json vec_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

bool binary(const DataModel& model) { return model.classification() && model.class_count() == 2; }

bool misclassified(double score, double y, double tau) { return (score > tau) != (y > 0); }

Regularizer sweep_regularizer(const ExperimentConfig& cfg, double value) {
    Json spec = cfg.regularizer_spec;
    if (cfg.sweep->parameter == "lambda") {
        spec["lambda"] = value;
    } else {
        spec["a"] = Json{{"angle", value}, {"scale", cfg.sweep->phi_scale}};
        if (spec["kind"] == "ridge") spec["kind"] = "shifted_ridge";
    }
    return make_regularizer(spec, cfg.model.dim(), "regularizer");
}

}  // namespace

TheoryResult theory_solve(const ExperimentConfig& cfg, const DataModel& model, const Regularizer& reg) {
    ExpectationPanel panel = build_panel(model, cfg.panel);
    TheoryResult tr;
    if (reg.is_quadratic()) {
        tr.sol = solve(model, cfg.loss, reg, static_cast<double>(cfg.n), panel, cfg.solve);
        tr.shift = reg.linear_term();
    } else {
        RefitResult rr = solve_with_refit(model, cfg.loss, reg, static_cast<double>(cfg.n), panel,
                                          cfg.solve, cfg.refit);
        tr.sol = rr.solution;
        tr.shift = rr.surrogate.linear_term();
        tr.refit_used = true;
        tr.refit_stabilized = rr.stabilized;
        tr.refit_changes = rr.mu_changes;
    }
    return tr;
}

TheoryErrors theory_errors(const ExperimentConfig& cfg, const DataModel& model, const Vec& mu_star,
                           double alpha_star) {
    TheoryErrors te;
    if (binary(model)) {
        ClassScoreLaws laws = predict(model, mu_star, alpha_star, cfg.score_points, cfg.law_seed());
        ClassScoreLaws base = gaussian_baseline_per_class(model, mu_star, alpha_star);
        te.theory = classification_error(laws.laws[0], laws.laws[1], laws.priors[0], laws.priors[1],
                                         cfg.threshold);
        te.gaussian_score = classification_error(base.laws[0], base.laws[1], base.priors[0],
                                                 base.priors[1], cfg.threshold);
        for (int l = 0; l < 2; ++l)
            te.baseline_ks = std::max(te.baseline_ks, ks_between(laws.laws[l], base.laws[l]));
        return te;
    }
    Projections pr = model.projection_samples(mu_star, cfg.score_points, cfg.law_seed());
    if (model.has_theta_star()) {
        Moments mo = model.moments();
        Mat Sigma = mo.C + mo.mu * mo.mu.transpose();
        Vec d = mu_star - model.theta_star();
        te.theory = d.dot(Sigma * d) + model.sigma_eps() * model.sigma_eps() + alpha_star * alpha_star;
        te.gaussian_score = te.theory;
    } else {
        te.theory = (pr.value - pr.y).squaredNorm() / pr.value.size() + alpha_star * alpha_star;
        te.gaussian_score = kNaN;
    }
    ScoreLaw law(std::vector<double>(pr.value.data(), pr.value.data() + pr.value.size()), alpha_star);
    te.baseline_ks = ks_between(law, gaussian_baseline(model.moments(), mu_star, alpha_star));
    return te;
}

EmpiricalErrors empirical_errors(const ExperimentConfig& cfg, const DataModel& model,
                                 const Regularizer& reg, int R) {
    EmpiricalErrors ee;
    ee.summary = replicate(model, cfg.loss, reg, cfg.n, R, cfg.replication_seed(), cfg.fit);
    MultiProjections mp = model.project(ee.summary.thetas, cfg.test_points, cfg.test_seed());
    ee.per_replication.resize(R);
    for (int r = 0; r < R; ++r) {
        double e = 0.0;
        for (int i = 0; i < mp.y.size(); ++i) {
            double s = mp.value(i, r);
            if (model.classification()) e += misclassified(s, mp.y(i), cfg.threshold) ? 1.0 : 0.0;
            else e += (s - mp.y(i)) * (s - mp.y(i));
        }
        ee.per_replication[r] = e / mp.y.size();
    }
    double m = 0.0;
    for (double e : ee.per_replication) m += e;
    m /= R;
    double v = 0.0;
    for (double e : ee.per_replication) v += (e - m) * (e - m);
    ee.mean = m;
    ee.stderr_ = std::sqrt(v / (R - 1.0) / R);
    return ee;
}

Json solution_json(const FixedPointSolution& sol) {
    Json j;
    j["mu_star"] = vec_json(sol.mu_star);
    j["mu_norm"] = sol.mu_star.norm();
    j["alpha_star"] = sol.alpha_star;
    j["kappa_star"] = sol.kappa_star;
    j["nu_star"] = sol.nu_star;
    j["beta_star"] = sol.beta_star;
    j["residuals"] = {{"kappa", sol.residuals[0]},
                      {"nu", sol.residuals[1]},
                      {"alpha", sol.residuals[2]},
                      {"mu", sol.residuals[3]}};
    j["iterations"] = sol.iterations;
    j["converged"] = sol.converged;
    j["degenerate"] = sol.degenerate;
    j["final_damping"] = sol.final_damping;
    Json ms = Json::array();
    for (const auto& m : sol.multistart)
        ms.push_back({{"mu_norm", m.mu_norm},
                      {"alpha", m.alpha},
                      {"kappa", m.kappa},
                      {"nu", m.nu},
                      {"converged", m.converged}});
    j["multistart"] = ms;
    return j;
}

int cmd_solve(const ExperimentConfig& cfg) {
    TheoryResult tr = theory_solve(cfg, cfg.model, cfg.reg);
    Json j;
    j["config"] = cfg.resolved;
    j["solution"] = solution_json(tr.sol);
    if (cfg.model.has_theta_star()) {
        const Vec& th = cfg.model.theta_star();
        double t2 = th.squaredNorm();
        j["solution"]["mean_overlap"] = t2 > 0 ? tr.sol.mu_star.dot(th) / t2 : 0.0;
    }
    j["effective_shift"] = vec_json(tr.shift);
    if (tr.refit_used)
        j["refit"] = {{"stabilized", tr.refit_stabilized}, {"mu_changes", tr.refit_changes}};
    if (cfg.loss.kind == LossKind::Squared && cfg.model.has_theta_star() && cfg.reg.is_quadratic()) {
        try {
            RidgeClosedForm cf = ridge_closed_form(cfg.model.moments(), cfg.model.theta_star(),
                                                   cfg.model.sigma_eps(), cfg.reg.linear_term(),
                                                   cfg.reg.hess0(), static_cast<double>(cfg.n));
            j["ridge_closed_form"] = {{"nu_star", cf.nu_star},
                                      {"alpha_sq", cf.alpha_sq},
                                      {"gen_error", cf.gen_error},
                                      {"delta", cf.delta},
                                      {"A", cf.a_nu},
                                      {"mu_of_nu", vec_json(cf.mu_of_nu)}};
        } catch (const DomainError& e) {
            j["ridge_closed_form"] = {{"error", e.what()}};
        }
    }
    write_json(cfg, "solution.json", j);
    return tr.sol.converged ? kExitOk : kExitNonConvergence;
}

int cmd_compare(const ExperimentConfig& cfg) {
    TheoryResult tr = theory_solve(cfg, cfg.model, cfg.reg);
    const Vec& mu = tr.sol.mu_star;
    double a2 = tr.sol.alpha_star * tr.sol.alpha_star;
    TheoryErrors te = theory_errors(cfg, cfg.model, mu, tr.sol.alpha_star);
    EmpiricalErrors ee = empirical_errors(cfg, cfg.model, cfg.reg, cfg.replications);
    const ReplicationSummary& rs = ee.summary;

    struct Row {
        std::string name;
        double theory, empirical, stderr_, gap;
    };
    auto gap = [](double t, double e) {
        return t != 0.0 ? std::fabs(e - t) / std::fabs(t) : std::fabs(e - t);
    };
    std::vector<Row> rows;
    double emp_norm = rs.mu_hat.norm();
    double norm_se = emp_norm > 0 ? std::sqrt((rs.mu_hat.cwiseProduct(rs.mu_stderr)).squaredNorm()) / emp_norm
                                  : rs.mu_stderr.norm();
    rows.push_back({"mu_norm", mu.norm(), emp_norm, norm_se, gap(mu.norm(), emp_norm)});
    double cosv = (mu.norm() > 0 && emp_norm > 0) ? mu.dot(rs.mu_hat) / (mu.norm() * emp_norm) : kNaN;
    rows.push_back({"mu_cosine", 1.0, cosv, kNaN, std::fabs(1.0 - cosv)});
    double dist = (rs.mu_hat - mu).norm();
    rows.push_back({"mu_distance", 0.0, dist, rs.mu_stderr.norm(),
                    mu.norm() > 0 ? dist / mu.norm() : dist});
    rows.push_back({"alpha_sq", a2, rs.trace_cov, rs.trace_cov_stderr, gap(a2, rs.trace_cov)});
    rows.push_back({cfg.model.classification() ? "classification_error" : "test_mse", te.theory,
                    ee.mean, ee.stderr_, gap(te.theory, ee.mean)});

    std::ostringstream csv;
    csv << "quantity,theory,empirical,stderr,rel_gap\n";
    Json jrows = Json::array();
    for (const Row& r : rows) {
        csv << r.name << ',' << fmt(r.theory) << ',' << fmt(r.empirical) << ',' << fmt(r.stderr_) << ','
            << fmt(r.gap) << '\n';
        jrows.push_back({{"quantity", r.name},
                         {"theory", r.theory},
                         {"empirical", r.empirical},
                         {"stderr", r.stderr_},
                         {"rel_gap", r.gap}});
    }
    write_text(out_path(cfg, "compare.csv"), csv.str());
    Json j;
    j["config"] = cfg.resolved;
    j["solution"] = solution_json(tr.sol);
    j["rows"] = jrows;
    j["replication"] = {{"R", rs.R},
                        {"mu_hat", vec_json(rs.mu_hat)},
                        {"trace_cov", rs.trace_cov},
                        {"trace_cov_stderr", rs.trace_cov_stderr},
                        {"projection_skewness", rs.projection_skewness},
                        {"projection_excess_kurtosis", rs.projection_excess_kurtosis},
                        {"test_error_per_replication", ee.per_replication}};
    write_json(cfg, "compare.json", j);
    return tr.sol.converged ? kExitOk : kExitNonConvergence;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    if (!cfg.sweep) throw ConfigError("missing field 'sweep'");
    const auto& grid = cfg.sweep->grid;
    struct Point {
        double theory = kNaN, gscore = kNaN, gdata = kNaN, emp = kNaN, emp_se = kNaN, ks = kNaN;
        bool converged = false;
        std::string status = "ok";
    };
    std::vector<Point> pts(grid.size());
    for_chunks(grid.size(), 1, [&](std::size_t i, std::size_t, std::size_t) {
        Point& pt = pts[i];
        try {
            Regularizer reg = sweep_regularizer(cfg, grid[i]);
            TheoryResult tr = theory_solve(cfg, cfg.model, reg);
            pt.converged = tr.sol.converged;
            TheoryErrors te = theory_errors(cfg, cfg.model, tr.sol.mu_star, tr.sol.alpha_star);
            pt.theory = te.theory;
            pt.gscore = te.gaussian_score;
            pt.ks = te.baseline_ks;
            DataModel gm = cfg.model.gaussianized();
            TheoryResult tg = theory_solve(cfg, gm, reg);
            pt.gdata = theory_errors(cfg, gm, tg.sol.mu_star, tg.sol.alpha_star).theory;
            pt.converged = pt.converged && tg.sol.converged;
            EmpiricalErrors ee = empirical_errors(cfg, cfg.model, reg, cfg.replications);
            pt.emp = ee.mean;
            pt.emp_se = ee.stderr_;
            if (!pt.converged) pt.status = "not_converged";
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
    });
    std::ostringstream csv;
    csv << cfg.sweep->parameter
        << ",theory_error,gaussian_score_error,gaussian_data_error,empirical_error,empirical_stderr,"
           "baseline_ks,converged,status\n";
    Json jp = Json::array();
    bool all_ok = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point& p = pts[i];
        std::string status = p.status;
        for (char& ch : status)
            if (ch == ',' || ch == '\n') ch = ';';
        csv << fmt(grid[i]) << ',' << fmt(p.theory) << ',' << fmt(p.gscore) << ',' << fmt(p.gdata)
            << ',' << fmt(p.emp) << ',' << fmt(p.emp_se) << ',' << fmt(p.ks) << ','
            << (p.converged ? 1 : 0) << ',' << status << '\n';
        jp.push_back({{"value", grid[i]},
                      {"theory_error", p.theory},
                      {"gaussian_score_error", p.gscore},
                      {"gaussian_data_error", p.gdata},
                      {"empirical_error", p.emp},
                      {"empirical_stderr", p.emp_se},
                      {"baseline_ks", p.ks},
                      {"converged", p.converged},
                      {"status", p.status}});
        all_ok = all_ok && p.converged;
    }
    write_text(out_path(cfg, "sweep.csv"), csv.str());
    Json j;
    j["config"] = cfg.resolved;
    j["parameter"] = cfg.sweep->parameter;
    j["error_metric"] = cfg.model.classification() ? "classification_error" : "test_mse";
    j["points"] = jp;
    write_json(cfg, "sweep.json", j);
    return all_ok ? kExitOk : kExitNonConvergence;
}

int cmd_score_hist(const ExperimentConfig& cfg) {
    TheoryResult tr = theory_solve(cfg, cfg.model, cfg.reg);
    const Vec& mu = tr.sol.mu_star;
    double alpha = tr.sol.alpha_star;
    ClassScoreLaws laws = predict(cfg.model, mu, alpha, cfg.score_points, cfg.law_seed());
    ClassScoreLaws base = gaussian_baseline_per_class(cfg.model, mu, alpha);
    int k = cfg.model.class_count();

    ReplicationSummary rs = replicate(cfg.model, cfg.loss, cfg.reg, cfg.n, cfg.replications,
                                      cfg.replication_seed(), cfg.fit);
    MultiProjections mp = cfg.model.project(rs.thetas, cfg.test_points, cfg.test_seed());
    std::vector<std::vector<double>> emp(k);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < mp.value.rows(); ++i)
        for (int r = 0; r < mp.value.cols(); ++r) {
            double s = mp.value(i, r);
            emp[mp.cls[i]].push_back(s);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    lo = std::min(lo, laws.pooled.centers().front() - 3 * alpha);
    hi = std::max(hi, laws.pooled.centers().back() + 3 * alpha);
    if (!(hi > lo)) hi = lo + 1.0;
    int B = cfg.hist_bins;
    double w = (hi - lo) / B;
    std::vector<std::vector<long long>> counts(k, std::vector<long long>(B, 0));
    for (int l = 0; l < k; ++l)
        for (double s : emp[l]) counts[l][std::min(B - 1, static_cast<int>((s - lo) / w))]++;

    std::ostringstream csv;
    csv << "bin_left,bin_right,theory_pdf,baseline_pdf";
    for (int l = 0; l < k; ++l) csv << ",count_class_" << fmt(laws.labels[l]);
    csv << '\n';
    for (int b = 0; b < B; ++b) {
        double c = lo + (b + 0.5) * w;
        double tp = kNaN, bp = 0.0;
        if (alpha > 0) tp = laws.pooled.pdf(c);
        for (int l = 0; l < k; ++l) {
            if (base.laws[l].scale() > 0) bp += base.priors[l] * base.laws[l].pdf(c);
            else bp = kNaN;
        }
        csv << fmt(lo + b * w) << ',' << fmt(lo + (b + 1) * w) << ',' << fmt(tp) << ',' << fmt(bp);
        for (int l = 0; l < k; ++l) csv << ',' << counts[l][b];
        csv << '\n';
    }
    write_text(out_path(cfg, "score_hist.csv"), csv.str());

    Json cls = Json::array();
    for (int l = 0; l < k; ++l) {
        double ks_t = emp[l].empty() ? kNaN : ks_distance(laws.laws[l], emp[l]);
        double ks_b = emp[l].empty() ? kNaN : ks_distance(base.laws[l], emp[l]);
        cls.push_back({{"label", laws.labels[l]},
                       {"prior", laws.priors[l]},
                       {"empirical_scores", emp[l].size()},
                       {"ks_theory", ks_t},
                       {"ks_baseline", ks_b}});
    }
    Json j;
    j["config"] = cfg.resolved;
    j["solution"] = solution_json(tr.sol);
    j["columns"] = "bin_left,bin_right: bin edges; theory_pdf: mixture density of mu*^T x + alpha* z at "
                   "the bin center; baseline_pdf: prior-weighted class-wise Gaussian baseline density; "
                   "count_class_<label>: empirical test-score counts pooled over replications";
    j["classes"] = cls;
    write_json(cfg, "score_hist.json", j);
    return tr.sol.converged ? kExitOk : kExitNonConvergence;
}

}  // namespace erma
