#include "erma/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace erma {

namespace {

constexpr double kScaleFloor = 1e-7;
constexpr double kGrowthAllowance = 1.05;

double rel(double now, double cand) {
    return std::fabs(cand - now) / std::max({std::fabs(now), std::fabs(cand), kScaleFloor});
}

double rel(const Vec& now, const Vec& cand) {
    if (now.size() == 0) return 0.0;
    return (cand - now).norm() / std::max({now.norm(), cand.norm(), kScaleFloor});
}

struct Problem {
    const DataModel& model;
    const LossFamily& loss;
    const ExpectationPanel& panel;
    ResolventContext ctx;
    Vec a;
    Eigen::LLT<Mat> H_llt;
};

Problem make_problem(const DataModel& model, const LossFamily& loss, const Regularizer& reg, double n,
                     const ExpectationPanel& panel) {
    if (!reg.is_quadratic())
        throw ConfigError("the fixed-point solver needs a quadratic regularizer; "
                          "use quadratic_surrogate or solve_with_refit");
    require_dim(reg.dim() == model.dim(), "regularizer dimension vs model dimension");
    require_dim(panel.X.rows() == model.dim(), "panel dimension vs model dimension");
    if (panel.size() == 0) throw ConfigError("expectation panel is empty");
    if (model.classification() && loss.kind == LossKind::Logistic) {
        for (int l = 0; l < model.class_count(); ++l) check_label(loss, model.class_moments(l).label);
    } else if (!model.classification() && loss.kind == LossKind::Logistic) {
        throw ConfigError("logistic loss needs a classification model");
    }
    Mat H = reg.hess0();
    Problem pr{model, loss, panel, ResolventContext(model.moments().C, H, n), reg.linear_term(),
               Eigen::LLT<Mat>(H)};
    if (pr.H_llt.info() != Eigen::Success) throw DomainError("H is not positive definite");
    return pr;
}

struct Update {
    FixedPointState cand;
    std::array<double, 4> res{};
    double xi2 = 0;
};

Update evaluate(const Problem& pr, const FixedPointState& s, double alpha_floor) {
    int k = pr.panel.classes();
    auto blocks = panel_expectations(pr.panel, pr.loss, s.mu, std::vector<double>(k, s.alpha),
                                     std::vector<double>(k, s.kappa), true);
    double zxi = 0, xi2 = 0, dxi = 0;
    Vec x_xi = Vec::Zero(s.mu.size());
    for (int l = 0; l < k; ++l) {
        double g = pr.panel.class_weight[l];
        zxi += g * blocks[l].zxi;
        xi2 += g * blocks[l].xi2;
        dxi += g * blocks[l].dxi;
        x_xi += g * blocks[l].x_xi;
    }
    Update up;
    up.xi2 = xi2;
    up.cand.kappa = pr.ctx.kappa(s.nu);
    up.cand.nu = s.alpha > alpha_floor ? zxi / (s.alpha * s.kappa) : dxi / s.kappa;
    up.cand.alpha = std::sqrt(std::max(0.0, pr.ctx.a_of_nu(s.nu) / (s.kappa * s.kappa) * xi2));
    up.cand.mu = -pr.H_llt.solve(pr.a + x_xi / s.kappa);
    up.res = {rel(s.kappa, up.cand.kappa), rel(s.nu, up.cand.nu), rel(s.alpha, up.cand.alpha),
              rel(s.mu, up.cand.mu)};
    return up;
}

double max_res(const std::array<double, 4>& r) { return *std::max_element(r.begin(), r.end()); }

FixedPointSolution run(const Problem& pr, const SolveOptions& opts, FixedPointState s) {
    if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw ConfigError("damping must be in (0, 1]");
    if (opts.max_iters < 1) throw ConfigError("max_iters must be at least 1");
    FixedPointSolution sol;
    double delta = opts.damping;
    double prev = std::numeric_limits<double>::infinity();
    int streak = 0;
    Update up;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        if (s.alpha < opts.alpha_floor) {
            s.alpha = 0.0;
            sol.degenerate = true;
        }
        up = evaluate(pr, s, opts.alpha_floor);
        double r = max_res(up.res);
        if (!std::isfinite(r)) break;
        if (r <= opts.tol) {
            sol.converged = true;
            break;
        }
        if (r > kGrowthAllowance * prev) {
            delta = std::max(delta * 0.5, 1.0 / 1024);
            streak = 0;
        } else if (++streak >= 10 && delta < opts.damping) {
            delta = std::min(opts.damping, delta * 1.5);
            streak = 0;
        }
        prev = r;
        s.kappa += delta * (up.cand.kappa - s.kappa);
        s.nu += delta * (up.cand.nu - s.nu);
        s.alpha += delta * (up.cand.alpha - s.alpha);
        s.mu += delta * (up.cand.mu - s.mu);
    }
    if (!sol.converged) up = evaluate(pr, s, opts.alpha_floor);
    sol.mu_star = s.mu;
    sol.alpha_star = s.alpha;
    sol.kappa_star = s.kappa;
    sol.nu_star = s.nu;
    sol.beta_star = std::sqrt(up.xi2) / s.kappa;
    sol.residuals = up.res;
    sol.iterations = it;
    sol.final_damping = delta;
    sol.degenerate = sol.degenerate || s.alpha < opts.alpha_floor;
    return sol;
}

FixedPointState default_state(const Problem& pr) {
    FixedPointState s;
    s.mu = Vec::Zero(pr.model.dim());
    s.alpha = 1.0;
    s.nu = 0.5;
    s.kappa = pr.ctx.kappa(s.nu);
    if (!(s.kappa > 0.0)) s.kappa = 1e-12;
    return s;
}

}  // namespace

FixedPointSolution solve(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                         double n, const ExpectationPanel& panel, const SolveOptions& opts,
                         const FixedPointState* init) {
    Problem pr = make_problem(model, loss, reg, n, panel);
    FixedPointState s0 = init ? *init : default_state(pr);
    require_dim(s0.mu.size() == model.dim(), "initial mu length");
    FixedPointSolution sol = run(pr, opts, s0);
    if (opts.multistart > 0) {
        Rng rng = make_rng(opts.multistart_seed, 0, 5);
        std::normal_distribution<double> normal;
        double scale = (1.0 + sol.mu_star.norm()) / std::sqrt(std::max(1, model.dim()));
        for (int r = 0; r < opts.multistart; ++r) {
            FixedPointState s = default_state(pr);
            for (int i = 0; i < s.mu.size(); ++i) s.mu(i) = 2.0 * scale * normal(rng);
            FixedPointSolution alt = run(pr, opts, s);
            sol.multistart.push_back(
                {alt.mu_star.norm(), alt.alpha_star, alt.kappa_star, alt.nu_star, alt.converged});
        }
    }
    return sol;
}

std::array<double, 4> residuals(const FixedPointState& state, const DataModel& model,
                                const LossFamily& loss, const Regularizer& reg, double n,
                                const ExpectationPanel& panel) {
    Problem pr = make_problem(model, loss, reg, n, panel);
    if (!(state.kappa > 0.0)) throw DomainError("residuals need kappa > 0");
    return evaluate(pr, state, 0.0).res;
}

RefitResult solve_with_refit(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                             double n, const ExpectationPanel& panel, const SolveOptions& opts,
                             const RefitOptions& refit) {
    int p = model.dim();
    Vec x = Vec::Zero(p);
    std::vector<Vec> hist_T, hist_f;
    RefitResult out{FixedPointSolution{}, reg.quadratic_surrogate(x), {}, false};
    std::optional<FixedPointState> warm;
    Vec last_T;
    for (int r = 0; r <= refit.max_refits; ++r) {
        Regularizer sur = reg.quadratic_surrogate(x);
        FixedPointSolution sol = solve(model, loss, sur, n, panel, opts, warm ? &*warm : nullptr);
        warm = sol.state();
        Vec T = sol.mu_star;
        out.solution = sol;
        out.surrogate = sur;
        if (r > 0) {
            double change = (T - last_T).norm();
            out.mu_changes.push_back(change);
            if (change <= refit.mu_tol) {
                out.stabilized = true;
                break;
            }
        }
        last_T = T;
        hist_T.push_back(T);
        hist_f.push_back(T - x);
        if (static_cast<int>(hist_T.size()) > refit.anderson_depth + 1) {
            hist_T.erase(hist_T.begin());
            hist_f.erase(hist_f.begin());
        }
        std::size_t m = hist_T.size() - 1;
        if (m == 0 || refit.anderson_depth == 0) {
            x = T;
            continue;
        }
        Mat dF(p, m), dT(p, m);
        for (std::size_t j = 0; j < m; ++j) {
            dF.col(j) = hist_f[j + 1] - hist_f[j];
            dT.col(j) = hist_T[j + 1] - hist_T[j];
        }
        Vec gamma = dF.colPivHouseholderQr().solve(hist_f.back());
        x = T - dT * gamma;
        if (!x.allFinite()) x = T;
    }
    return out;
}

RidgeClosedForm ridge_closed_form(const Moments& moments, const Vec& theta_star, double sigma_eps,
                                  const Vec& a, const Mat& H, double n) {
    int p = static_cast<int>(moments.mu.size());
    require_dim(theta_star.size() == p && a.size() == p, "theta_star / a length");
    ResolventContext ctx(moments.C, H, n);
    RidgeClosedForm out;
    out.nu_star = solve_nu_ridge(ctx);
    out.a_nu = ctx.a_of_nu(out.nu_star);
    out.kappa = ctx.kappa(out.nu_star);
    double nu = out.nu_star;
    double denom = 1.0 - nu * nu * out.a_nu;
    if (!(denom > 0.0))
        throw DomainError("1 - nu^2 A(nu) <= 0: outside the validity region of the closed form");
    Mat Sigma = moments.C + moments.mu * moments.mu.transpose();
    out.mu_of_nu = spd_solve(H + nu * Sigma, nu * Sigma * theta_star - a, "H + nu Sigma_x");
    Vec d = out.mu_of_nu - theta_star;
    out.delta = d.dot(Sigma * d);
    double s2 = sigma_eps * sigma_eps;
    out.alpha_sq = nu * nu * out.a_nu * (out.delta + s2) / denom;
    out.gen_error = (nu * nu * out.a_nu * s2 + out.delta) / denom;
    return out;
}

}  // namespace erma
