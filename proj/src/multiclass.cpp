#include "erma/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace erma {

namespace {

constexpr double kGrowthAllowance = 1.05;

double rel(double now, double cand) {
    return std::fabs(cand - now) / std::max({std::fabs(now), std::fabs(cand), 1e-7});
}

struct ClassState {
    Vec mu;
    Vec alpha, kappa, nu;
};

}  // namespace

MulticlassSolution solve_multiclass(const DataModel& model, const LossFamily& loss,
                                    const Regularizer& reg, double n,
                                    const ExpectationPanel& panel, const SolveOptions& opts) {
    if (!reg.is_quadratic()) throw ConfigError("multiclass solver needs a quadratic regularizer");
    int p = model.dim();
    int k = model.class_count();
    require_dim(reg.dim() == p, "regularizer dimension vs model dimension");
    require_dim(panel.classes() == k, "panel classes vs model classes");
    if (!(n > 0.0)) throw ConfigError("sample size n must be positive");
    if (loss.kind == LossKind::Logistic && !model.classification())
        throw ConfigError("logistic loss needs a classification model");

    std::vector<Mat> C(k);
    std::vector<double> gamma(k);
    for (int l = 0; l < k; ++l) {
        ClassMoments cm = model.class_moments(l);
        C[l] = cm.cov;
        gamma[l] = panel.class_weight[l];
    }
    Mat H = reg.hess0();
    Eigen::LLT<Mat> H_llt(H);
    if (H_llt.info() != Eigen::Success) throw DomainError("H is not positive definite");
    Vec a = reg.linear_term();

    // Per-class kappa_l and A_{hl} = tr(C_h Q C_l Q)/n at the given nu vector.
    auto traces = [&](const Vec& nu, Vec& kap, Mat& A) {
        Mat S = H;
        for (int h = 0; h < k; ++h) S += gamma[h] * nu(h) * C[h];
        Eigen::LLT<Mat> llt(S);
        if (llt.info() != Eigen::Success) throw DomainError("sum_h gamma_h nu_h C_h + H is not PD");
        std::vector<Mat> G(k);
        kap.resize(k);
        A.resize(k, k);
        for (int l = 0; l < k; ++l) {
            G[l] = llt.solve(C[l]);
            kap(l) = G[l].trace() / n;
        }
        for (int h = 0; h < k; ++h)
            for (int l = h; l < k; ++l)
                A(h, l) = A(l, h) = (G[h].array() * G[l].transpose().array()).sum() / n;
    };

    ClassState s;
    s.mu = Vec::Zero(p);
    s.alpha = Vec::Ones(k);
    s.nu = Vec::Constant(k, 0.5);
    Mat A;
    traces(s.nu, s.kappa, A);
    for (int l = 0; l < k; ++l)
        if (!(s.kappa(l) > 0.0)) s.kappa(l) = 1e-12;

    MulticlassSolution sol;
    double delta = opts.damping;
    double prev = std::numeric_limits<double>::infinity();
    int streak = 0;
    std::vector<double> res;
    ClassState cand;
    auto evaluate = [&] {
        cand.mu.resize(p);
        traces(s.nu, cand.kappa, A);
        std::vector<double> al(s.alpha.data(), s.alpha.data() + k);
        std::vector<double> ka(s.kappa.data(), s.kappa.data() + k);
        auto blocks = panel_expectations(panel, loss, s.mu, al, ka, true);
        cand.nu.resize(k);
        cand.alpha.resize(k);
        Vec b = a;
        for (int h = 0; h < k; ++h) b += gamma[h] / s.kappa(h) * blocks[h].x_xi;
        for (int l = 0; l < k; ++l) {
            cand.nu(l) = s.alpha(l) > opts.alpha_floor ? blocks[l].zxi / (s.alpha(l) * s.kappa(l))
                                                        : blocks[l].dxi / s.kappa(l);
            double a2 = 0.0;
            for (int h = 0; h < k; ++h)
                a2 += gamma[h] * A(h, l) / (s.kappa(h) * s.kappa(h)) * blocks[h].xi2;
            cand.alpha(l) = std::sqrt(std::max(0.0, a2));
        }
        cand.mu = -H_llt.solve(b);
        res.assign(3 * k + 1, 0.0);
        for (int l = 0; l < k; ++l) {
            res[l] = rel(s.kappa(l), cand.kappa(l));
            res[k + l] = rel(s.nu(l), cand.nu(l));
            res[2 * k + l] = rel(s.alpha(l), cand.alpha(l));
        }
        res[3 * k] = p == 0 ? 0.0
                            : (cand.mu - s.mu).norm() /
                                  std::max({s.mu.norm(), cand.mu.norm(), 1e-7});
    };

    int it = 0;
    for (; it < opts.max_iters; ++it) {
        for (int l = 0; l < k; ++l)
            if (s.alpha(l) < opts.alpha_floor) {
                s.alpha(l) = 0.0;
                sol.degenerate = true;
            }
        evaluate();
        double r = *std::max_element(res.begin(), res.end());
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
        s.kappa += delta * (cand.kappa - s.kappa);
        s.nu += delta * (cand.nu - s.nu);
        s.alpha += delta * (cand.alpha - s.alpha);
        s.mu += delta * (cand.mu - s.mu);
    }
    if (!sol.converged) evaluate();
    sol.mu_star = s.mu;
    sol.alpha = s.alpha;
    sol.kappa = s.kappa;
    sol.nu = s.nu;
    sol.residuals = res;
    sol.iterations = it;
    return sol;
}

}  // namespace erma
