#pragma once

#include "erma/data_model.hpp"
#include "erma/loss.hpp"
#include "erma/quadrature.hpp"
#include "erma/regularizer.hpp"
#include "erma/rmt.hpp"

#include <array>
#include <optional>
#include <vector>

namespace erma {

struct PanelOptions {
    std::size_t size = 100000;
    int quadrature_order = 41;
    bool antithetic = true;
    bool moment_match = true;
    std::uint64_t seed = 1;
};

// Fixed sample over (x, y) plus Gauss-Hermite rule over z. Samples are grouped
// in contiguous per-class blocks; weight(j) sums to 1 overall.
struct ExpectationPanel {
    Mat X;
    Vec y;
    Vec weight;
    std::vector<std::size_t> block_begin;  // class l occupies [block_begin[l], block_begin[l+1])
    std::vector<double> class_weight;
    GaussHermite gh;

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
    int classes() const { return static_cast<int>(class_weight.size()); }
};

ExpectationPanel build_panel(const DataModel& model, const PanelOptions& opts);

// Conditional expectations within one class block at (mu, alpha, kappa).
struct BlockExpectation {
    double xi = 0, zxi = 0, xi2 = 0, dxi = 0;
    Vec x_xi;
};

std::vector<BlockExpectation> panel_expectations(const ExpectationPanel& panel,
                                                 const LossFamily& loss, const Vec& mu,
                                                 const std::vector<double>& alpha,
                                                 const std::vector<double>& kappa,
                                                 bool with_vector = true);

struct SolveOptions {
    double tol = 1e-8;
    int max_iters = 500;
    double damping = 0.5;
    double alpha_floor = 1e-10;
    int multistart = 0;
    std::uint64_t multistart_seed = 7;
};

struct FixedPointState {
    Vec mu;
    double alpha = 1.0;
    double kappa = 1.0;
    double nu = 0.5;
};

struct MultistartRecord {
    double mu_norm = 0, alpha = 0, kappa = 0, nu = 0;
    bool converged = false;
};

struct FixedPointSolution {
    Vec mu_star;
    double alpha_star = 0, kappa_star = 0, nu_star = 0, beta_star = 0;
    std::array<double, 4> residuals{};  // kappa, nu, alpha, mu equations
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
    double final_damping = 0;
    std::vector<MultistartRecord> multistart;

    FixedPointState state() const { return {mu_star, alpha_star, kappa_star, nu_star}; }
};

// Requires a quadratic regularizer.
FixedPointSolution solve(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                         double n, const ExpectationPanel& panel, const SolveOptions& opts = {},
                         const FixedPointState* init = nullptr);

std::array<double, 4> residuals(const FixedPointState& state, const DataModel& model,
                                const LossFamily& loss, const Regularizer& reg, double n,
                                const ExpectationPanel& panel);

struct RefitOptions {
    int max_refits = 5;
    double mu_tol = 1e-6;
    int anderson_depth = 2;
};

struct RefitResult {
    FixedPointSolution solution;
    Regularizer surrogate;
    std::vector<double> mu_changes;  // |mu*_r - mu*_{r-1}| per refit
    bool stabilized = false;
};

// Alternates quadratic_surrogate(reg, mu) and solve until mu* stabilizes.
RefitResult solve_with_refit(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                             double n, const ExpectationPanel& panel, const SolveOptions& opts = {},
                             const RefitOptions& refit = {});

struct RidgeClosedForm {
    double nu_star = 0;
    Vec mu_of_nu;
    double alpha_sq = 0;
    double gen_error = 0;
    double delta = 0;
    double a_nu = 0;
    double kappa = 0;
};

RidgeClosedForm ridge_closed_form(const Moments& moments, const Vec& theta_star, double sigma_eps,
                                  const Vec& a, const Mat& H, double n);

struct MulticlassSolution {
    Vec mu_star;
    Vec alpha, kappa, nu;
    std::vector<double> residuals;  // kappa_l..., nu_l..., alpha_l..., mu
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
};

MulticlassSolution solve_multiclass(const DataModel& model, const LossFamily& loss,
                                    const Regularizer& reg, double n,
                                    const ExpectationPanel& panel, const SolveOptions& opts = {});

}  // namespace erma
