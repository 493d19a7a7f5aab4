#pragma once

#include "erma/data_model.hpp"
#include "erma/loss.hpp"
#include "erma/regularizer.hpp"

namespace erma {

struct FitOptions {
    double grad_tol = 1e-9;  // relative to max(1, |grad F(0)|)
    int max_iters = 100;
};

struct ErmFit {
    Vec theta_hat;
    double objective_value = 0;
    double gradient_norm = 0;
    int newton_iters = 0;
    bool converged = false;
};

// F(theta) = (1/n) sum_i L_{y_i}(x_i^T theta) + rho(theta), X is p x n.
double erm_objective(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg,
                     const Vec& theta);
Vec erm_gradient(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg,
                 const Vec& theta);

ErmFit fit(const Mat& X, const Vec& Y, const LossFamily& loss, const Regularizer& reg,
           const FitOptions& opts = {});

struct ReplicationSummary {
    int R = 0;
    Vec mu_hat;
    Vec mu_stderr;
    double trace_cov = 0;
    double trace_cov_stderr = 0;
    Mat thetas;  // p x R
    // Shape of u^T theta_hat across replications, u the mean direction.
    double projection_skewness = 0;
    double projection_excess_kurtosis = 0;
};

ReplicationSummary replicate(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                             std::size_t n, int R, std::uint64_t master_seed,
                             const FitOptions& opts = {});

// Training set of replication r, as drawn by replicate().
Dataset replication_data(const DataModel& model, std::size_t n, std::uint64_t master_seed, int r);

enum class PerturbTarget { X, Y };

double lipschitz_probe(const DataModel& model, const LossFamily& loss, const Regularizer& reg,
                       std::size_t n, std::uint64_t seed, int m_perturbations,
                       PerturbTarget target = PerturbTarget::X, double relative_size = 1e-4);

double operator_norm(const Mat& A);

}  // namespace erma
