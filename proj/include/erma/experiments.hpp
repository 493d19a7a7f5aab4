#pragma once

#include "erma/config.hpp"
#include "erma/score_law.hpp"

namespace erma {

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitNonConvergence = 2 };

struct TheoryResult {
    FixedPointSolution sol;
    Vec shift;  // linear term of the quadratic regularizer actually solved
    bool refit_used = false;
    bool refit_stabilized = false;
    std::vector<double> refit_changes;
};

TheoryResult theory_solve(const ExperimentConfig& cfg, const DataModel& model, const Regularizer& reg);

struct TheoryErrors {
    double theory = 0;
    double gaussian_score = 0;
    double baseline_ks = 0;  // max over classes of KS(theory law, Gaussian baseline)
};

// Classification error (binary models) or test MSE (regression) of the score law.
TheoryErrors theory_errors(const ExperimentConfig& cfg, const DataModel& model, const Vec& mu_star,
                           double alpha_star);

struct EmpiricalErrors {
    double mean = 0;
    double stderr_ = 0;
    std::vector<double> per_replication;
    ReplicationSummary summary;
};

EmpiricalErrors empirical_errors(const ExperimentConfig& cfg, const DataModel& model,
                                 const Regularizer& reg, int R);

Json solution_json(const FixedPointSolution& sol);

int cmd_solve(const ExperimentConfig& cfg);
int cmd_compare(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_score_hist(const ExperimentConfig& cfg);

}  // namespace erma
