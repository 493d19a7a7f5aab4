#pragma once

#include "erma/data_model.hpp"
#include "erma/fixed_point.hpp"

#include <vector>

namespace erma {

// Equal-weight mixture of N(c_j, scale^2); scale 0 gives point masses.
class ScoreLaw {
public:
    ScoreLaw() = default;
    ScoreLaw(std::vector<double> centers, double scale);
    static ScoreLaw gaussian(double mean, double sd) { return ScoreLaw({mean}, sd); }

    double cdf(double t) const;
    double pdf(double t) const;
    std::vector<double> pdf_grid(const std::vector<double>& grid) const;
    double mean() const;
    double variance() const;
    double scale() const { return scale_; }
    const std::vector<double>& centers() const { return centers_; }  // sorted
    std::size_t size() const { return centers_.size(); }
    std::vector<double> sample(std::size_t m, std::uint64_t seed) const;

private:
    std::vector<double> centers_;
    double scale_ = 0.0;
    double center_sd_ = 0.0;
};

struct ClassScoreLaws {
    std::vector<double> labels;
    std::vector<double> priors;
    std::vector<ScoreLaw> laws;  // one per class, in class order
    ScoreLaw pooled;
};

ClassScoreLaws predict(const DataModel& model, const Vec& mu_star, double alpha_star, std::size_t m,
                       std::uint64_t seed);
inline ClassScoreLaws predict(const DataModel& model, const FixedPointSolution& sol, std::size_t m,
                              std::uint64_t seed) {
    return predict(model, sol.mu_star, sol.alpha_star, m, seed);
}

// N(mu^T E[x], mu^T C mu + alpha^2)
ScoreLaw gaussian_baseline(const Moments& moments, const Vec& mu_star, double alpha_star);
inline ScoreLaw gaussian_baseline(const Moments& moments, const FixedPointSolution& sol) {
    return gaussian_baseline(moments, sol.mu_star, sol.alpha_star);
}
// Per-class baselines built from class-conditional moments.
ClassScoreLaws gaussian_baseline_per_class(const DataModel& model, const Vec& mu_star,
                                           double alpha_star);

// gamma_0 P(score > tau | class 0) + gamma_1 P(score <= tau | class 1)
double classification_error(const ScoreLaw& class0, const ScoreLaw& class1, double gamma0,
                            double gamma1, double threshold = 0.0);

double ks_distance(const ScoreLaw& law, std::vector<double> samples);
// sup_t |F_a(t) - F_b(t)| evaluated on a fine grid plus both laws' centers.
double ks_between(const ScoreLaw& a, const ScoreLaw& b, std::size_t grid = 4001);

// |P_perp mu| / |mu|, P_perp projecting onto span(basis, a)^perp.
double confinement_residual(const Vec& mu_star, const std::vector<Vec>& basis, const Vec& a);

}  // namespace erma
