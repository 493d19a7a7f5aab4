#pragma once

#include "erma/types.hpp"

#include <string>

namespace erma {

// rho(theta) for one of:
//   Quadratic       a^T theta + 1/2 theta^T H theta
//   Ridge           lambda |theta|^2
//   ShiftedRidge    a^T theta + lambda |theta|^2
//   SmoothSeparable ShiftedRidge + eps sum_i (sqrt(1 + theta_i^2) - 1)
class Regularizer {
public:
    enum class Kind { Quadratic, Ridge, ShiftedRidge, SmoothSeparable };

    static Regularizer quadratic(Vec a, Mat H);
    static Regularizer ridge(double lambda, int p);
    static Regularizer shifted_ridge(Vec a, double lambda);
    static Regularizer smooth_separable(Vec a, double lambda, double eps);

    Kind kind() const { return kind_; }
    std::string name() const;
    int dim() const { return static_cast<int>(a_.size()); }
    bool is_quadratic() const { return kind_ != Kind::SmoothSeparable; }
    double lambda() const { return lambda_; }
    double eps() const { return eps_; }
    const Vec& shift() const { return a_; }

    double value(const Vec& theta) const;
    Vec grad(const Vec& theta) const;
    Mat hess(const Vec& theta) const;
    Mat hess0() const;
    // Lower bound on the smallest Hessian eigenvalue over all theta.
    double strong_convexity() const;
    // Quadratic(a = grad(mu) - H_rho mu, H = H_rho).
    Regularizer quadratic_surrogate(const Vec& mu) const;

    // Linear term a of the quadratic form; only meaningful when is_quadratic().
    Vec linear_term() const;

private:
    Kind kind_ = Kind::Ridge;
    Vec a_;
    Mat H_;
    double lambda_ = 0.0;
    double eps_ = 0.0;

    void check(const Vec& theta) const;
};

}  // namespace erma
