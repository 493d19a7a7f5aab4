#pragma once

#include "erma/types.hpp"

namespace erma {

// Q(nu) = (nu C_x + H)^{-1} with trace functionals normalized by n.
class ResolventContext {
public:
    ResolventContext(Mat C_x, Mat H, double n);

    const Mat& C() const { return C_; }
    const Mat& H() const { return H_; }
    double n() const { return n_; }
    int dim() const { return static_cast<int>(C_.rows()); }

    Mat resolvent(double nu) const;
    // O(p) evaluations through the generalized eigenvalues of (C_x, H).
    double kappa(double nu) const;
    double a_of_nu(double nu) const;
    // Same functionals through a fresh Cholesky factorization.
    double kappa_direct(double nu) const;
    double a_direct(double nu) const;
    const Vec& generalized_eigenvalues() const { return lambda_; }

private:
    Mat C_, H_;
    double n_;
    Vec lambda_;
};

Mat resolvent(const ResolventContext& ctx, double nu);
double kappa_of_nu(const ResolventContext& ctx, double nu);
double a_of_nu(const ResolventContext& ctx, double nu);
double solve_nu_ridge(const ResolventContext& ctx);
// Q B Q + [(nu^2/n) tr(C Q B Q) / (1 - nu^2 A)] Q C Q; DomainError when 1 - nu^2 A <= 0.
Mat q2_equiv(const ResolventContext& ctx, double nu, const Mat& B);
// ((1/n) X X^T + lambda I)^{-1}
Mat empirical_resolvent(const Mat& X, double lambda);

// Solve S x = b for SPD S, throwing DomainError when S is not positive definite.
Mat spd_solve(const Mat& S, const Mat& b, const char* what);

}  // namespace erma
