#include "erma/rmt.hpp"

#include <cmath>

namespace erma {

Mat spd_solve(const Mat& S, const Mat& b, const char* what) {
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + " is not positive definite");
    return llt.solve(b);
}

ResolventContext::ResolventContext(Mat C_x, Mat H, double n)
    : C_(std::move(C_x)), H_(std::move(H)), n_(n) {
    require_dim(C_.rows() == C_.cols() && H_.rows() == H_.cols() && C_.rows() == H_.rows(),
                "C_x and H must be square of equal size");
    if (!(n_ > 0.0)) throw ConfigError("sample size n must be positive");
    if (C_.rows() == 0) return;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(C_, H_, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw DomainError("H is not positive definite");
    lambda_ = es.eigenvalues().cwiseMax(0.0);
}

Mat ResolventContext::resolvent(double nu) const {
    if (!(nu >= 0.0)) throw DomainError("nu must be nonnegative");
    int p = dim();
    return spd_solve(nu * C_ + H_, Mat::Identity(p, p), "nu C_x + H");
}

double ResolventContext::kappa(double nu) const {
    double s = 0.0;
    for (int i = 0; i < lambda_.size(); ++i) s += lambda_(i) / (nu * lambda_(i) + 1.0);
    return s / n_;
}

double ResolventContext::a_of_nu(double nu) const {
    double s = 0.0;
    for (int i = 0; i < lambda_.size(); ++i) {
        double r = lambda_(i) / (nu * lambda_(i) + 1.0);
        s += r * r;
    }
    return s / n_;
}

double ResolventContext::kappa_direct(double nu) const {
    if (dim() == 0) return 0.0;
    Mat G = spd_solve(nu * C_ + H_, C_, "nu C_x + H");
    return G.trace() / n_;
}

double ResolventContext::a_direct(double nu) const {
    if (dim() == 0) return 0.0;
    Mat G = spd_solve(nu * C_ + H_, C_, "nu C_x + H");
    return (G.array() * G.transpose().array()).sum() / n_;
}

Mat resolvent(const ResolventContext& ctx, double nu) { return ctx.resolvent(nu); }
double kappa_of_nu(const ResolventContext& ctx, double nu) { return ctx.kappa(nu); }
double a_of_nu(const ResolventContext& ctx, double nu) { return ctx.a_of_nu(nu); }

double solve_nu_ridge(const ResolventContext& ctx) {
    auto g = [&](double nu) { return nu * (1.0 + ctx.kappa(nu)) - 1.0; };
    double lo = 1e-12, hi = 1.0;
    if (g(hi) <= 0.0) return 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
    }
    // Final secant polish inside the bracket.
    double glo = g(lo), ghi = g(hi);
    double nu = ghi != glo ? lo - glo * (hi - lo) / (ghi - glo) : 0.5 * (lo + hi);
    if (!(nu >= lo && nu <= hi)) nu = 0.5 * (lo + hi);
    return nu;
}

Mat q2_equiv(const ResolventContext& ctx, double nu, const Mat& B) {
    int p = ctx.dim();
    require_dim(B.rows() == p && B.cols() == p, "B must match the resolvent dimension");
    double A = ctx.a_of_nu(nu);
    double denom = 1.0 - nu * nu * A;
    if (!(denom > 0.0))
        throw DomainError("1 - nu^2 A(nu) <= 0: outside the validity region of the equivalent");
    Mat Q = ctx.resolvent(nu);
    Mat QBQ = Q * B * Q;
    Mat QCQ = Q * ctx.C() * Q;
    double coef = nu * nu / ctx.n() * (ctx.C().cwiseProduct(QBQ)).sum() / denom;
    Mat out = QBQ + coef * QCQ;
    return 0.5 * (out + out.transpose());
}

Mat empirical_resolvent(const Mat& X, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    int p = static_cast<int>(X.rows());
    double n = static_cast<double>(X.cols());
    Mat S = Mat::Identity(p, p) * lambda;
    if (X.cols() > 0) S.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / n);
    Mat full = S.selfadjointView<Eigen::Lower>();
    return spd_solve(full, Mat::Identity(p, p), "(1/n) X X^T + lambda I");
}

}  // namespace erma
