#include "erma/regularizer.hpp"

#include <cmath>

namespace erma {

namespace {

void check_positive(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ConfigError("regularizer lambda must be positive");
}

}  // namespace

Regularizer Regularizer::quadratic(Vec a, Mat H) {
    require_dim(H.rows() == a.size() && H.cols() == a.size(), "quadratic regularizer a vs H");
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw DomainError("quadratic regularizer H must be symmetric");
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success) throw DomainError("quadratic regularizer H is not positive definite");
    Regularizer r;
    r.kind_ = Kind::Quadratic;
    r.a_ = std::move(a);
    r.H_ = 0.5 * (H + H.transpose());
    return r;
}

Regularizer Regularizer::ridge(double lambda, int p) {
    check_positive(lambda);
    if (p < 0) throw DimensionError("negative dimension");
    Regularizer r;
    r.kind_ = Kind::Ridge;
    r.a_ = Vec::Zero(p);
    r.lambda_ = lambda;
    return r;
}

Regularizer Regularizer::shifted_ridge(Vec a, double lambda) {
    check_positive(lambda);
    Regularizer r;
    r.kind_ = Kind::ShiftedRidge;
    r.a_ = std::move(a);
    r.lambda_ = lambda;
    return r;
}

Regularizer Regularizer::smooth_separable(Vec a, double lambda, double eps) {
    check_positive(lambda);
    if (!std::isfinite(eps) || 2.0 * lambda + std::min(0.0, eps) <= 0.0)
        throw ConfigError("smooth_separable eps breaks strong convexity");
    Regularizer r;
    r.kind_ = Kind::SmoothSeparable;
    r.a_ = std::move(a);
    r.lambda_ = lambda;
    r.eps_ = eps;
    return r;
}

std::string Regularizer::name() const {
    switch (kind_) {
        case Kind::Quadratic: return "quadratic";
        case Kind::Ridge: return "ridge";
        case Kind::ShiftedRidge: return "shifted_ridge";
        case Kind::SmoothSeparable: return "smooth_separable";
    }
    return "?";
}

void Regularizer::check(const Vec& theta) const {
    require_dim(theta.size() == a_.size(), "theta has " + std::to_string(theta.size()) +
                                               " entries, regularizer expects " +
                                               std::to_string(a_.size()));
}

double Regularizer::value(const Vec& theta) const {
    check(theta);
    if (kind_ == Kind::Quadratic) return a_.dot(theta) + 0.5 * theta.dot(H_ * theta);
    double v = a_.dot(theta) + lambda_ * theta.squaredNorm();
    if (kind_ == Kind::SmoothSeparable)
        v += eps_ * (theta.array().square() + 1.0).sqrt().sum() - eps_ * theta.size();
    return v;
}

Vec Regularizer::grad(const Vec& theta) const {
    check(theta);
    if (kind_ == Kind::Quadratic) return a_ + H_ * theta;
    Vec g = a_ + 2.0 * lambda_ * theta;
    if (kind_ == Kind::SmoothSeparable)
        g.array() += eps_ * theta.array() / (theta.array().square() + 1.0).sqrt();
    return g;
}

Mat Regularizer::hess(const Vec& theta) const {
    check(theta);
    if (kind_ == Kind::Quadratic) return H_;
    Vec d = Vec::Constant(theta.size(), 2.0 * lambda_);
    if (kind_ == Kind::SmoothSeparable)
        d.array() += eps_ * (theta.array().square() + 1.0).pow(-1.5);
    return d.asDiagonal();
}

Mat Regularizer::hess0() const { return hess(Vec::Zero(a_.size())); }

double Regularizer::strong_convexity() const {
    if (kind_ == Kind::Quadratic) {
        if (H_.size() == 0) return 0.0;
        return Eigen::SelfAdjointEigenSolver<Mat>(H_, Eigen::EigenvaluesOnly).eigenvalues()(0);
    }
    return 2.0 * lambda_ + std::min(0.0, eps_);
}

Regularizer Regularizer::quadratic_surrogate(const Vec& mu) const {
    check(mu);
    Mat H = hess0();
    return quadratic(grad(mu) - H * mu, H);
}

Vec Regularizer::linear_term() const { return a_; }

}  // namespace erma
