#include "erma/kernels.hpp"
#include "logistic.hpp"

#include <cmath>

namespace erma::kernels::scalar {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

void xi_moments(LossKind loss, const double* u, const double* y, std::size_t n,
                const double* nodes, const double* weights, std::size_t K, double alpha,
                double kappa, double* xi, double* zxi, double* xi2, double* dxi) {
    if (loss == LossKind::Squared) {
        double c = kappa / (1.0 + kappa);
        for (std::size_t j = 0; j < n; ++j) {
            double s0 = 0, s1 = 0, s2 = 0;
            for (std::size_t k = 0; k < K; ++k) {
                double r = c * (u[j] + alpha * nodes[k] - y[j]);
                s0 += weights[k] * r;
                s1 += weights[k] * nodes[k] * r;
                s2 += weights[k] * r * r;
            }
            xi[j] = s0;
            zxi[j] = s1;
            xi2[j] = s2;
            dxi[j] = c;
        }
        return;
    }
    for (std::size_t j = 0; j < n; ++j) {
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
        double prev_u = u[j] + alpha * nodes[0];
        double prev_w = prev_u, prev_slope = 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            double uk = u[j] + alpha * nodes[k];
            double guess = prev_w + (uk - prev_u) * prev_slope;
            double curv;
            double w = detail::logistic_prox(y[j], uk, kappa, guess, &curv);
            double r = uk - w;
            double d = kappa * curv / (1.0 + kappa * curv);
            s0 += weights[k] * r;
            s1 += weights[k] * nodes[k] * r;
            s2 += weights[k] * r * r;
            s3 += weights[k] * d;
            prev_u = uk;
            prev_w = w;
            prev_slope = 1.0 - d;
        }
        xi[j] = s0;
        zxi[j] = s1;
        xi2[j] = s2;
        dxi[j] = s3;
    }
}

void xi_batch(LossKind loss, const double* u, const double* y, std::size_t n, double kappa,
              double* xi, double* dxi) {
    if (loss == LossKind::Squared) {
        double c = kappa / (1.0 + kappa);
        for (std::size_t j = 0; j < n; ++j) {
            xi[j] = c * (u[j] - y[j]);
            dxi[j] = c;
        }
        return;
    }
    for (std::size_t j = 0; j < n; ++j) {
        double curv;
        double w = detail::logistic_prox(y[j], u[j], kappa, u[j], &curv);
        xi[j] = u[j] - w;
        dxi[j] = kappa * curv / (1.0 + kappa * curv);
    }
}

double normal_cdf_sum(const double* c, std::size_t n, double t, double inv_scale) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += 0.5 * std::erfc(-(t - c[j]) * inv_scale * kInvSqrt2);
    return s;
}

double normal_pdf_sum(const double* c, std::size_t n, double t, double inv_scale) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double v = (t - c[j]) * inv_scale;
        s += std::exp(-0.5 * v * v);
    }
    return s * kInvSqrt2Pi;
}

void normal_cdf(const double* x, std::size_t n, double* out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.5 * std::erfc(-x[j] * kInvSqrt2);
}

}  // namespace erma::kernels::scalar
