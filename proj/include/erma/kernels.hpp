#pragma once

#include "erma/types.hpp"

#include <cstddef>

namespace erma {

enum class LossKind { Squared, Logistic };

namespace kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
// Throws DomainError when the requested ISA is not supported by this CPU.
void set_isa(Isa isa);

// Per sample j, with u_k = u[j] + alpha * nodes[k]:
//   xi[j]  = sum_k w_k xi(u_k)        zxi[j] = sum_k w_k z_k xi(u_k)
//   xi2[j] = sum_k w_k xi(u_k)^2      dxi[j] = sum_k w_k d xi/du (u_k)
void xi_moments(LossKind loss, const double* u, const double* y, std::size_t n,
                const double* nodes, const double* weights, std::size_t K, double alpha,
                double kappa, double* xi, double* zxi, double* xi2, double* dxi);

// Elementwise xi and its u-derivative.
void xi_batch(LossKind loss, const double* u, const double* y, std::size_t n, double kappa,
              double* xi, double* dxi);

// sum_j Phi((t - c_j) * inv_scale)
double normal_cdf_sum(const double* c, std::size_t n, double t, double inv_scale);
// sum_j phi((t - c_j) * inv_scale), phi the standard normal density
double normal_pdf_sum(const double* c, std::size_t n, double t, double inv_scale);

void normal_cdf(const double* x, std::size_t n, double* out);

double logistic_prox(double y, double u, double kappa, double guess);

namespace scalar {
void xi_moments(LossKind, const double*, const double*, std::size_t, const double*, const double*,
                std::size_t, double, double, double*, double*, double*, double*);
void xi_batch(LossKind, const double*, const double*, std::size_t, double, double*, double*);
double normal_cdf_sum(const double*, std::size_t, double, double);
double normal_pdf_sum(const double*, std::size_t, double, double);
void normal_cdf(const double*, std::size_t, double*);
}  // namespace scalar

namespace avx2 {
void xi_moments(LossKind, const double*, const double*, std::size_t, const double*, const double*,
                std::size_t, double, double, double*, double*, double*, double*);
void xi_batch(LossKind, const double*, const double*, std::size_t, double, double*, double*);
double normal_cdf_sum(const double*, std::size_t, double, double);
double normal_pdf_sum(const double*, std::size_t, double, double);
void normal_cdf(const double*, std::size_t, double*);
}  // namespace avx2

// Chebyshev coefficients of log(erfc(z)) + z^2 - log(t) in 2t-1, t = 2/(2+z).
const double* erfc_cheb_coeffs(std::size_t* count);

}  // namespace kernels
}  // namespace erma
