#include "erma/kernels.hpp"
#include "erma/types.hpp"
#include "logistic.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace erma::kernels {

namespace {

Isa detect() {
    const char* env = std::getenv("ERMA_ISA");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
    if (isa == Isa::Scalar) return true;
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa active_isa() { return current().load(); }

void set_isa(Isa isa) {
    if (!isa_available(isa))
        throw DomainError(std::string("instruction set not available: ") + isa_name(isa));
    current().store(isa);
}

void xi_moments(LossKind loss, const double* u, const double* y, std::size_t n,
                const double* nodes, const double* weights, std::size_t K, double alpha,
                double kappa, double* xi, double* zxi, double* xi2, double* dxi) {
    if (active_isa() == Isa::Avx2)
        avx2::xi_moments(loss, u, y, n, nodes, weights, K, alpha, kappa, xi, zxi, xi2, dxi);
    else
        scalar::xi_moments(loss, u, y, n, nodes, weights, K, alpha, kappa, xi, zxi, xi2, dxi);
}

void xi_batch(LossKind loss, const double* u, const double* y, std::size_t n, double kappa,
              double* xi, double* dxi) {
    if (active_isa() == Isa::Avx2) avx2::xi_batch(loss, u, y, n, kappa, xi, dxi);
    else scalar::xi_batch(loss, u, y, n, kappa, xi, dxi);
}

double normal_cdf_sum(const double* c, std::size_t n, double t, double inv_scale) {
    return active_isa() == Isa::Avx2 ? avx2::normal_cdf_sum(c, n, t, inv_scale)
                                     : scalar::normal_cdf_sum(c, n, t, inv_scale);
}

double normal_pdf_sum(const double* c, std::size_t n, double t, double inv_scale) {
    return active_isa() == Isa::Avx2 ? avx2::normal_pdf_sum(c, n, t, inv_scale)
                                     : scalar::normal_pdf_sum(c, n, t, inv_scale);
}

void normal_cdf(const double* x, std::size_t n, double* out) {
    if (active_isa() == Isa::Avx2) avx2::normal_cdf(x, n, out);
    else scalar::normal_cdf(x, n, out);
}

double logistic_prox(double y, double u, double kappa, double guess) {
    return detail::logistic_prox(y, u, kappa, guess, nullptr);
}

}  // namespace erma::kernels
