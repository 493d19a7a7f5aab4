#include "erma/kernels.hpp"

#include <cmath>
#include <vector>

namespace erma::kernels {

namespace {

constexpr std::size_t kFitNodes = 96;
constexpr std::size_t kTerms = 48;

// log(erfcx(z)) for large z from the asymptotic series.
double log_erfcx_asymptotic(double z) {
    double inv2 = 1.0 / (2.0 * z * z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 14; ++k) {
        term *= -(2.0 * k - 1.0) * inv2;
        sum += term;
    }
    return std::log(sum) - std::log(z) - 0.5 * std::log(M_PI);
}

std::vector<double> fit() {
    std::vector<double> h(kFitNodes), coeffs(kTerms, 0.0);
    std::vector<double> theta(kFitNodes);
    for (std::size_t j = 0; j < kFitNodes; ++j) {
        theta[j] = M_PI * (j + 0.5) / kFitNodes;
        double y = std::cos(theta[j]);
        double t = 0.5 * (y + 1.0);
        double z = 2.0 / t - 2.0;
        double le = z < 26.0 ? std::log(std::erfc(z)) + z * z : log_erfcx_asymptotic(z);
        h[j] = le - std::log(t);
    }
    for (std::size_t k = 0; k < kTerms; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < kFitNodes; ++j) s += h[j] * std::cos(k * theta[j]);
        coeffs[k] = 2.0 * s / kFitNodes;
    }
    coeffs[0] *= 0.5;
    return coeffs;
}

}  // namespace

const double* erfc_cheb_coeffs(std::size_t* count) {
    static const std::vector<double> table = fit();
    if (count) *count = table.size();
    return table.data();
}

}  // namespace erma::kernels
