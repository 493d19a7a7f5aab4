#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace erma::kernels::detail {

// e = exp(-|t|); returns sigma(-t) and writes sigma(t) sigma(-t) to curv.
inline double logistic_tail(double t, double* curv) {
    double e = std::exp(-std::fabs(t));
    double d = 1.0 + e;
    *curv = e / (d * d);
    return t >= 0.0 ? e / d : 1.0 / d;
}

// Root of w + kappa L_y'(w) = u, L_y'(w) = -y sigma(-y w).
inline double logistic_prox(double y, double u, double kappa, double guess, double* curv_out) {
    double lo = u - kappa, hi = u + kappa;
    double w = (guess > lo && guess < hi) ? guess : u;
    double curv = 0.0;
    double dx = hi - lo, dx_old = dx;
    for (int it = 0; it < 200; ++it) {
        double s = logistic_tail(y * w, &curv);
        double g = w - kappa * y * s - u;
        if (g > 0.0) hi = w;
        else if (g < 0.0) lo = w;
        else break;
        double wn = w - g / (1.0 + kappa * curv);
        if (!(wn > lo && wn < hi) || std::fabs(wn - w) > 0.5 * dx_old) wn = 0.5 * (lo + hi);
        double step = std::fabs(wn - w);
        dx_old = dx;
        dx = step;
        w = wn;
        if (step <= 1e-13 + 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(w)) break;
    }
    logistic_tail(y * w, &curv);
    if (curv_out) *curv_out = curv;
    return w;
}

}  // namespace erma::kernels::detail
