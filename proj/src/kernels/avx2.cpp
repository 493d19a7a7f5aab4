#include "erma/kernels.hpp"
#include "logistic.hpp"

#include <immintrin.h>

#include <cmath>

namespace erma::kernels::avx2 {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline __m256d vabs(__m256d x) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x); }

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

// exp(x); arguments below -708 flush to 0, arguments are assumed <= 708.
inline __m256d vexp(__m256d x) {
    const __m256d lo_cut = _mm256_set1_pd(-708.0);
    __m256d under = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lo_cut);
    x = _mm256_min_pd(x, _mm256_set1_pd(708.0));
    __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634074)),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.90821492927058770002e-10), r);
    static constexpr double c[] = {1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0,
                                   1.0 / 3628800.0,    1.0 / 362880.0,    1.0 / 40320.0,
                                   1.0 / 5040.0,       1.0 / 720.0,       1.0 / 120.0,
                                   1.0 / 24.0,         1.0 / 6.0,         0.5,
                                   1.0,                1.0};
    __m256d p = _mm256_set1_pd(c[0]);
    for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));
    __m128i ki = _mm256_cvtpd_epi32(k);
    __m256i e = _mm256_cvtepi32_epi64(ki);
    e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
    __m256d res = _mm256_mul_pd(p, _mm256_castsi256_pd(e));
    return _mm256_andnot_pd(under, res);
}

// Standard normal CDF via the Chebyshev representation of erfc.
inline __m256d vphi(__m256d x, const double* cc, std::size_t nc) {
    __m256d z = _mm256_mul_pd(vabs(x), _mm256_set1_pd(kInvSqrt2));
    __m256d two = _mm256_set1_pd(2.0);
    __m256d t = _mm256_div_pd(two, _mm256_add_pd(two, z));
    __m256d y = _mm256_sub_pd(_mm256_mul_pd(two, t), _mm256_set1_pd(1.0));
    __m256d y2 = _mm256_mul_pd(two, y);
    __m256d b1 = _mm256_setzero_pd(), b2 = _mm256_setzero_pd();
    for (std::size_t k = nc - 1; k >= 1; --k) {
        __m256d b0 = _mm256_add_pd(_mm256_fmsub_pd(y2, b1, b2), _mm256_set1_pd(cc[k]));
        b2 = b1;
        b1 = b0;
    }
    __m256d h = _mm256_add_pd(_mm256_fmsub_pd(y, b1, b2), _mm256_set1_pd(cc[0]));
    __m256d ex = _mm256_fnmadd_pd(z, z, h);
    __m256d half_erfc = _mm256_mul_pd(_mm256_mul_pd(t, vexp(ex)), _mm256_set1_pd(0.5));
    __m256d neg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_LT_OQ);
    __m256d upper = _mm256_sub_pd(_mm256_set1_pd(1.0), half_erfc);
    return _mm256_blendv_pd(upper, half_erfc, neg);
}

struct Prox4 {
    __m256d w;
    __m256d curv;
};

// Four simultaneous safeguarded Newton solves of w + kappa L_y'(w) = u.
inline Prox4 logistic_prox4(__m256d y, __m256d u, __m256d kappa, __m256d guess) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d tol_abs = _mm256_set1_pd(1e-13);
    const __m256d tol_rel = _mm256_set1_pd(4.0 * 2.220446049250313e-16);
    __m256d lo = _mm256_sub_pd(u, kappa), hi = _mm256_add_pd(u, kappa);
    __m256d inside = _mm256_and_pd(_mm256_cmp_pd(guess, lo, _CMP_GT_OQ),
                                   _mm256_cmp_pd(guess, hi, _CMP_LT_OQ));
    __m256d w = _mm256_blendv_pd(u, guess, inside);
    __m256d active = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    __m256d dx = _mm256_sub_pd(hi, lo), dx_old = dx;
    for (int it = 0; it < 200; ++it) {
        __m256d t = _mm256_mul_pd(y, w);
        __m256d e = vexp(_mm256_sub_pd(zero, vabs(t)));
        __m256d d = _mm256_add_pd(one, e);
        __m256d inv_d = _mm256_div_pd(one, d);
        __m256d s = _mm256_blendv_pd(inv_d, _mm256_mul_pd(e, inv_d),
                                     _mm256_cmp_pd(t, zero, _CMP_GE_OQ));
        __m256d curv = _mm256_mul_pd(e, _mm256_mul_pd(inv_d, inv_d));
        __m256d g = _mm256_sub_pd(_mm256_fnmadd_pd(_mm256_mul_pd(kappa, y), s, w), u);
        __m256d gpos = _mm256_cmp_pd(g, zero, _CMP_GT_OQ);
        __m256d gneg = _mm256_cmp_pd(g, zero, _CMP_LT_OQ);
        hi = _mm256_blendv_pd(hi, w, gpos);
        lo = _mm256_blendv_pd(lo, w, gneg);
        __m256d wn = _mm256_sub_pd(w, _mm256_div_pd(g, _mm256_fmadd_pd(kappa, curv, one)));
        __m256d ok = _mm256_and_pd(_mm256_cmp_pd(wn, lo, _CMP_GT_OQ),
                                   _mm256_cmp_pd(wn, hi, _CMP_LT_OQ));
        ok = _mm256_and_pd(ok, _mm256_cmp_pd(vabs(_mm256_sub_pd(wn, w)),
                                             _mm256_mul_pd(half, dx_old), _CMP_LE_OQ));
        wn = _mm256_blendv_pd(_mm256_mul_pd(half, _mm256_add_pd(lo, hi)), wn, ok);
        __m256d root = _mm256_andnot_pd(_mm256_or_pd(gpos, gneg), active);
        wn = _mm256_blendv_pd(wn, w, root);
        __m256d step = vabs(_mm256_sub_pd(wn, w));
        dx_old = dx;
        dx = step;
        w = _mm256_blendv_pd(w, wn, active);
        __m256d tol = _mm256_fmadd_pd(tol_rel, vabs(w), tol_abs);
        active = _mm256_and_pd(active, _mm256_cmp_pd(step, tol, _CMP_GT_OQ));
        if (_mm256_movemask_pd(active) == 0) break;
    }
    __m256d e = vexp(_mm256_sub_pd(zero, vabs(_mm256_mul_pd(y, w))));
    __m256d inv_d = _mm256_div_pd(one, _mm256_add_pd(one, e));
    return {w, _mm256_mul_pd(e, _mm256_mul_pd(inv_d, inv_d))};
}

}  // namespace

void xi_moments(LossKind loss, const double* u, const double* y, std::size_t n,
                const double* nodes, const double* weights, std::size_t K, double alpha,
                double kappa, double* xi, double* zxi, double* xi2, double* dxi) {
    std::size_t j = 0;
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vk = _mm256_set1_pd(kappa);
    const __m256d one = _mm256_set1_pd(1.0);
    if (loss == LossKind::Squared) {
        const __m256d c = _mm256_set1_pd(kappa / (1.0 + kappa));
        for (; j + 4 <= n; j += 4) {
            __m256d base = _mm256_sub_pd(_mm256_loadu_pd(u + j), _mm256_loadu_pd(y + j));
            __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0;
            for (std::size_t k = 0; k < K; ++k) {
                __m256d wk = _mm256_set1_pd(weights[k]);
                __m256d zk = _mm256_set1_pd(nodes[k]);
                __m256d r = _mm256_mul_pd(c, _mm256_fmadd_pd(va, zk, base));
                __m256d wr = _mm256_mul_pd(wk, r);
                s0 = _mm256_add_pd(s0, wr);
                s1 = _mm256_fmadd_pd(zk, wr, s1);
                s2 = _mm256_fmadd_pd(wr, r, s2);
            }
            _mm256_storeu_pd(xi + j, s0);
            _mm256_storeu_pd(zxi + j, s1);
            _mm256_storeu_pd(xi2 + j, s2);
            _mm256_storeu_pd(dxi + j, c);
        }
    } else {
        for (; j + 4 <= n; j += 4) {
            __m256d uj = _mm256_loadu_pd(u + j);
            __m256d yj = _mm256_loadu_pd(y + j);
            __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
            __m256d prev_u = _mm256_fmadd_pd(va, _mm256_set1_pd(nodes[0]), uj);
            __m256d prev_w = prev_u, prev_slope = one;
            for (std::size_t k = 0; k < K; ++k) {
                __m256d wk = _mm256_set1_pd(weights[k]);
                __m256d zk = _mm256_set1_pd(nodes[k]);
                __m256d uk = _mm256_fmadd_pd(va, zk, uj);
                __m256d guess = _mm256_fmadd_pd(_mm256_sub_pd(uk, prev_u), prev_slope, prev_w);
                Prox4 p = logistic_prox4(yj, uk, vk, guess);
                __m256d r = _mm256_sub_pd(uk, p.w);
                __m256d kc = _mm256_mul_pd(vk, p.curv);
                __m256d d = _mm256_div_pd(kc, _mm256_add_pd(one, kc));
                __m256d wr = _mm256_mul_pd(wk, r);
                s0 = _mm256_add_pd(s0, wr);
                s1 = _mm256_fmadd_pd(zk, wr, s1);
                s2 = _mm256_fmadd_pd(wr, r, s2);
                s3 = _mm256_fmadd_pd(wk, d, s3);
                prev_u = uk;
                prev_w = p.w;
                prev_slope = _mm256_sub_pd(one, d);
            }
            _mm256_storeu_pd(xi + j, s0);
            _mm256_storeu_pd(zxi + j, s1);
            _mm256_storeu_pd(xi2 + j, s2);
            _mm256_storeu_pd(dxi + j, s3);
        }
    }
    if (j < n)
        scalar::xi_moments(loss, u + j, y + j, n - j, nodes, weights, K, alpha, kappa, xi + j,
                           zxi + j, xi2 + j, dxi + j);
}

void xi_batch(LossKind loss, const double* u, const double* y, std::size_t n, double kappa,
              double* xi, double* dxi) {
    std::size_t j = 0;
    if (loss == LossKind::Logistic) {
        const __m256d vk = _mm256_set1_pd(kappa);
        const __m256d one = _mm256_set1_pd(1.0);
        for (; j + 4 <= n; j += 4) {
            __m256d uj = _mm256_loadu_pd(u + j);
            Prox4 p = logistic_prox4(_mm256_loadu_pd(y + j), uj, vk, uj);
            __m256d kc = _mm256_mul_pd(vk, p.curv);
            _mm256_storeu_pd(xi + j, _mm256_sub_pd(uj, p.w));
            _mm256_storeu_pd(dxi + j, _mm256_div_pd(kc, _mm256_add_pd(one, kc)));
        }
    }
    if (j < n) scalar::xi_batch(loss, u + j, y + j, n - j, kappa, xi + j, dxi + j);
}

double normal_cdf_sum(const double* c, std::size_t n, double t, double inv_scale) {
    std::size_t nc;
    const double* cc = erfc_cheb_coeffs(&nc);
    const __m256d vt = _mm256_set1_pd(t), vi = _mm256_set1_pd(inv_scale);
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d v = _mm256_mul_pd(_mm256_sub_pd(vt, _mm256_loadu_pd(c + j)), vi);
        acc = _mm256_add_pd(acc, vphi(v, cc, nc));
    }
    double s = hsum(acc);
    if (j < n) s += scalar::normal_cdf_sum(c + j, n - j, t, inv_scale);
    return s;
}

double normal_pdf_sum(const double* c, std::size_t n, double t, double inv_scale) {
    const __m256d vt = _mm256_set1_pd(t), vi = _mm256_set1_pd(inv_scale);
    const __m256d mhalf = _mm256_set1_pd(-0.5);
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d v = _mm256_mul_pd(_mm256_sub_pd(vt, _mm256_loadu_pd(c + j)), vi);
        acc = _mm256_add_pd(acc, vexp(_mm256_mul_pd(mhalf, _mm256_mul_pd(v, v))));
    }
    double s = hsum(acc) * kInvSqrt2Pi;
    if (j < n) s += scalar::normal_pdf_sum(c + j, n - j, t, inv_scale);
    return s;
}

void normal_cdf(const double* x, std::size_t n, double* out) {
    std::size_t nc;
    const double* cc = erfc_cheb_coeffs(&nc);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(out + j, vphi(_mm256_loadu_pd(x + j), cc, nc));
    if (j < n) scalar::normal_cdf(x + j, n - j, out + j);
}

}  // namespace erma::kernels::avx2
