// Compiled with -mavx2 -mfma; only reached after a runtime CPUID check.
#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "refmap/simd.hpp"
#include "phasor_reduce.hpp"

namespace refmap::simd {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) for x in [-708, 709]; lanes below -708 flush to 0.
// n = round(x / ln2), r = x - n ln2 (two-part constant), Taylor series to r^12.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo_limit = _mm256_set1_pd(-708.0);
    const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
    x = _mm256_max_pd(x, lo_limit);
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

    static constexpr double inv_fact[] = {
        1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0,
        1.0 / 5040.0,      1.0 / 720.0,      1.0 / 120.0,     1.0 / 24.0,     1.0 / 6.0,
        0.5,               1.0,              1.0};
    __m256d p = _mm256_set1_pd(inv_fact[0]);
    for (int k = 1; k < 13; ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact[k]));

    // 2^n via the 1.5*2^52 shifter: the integer lands in the low mantissa bits.
    const __m256d shifter = _mm256_set1_pd(6755399441055744.0);
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, shifter)),
                                        _mm256_castpd_si256(shifter));
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    const __m256d out = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(underflow, out);
}

// cos and sin of 2*pi*t for t in [-0.5, 0.5].
inline void sincos_turns_pd(__m256d t, __m256d& c_out, __m256d& s_out) {
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(t, _mm256_set1_pd(4.0)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d u = _mm256_fnmadd_pd(k, _mm256_set1_pd(0.25), t);
    const __m256d r = _mm256_mul_pd(u, _mm256_set1_pd(2.0 * std::numbers::pi));
    const __m256d r2 = _mm256_mul_pd(r, r);

    // sin: r * (1 - r^2/3! + ... - r^14/15!)
    static constexpr double sin_c[] = {-1.0 / 1307674368000.0, 1.0 / 6227020800.0, -1.0 / 39916800.0,
                                       1.0 / 362880.0,         -1.0 / 5040.0,      1.0 / 120.0,
                                       -1.0 / 6.0,             1.0};
    __m256d ps = _mm256_set1_pd(sin_c[0]);
    for (int i = 1; i < 8; ++i) ps = _mm256_fmadd_pd(ps, r2, _mm256_set1_pd(sin_c[i]));
    const __m256d s = _mm256_mul_pd(ps, r);

    // cos: 1 - r^2/2! + ... + r^16/16!
    static constexpr double cos_c[] = {1.0 / 20922789888000.0, -1.0 / 87178291200.0, 1.0 / 479001600.0,
                                       -1.0 / 3628800.0,       1.0 / 40320.0,        -1.0 / 720.0,
                                       1.0 / 24.0,             -0.5,                 1.0};
    __m256d c = _mm256_set1_pd(cos_c[0]);
    for (int i = 1; i < 9; ++i) c = _mm256_fmadd_pd(c, r2, _mm256_set1_pd(cos_c[i]));

    // quadrant q = k mod 4
    const __m256d q = _mm256_sub_pd(
        k, _mm256_mul_pd(_mm256_set1_pd(4.0), _mm256_floor_pd(_mm256_mul_pd(k, _mm256_set1_pd(0.25)))));
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d three = _mm256_set1_pd(3.0);
    const __m256d q1 = _mm256_cmp_pd(q, one, _CMP_EQ_OQ);
    const __m256d q2 = _mm256_cmp_pd(q, two, _CMP_EQ_OQ);
    const __m256d q3 = _mm256_cmp_pd(q, three, _CMP_EQ_OQ);
    const __m256d swap = _mm256_or_pd(q1, q3);
    const __m256d neg_cos = _mm256_or_pd(q1, q2);
    const __m256d neg_sin = _mm256_or_pd(q2, q3);
    const __m256d sign = _mm256_set1_pd(-0.0);

    const __m256d cc = _mm256_blendv_pd(c, s, swap);
    const __m256d ss = _mm256_blendv_pd(s, c, swap);
    c_out = _mm256_xor_pd(cc, _mm256_and_pd(neg_cos, sign));
    s_out = _mm256_xor_pd(ss, _mm256_and_pd(neg_sin, sign));
}

void accumulate_quadratic_form(const double* cx, const double* cy, std::size_t n, double sx, double sy,
                               double a, double b, double c, double* out) {
    const __m256d vsx = _mm256_set1_pd(sx);
    const __m256d vsy = _mm256_set1_pd(sy);
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb2 = _mm256_set1_pd(2.0 * b);
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d dx = _mm256_sub_pd(vsx, _mm256_loadu_pd(cx + k));
        const __m256d dy = _mm256_sub_pd(vsy, _mm256_loadu_pd(cy + k));
        __m256d q = _mm256_mul_pd(_mm256_mul_pd(vc, dy), dy);
        q = _mm256_fmadd_pd(_mm256_mul_pd(vb2, dx), dy, q);
        q = _mm256_fmadd_pd(_mm256_mul_pd(va, dx), dx, q);
        _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(out + k), q));
    }
    for (; k < n; ++k) {
        const double dx = sx - cx[k];
        const double dy = sy - cy[k];
        out[k] += a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
    }
}

double min_value(const double* v, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    if (n >= 4) {
        __m256d acc = _mm256_set1_pd(m);
        for (; k + 4 <= n; k += 4) acc = _mm256_min_pd(acc, _mm256_loadu_pd(v + k));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        for (double x : lanes) m = x < m ? x : m;
    }
    for (; k < n; ++k) m = v[k] < m ? v[k] : m;
    return m;
}

double sum_exp_neg_half(const double* q, std::size_t n, double shift) {
    const __m256d vshift = _mm256_set1_pd(shift);
    const __m256d half = _mm256_set1_pd(-0.5);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d arg = _mm256_mul_pd(half, _mm256_sub_pd(_mm256_loadu_pd(q + k), vshift));
        acc = _mm256_add_pd(acc, exp_pd(arg));
    }
    double s = hsum(acc);
    for (; k < n; ++k) s += std::exp(-0.5 * (q[k] - shift));
    return s;
}

std::complex<double> phasor_block(const double* x, const double* y, std::size_t n, double l1, double l2) {
    const __m256d vl1 = _mm256_set1_pd(l1);
    const __m256d vl2 = _mm256_set1_pd(l2);
    __m256d re = _mm256_setzero_pd();
    __m256d im = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d t = _mm256_mul_pd(vl2, _mm256_loadu_pd(y + k));
        t = _mm256_fmadd_pd(vl1, _mm256_loadu_pd(x + k), t);
        t = _mm256_sub_pd(t, _mm256_round_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
        __m256d c, s;
        sincos_turns_pd(t, c, s);
        re = _mm256_add_pd(re, c);
        im = _mm256_sub_pd(im, s);
    }
    double sre = hsum(re);
    double sim = hsum(im);
    for (; k < n; ++k) {
        double t = l1 * x[k] + l2 * y[k];
        t -= std::nearbyint(t);
        const double a = 2.0 * std::numbers::pi * t;
        sre += std::cos(a);
        sim -= std::sin(a);
    }
    return {sre, sim};
}

std::complex<double> phasor_sum(const double* x, const double* y, std::size_t n, double l1, double l2) {
    return detail::pairwise_blocks(x, y, n, l1, l2, phasor_block);
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

constexpr Kernels kAvx2{"avx2", accumulate_quadratic_form, min_value, sum_exp_neg_half, phasor_sum, dot};

}  // namespace

namespace detail {
const Kernels* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace refmap::simd
