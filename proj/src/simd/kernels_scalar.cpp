#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "refmap/simd.hpp"
#include "phasor_reduce.hpp"

namespace refmap::simd {

namespace {

void accumulate_quadratic_form(const double* cx, const double* cy, std::size_t n, double sx, double sy,
                               double a, double b, double c, double* out) {
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = sx - cx[k];
        const double dy = sy - cy[k];
        out[k] += a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
    }
}

double min_value(const double* v, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) m = v[k] < m ? v[k] : m;
    return m;
}

double sum_exp_neg_half(const double* q, std::size_t n, double shift) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(-0.5 * (q[k] - shift));
    return s;
}

std::complex<double> phasor_block(const double* x, const double* y, std::size_t n, double l1, double l2) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double t = l1 * x[k] + l2 * y[k];
        t -= std::nearbyint(t);
        const double a = 2.0 * std::numbers::pi * t;
        re += std::cos(a);
        im -= std::sin(a);
    }
    return {re, im};
}

std::complex<double> phasor_sum(const double* x, const double* y, std::size_t n, double l1, double l2) {
    return detail::pairwise_blocks(x, y, n, l1, l2, phasor_block);
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

constexpr Kernels kScalar{"scalar", accumulate_quadratic_form, min_value, sum_exp_neg_half, phasor_sum, dot};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace refmap::simd
