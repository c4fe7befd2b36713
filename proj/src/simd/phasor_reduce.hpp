#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "refmap/simd.hpp"

namespace refmap::simd::detail {

// Evaluate fixed-size blocks with `block`, then combine block sums pairwise.
template <class BlockFn>
std::complex<double> pairwise_blocks(const double* x, const double* y, std::size_t n, double l1, double l2,
                                     BlockFn block) {
    if (n == 0) return {0.0, 0.0};
    const std::size_t nblocks = (n + kPhasorBlock - 1) / kPhasorBlock;
    std::vector<std::complex<double>> partial(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const std::size_t lo = b * kPhasorBlock;
        const std::size_t len = std::min(kPhasorBlock, n - lo);
        partial[b] = block(x + lo, y + lo, len, l1, l2);
    }
    for (std::size_t width = 1; width < nblocks; width *= 2) {
        for (std::size_t i = 0; i + width < nblocks; i += 2 * width) partial[i] += partial[i + width];
    }
    return partial[0];
}

}  // namespace refmap::simd::detail
