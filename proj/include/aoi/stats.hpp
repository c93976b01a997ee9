#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace aoi {

/// All Monte Carlo and simulation standard errors use batch means over this
/// fixed batch count; fixing it is what keeps results independent of how the
/// batches are executed.
inline constexpr std::size_t kNumBatches = 32;

namespace detail {

/// sd(batch estimates)/sqrt(B). NaN entries (e.g. a batch with no qualifying
/// events) are skipped; returns 0 when fewer than two usable batches remain.
inline double batch_standard_error(std::span<const double> batch_values) {
    std::size_t n = 0;
    double sum = 0.0;
    for (double v : batch_values)
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    if (n < 2) return 0.0;
    const double m = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : batch_values)
        if (!std::isnan(v)) ss += (v - m) * (v - m);
    return std::sqrt(ss / (static_cast<double>(n - 1) * static_cast<double>(n)));
}

/// Deterministic near-even split of n items into kNumBatches contiguous runs.
inline std::size_t batch_size(std::size_t n, std::size_t batch) {
    return n / kNumBatches + (batch < n % kNumBatches ? 1 : 0);
}

}  // namespace detail
}  // namespace aoi
