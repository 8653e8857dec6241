#pragma once

#include "../errors.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace mycofreq::detail {

inline std::size_t next_power_of_two(std::size_t n) { return std::bit_ceil(n); }

// In-place iterative radix-2 decimation-in-time FFT (forward, no scaling).
// Twiddles are evaluated directly rather than by recurrence to keep the
// round-off at the level of a single cos/sin call.
inline void fft_in_place(std::vector<std::complex<double>>& data) {
    const std::size_t n = data.size();
    require(std::has_single_bit(n), "fft: length must be a power of two");
    if (n < 2) {
        return;
    }

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(data[i], data[j]);
        }
    }

    std::vector<std::complex<double>> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle[k] = {std::cos(angle), std::sin(angle)};
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const auto t = twiddle[k * stride] * data[start + k + half];
                const auto u = data[start + k];
                data[start + k] = u + t;
                data[start + k + half] = u - t;
            }
        }
    }
}

}  // namespace mycofreq::detail
