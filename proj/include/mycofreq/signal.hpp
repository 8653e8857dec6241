#pragma once

/*! \file
 *  \brief Uniformly sampled voltage records and drive-signal synthesis.
 *
 *  Everything here is a pure function of its arguments; the noise generator
 *  is seeded explicitly and uses only the (standardised) mt19937_64 output
 *  stream, so results are bit-identical across standard libraries.
 */

#include "errors.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mycofreq {

// A uniformly sampled record. Invariants: dt_s > 0 and at least two samples.
class TimeSeries {
public:
    TimeSeries(double dt_s, std::vector<double> samples, double t0_s = 0.0)
        : dt_s_(dt_s), t0_s_(t0_s), samples_(std::move(samples)) {
        detail::require(std::isfinite(dt_s_) && dt_s_ > 0.0, "time series: dt must be positive");
        detail::require(samples_.size() >= 2, "time series: at least two samples required");
        detail::require(std::isfinite(t0_s_), "time series: start time must be finite");
    }

    double dt_s() const noexcept { return dt_s_; }
    double t0_s() const noexcept { return t0_s_; }
    double sample_rate_hz() const noexcept { return 1.0 / dt_s_; }
    double nyquist_hz() const noexcept { return 0.5 / dt_s_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double time_at(std::size_t i) const noexcept { return t0_s_ + static_cast<double>(i) * dt_s_; }
    double duration_s() const noexcept { return static_cast<double>(samples_.size()) * dt_s_; }

    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t i) const { return samples_[i]; }

    // Copy of samples [first, first + count) with the start time shifted accordingly.
    TimeSeries slice(std::size_t first, std::size_t count) const {
        detail::require(first + count <= samples_.size(), "time series: slice out of range");
        return TimeSeries(dt_s_,
                          std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(first),
                                              samples_.begin() + static_cast<std::ptrdiff_t>(first + count)),
                          time_at(first));
    }

    bool same_grid(const TimeSeries& other) const noexcept {
        return samples_.size() == other.samples_.size() &&
               std::abs(dt_s_ - other.dt_s_) <= 1e-12 * dt_s_;
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    double dt_s_;
    double t0_s_;
    std::vector<double> samples_;
};

enum class WaveKind { sine, square, triangle };

inline std::string_view to_string(WaveKind kind) {
    switch (kind) {
        case WaveKind::sine: return "sine";
        case WaveKind::square: return "square";
        case WaveKind::triangle: return "triangle";
    }
    return "sine";
}

inline WaveKind parse_wave_kind(std::string_view name) {
    if (name == "sine") return WaveKind::sine;
    if (name == "square") return WaveKind::square;
    if (name == "triangle") return WaveKind::triangle;
    throw ValidationError("unknown waveform kind '" + std::string(name) + "'");
}

struct WaveformSpec {
    WaveKind kind = WaveKind::sine;
    double frequency_hz = 0.001;
    double amplitude_vpp = 10.0;  // peak-to-peak
    double phase_rad = 0.0;
    double dc_offset_v = 0.0;
};

// Endogenous background activity: a band of equal-amplitude tones with
// random phases. Default band is 50-200 mHz.
struct EndogenousNoiseSpec {
    double band_low_hz = 0.05;
    double band_high_hz = 0.2;
    double rms_v = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kNoiseTones = 64;

namespace detail {

// Fractional position within the cycle, in [0, 1).
inline double cycle_position(double frequency_hz, double t, double phase_rad) {
    const double x = frequency_hz * t + phase_rad / (2.0 * std::numbers::pi);
    return x - std::floor(x);
}

inline double waveform_value(const WaveformSpec& spec, double t) {
    const double half = 0.5 * spec.amplitude_vpp;
    switch (spec.kind) {
        case WaveKind::sine:
            return spec.dc_offset_v +
                   half * std::sin(2.0 * std::numbers::pi * spec.frequency_hz * t + spec.phase_rad);
        case WaveKind::square: {
            const double u = cycle_position(spec.frequency_hz, t, spec.phase_rad);
            return spec.dc_offset_v + (u < 0.5 ? half : -half);
        }
        case WaveKind::triangle: {
            // Aligned with the sine: zero at u = 0, rising, peak at u = 1/4.
            const double u = cycle_position(spec.frequency_hz, t, spec.phase_rad);
            double shape;
            if (u < 0.25) {
                shape = 4.0 * u;
            } else if (u < 0.75) {
                shape = 2.0 - 4.0 * u;
            } else {
                shape = 4.0 * u - 4.0;
            }
            return spec.dc_offset_v + half * shape;
        }
    }
    return 0.0;
}

// Uniform double in [0, 1) from the raw 64-bit engine output.
inline double unit_uniform(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// SplitMix64 finaliser; derives independent stream seeds from a base seed
// and a tuple of small integers (run index, channel, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salt) {
    std::uint64_t z = base;
    for (auto s : salt) {
        z += 0x9e3779b97f4a7c15ULL + s;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
    }
    return z;
}

inline TimeSeries synthesize(const WaveformSpec& spec, double dt_s, double duration_s) {
    detail::require(std::isfinite(spec.frequency_hz) && spec.frequency_hz > 0.0,
                    "synthesize: frequency must be positive");
    detail::require(spec.amplitude_vpp >= 0.0, "synthesize: amplitude must be nonnegative");
    detail::require(std::isfinite(dt_s) && dt_s > 0.0, "synthesize: dt must be positive");
    detail::require(std::isfinite(duration_s) && duration_s > 0.0,
                    "synthesize: duration must be positive");
    detail::require(dt_s < 0.5 / spec.frequency_hz,
                    "synthesize: sampling violates Nyquist for the requested frequency");
    // Small slack so that "exactly one period" computed in floating point passes.
    detail::require(duration_s * spec.frequency_hz >= 1.0 - 1e-9,
                    "synthesize: duration shorter than one period");

    const auto n = static_cast<std::size_t>(std::llround(duration_s / dt_s));
    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        samples[i] = detail::waveform_value(spec, static_cast<double>(i) * dt_s);
    }
    return TimeSeries(dt_s, std::move(samples));
}

inline TimeSeries add_endogenous_noise(const TimeSeries& ts, const EndogenousNoiseSpec& spec) {
    detail::require(spec.band_low_hz > 0.0 && spec.band_low_hz < spec.band_high_hz,
                    "noise: band must satisfy 0 < low < high");
    detail::require(spec.band_high_hz < ts.nyquist_hz(), "noise: band exceeds Nyquist");
    detail::require(spec.rms_v >= 0.0, "noise: rms must be nonnegative");
    if (spec.rms_v == 0.0) {
        return ts;
    }

    std::mt19937_64 engine(spec.seed);
    std::vector<double> phases(kNoiseTones);
    for (auto& phi : phases) {
        phi = 2.0 * std::numbers::pi * detail::unit_uniform(engine);
    }
    const double step = (spec.band_high_hz - spec.band_low_hz) / static_cast<double>(kNoiseTones - 1);
    // Each tone carries an equal share of the total power.
    const double amplitude = spec.rms_v * std::sqrt(2.0 / static_cast<double>(kNoiseTones));

    std::vector<double> out(ts.samples().begin(), ts.samples().end());
    for (std::size_t k = 0; k < kNoiseTones; ++k) {
        const double omega = 2.0 * std::numbers::pi * (spec.band_low_hz + step * static_cast<double>(k));
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += amplitude * std::sin(omega * ts.time_at(i) + phases[k]);
        }
    }
    return TimeSeries(ts.dt_s(), std::move(out), ts.t0_s());
}

inline TimeSeries superpose(const TimeSeries& a, const TimeSeries& b) {
    detail::require(a.same_grid(b), "superpose: series do not share a sampling grid");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return TimeSeries(a.dt_s(), std::move(out), a.t0_s());
}

inline TimeSeries scaled(const TimeSeries& ts, double factor) {
    std::vector<double> out(ts.samples().begin(), ts.samples().end());
    for (auto& v : out) {
        v *= factor;
    }
    return TimeSeries(ts.dt_s(), std::move(out), ts.t0_s());
}

}  // namespace mycofreq
