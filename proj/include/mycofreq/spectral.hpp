#pragma once

/*! \file
 *  \brief Windowed single-sided amplitude spectra and harmonic analysis.
 *
 *  Spectra are computed on the mean-removed record, windowed, zero padded to
 *  a power of two (optionally oversampled by `pad_factor`) and divided by the
 *  window sum, so a tone of amplitude A reads A at its peak bin.
 */

#include "detail/fft.hpp"
#include "errors.hpp"
#include "signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mycofreq {

enum class Window { rectangular, blackman };

inline std::string_view to_string(Window w) { return w == Window::blackman ? "blackman" : "rectangular"; }

inline Window parse_window(std::string_view name) {
    if (name == "blackman") return Window::blackman;
    if (name == "rectangular") return Window::rectangular;
    throw ValidationError("unknown window '" + std::string(name) + "'");
}

// Classic symmetric Blackman window (0.42, 0.5, 0.08).
inline std::vector<double> blackman_window(std::size_t n) {
    detail::require(n >= 2, "blackman window: length must be at least 2");
    std::vector<double> w(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / denom;
        w[j] = 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * x) + 0.08 * std::cos(4.0 * std::numbers::pi * x);
    }
    // Exact endpoint zeros and mirror symmetry despite round-off.
    w.front() = 0.0;
    w.back() = 0.0;
    for (std::size_t j = 0; j < n / 2; ++j) {
        w[n - 1 - j] = w[j];
    }
    return w;
}

inline std::vector<double> window_weights(Window window, std::size_t n) {
    if (window == Window::blackman) {
        return blackman_window(n);
    }
    return std::vector<double>(n, 1.0);
}

struct Spectrum {
    double df_hz = 0.0;
    std::vector<double> amplitudes_v;
    std::size_t n_samples = 0;      // transform length after padding
    std::size_t record_samples = 0;  // samples in the analysed record
    Window window = Window::blackman;

    double frequency(std::size_t bin) const { return df_hz * static_cast<double>(bin); }
    double nyquist_hz() const { return df_hz * static_cast<double>(n_samples) / 2.0; }
    double resolution_hz() const { return df_hz * static_cast<double>(n_samples) / static_cast<double>(record_samples); }

    std::size_t nearest_bin(double f_hz) const {
        const auto b = static_cast<long long>(std::llround(f_hz / df_hz));
        return static_cast<std::size_t>(std::clamp<long long>(b, 0, static_cast<long long>(amplitudes_v.size()) - 1));
    }

    // Largest amplitude within +-tol_bins of the bin nearest f_hz.
    double amplitude_near(double f_hz, std::size_t tol_bins) const {
        const std::size_t centre = nearest_bin(f_hz);
        const std::size_t lo = centre > tol_bins ? centre - tol_bins : 0;
        const std::size_t hi = std::min(amplitudes_v.size() - 1, centre + tol_bins);
        return *std::max_element(amplitudes_v.begin() + static_cast<std::ptrdiff_t>(lo),
                                 amplitudes_v.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    }
};

/// Single-sided amplitude spectrum of `ts`.
///
/// The mean is removed before windowing. The record is zero padded to the
/// next power of two of `pad_factor * size`. Amplitudes are 2|X|/sum(w),
/// except DC and Nyquist which are |X|/sum(w).
inline Spectrum amplitude_spectrum(const TimeSeries& ts, Window window, std::size_t pad_factor = 1) {
    detail::require(ts.size() >= 8, "amplitude spectrum: series too short (need at least 8 samples)");
    detail::require(pad_factor >= 1, "amplitude spectrum: pad factor must be at least 1");

    const std::size_t n = ts.size();
    const std::size_t m = detail::next_power_of_two(n * pad_factor);
    const auto samples = ts.samples();
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    const auto weights = window_weights(window, n);
    const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);

    std::vector<std::complex<double>> buffer(m);
    for (std::size_t i = 0; i < n; ++i) {
        buffer[i] = (samples[i] - mean) * weights[i];
    }
    detail::fft_in_place(buffer);

    Spectrum sp;
    sp.df_hz = 1.0 / (static_cast<double>(m) * ts.dt_s());
    sp.n_samples = m;
    sp.record_samples = n;
    sp.window = window;
    sp.amplitudes_v.resize(m / 2 + 1);
    for (std::size_t k = 0; k <= m / 2; ++k) {
        const double scale = (k == 0 || k == m / 2) ? 1.0 : 2.0;
        sp.amplitudes_v[k] = scale * std::abs(buffer[k]) / weight_sum;
    }
    return sp;
}

/// V_1..V_k: the local maximum within +-tol_bins of each n*f0.
/// Harmonics at or above Nyquist are dropped, so the result may be shorter
/// than k_max.
inline std::vector<double> harmonic_amplitudes(const Spectrum& sp, double f0_hz, std::size_t k_max,
                                               std::size_t tol_bins) {
    detail::require(k_max >= 1, "harmonics: k_max must be positive");
    detail::require(f0_hz > 0.0 && f0_hz >= sp.df_hz * (1.0 - 1e-9),
                    "harmonics: fundamental must be at least one bin width");
    detail::require(f0_hz < sp.nyquist_hz(), "harmonics: fundamental at or above Nyquist");
    std::vector<double> out;
    out.reserve(k_max);
    for (std::size_t h = 1; h <= k_max; ++h) {
        const double f = static_cast<double>(h) * f0_hz;
        if (f >= sp.nyquist_hz()) {
            break;
        }
        out.push_back(sp.amplitude_near(f, tol_bins));
    }
    return out;
}

struct Thd {
    double thd_f = 0.0;
    double thd_r = 0.0;
};

inline double thd_r_from_f(double thd_f) { return thd_f / std::sqrt(1.0 + thd_f * thd_f); }

/// THD_F = sqrt(V2^2 + ... + Vk^2) / V1 and THD_R = THD_F / sqrt(1 + THD_F^2).
inline Thd thd(std::span<const double> harmonics) {
    detail::require(harmonics.size() >= 2, "thd: need at least two harmonic amplitudes");
    detail::require(harmonics[0] > 0.0, "thd: fundamental amplitude is zero");
    double sum_sq = 0.0;
    for (std::size_t i = 1; i < harmonics.size(); ++i) {
        sum_sq += harmonics[i] * harmonics[i];
    }
    const double f = std::sqrt(sum_sq) / harmonics[0];
    return Thd{f, thd_r_from_f(f)};
}

struct HarmonicReport {
    double f0_hz = 0.0;
    std::vector<double> harmonics_v;
    double thd_f = 0.0;
    double thd_r = 0.0;
    std::optional<double> ratio_2_3;  // empty when V3 is missing or zero

    bool operator==(const HarmonicReport&) const = default;
};

inline HarmonicReport make_harmonic_report(double f0_hz, std::vector<double> harmonics) {
    HarmonicReport r;
    r.f0_hz = f0_hz;
    const auto t = thd(harmonics);
    r.thd_f = t.thd_f;
    r.thd_r = t.thd_r;
    if (harmonics.size() >= 3 && harmonics[2] > 0.0) {
        r.ratio_2_3 = harmonics[1] / harmonics[2];
    }
    r.harmonics_v = std::move(harmonics);
    return r;
}

inline HarmonicReport analyze_harmonics(const Spectrum& sp, double f0_hz, std::size_t k_max = 10,
                                        std::size_t tol_bins = 2) {
    return make_harmonic_report(f0_hz, harmonic_amplitudes(sp, f0_hz, k_max, tol_bins));
}

namespace detail {

inline bool same_frequency(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

inline double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    double m = *mid;
    if (values.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(values.begin(), mid));
    }
    return m;
}

template <typename Map>
auto find_frequency(const Map& m, double f) {
    auto it = m.lower_bound(f * (1.0 - 1e-9));
    if (it != m.end() && same_frequency(it->first, f)) {
        return it;
    }
    return m.end();
}

}  // namespace detail

/// ratio_2_3(f) / ratio_2_3(ref) for every frequency not in `exclusions`.
inline std::map<double, double> normalized_ratio_series(const std::map<double, HarmonicReport>& reports,
                                                        double ref_freq_hz, const std::set<double>& exclusions = {}) {
    const auto ref = detail::find_frequency(reports, ref_freq_hz);
    if (ref == reports.end()) {
        throw ValidationError("normalized ratio: reference frequency " + std::to_string(ref_freq_hz) +
                              " Hz missing from reports");
    }
    const auto ratio_of = [](double f, const HarmonicReport& r) {
        if (!r.ratio_2_3 || r.harmonics_v[1] <= 0.0) {
            throw ValidationError("normalized ratio: V2 or V3 is zero at " + std::to_string(f) + " Hz");
        }
        return *r.ratio_2_3;
    };
    const double ref_ratio = ratio_of(ref->first, ref->second);
    std::map<double, double> out;
    for (const auto& [f, report] : reports) {
        const bool excluded =
            std::any_of(exclusions.begin(), exclusions.end(), [f = f](double x) { return detail::same_frequency(x, f); });
        if (excluded) {
            continue;
        }
        out.emplace(f, ratio_of(f, report) / ref_ratio);
    }
    return out;
}

struct Peak {
    double freq_hz = 0.0;
    double amplitude_v = 0.0;
    double prominence_v = 0.0;

    bool operator==(const Peak&) const = default;
};

struct PeakList {
    std::vector<Peak> peaks;  // strictly increasing frequency

    std::size_t size() const { return peaks.size(); }
    bool empty() const { return peaks.empty(); }
    bool operator==(const PeakList&) const = default;
};

/// Local maxima with prominence >= min_prominence_v above exclude_below_hz.
///
/// Prominence is the height above the higher of the two lowest points
/// reached before climbing to a taller sample (or the spectrum edge) on
/// each side.
inline PeakList detect_peaks(const Spectrum& sp, double min_prominence_v, double exclude_below_hz = 0.0) {
    const auto& a = sp.amplitudes_v;
    PeakList out;
    if (a.size() < 3) {
        return out;
    }
    for (std::size_t i = 1; i + 1 < a.size(); ++i) {
        if (!(a[i] > a[i - 1] && a[i] >= a[i + 1])) {
            continue;
        }
        // Plateau: keep only the first sample of a flat top.
        const double f = sp.frequency(i);
        if (f <= exclude_below_hz) {
            continue;
        }
        double left_min = a[i];
        for (std::size_t j = i; j-- > 0;) {
            if (a[j] > a[i]) break;
            left_min = std::min(left_min, a[j]);
        }
        double right_min = a[i];
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            if (a[j] > a[i]) break;
            right_min = std::min(right_min, a[j]);
        }
        const double prominence = a[i] - std::max(left_min, right_min);
        if (prominence >= min_prominence_v && prominence > 0.0) {
            out.peaks.push_back(Peak{f, a[i], prominence});
        }
    }
    return out;
}

}  // namespace mycofreq
