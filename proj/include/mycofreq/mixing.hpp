#pragma once

/*! \file
 *  \brief Two-tone intermodulation: product prediction, peak matching and the
 *         dual-path drive experiment.
 */

#include "errors.hpp"
#include "netsim.hpp"
#include "signal.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mycofreq::mixing {

struct MixSpec {
    double f1_hz = 0.001;
    double f2_hz = 0.005;
    double vpp1_v = 10.0;
    double vpp2_v = 10.0;

    void validate() const {
        detail::require(f1_hz > 0.0 && f2_hz > 0.0, "mix spec: frequencies must be positive");
        detail::require(vpp1_v >= 0.0 && vpp2_v >= 0.0, "mix spec: amplitudes must be nonnegative");
    }
};

enum class Sign { plus, minus };

inline std::string_view to_string(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

inline Sign parse_sign(std::string_view s) {
    if (s == "plus") return Sign::plus;
    if (s == "minus") return Sign::minus;
    throw ValidationError("unknown product sign '" + std::string(s) + "'");
}

// |m*f1 +- n*f2|
struct IntermodProduct {
    int m = 0;
    int n = 0;
    Sign sign = Sign::plus;
    double freq_hz = 0.0;

    int order() const { return m + n; }

    double recompute(double f1_hz, double f2_hz) const {
        const double a = m * f1_hz;
        const double b = n * f2_hz;
        return std::abs(sign == Sign::plus ? a + b : a - b);
    }

    bool operator==(const IntermodProduct&) const = default;
};

/// Every |m*f1 +- n*f2| with 1 <= m + n <= max_order, zero frequencies
/// dropped, one entry per distinct frequency (the lowest order wins; among
/// equal orders the larger m, then the plus sign), sorted ascending.
inline std::vector<IntermodProduct> predict_products(double f1_hz, double f2_hz, int max_order) {
    detail::require(f1_hz > 0.0 && f2_hz > 0.0, "predict products: frequencies must be positive");
    detail::require(max_order >= 1, "predict products: max_order must be at least 1");

    std::vector<IntermodProduct> candidates;
    for (int order = 1; order <= max_order; ++order) {
        for (int m = order; m >= 0; --m) {
            const int n = order - m;
            for (Sign sign : {Sign::plus, Sign::minus}) {
                // With a zero coefficient the sign is meaningless.
                if (sign == Sign::minus && (m == 0 || n == 0)) continue;
                IntermodProduct p{m, n, sign, 0.0};
                p.freq_hz = p.recompute(f1_hz, f2_hz);
                candidates.push_back(p);
            }
        }
    }

    const double zero_tol = 1e-12 * std::max(f1_hz, f2_hz);
    std::vector<IntermodProduct> kept;
    for (const auto& c : candidates) {
        if (c.freq_hz <= zero_tol) continue;
        // Candidates arrive in preference order, so the first one at a frequency wins.
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const IntermodProduct& k) {
            return std::abs(k.freq_hz - c.freq_hz) <= 1e-9 * std::max(k.freq_hz, c.freq_hz);
        });
        if (!duplicate) kept.push_back(c);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const IntermodProduct& a, const IntermodProduct& b) { return a.freq_hz < b.freq_hz; });
    return kept;
}

struct MatchedProduct {
    IntermodProduct product;
    double observed_freq_hz = 0.0;
    double amplitude_v = 0.0;

    bool operator==(const MatchedProduct&) const = default;
};

struct Matching {
    std::vector<MatchedProduct> matched;
    PeakList unmatched_peaks;

    bool operator==(const Matching&) const = default;
};

/// Assigns each peak to the nearest product within tol_hz; distance ties
/// go to the lower order.
inline Matching match_products(const PeakList& peaks, const std::vector<IntermodProduct>& products, double tol_hz) {
    detail::require(tol_hz > 0.0, "match products: tolerance must be positive");
    Matching out;
    for (const auto& peak : peaks.peaks) {
        std::optional<std::size_t> best;
        double best_distance = 0.0;
        for (std::size_t i = 0; i < products.size(); ++i) {
            const double d = std::abs(products[i].freq_hz - peak.freq_hz);
            if (d > tol_hz) continue;
            if (!best || d < best_distance ||
                (d == best_distance && products[i].order() < products[*best].order())) {
                best = i;
                best_distance = d;
            }
        }
        if (best) {
            out.matched.push_back(MatchedProduct{products[*best], peak.freq_hz, peak.amplitude_v});
        } else {
            out.unmatched_peaks.peaks.push_back(peak);
        }
    }
    return out;
}

struct ChannelMix {
    std::size_t channel = 0;
    std::vector<MatchedProduct> matched;
    PeakList unmatched_peaks;
    double median_amplitude_v = 0.0;  // over the analysis band
    double detection_threshold_v = 0.0;

    const MatchedProduct* find_match(double freq_hz, double tol_hz) const {
        for (const auto& m : matched) {
            if (std::abs(m.product.freq_hz - freq_hz) <= tol_hz) return &m;
        }
        return nullptr;
    }

    bool operator==(const ChannelMix&) const = default;
};

struct MixReport {
    double f1_hz = 0.0;
    double f2_hz = 0.0;
    double df_hz = 0.0;
    double tol_hz = 0.0;
    std::vector<IntermodProduct> predicted;
    std::vector<ChannelMix> channels;

    bool operator==(const MixReport&) const = default;
};

struct MixingConfig {
    double base_f1_hz = 0.001;
    std::vector<double> f2_hz = {0.002, 0.005, 0.007};
    double vpp1_v = 10.0;
    double vpp2_v = 10.0;
    int max_order = 4;
    double tol_factor = 1.5;      // match tolerance in spectral bins
    double base_periods = 16.0;   // record length in periods of f1
    double settle_s = 100.0;      // simulated but not analysed
    std::size_t pad_factor = 1;
    // Peak detection threshold: max(prominence_factor * band median,
    // relative_floor * largest amplitude). The floor sits at the Blackman
    // sidelobe level so that window leakage is never reported as a product.
    double prominence_factor = 3.0;
    double relative_floor = 1e-3;

    void validate() const {
        detail::require(base_f1_hz > 0.0, "mixing: base frequency must be positive");
        for (double f : f2_hz) detail::require(f > 0.0, "mixing: path-2 frequencies must be positive");
        detail::require(max_order >= 1, "mixing: max_order must be at least 1");
        detail::require(tol_factor > 0.0, "mixing: tolerance factor must be positive");
        detail::require(base_periods >= 1.0, "mixing: need at least one base period");
        detail::require(settle_s >= 0.0, "mixing: settle time must be nonnegative");
        detail::require(pad_factor >= 1, "mixing: pad factor must be at least 1");
    }

    bool operator==(const MixingConfig&) const = default;
};

// Analyses one recorded channel of a two-tone run.
inline ChannelMix analyze_channel(const TimeSeries& record, std::size_t channel, double f1_hz, double f2_hz,
                                  const std::vector<IntermodProduct>& predicted, const MixingConfig& cfg,
                                  double& df_hz, double& tol_hz) {
    const auto sp = amplitude_spectrum(record, Window::blackman, cfg.pad_factor);
    df_hz = sp.df_hz;
    tol_hz = cfg.tol_factor * sp.df_hz;

    const double lowest = 0.5 * std::min(f1_hz, f2_hz);
    const double highest = std::min(sp.nyquist_hz(), predicted.empty() ? sp.nyquist_hz()
                                                                       : predicted.back().freq_hz + 4.0 * tol_hz);
    std::vector<double> band;
    for (std::size_t k = 0; k < sp.amplitudes_v.size(); ++k) {
        const double f = sp.frequency(k);
        if (f > lowest && f <= highest) band.push_back(sp.amplitudes_v[k]);
    }
    const double largest = *std::max_element(sp.amplitudes_v.begin(), sp.amplitudes_v.end());

    ChannelMix out;
    out.channel = channel;
    out.median_amplitude_v = detail::median(band);
    out.detection_threshold_v = std::max(cfg.prominence_factor * out.median_amplitude_v, cfg.relative_floor * largest);

    auto peaks = detect_peaks(sp, out.detection_threshold_v, lowest);
    std::erase_if(peaks.peaks, [&](const Peak& p) { return p.freq_hz > highest; });
    auto matching = match_products(peaks, predicted, tol_hz);
    out.matched = std::move(matching.matched);
    out.unmatched_peaks = std::move(matching.unmatched_peaks);
    return out;
}

/// Simulates run `run` (input1 at the base tone, input2 at f2_hz[run]) and
/// returns the settled record of every channel, with per-channel noise
/// seeded from `seed` when noise.rms_v > 0.
inline std::vector<TimeSeries> mixing_records(const NetworkTopology& top, const MixingConfig& cfg, const SimConfig& sim,
                                              std::size_t run, const EndogenousNoiseSpec& noise = {},
                                              std::uint64_t seed = 0) {
    cfg.validate();
    detail::require(run < cfg.f2_hz.size(), "mixing: run index out of range");
    const double f1 = cfg.base_f1_hz;
    const double f2 = cfg.f2_hz[run];
    const double record_s = cfg.base_periods / f1;
    const double total_s = record_s + cfg.settle_s;
    const auto settle_samples = static_cast<std::size_t>(std::llround(cfg.settle_s / sim.dt_s));
    const auto record_samples = static_cast<std::size_t>(std::llround(record_s / sim.dt_s));

    DriveMap drives;
    drives.emplace(Terminal::input1, synthesize(WaveformSpec{WaveKind::sine, f1, cfg.vpp1_v, 0.0, 0.0}, sim.dt_s, total_s));
    drives.emplace(Terminal::input2, synthesize(WaveformSpec{WaveKind::sine, f2, cfg.vpp2_v, 0.0, 0.0}, sim.dt_s, total_s));
    const auto outputs = simulate(top, drives, sim);

    std::vector<TimeSeries> records;
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        const std::size_t count = std::min(record_samples, outputs[c].size() - settle_samples);
        auto record = outputs[c].slice(settle_samples, count);
        if (noise.rms_v > 0.0) {
            auto spec = noise;
            spec.seed = derive_seed(seed, {0x6d6978ULL, run, c});
            record = add_endogenous_noise(record, spec);
        }
        records.push_back(std::move(record));
    }
    return records;
}

/// Runs every configured f2 and matches the spectral peaks of each channel
/// against the predicted products.
inline std::map<double, MixReport> run_mixing_experiment(const NetworkTopology& top, const MixingConfig& cfg,
                                                         const SimConfig& sim, const EndogenousNoiseSpec& noise = {},
                                                         std::uint64_t seed = 0) {
    cfg.validate();
    std::map<double, MixReport> reports;
    for (std::size_t run = 0; run < cfg.f2_hz.size(); ++run) {
        MixReport report;
        report.f1_hz = cfg.base_f1_hz;
        report.f2_hz = cfg.f2_hz[run];
        report.predicted = predict_products(report.f1_hz, report.f2_hz, cfg.max_order);
        const auto records = mixing_records(top, cfg, sim, run, noise, seed);
        for (std::size_t c = 0; c < records.size(); ++c) {
            report.channels.push_back(analyze_channel(records[c], c, report.f1_hz, report.f2_hz, report.predicted, cfg,
                                                      report.df_hz, report.tol_hz));
        }
        reports.emplace(report.f2_hz, std::move(report));
    }
    return reports;
}

}  // namespace mycofreq::mixing
