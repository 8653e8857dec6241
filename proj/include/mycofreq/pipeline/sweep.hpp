#pragma once

// Frequency sweep: drive each path at each frequency, record every channel
// and reduce the records to harmonic reports, ratios and fuzzy labels.

#include "../errors.hpp"
#include "../fuzzy.hpp"
#include "../netsim.hpp"
#include "../signal.hpp"
#include "../spectral.hpp"
#include "config.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace mycofreq::pipeline {

struct SweepPoint {
    double f_hz = 0.0;
    Path path = Path::path1;
    std::size_t channel = 0;
    HarmonicReport report;
    std::optional<double> normalized_ratio;  // empty for excluded frequencies or when normalisation is off
    fuzzy::Classification classification;    // of thd_f in percent
    fuzzy::Side side = fuzzy::Side::below;    // f_hz against the threshold frequency

    auto key() const { return std::tuple(f_hz, path, channel); }
    bool operator==(const SweepPoint&) const = default;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // ordered by (f_hz, path, channel)
    std::size_t k_max = 0;
    std::string config_hash;
    std::uint64_t seed = 0;

    const SweepPoint* find(double f_hz, Path path, std::size_t channel) const {
        for (const auto& p : points) {
            if (p.path == path && p.channel == channel && mycofreq::detail::same_frequency(p.f_hz, f_hz)) return &p;
        }
        return nullptr;
    }

    bool operator==(const SweepResult&) const = default;
};

// Record geometry for one sweep point: whole settle periods, then the record.
struct RecordPlan {
    std::size_t settle_samples = 0;
    std::size_t record_samples = 0;
    double total_s = 0.0;
};

inline RecordPlan plan_record(double f_hz, double dt_s, double periods, double settle_s) {
    const double period = 1.0 / f_hz;
    const double settle_periods = std::ceil(settle_s / period - 1e-9);
    RecordPlan plan;
    plan.settle_samples = static_cast<std::size_t>(std::llround(settle_periods * period / dt_s));
    plan.record_samples = static_cast<std::size_t>(std::llround(periods * period / dt_s));
    plan.total_s = static_cast<double>(plan.settle_samples + plan.record_samples) * dt_s;
    return plan;
}

namespace impl {

struct PointOutput {
    std::vector<HarmonicReport> reports;  // one per channel
};

inline PointOutput run_point(const ExperimentConfig& cfg, std::size_t fi, Path path) {
    const double f = cfg.sweep_hz[fi];
    const auto plan = plan_record(f, cfg.sim.dt_s, cfg.periods_per_record, cfg.settle_s);

    DriveMap drives;
    drives.emplace(terminal_of(path),
                   synthesize(WaveformSpec{WaveKind::sine, f, cfg.drive_vpp_v, 0.0, 0.0}, cfg.sim.dt_s, plan.total_s));
    SimConfig sim = cfg.sim;
    sim.duration_s = plan.total_s;

    std::vector<TimeSeries> outputs;
    try {
        outputs = simulate(cfg.topology, drives, sim);
    } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << e.what() << " (f = " << f << " Hz, " << to_string(path) << ")";
        throw NumericalError(msg.str());
    }

    PointOutput out;
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        auto record = outputs[c].slice(plan.settle_samples, plan.record_samples);
        if (cfg.noise.rms_v > 0.0) {
            auto spec = cfg.noise;
            spec.seed = derive_seed(cfg.seed, {fi, static_cast<std::uint64_t>(path), c});
            record = add_endogenous_noise(record, spec);
        }
        const auto sp = amplitude_spectrum(record, Window::blackman, cfg.analysis.pad_factor);
        out.reports.push_back(analyze_harmonics(sp, f, cfg.analysis.k_max, cfg.analysis.tol_bins));
    }
    return out;
}

}  // namespace impl

/// Runs every (frequency, path) point, using up to `threads` workers
/// (0 means hardware concurrency). The result does not depend on the
/// number of workers.
inline SweepResult run_sweep(const ExperimentConfig& cfg, unsigned threads = 0) {
    cfg.validate();

    const std::size_t n_tasks = cfg.sweep_hz.size() * cfg.paths.size();
    std::vector<impl::PointOutput> outputs(n_tasks);
    std::vector<std::exception_ptr> errors(n_tasks);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_tasks));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) {
            try {
                outputs[t] = impl::run_point(cfg, t / cfg.paths.size(), cfg.paths[t % cfg.paths.size()]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    // Report the first failing point in sweep order, whatever the schedule.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    SweepResult result;
    result.k_max = cfg.analysis.k_max;
    result.config_hash = config_hash(cfg);
    result.seed = cfg.seed;

    std::set<double> exclusions(cfg.analysis.exclusions.begin(), cfg.analysis.exclusions.end());
    // Normalised ratio per (path, channel) series.
    std::map<std::pair<Path, std::size_t>, std::map<double, double>> ratios;
    if (cfg.analysis.normalize) {
        for (std::size_t pi = 0; pi < cfg.paths.size(); ++pi) {
            const std::size_t n_channels = outputs[pi].reports.size();
            for (std::size_t c = 0; c < n_channels; ++c) {
                std::map<double, HarmonicReport> series;
                for (std::size_t fi = 0; fi < cfg.sweep_hz.size(); ++fi) {
                    series.emplace(cfg.sweep_hz[fi], outputs[fi * cfg.paths.size() + pi].reports[c]);
                }
                ratios[{cfg.paths[pi], c}] = normalized_ratio_series(series, cfg.analysis.ref_freq_hz, exclusions);
            }
        }
    }

    for (std::size_t t = 0; t < n_tasks; ++t) {
        const double f = cfg.sweep_hz[t / cfg.paths.size()];
        const Path path = cfg.paths[t % cfg.paths.size()];
        for (std::size_t c = 0; c < outputs[t].reports.size(); ++c) {
            SweepPoint p;
            p.f_hz = f;
            p.path = path;
            p.channel = c;
            p.report = outputs[t].reports[c];
            if (const auto it = ratios.find({path, c}); it != ratios.end()) {
                if (const auto r = mycofreq::detail::find_frequency(it->second, f); r != it->second.end()) {
                    p.normalized_ratio = r->second;
                }
            }
            p.classification = fuzzy::classify(cfg.partition, 100.0 * p.report.thd_f);
            p.side = fuzzy::threshold_discriminate(f, cfg.analysis.threshold_freq_hz);
            result.points.push_back(std::move(p));
        }
    }
    std::stable_sort(result.points.begin(), result.points.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.key() < b.key(); });
    return result;
}

}  // namespace mycofreq::pipeline
