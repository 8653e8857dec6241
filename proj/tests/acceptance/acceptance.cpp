// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "../oracle.hpp"

#include <mycofreq/mycofreq.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace mycofreq;
using namespace mycofreq::pipeline;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > time_limit_s) {
        out.pass = false;
        out.detail += " [over time limit]";
    }
    if (!out.pass) ++failures;
    std::printf("%s %d %s: %s (%.3f s, limit %.0f s)\n", out.pass ? "PASS" : "FAIL", id, name, out.detail.c_str(),
                elapsed, time_limit_s);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double wave_thd(WaveKind kind) {
    const double dt = 1.0 / 128.0;  // 64 Hz Nyquist, 50 harmonics of 1 Hz below it
    const auto ts = synthesize(WaveformSpec{kind, 1.0, 10.0}, dt, 1024 * dt);
    return analyze_harmonics(amplitude_spectrum(ts, Window::blackman), 1.0, 50, 2).thd_f;
}

std::string sweep_json_without_timestamp(const ExperimentConfig& cfg) {
    const auto r = run_sweep(cfg);
    return sweep_json(r, Provenance{r.config_hash, r.seed, std::string(kToolVersion), ""}).dump();
}

}  // namespace

int main() {
    criterion(1, "square-wave THD anchor", 1.0, [] {
        const double t = wave_thd(WaveKind::square);
        return Outcome{t >= 0.475 && t <= 0.490, fmt("thd_f = %.2f%% (band 47.5-49.0%%)", 100 * t)};
    });

    criterion(2, "triangle-wave THD anchor", 1.0, [] {
        const double t = wave_thd(WaveKind::triangle);
        return Outcome{t >= 0.118 && t <= 0.124, fmt("thd_f = %.2f%% (band 11.8-12.4%%)", 100 * t)};
    });

    criterion(3, "THD_R identity", 10.0, [] {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> len(2, 50);
        std::uniform_real_distribution<double> amp(0.0, 10.0);
        double worst = 0.0;
        bool bounded = true;
        for (int i = 0; i < 10000; ++i) {
            std::vector<double> v(static_cast<std::size_t>(len(rng)));
            for (auto& x : v) x = amp(rng);
            v[0] += 1e-3;
            const auto report = make_harmonic_report(1.0, v);
            worst = std::max(worst, std::abs(report.thd_r - report.thd_f / std::sqrt(1 + report.thd_f * report.thd_f)));
            bounded = bounded && report.thd_r >= 0.0 && report.thd_r < 1.0;
        }
        return Outcome{worst <= 1e-12 && bounded, fmt("max |error| = %.3g, bounded = %.0f", worst, bounded)};
    });

    criterion(4, "FFT oracle", 30.0, [] {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g(0.0, 1.0);
        double worst = 0.0;
        int cases = 0;
        for (std::size_t n = 8; n <= 4096; n *= 2) {
            for (std::size_t len : {n, n + 3 < 4096 ? n + 3 : n - 1}) {
                std::vector<double> x(len);
                for (auto& v : x) v = 0.5 + g(rng);
                const TimeSeries ts(1.0, x);
                for (auto window : {Window::rectangular, Window::blackman}) {
                    const auto sp = amplitude_spectrum(ts, window);
                    const auto ref = oracle::naive_amplitudes(
                        x, window == Window::blackman ? oracle::blackman(len) : std::vector<double>(len, 1.0), sp.n_samples);
                    const double scale = *std::max_element(ref.begin(), ref.end());
                    for (std::size_t k = 0; k < ref.size(); ++k) {
                        worst = std::max(worst, std::abs(sp.amplitudes_v[k] - ref[k]) / scale);
                    }
                    ++cases;
                }
            }
        }
        return Outcome{worst <= 1e-9, fmt("max relative error %.3g over %.0f spectra", worst, cases)};
    });

    criterion(5, "distortion falls with frequency", 120.0, [] {
        const auto r = run_sweep(ExperimentConfig{});
        double low = 0.0;
        double high = 0.0;
        int nl = 0;
        int nh = 0;
        for (const auto& p : r.points) {
            if (p.f_hz <= 0.01 + 1e-12) {
                low += p.report.thd_f;
                ++nl;
            }
            if (p.f_hz >= 0.02 - 1e-12) {
                high += p.report.thd_f;
                ++nh;
            }
        }
        low /= nl;
        high /= nh;
        bool ratio_ok = true;
        double worst_ratio = 0.0;
        for (const auto& p : r.points) {
            if (p.f_hz < 0.01 - 1e-12) {
                const double nr = p.normalized_ratio.value_or(INFINITY);
                ratio_ok = ratio_ok && nr < 1.0;
                worst_ratio = std::max(worst_ratio, nr);
            }
        }
        return Outcome{low > 0.25 && high < 0.10 && ratio_ok,
                       fmt("mean thd_f %.1f%% (<=10 mHz), %.1f%% (>=20 mHz); max normalized ratio below 10 mHz %.3f",
                           100 * low, 100 * high, worst_ratio)};
    });

    criterion(6, "mixing satellites", 60.0, [] {
        const ExperimentConfig cfg;
        auto mix = cfg.mixing;
        mix.f2_hz = {0.005, 0.007};
        const auto reports = mixing::run_mixing_experiment(cfg.topology, mix, cfg.sim, cfg.noise, cfg.seed);
        bool ok = true;
        double worst_margin = INFINITY;
        for (auto [f2, a, b] : {std::tuple{0.005, 0.009, 0.011}, std::tuple{0.007, 0.013, 0.015}}) {
            const auto& r = reports.at(f2);
            const std::size_t run = f2 == 0.005 ? 0 : 1;
            const auto records = mixing::mixing_records(cfg.topology, mix, cfg.sim, run, cfg.noise, cfg.seed);
            for (std::size_t c = 0; c < r.channels.size(); ++c) {
                const auto sp = amplitude_spectrum(records[c], Window::blackman, mix.pad_factor);
                std::vector<double> band;
                for (std::size_t k = 0; k < sp.amplitudes_v.size(); ++k) {
                    if (sp.frequency(k) >= 0.005 && sp.frequency(k) <= 0.015) band.push_back(sp.amplitudes_v[k]);
                }
                const double median = mycofreq::detail::median(band);
                for (double f : {a, b}) {
                    const auto* m = r.channels[c].find_match(f, 1e-9);
                    if (!m) {
                        ok = false;
                        continue;
                    }
                    worst_margin = std::min(worst_margin, m->amplitude_v / median);
                }
            }
        }
        return Outcome{ok && worst_margin > 3.0,
                       fmt("satellites matched = %.0f, min amplitude / 5-15 mHz median = %.1f", ok, worst_margin)};
    });

    criterion(7, "odd-symmetric law gives odd harmonics", 10.0, [] {
        auto p = default_mycelium_params();
        p.alpha2_per_V = 0.0;
        const auto top = default_topology(p);
        const double f0 = 1.0 / 64.0;
        SimConfig sim;
        sim.freeze_state = true;
        sim.w_initial = 0.5;
        sim.newton_tol_V = 1e-13;
        sim.duration_s = 4096.0;
        const auto out = simulate(top, DriveMap{{Terminal::input1, synthesize(WaveformSpec{WaveKind::sine, f0, 10.0}, 1.0, 4096.0)}}, sim);
        double worst = 0.0;
        double third = INFINITY;
        for (const auto& ch : out) {
            const auto v = harmonic_amplitudes(amplitude_spectrum(ch, Window::blackman), f0, 10, 2);
            for (std::size_t k = 1; k < v.size(); k += 2) worst = std::max(worst, v[k] / v[0]);
            third = std::min(third, v[2] / v[0]);
        }
        return Outcome{worst < 1e-6, fmt("max even/fundamental = %.3g (odd V3/V1 = %.3g)", worst, third)};
    });

    criterion(8, "fuzzy anchors and monotonicity", 10.0, [] {
        const auto p = fuzzy::default_partition();
        const bool anchors = fuzzy::classify(p, 2.0).label == "very low" && fuzzy::classify(p, 45.0).label == "very high";
        bool monotone = true;
        std::size_t prev = 0;
        for (int i = 0; i <= 500; ++i) {
            const auto idx = fuzzy::classify(p, i * 0.1).index;
            monotone = monotone && idx >= prev;
            prev = idx;
        }
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-1e6, 1e6);
        bool in_range = true;
        for (int i = 0; i < 100000; ++i) {
            const double x = i % 3 == 0 ? u(rng) : u(rng) * 1e-4;
            for (const auto& [label, m] : fuzzy::fuzzify(p, x)) in_range = in_range && m >= 0.0 && m <= 1.0;
        }
        return Outcome{anchors && monotone && in_range,
                       fmt("anchors %.0f, monotone %.0f, memberships in [0,1] %.0f", anchors, monotone, in_range)};
    });

    criterion(9, "determinism and round trip", 60.0, [] {
        const ExperimentConfig cfg;
        const auto a = sweep_json_without_timestamp(cfg);
        const auto b = sweep_json_without_timestamp(cfg);
        const auto parsed = sweep_from_json(json::parse(a));
        const auto re = sweep_json(parsed, Provenance{parsed.config_hash, parsed.seed, std::string(kToolVersion), ""}).dump();
        std::ostringstream csv;
        write_sweep_csv(csv, parsed);
        std::size_t rows = 0;
        for (char ch : csv.str()) rows += ch == '\n';
        rows -= 1;
        return Outcome{a == b && re == a && rows == 76,
                       fmt("identical runs %.0f, re-emit identical %.0f, csv rows %.0f", a == b, re == a,
                           static_cast<double>(rows))};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
