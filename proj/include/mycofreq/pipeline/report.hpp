#pragma once

// JSON and CSV emission of sweep, mixing and harmonic results, plus the
// inverse JSON readers used for round trips.

#include "../errors.hpp"
#include "../mixing.hpp"
#include "../signal.hpp"
#include "../spectral.hpp"
#include "config.hpp"
#include "sweep.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mycofreq::pipeline {

enum class Format { csv, json };

inline Format parse_format(std::string_view s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ValidationError("unknown format '" + std::string(s) + "' (expected csv or json)");
}

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version{kToolVersion};
    std::string timestamp;  // ISO 8601 UTC; empty to omit

    bool operator==(const Provenance&) const = default;
};

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline void to_json(json& j, const Provenance& p) {
    j = {{"config_hash", p.config_hash}, {"seed", p.seed}, {"tool_version", p.tool_version}};
    if (!p.timestamp.empty()) j["timestamp"] = p.timestamp;
}

inline void from_json(const json& j, Provenance& p) {
    p.config_hash = j.at("config_hash").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.tool_version = j.at("tool_version").get<std::string>();
    p.timestamp = j.value("timestamp", std::string{});
}

namespace jsonio {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> read_optional(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace jsonio

inline json harmonic_report_json(const HarmonicReport& r) {
    return {{"f0_hz", r.f0_hz},
            {"harmonics_v", r.harmonics_v},
            {"thd_f", r.thd_f},
            {"thd_r", r.thd_r},
            {"ratio_2_3", jsonio::optional_number(r.ratio_2_3)}};
}

inline HarmonicReport harmonic_report_from_json(const json& j) {
    HarmonicReport r;
    r.f0_hz = j.at("f0_hz").get<double>();
    r.harmonics_v = j.at("harmonics_v").get<std::vector<double>>();
    r.thd_f = j.at("thd_f").get<double>();
    r.thd_r = j.at("thd_r").get<double>();
    r.ratio_2_3 = jsonio::read_optional(j, "ratio_2_3");
    return r;
}

inline json sweep_json(const SweepResult& r, const Provenance& prov) {
    auto points = json::array();
    for (const auto& p : r.points) {
        json jp = harmonic_report_json(p.report);
        jp.erase("f0_hz");
        jp["f_hz"] = p.f_hz;
        jp["path"] = to_string(p.path);
        jp["channel"] = p.channel;
        jp["normalized_ratio"] = jsonio::optional_number(p.normalized_ratio);
        jp["classification"] = p.classification;
        jp["side"] = fuzzy::to_string(p.side);
        points.push_back(std::move(jp));
    }
    return {{"provenance", prov}, {"k_max", r.k_max}, {"points", std::move(points)}};
}

inline SweepResult sweep_from_json(const json& j) {
    try {
        SweepResult r;
        const auto prov = j.at("provenance").get<Provenance>();
        r.config_hash = prov.config_hash;
        r.seed = prov.seed;
        r.k_max = j.at("k_max").get<std::size_t>();
        for (const auto& jp : j.at("points")) {
            SweepPoint p;
            p.f_hz = jp.at("f_hz").get<double>();
            p.path = parse_path(jp.at("path").get<std::string>());
            p.channel = jp.at("channel").get<std::size_t>();
            p.report.f0_hz = p.f_hz;
            p.report.harmonics_v = jp.at("harmonics_v").get<std::vector<double>>();
            p.report.thd_f = jp.at("thd_f").get<double>();
            p.report.thd_r = jp.at("thd_r").get<double>();
            p.report.ratio_2_3 = jsonio::read_optional(jp, "ratio_2_3");
            p.normalized_ratio = jsonio::read_optional(jp, "normalized_ratio");
            p.classification = jp.at("classification").get<fuzzy::Classification>();
            p.side = fuzzy::parse_side(jp.at("side").get<std::string>());
            r.points.push_back(std::move(p));
        }
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("sweep report: ") + e.what());
    }
}

/// One row per (frequency, path, channel). Harmonics beyond Nyquist and
/// undefined ratios are left blank.
inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
    out << "f_hz,path,channel";
    for (std::size_t k = 1; k <= r.k_max; ++k) out << ",V" << k;
    out << ",thd_f,thd_r,ratio_2_3,normalized_ratio,label\n";
    for (const auto& p : r.points) {
        out << format_number(p.f_hz) << ',' << to_string(p.path) << ',' << p.channel;
        for (std::size_t k = 0; k < r.k_max; ++k) {
            out << ',';
            if (k < p.report.harmonics_v.size()) out << format_number(p.report.harmonics_v[k]);
        }
        out << ',' << format_number(p.report.thd_f) << ',' << format_number(p.report.thd_r) << ',';
        if (p.report.ratio_2_3) out << format_number(*p.report.ratio_2_3);
        out << ',';
        if (p.normalized_ratio) out << format_number(*p.normalized_ratio);
        out << ',' << p.classification.label << '\n';
    }
}

inline json product_json(const mixing::IntermodProduct& p) {
    return {{"m", p.m}, {"n", p.n}, {"sign", mixing::to_string(p.sign)}, {"freq_hz", p.freq_hz}};
}

inline mixing::IntermodProduct product_from_json(const json& j) {
    return {j.at("m").get<int>(), j.at("n").get<int>(), mixing::parse_sign(j.at("sign").get<std::string>()),
            j.at("freq_hz").get<double>()};
}

inline json peak_json(const Peak& p) {
    return {{"freq_hz", p.freq_hz}, {"amplitude_v", p.amplitude_v}, {"prominence_v", p.prominence_v}};
}

inline json mix_json(const std::map<double, mixing::MixReport>& reports, const Provenance& prov) {
    auto runs = json::array();
    for (const auto& [f2, r] : reports) {
        auto predicted = json::array();
        for (const auto& p : r.predicted) predicted.push_back(product_json(p));
        auto channels = json::array();
        for (const auto& c : r.channels) {
            auto matched = json::array();
            for (const auto& m : c.matched) {
                auto jm = product_json(m.product);
                jm["observed_freq_hz"] = m.observed_freq_hz;
                jm["amplitude_v"] = m.amplitude_v;
                matched.push_back(std::move(jm));
            }
            auto unmatched = json::array();
            for (const auto& p : c.unmatched_peaks.peaks) unmatched.push_back(peak_json(p));
            channels.push_back({{"channel", c.channel},
                                {"median_amplitude_v", c.median_amplitude_v},
                                {"detection_threshold_v", c.detection_threshold_v},
                                {"matched", std::move(matched)},
                                {"unmatched_peaks", std::move(unmatched)}});
        }
        runs.push_back({{"f1_hz", r.f1_hz},
                        {"f2_hz", r.f2_hz},
                        {"df_hz", r.df_hz},
                        {"tol_hz", r.tol_hz},
                        {"predicted", std::move(predicted)},
                        {"channels", std::move(channels)}});
    }
    return {{"provenance", prov}, {"runs", std::move(runs)}};
}

inline std::map<double, mixing::MixReport> mix_from_json(const json& j) {
    try {
        std::map<double, mixing::MixReport> out;
        for (const auto& jr : j.at("runs")) {
            mixing::MixReport r;
            r.f1_hz = jr.at("f1_hz").get<double>();
            r.f2_hz = jr.at("f2_hz").get<double>();
            r.df_hz = jr.at("df_hz").get<double>();
            r.tol_hz = jr.at("tol_hz").get<double>();
            for (const auto& p : jr.at("predicted")) r.predicted.push_back(product_from_json(p));
            for (const auto& jc : jr.at("channels")) {
                mixing::ChannelMix c;
                c.channel = jc.at("channel").get<std::size_t>();
                c.median_amplitude_v = jc.at("median_amplitude_v").get<double>();
                c.detection_threshold_v = jc.at("detection_threshold_v").get<double>();
                for (const auto& jm : jc.at("matched")) {
                    c.matched.push_back({product_from_json(jm), jm.at("observed_freq_hz").get<double>(),
                                         jm.at("amplitude_v").get<double>()});
                }
                for (const auto& jp : jc.at("unmatched_peaks")) {
                    c.unmatched_peaks.peaks.push_back({jp.at("freq_hz").get<double>(), jp.at("amplitude_v").get<double>(),
                                                       jp.at("prominence_v").get<double>()});
                }
                r.channels.push_back(std::move(c));
            }
            out.emplace(r.f2_hz, std::move(r));
        }
        return out;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("mix report: ") + e.what());
    }
}

// One row per matched product.
inline void write_mix_csv(std::ostream& out, const std::map<double, mixing::MixReport>& reports) {
    out << "f1_hz,f2_hz,channel,m,n,sign,order,product_hz,observed_hz,amplitude_v,threshold_v\n";
    for (const auto& [f2, r] : reports) {
        for (const auto& c : r.channels) {
            for (const auto& m : c.matched) {
                out << format_number(r.f1_hz) << ',' << format_number(r.f2_hz) << ',' << c.channel << ','
                    << m.product.m << ',' << m.product.n << ',' << mixing::to_string(m.product.sign) << ','
                    << m.product.order() << ',' << format_number(m.product.freq_hz) << ','
                    << format_number(m.observed_freq_hz) << ',' << format_number(m.amplitude_v) << ','
                    << format_number(c.detection_threshold_v) << '\n';
            }
        }
    }
}

inline void write_harmonic_csv(std::ostream& out, const std::vector<std::pair<std::string, HarmonicReport>>& reports,
                               std::size_t k_max) {
    out << "channel,f0_hz";
    for (std::size_t k = 1; k <= k_max; ++k) out << ",V" << k;
    out << ",thd_f,thd_r,ratio_2_3\n";
    for (const auto& [name, r] : reports) {
        out << name << ',' << format_number(r.f0_hz);
        for (std::size_t k = 0; k < k_max; ++k) {
            out << ',';
            if (k < r.harmonics_v.size()) out << format_number(r.harmonics_v[k]);
        }
        out << ',' << format_number(r.thd_f) << ',' << format_number(r.thd_r) << ',';
        if (r.ratio_2_3) out << format_number(*r.ratio_2_3);
        out << '\n';
    }
}

/// Named series on a common grid, time in the first column.
inline void write_series_csv(std::ostream& out, const std::vector<std::pair<std::string, TimeSeries>>& series) {
    detail::require(!series.empty(), "write series: nothing to write");
    const auto& first = series.front().second;
    for (const auto& [name, s] : series) {
        detail::require(s.same_grid(first), "write series: series '" + name + "' is on a different grid");
    }
    out << "time_s";
    for (const auto& [name, s] : series) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < first.size(); ++i) {
        out << format_number(first.time_at(i));
        for (const auto& [name, s] : series) out << ',' << format_number(s[i]);
        out << '\n';
    }
}

}  // namespace mycofreq::pipeline
