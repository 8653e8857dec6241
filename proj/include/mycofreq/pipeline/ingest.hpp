#pragma once

// Logger CSV ingestion. The first column is time in seconds, every further
// column is a named channel in volts, and the header row is mandatory.

#include "../errors.hpp"
#include "../signal.hpp"
#include "../spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mycofreq::pipeline {

struct IngestOptions {
    bool resample = false;
    double jitter_tol = 0.01;  // fraction of dt
};

namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty() && std::isfinite(out);
}

}  // namespace csv

/// Reads a logger CSV into one TimeSeries per channel column.
///
/// dt and the grid origin come from a least-squares fit of time against row
/// index. A timestamp further than jitter_tol * dt from its grid position is
/// an error unless `resample` is set, in which case every channel is linearly
/// interpolated onto the uniform grid.
inline std::map<std::string, TimeSeries> ingest_csv(std::istream& in, const IngestOptions& opt = {}) {
    detail::require(opt.jitter_tol > 0.0, "ingest: jitter tolerance must be positive");

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> names;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        double probe = 0.0;
        if (csv::parse_double(fields[0], probe)) {
            throw ValidationError("ingest: line " + std::to_string(line_no) + ": header row missing");
        }
        if (fields.size() < 2) {
            throw ValidationError("ingest: line " + std::to_string(line_no) + ": header needs a time column and at least one channel");
        }
        std::set<std::string> seen;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            std::string name(fields[i]);
            if (name.size() >= 2 && name.front() == '"' && name.back() == '"') name = name.substr(1, name.size() - 2);
            if (name.empty() || !seen.insert(name).second) {
                throw ValidationError("ingest: line " + std::to_string(line_no) + ": empty or duplicate channel name");
            }
            names.push_back(std::move(name));
        }
        break;
    }
    if (names.empty()) {
        throw ValidationError("ingest: input is empty");
    }

    std::vector<double> time;
    std::vector<std::vector<double>> columns(names.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto fields = csv::split(line);
        if (fields.size() != names.size() + 1) {
            throw ValidationError("ingest: line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(names.size() + 1) + " fields, found " + std::to_string(fields.size()));
        }
        double t = 0.0;
        if (!csv::parse_double(fields[0], t)) {
            throw ValidationError("ingest: line " + std::to_string(line_no) + ": malformed time value");
        }
        if (!time.empty() && !(t > time.back())) {
            throw ValidationError("ingest: line " + std::to_string(line_no) + ": time is not strictly increasing");
        }
        time.push_back(t);
        for (std::size_t c = 0; c < names.size(); ++c) {
            double v = 0.0;
            if (!csv::parse_double(fields[c + 1], v)) {
                throw ValidationError("ingest: line " + std::to_string(line_no) + ": malformed value in column '" +
                                      names[c] + "'");
            }
            columns[c].push_back(v);
        }
    }
    if (time.size() < 2) {
        throw ValidationError("ingest: at least two data rows required");
    }

    // Least-squares line through (index, time).
    const double count = static_cast<double>(time.size());
    const double i_mean = (count - 1.0) / 2.0;
    const double t_mean = std::accumulate(time.begin(), time.end(), 0.0) / count;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
        const double di = static_cast<double>(i) - i_mean;
        sxy += di * (time[i] - t_mean);
        sxx += di * di;
    }
    const double dt = sxy / sxx;
    const double grid0 = t_mean - dt * i_mean;

    double worst = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
        worst = std::max(worst, std::abs(time[i] - (grid0 + static_cast<double>(i) * dt)));
    }
    const bool jittered = worst > opt.jitter_tol * dt;

    std::map<std::string, TimeSeries> out;
    if (!jittered) {
        for (std::size_t c = 0; c < names.size(); ++c) {
            out.emplace(names[c], TimeSeries(dt, std::move(columns[c]), time.front()));
        }
        return out;
    }
    if (!opt.resample) {
        throw ValidationError("ingest: timestamp jitter of " + std::to_string(worst / dt * 100.0) +
                              "% of dt exceeds tolerance (use resampling)");
    }

    const double t0 = grid0 + std::ceil(std::max(0.0, time.front() - grid0) / dt) * dt;
    const auto n = static_cast<std::size_t>(std::floor((time.back() - t0) / dt * (1.0 + 1e-12))) + 1;
    for (std::size_t c = 0; c < names.size(); ++c) {
        std::vector<double> uniform(n);
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = t0 + static_cast<double>(i) * dt;
            while (j + 2 < time.size() && time[j + 1] <= t) ++j;
            const double span = time[j + 1] - time[j];
            const double a = std::clamp((t - time[j]) / span, 0.0, 1.0);
            uniform[i] = columns[c][j] + a * (columns[c][j + 1] - columns[c][j]);
        }
        out.emplace(names[c], TimeSeries(dt, std::move(uniform), t0));
    }
    return out;
}

}  // namespace mycofreq::pipeline
