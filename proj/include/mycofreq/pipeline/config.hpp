#pragma once

/*! \file
 *  \brief Experiment configuration and its JSON form.
 *
 *  Every field has a default, so a config file only needs the keys it
 *  overrides. Unknown keys are rejected to catch typos early.
 */

#include "../errors.hpp"
#include "../fuzzy.hpp"
#include "../mixing.hpp"
#include "../netsim.hpp"
#include "../signal.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mycofreq::pipeline {

inline constexpr std::string_view kToolVersion = "0.1.0";

using nlohmann::json;

enum class Path { path1, path2 };

inline std::string_view to_string(Path p) { return p == Path::path1 ? "path1" : "path2"; }

inline Path parse_path(std::string_view s) {
    if (s == "path1") return Path::path1;
    if (s == "path2") return Path::path2;
    throw ValidationError("unknown path '" + std::string(s) + "' (expected path1 or path2)");
}

inline Terminal terminal_of(Path p) { return p == Path::path1 ? Terminal::input1 : Terminal::input2; }

// 1-10 mHz in 1 mHz steps, then 20-100 mHz in 10 mHz steps.
inline std::vector<double> default_sweep() {
    std::vector<double> f;
    for (int k = 1; k <= 10; ++k) f.push_back(k / 1000.0);
    for (int k = 2; k <= 10; ++k) f.push_back(k / 100.0);
    return f;
}

struct AnalysisConfig {
    std::size_t k_max = 10;
    std::size_t tol_bins = 2;
    std::size_t pad_factor = 4;
    double ref_freq_hz = 0.01;
    std::vector<double> exclusions;
    bool normalize = true;
    // Discrimination boundary on the frequency axis.
    double threshold_freq_hz = 0.01;

    bool operator==(const AnalysisConfig&) const = default;
};

struct ExperimentConfig {
    std::vector<double> sweep_hz = default_sweep();
    double drive_vpp_v = 10.0;
    std::vector<Path> paths = {Path::path1, Path::path2};
    NetworkTopology topology = default_topology();
    SimConfig sim;
    double periods_per_record = 96.0;
    // Warm-up simulated before each record (rounded up to whole periods).
    double settle_s = 100.0;
    AnalysisConfig analysis;
    fuzzy::FuzzyPartition partition = fuzzy::default_partition();
    EndogenousNoiseSpec noise{0.05, 0.2, 0.5e-3, 0};
    mixing::MixingConfig mixing;
    std::uint64_t seed = 42;

    void validate() const {
        detail::require(!sweep_hz.empty(), "config: sweep is empty");
        for (std::size_t i = 0; i < sweep_hz.size(); ++i) {
            detail::require(sweep_hz[i] > 0.0, "config: sweep frequencies must be positive");
            if (i > 0) {
                detail::require(sweep_hz[i] > sweep_hz[i - 1], "config: sweep must be strictly increasing");
            }
            detail::require(sweep_hz[i] < 0.5 / sim.dt_s, "config: sweep frequency above Nyquist");
        }
        detail::require(drive_vpp_v >= 0.0, "config: drive amplitude must be nonnegative");
        detail::require(!paths.empty(), "config: no paths selected");
        detail::require(periods_per_record >= 8.0, "config: record must span at least 8 periods");
        detail::require(settle_s >= 0.0, "config: settle time must be nonnegative");
        detail::require(analysis.k_max >= 2, "config: k_max must be at least 2");
        detail::require(analysis.pad_factor >= 1, "config: pad_factor must be at least 1");
        detail::require(analysis.threshold_freq_hz > 0.0, "config: threshold frequency must be positive");
        if (analysis.normalize) {
            bool found = false;
            for (double f : sweep_hz) found = found || detail::same_frequency(f, analysis.ref_freq_hz);
            detail::require(found, "config: reference frequency is not part of the sweep");
        }
        topology.validate();
        sim.validate();
        mixing.validate();
        detail::require(noise.rms_v >= 0.0, "config: noise rms must be nonnegative");
        detail::require(noise.band_low_hz > 0.0 && noise.band_low_hz < noise.band_high_hz,
                        "config: noise band must satisfy 0 < low < high");
    }
};

namespace jsonio {

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    mycofreq::detail::require(j.is_object(), std::string(where) + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        mycofreq::detail::require(ok, std::string(where) + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
    if (j.contains(key)) {
        target = j.at(key).get<T>();
    }
}

}  // namespace jsonio

}  // namespace mycofreq::pipeline

// JSON converters live in the namespaces of the types they convert.

namespace mycofreq {

inline void to_json(nlohmann::json& j, const DualTransportParams& p) {
    j = {{"g_fast_S", p.g_fast_S},         {"g_slow_S", p.g_slow_S},           {"tau_s", p.tau_s},
         {"alpha2_per_V", p.alpha2_per_V}, {"alpha3_per_V2", p.alpha3_per_V2}, {"v_half_V", p.v_half_V}};
}

inline void from_json(const nlohmann::json& j, DualTransportParams& p) {
    pipeline::jsonio::check_keys(j, {"g_fast_S", "g_slow_S", "tau_s", "alpha2_per_V", "alpha3_per_V2", "v_half_V"},
                                 "edge params");
    pipeline::jsonio::read_if(j, "g_fast_S", p.g_fast_S);
    pipeline::jsonio::read_if(j, "g_slow_S", p.g_slow_S);
    pipeline::jsonio::read_if(j, "tau_s", p.tau_s);
    pipeline::jsonio::read_if(j, "alpha2_per_V", p.alpha2_per_V);
    pipeline::jsonio::read_if(j, "alpha3_per_V2", p.alpha3_per_V2);
    pipeline::jsonio::read_if(j, "v_half_V", p.v_half_V);
}

inline void to_json(nlohmann::json& j, const NetworkTopology& t) {
    j = nlohmann::json::object();
    j["node_count"] = t.node_count;
    j["terminals"] = {{"input1", t.terminals.input1}, {"input2", t.terminals.input2}, {"ground", t.terminals.ground}};
    auto edges = nlohmann::json::array();
    for (const auto& e : t.edges) {
        edges.push_back({{"a", e.node_a}, {"b", e.node_b}, {"params", e.params}});
    }
    j["edges"] = std::move(edges);
    auto channels = nlohmann::json::array();
    for (const auto& c : t.channels) {
        channels.push_back({{"positive", c.positive}, {"negative", c.negative}});
    }
    j["channels"] = std::move(channels);
}

inline void from_json(const nlohmann::json& j, NetworkTopology& t) {
    pipeline::jsonio::check_keys(j, {"node_count", "terminals", "edges", "channels"}, "topology");
    pipeline::jsonio::read_if(j, "node_count", t.node_count);
    if (j.contains("terminals")) {
        const auto& term = j.at("terminals");
        pipeline::jsonio::check_keys(term, {"input1", "input2", "ground"}, "topology.terminals");
        pipeline::jsonio::read_if(term, "input1", t.terminals.input1);
        pipeline::jsonio::read_if(term, "input2", t.terminals.input2);
        pipeline::jsonio::read_if(term, "ground", t.terminals.ground);
    }
    if (j.contains("edges")) {
        t.edges.clear();
        for (const auto& e : j.at("edges")) {
            pipeline::jsonio::check_keys(e, {"a", "b", "params"}, "topology.edges[]");
            Edge edge;
            edge.node_a = e.at("a").get<std::size_t>();
            edge.node_b = e.at("b").get<std::size_t>();
            pipeline::jsonio::read_if(e, "params", edge.params);
            t.edges.push_back(edge);
        }
    }
    if (j.contains("channels")) {
        t.channels.clear();
        for (const auto& c : j.at("channels")) {
            pipeline::jsonio::check_keys(c, {"positive", "negative"}, "topology.channels[]");
            t.channels.push_back(Channel{c.at("positive").get<std::size_t>(), c.at("negative").get<std::size_t>()});
        }
    }
}

inline void to_json(nlohmann::json& j, const SimConfig& c) {
    j = {{"dt_s", c.dt_s},
         {"duration_s", c.duration_s},
         {"newton_tol_V", c.newton_tol_V},
         {"newton_max_iter", c.newton_max_iter},
         {"w_initial", c.w_initial},
         {"freeze_state", c.freeze_state}};
}

inline void from_json(const nlohmann::json& j, SimConfig& c) {
    pipeline::jsonio::check_keys(j, {"dt_s", "duration_s", "newton_tol_V", "newton_max_iter", "w_initial", "freeze_state"},
                                 "sim");
    pipeline::jsonio::read_if(j, "dt_s", c.dt_s);
    pipeline::jsonio::read_if(j, "duration_s", c.duration_s);
    pipeline::jsonio::read_if(j, "newton_tol_V", c.newton_tol_V);
    pipeline::jsonio::read_if(j, "newton_max_iter", c.newton_max_iter);
    pipeline::jsonio::read_if(j, "w_initial", c.w_initial);
    pipeline::jsonio::read_if(j, "freeze_state", c.freeze_state);
}

inline void to_json(nlohmann::json& j, const EndogenousNoiseSpec& n) {
    j = {{"band_low_hz", n.band_low_hz}, {"band_high_hz", n.band_high_hz}, {"rms_v", n.rms_v}};
}

inline void from_json(const nlohmann::json& j, EndogenousNoiseSpec& n) {
    pipeline::jsonio::check_keys(j, {"band_low_hz", "band_high_hz", "rms_v"}, "noise");
    pipeline::jsonio::read_if(j, "band_low_hz", n.band_low_hz);
    pipeline::jsonio::read_if(j, "band_high_hz", n.band_high_hz);
    pipeline::jsonio::read_if(j, "rms_v", n.rms_v);
}

}  // namespace mycofreq

namespace mycofreq::fuzzy {

inline void to_json(nlohmann::json& j, const FuzzySet& s) {
    if (const auto* g = std::get_if<Gaussian>(&s.fn)) {
        j = {{"label", s.label}, {"variant", "gaussian"}, {"center", g->center}, {"sigma", g->sigma}};
    } else {
        const auto& sig = std::get<Sigmoid>(s.fn);
        j = {{"label", s.label}, {"variant", "sigmoid"}, {"midpoint", sig.midpoint}, {"slope", sig.slope}};
    }
}

inline FuzzySet fuzzy_set_from_json(const nlohmann::json& j) {
    const auto variant = j.at("variant").get<std::string>();
    FuzzySet s;
    s.label = j.at("label").get<std::string>();
    if (variant == "gaussian") {
        pipeline::jsonio::check_keys(j, {"label", "variant", "center", "sigma"}, "fuzzy set");
        s.fn = Gaussian{j.at("center").get<double>(), j.at("sigma").get<double>()};
    } else if (variant == "sigmoid") {
        pipeline::jsonio::check_keys(j, {"label", "variant", "midpoint", "slope"}, "fuzzy set");
        s.fn = Sigmoid{j.at("midpoint").get<double>(), j.at("slope").get<double>()};
    } else {
        throw ValidationError("fuzzy set: unknown variant '" + variant + "'");
    }
    return s;
}

inline void to_json(nlohmann::json& j, const FuzzyPartition& p) {
    j = {{"domain", {p.domain_lo(), p.domain_hi()}}, {"sets", p.sets()}};
}

inline FuzzyPartition partition_from_json(const nlohmann::json& j) {
    pipeline::jsonio::check_keys(j, {"domain", "sets"}, "partition");
    double lo = 0.0;
    double hi = 50.0;
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        mycofreq::detail::require(d.is_array() && d.size() == 2, "partition: domain must be [lo, hi]");
        lo = d[0].get<double>();
        hi = d[1].get<double>();
    }
    std::vector<FuzzySet> sets;
    for (const auto& s : j.at("sets")) sets.push_back(fuzzy_set_from_json(s));
    return FuzzyPartition(std::move(sets), lo, hi);
}

inline void to_json(nlohmann::json& j, const Classification& c) {
    auto m = nlohmann::json::array();
    for (const auto& [label, value] : c.memberships) m.push_back({{"label", label}, {"membership", value}});
    j = {{"label", c.label}, {"index", c.index}, {"memberships", std::move(m)}};
}

inline void from_json(const nlohmann::json& j, Classification& c) {
    c.label = j.at("label").get<std::string>();
    c.index = j.at("index").get<std::size_t>();
    c.memberships.clear();
    for (const auto& m : j.at("memberships")) {
        c.memberships.emplace_back(m.at("label").get<std::string>(), m.at("membership").get<double>());
    }
}

}  // namespace mycofreq::fuzzy

namespace mycofreq::mixing {

inline void to_json(nlohmann::json& j, const MixingConfig& c) {
    j = {{"base_f1_hz", c.base_f1_hz},       {"f2_hz", c.f2_hz},
         {"vpp1_v", c.vpp1_v},               {"vpp2_v", c.vpp2_v},
         {"max_order", c.max_order},         {"tol_factor", c.tol_factor},
         {"base_periods", c.base_periods},   {"settle_s", c.settle_s},
         {"pad_factor", c.pad_factor},       {"prominence_factor", c.prominence_factor},
         {"relative_floor", c.relative_floor}};
}

inline void from_json(const nlohmann::json& j, MixingConfig& c) {
    pipeline::jsonio::check_keys(j,
                                 {"base_f1_hz", "f2_hz", "vpp1_v", "vpp2_v", "max_order", "tol_factor", "base_periods",
                                  "settle_s", "pad_factor", "prominence_factor", "relative_floor"},
                                 "mixing");
    pipeline::jsonio::read_if(j, "base_f1_hz", c.base_f1_hz);
    pipeline::jsonio::read_if(j, "f2_hz", c.f2_hz);
    pipeline::jsonio::read_if(j, "vpp1_v", c.vpp1_v);
    pipeline::jsonio::read_if(j, "vpp2_v", c.vpp2_v);
    pipeline::jsonio::read_if(j, "max_order", c.max_order);
    pipeline::jsonio::read_if(j, "tol_factor", c.tol_factor);
    pipeline::jsonio::read_if(j, "base_periods", c.base_periods);
    pipeline::jsonio::read_if(j, "settle_s", c.settle_s);
    pipeline::jsonio::read_if(j, "pad_factor", c.pad_factor);
    pipeline::jsonio::read_if(j, "prominence_factor", c.prominence_factor);
    pipeline::jsonio::read_if(j, "relative_floor", c.relative_floor);
}

}  // namespace mycofreq::mixing

namespace mycofreq::pipeline {

inline void to_json(json& j, const AnalysisConfig& a) {
    j = {{"k_max", a.k_max},
         {"tol_bins", a.tol_bins},
         {"pad_factor", a.pad_factor},
         {"ref_freq_hz", a.ref_freq_hz},
         {"exclusions", a.exclusions},
         {"normalize", a.normalize},
         {"threshold_freq_hz", a.threshold_freq_hz}};
}

inline void from_json(const json& j, AnalysisConfig& a) {
    jsonio::check_keys(j, {"k_max", "tol_bins", "pad_factor", "ref_freq_hz", "exclusions", "normalize", "threshold_freq_hz"},
                       "analysis");
    jsonio::read_if(j, "k_max", a.k_max);
    jsonio::read_if(j, "tol_bins", a.tol_bins);
    jsonio::read_if(j, "pad_factor", a.pad_factor);
    jsonio::read_if(j, "ref_freq_hz", a.ref_freq_hz);
    jsonio::read_if(j, "exclusions", a.exclusions);
    jsonio::read_if(j, "normalize", a.normalize);
    jsonio::read_if(j, "threshold_freq_hz", a.threshold_freq_hz);
}

inline void to_json(json& j, const ExperimentConfig& c) {
    auto paths = json::array();
    for (auto p : c.paths) paths.push_back(to_string(p));
    j = json::object();
    j["sweep_hz"] = c.sweep_hz;
    j["drive_vpp_v"] = c.drive_vpp_v;
    j["paths"] = std::move(paths);
    j["topology"] = c.topology;
    j["sim"] = c.sim;
    j["periods_per_record"] = c.periods_per_record;
    j["settle_s"] = c.settle_s;
    j["analysis"] = c.analysis;
    j["partition"] = c.partition;
    j["noise"] = c.noise;
    j["mixing"] = c.mixing;
    j["seed"] = c.seed;
}

inline ExperimentConfig config_from_json(const json& j) {
    jsonio::check_keys(j,
                       {"sweep_hz", "drive_vpp_v", "paths", "topology", "sim", "periods_per_record", "settle_s",
                        "analysis", "partition", "noise", "mixing", "seed"},
                       "config");
    ExperimentConfig c;
    try {
        jsonio::read_if(j, "sweep_hz", c.sweep_hz);
        jsonio::read_if(j, "drive_vpp_v", c.drive_vpp_v);
        if (j.contains("paths")) {
            c.paths.clear();
            for (const auto& p : j.at("paths")) c.paths.push_back(parse_path(p.get<std::string>()));
        }
        if (j.contains("topology")) {
            // Partial topologies override the default one field by field.
            from_json(j.at("topology"), c.topology);
        }
        if (j.contains("sim")) from_json(j.at("sim"), c.sim);
        jsonio::read_if(j, "periods_per_record", c.periods_per_record);
        jsonio::read_if(j, "settle_s", c.settle_s);
        if (j.contains("analysis")) from_json(j.at("analysis"), c.analysis);
        if (j.contains("partition")) c.partition = fuzzy::partition_from_json(j.at("partition"));
        if (j.contains("noise")) from_json(j.at("noise"), c.noise);
        if (j.contains("mixing")) mixing::from_json(j.at("mixing"), c.mixing);
        jsonio::read_if(j, "seed", c.seed);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string text = json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace mycofreq::pipeline
