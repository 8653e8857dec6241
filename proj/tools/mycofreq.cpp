// Command-line front end: synth, simulate, analyze, classify, mix, sweep,
// ingest and config.
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.

#include <mycofreq/mycofreq.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

using namespace mycofreq;
using namespace mycofreq::pipeline;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::string out_path;
};

// Writes to --out or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw IoError("cannot open output file '" + path + "'");
        }
    }

    std::ostream& stream() { return file_ ? *file_ : std::cout; }

    void finish() {
        stream().flush();
        if (!stream()) throw IoError("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

ExperimentConfig load(const Common& c) {
    auto cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

std::map<std::string, TimeSeries> read_csv_file(const std::string& path, const IngestOptions& opt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file '" + path + "'");
    return ingest_csv(in, opt);
}

void write_json(Output& out, const json& j) {
    out.stream() << j.dump(2) << '\n';
    out.finish();
}

json series_json(const std::vector<std::pair<std::string, TimeSeries>>& series) {
    auto channels = json::object();
    for (const auto& [name, s] : series) {
        channels[name] = std::vector<double>(s.samples().begin(), s.samples().end());
    }
    const auto& first = series.front().second;
    return {{"dt_s", first.dt_s()}, {"t0_s", first.t0_s()}, {"channels", std::move(channels)}};
}

void emit_series(const Common& c, const std::vector<std::pair<std::string, TimeSeries>>& series) {
    Output out(c.out_path);
    if (parse_format(c.format) == Format::csv) {
        write_series_csv(out.stream(), series);
        out.finish();
    } else {
        write_json(out, series_json(series));
    }
}

void add_common(CLI::App* app, Common& c, bool with_config) {
    if (with_config) {
        app->add_option("--config", c.config_path, "Experiment config (JSON)");
        app->add_option("--seed", c.seed, "Override the config seed");
    }
    app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--out", c.out_path, "Output file (default stdout)");
}

int run(int argc, char** argv) {
    CLI::App app{"Frequency discrimination in nonlinear conductive networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // synth
    Common synth_common;
    synth_common.format = "csv";
    std::string kind = "sine";
    WaveformSpec wave;
    double synth_dt = 1.0;
    double synth_duration = 0.0;
    double synth_noise = 0.0;
    auto* synth = app.add_subcommand("synth", "Synthesize a drive waveform");
    synth->add_option("--kind", kind, "sine, square or triangle")->check(CLI::IsMember({"sine", "square", "triangle"}));
    synth->add_option("--freq", wave.frequency_hz, "Frequency in Hz")->required();
    synth->add_option("--vpp", wave.amplitude_vpp, "Peak-to-peak amplitude in V");
    synth->add_option("--phase", wave.phase_rad, "Phase in rad");
    synth->add_option("--offset", wave.dc_offset_v, "DC offset in V");
    synth->add_option("--dt", synth_dt, "Sample interval in s");
    synth->add_option("--duration", synth_duration, "Duration in s (default 8 periods)");
    synth->add_option("--noise-rms", synth_noise, "Band-limited background rms in V");
    synth->add_option("--seed", synth_common.seed, "Noise seed");
    add_common(synth, synth_common, false);

    // simulate
    Common sim_common;
    sim_common.format = "csv";
    std::string sim_path = "path1";
    double sim_freq = 0.001;
    std::optional<double> sim_duration;
    auto* simulate_cmd = app.add_subcommand("simulate", "Drive the network with a sine and record every channel");
    simulate_cmd->add_option("--path", sim_path, "path1, path2 or both")->check(CLI::IsMember({"path1", "path2", "both"}));
    simulate_cmd->add_option("--freq", sim_freq, "Drive frequency in Hz");
    simulate_cmd->add_option("--duration", sim_duration, "Duration in s (default from config)");
    add_common(simulate_cmd, sim_common, true);

    // analyze
    Common an_common;
    std::string an_in;
    double an_f0 = 0.0;
    std::size_t an_k = 10;
    std::size_t an_tol = 2;
    std::size_t an_pad = 1;
    std::string an_window = "blackman";
    std::vector<std::string> an_columns;
    auto* analyze = app.add_subcommand("analyze", "Harmonic report of a recording");
    analyze->add_option("input", an_in, "Recording CSV")->required();
    analyze->add_option("--f0", an_f0, "Fundamental in Hz")->required();
    analyze->add_option("--k", an_k, "Number of harmonics");
    analyze->add_option("--tol-bins", an_tol, "Peak search half-width in bins");
    analyze->add_option("--pad", an_pad, "Zero-padding factor");
    analyze->add_option("--window", an_window)->check(CLI::IsMember({"blackman", "rectangular"}));
    analyze->add_option("--column", an_columns, "Channels to analyse (default all)");
    add_common(analyze, an_common, false);

    // classify
    Common cl_common;
    std::optional<double> cl_value;
    std::string cl_report;
    auto* classify_cmd = app.add_subcommand("classify", "Fuzzy label for a THD value (percent) or harmonic report");
    auto* value_opt = classify_cmd->add_option("value", cl_value, "THD in percent");
    auto* report_opt = classify_cmd->add_option("--report", cl_report, "Harmonic report JSON from analyze");
    value_opt->excludes(report_opt);
    add_common(classify_cmd, cl_common, true);

    // mix
    Common mix_common;
    auto* mix = app.add_subcommand("mix", "Two-tone intermodulation experiment");
    add_common(mix, mix_common, true);

    // sweep
    Common sw_common;
    unsigned sw_threads = 0;
    bool sw_no_timestamp = false;
    auto* sweep = app.add_subcommand("sweep", "Frequency sweep over both paths");
    sweep->add_option("--threads", sw_threads, "Worker threads (0 = all cores)");
    sweep->add_flag("--no-timestamp", sw_no_timestamp, "Omit the timestamp from JSON provenance");
    add_common(sweep, sw_common, true);

    // ingest
    Common in_common;
    in_common.format = "csv";
    std::string in_path;
    IngestOptions in_opt;
    auto* ingest = app.add_subcommand("ingest", "Validate a logger CSV and put it on a uniform grid");
    ingest->add_option("input", in_path, "Logger CSV")->required();
    ingest->add_flag("--resample", in_opt.resample, "Interpolate jittered timestamps onto a uniform grid");
    ingest->add_option("--jitter-tol", in_opt.jitter_tol, "Allowed timestamp jitter as a fraction of dt");
    add_common(ingest, in_common, false);

    // config
    Common cf_common;
    auto* config = app.add_subcommand("config", "Print the effective configuration");
    add_common(config, cf_common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (synth->parsed()) {
        wave.kind = parse_wave_kind(kind);
        const double duration = synth_duration > 0.0 ? synth_duration : 8.0 / wave.frequency_hz;
        auto ts = synthesize(wave, synth_dt, duration);
        if (synth_noise > 0.0) {
            ts = add_endogenous_noise(ts, EndogenousNoiseSpec{0.05, 0.2, synth_noise, synth_common.seed.value_or(0)});
        }
        emit_series(synth_common, {{"signal", ts}});
    } else if (simulate_cmd->parsed()) {
        const auto cfg = load(sim_common);
        SimConfig sim = cfg.sim;
        if (sim_duration) sim.duration_s = *sim_duration;
        const auto drive = synthesize(WaveformSpec{WaveKind::sine, sim_freq, cfg.drive_vpp_v, 0.0, 0.0}, sim.dt_s,
                                      sim.duration_s);
        DriveMap drives;
        if (sim_path != "path2") drives.emplace(Terminal::input1, drive);
        if (sim_path != "path1") drives.emplace(Terminal::input2, drive);
        const auto outputs = simulate(cfg.topology, drives, sim);
        std::vector<std::pair<std::string, TimeSeries>> named;
        for (std::size_t c = 0; c < outputs.size(); ++c) named.emplace_back("ch" + std::to_string(c), outputs[c]);
        emit_series(sim_common, named);
    } else if (analyze->parsed()) {
        const auto series = read_csv_file(an_in, {});
        std::vector<std::pair<std::string, HarmonicReport>> reports;
        for (const auto& [name, ts] : series) {
            if (!an_columns.empty() && std::find(an_columns.begin(), an_columns.end(), name) == an_columns.end()) continue;
            const auto sp = amplitude_spectrum(ts, parse_window(an_window), an_pad);
            reports.emplace_back(name, analyze_harmonics(sp, an_f0, an_k, an_tol));
        }
        if (reports.empty()) throw ValidationError("analyze: no matching columns");
        Output out(an_common.out_path);
        if (parse_format(an_common.format) == Format::csv) {
            write_harmonic_csv(out.stream(), reports, an_k);
            out.finish();
        } else {
            auto j = json::object();
            for (const auto& [name, r] : reports) j[name] = harmonic_report_json(r);
            write_json(out, j);
        }
    } else if (classify_cmd->parsed()) {
        const auto cfg = load(cl_common);
        std::vector<std::pair<std::string, double>> values;
        if (cl_value) {
            values.emplace_back("value", *cl_value);
        } else if (!cl_report.empty()) {
            std::ifstream in(cl_report);
            if (!in) throw IoError("cannot open report '" + cl_report + "'");
            json j;
            try {
                j = json::parse(in);
                for (const auto& [name, r] : j.items()) {
                    values.emplace_back(name, 100.0 * harmonic_report_from_json(r).thd_f);
                }
            } catch (const json::exception& e) {
                throw ValidationError(std::string("classify: ") + e.what());
            }
        } else {
            throw ValidationError("classify: give a THD value or --report");
        }
        Output out(cl_common.out_path);
        if (parse_format(cl_common.format) == Format::csv) {
            out.stream() << "name,thd_percent,label";
            for (const auto& s : cfg.partition.sets()) out.stream() << ',' << s.label;
            out.stream() << '\n';
            for (const auto& [name, v] : values) {
                const auto c = fuzzy::classify(cfg.partition, v);
                out.stream() << name << ',' << format_number(v) << ',' << c.label;
                for (const auto& m : c.memberships) out.stream() << ',' << format_number(m.second);
                out.stream() << '\n';
            }
            out.finish();
        } else {
            auto j = json::object();
            for (const auto& [name, v] : values) {
                j[name] = fuzzy::classify(cfg.partition, v);
                j[name]["thd_percent"] = v;
            }
            write_json(out, j);
        }
    } else if (mix->parsed()) {
        const auto cfg = load(mix_common);
        const auto reports = mixing::run_mixing_experiment(cfg.topology, cfg.mixing, cfg.sim, cfg.noise, cfg.seed);
        Output out(mix_common.out_path);
        if (parse_format(mix_common.format) == Format::csv) {
            write_mix_csv(out.stream(), reports);
            out.finish();
        } else {
            write_json(out, mix_json(reports, Provenance{config_hash(cfg), cfg.seed, std::string(kToolVersion),
                                                         utc_timestamp()}));
        }
    } else if (sweep->parsed()) {
        const auto cfg = load(sw_common);
        const auto result = run_sweep(cfg, sw_threads);
        Output out(sw_common.out_path);
        if (parse_format(sw_common.format) == Format::csv) {
            write_sweep_csv(out.stream(), result);
            out.finish();
        } else {
            Provenance prov{result.config_hash, result.seed, std::string(kToolVersion),
                            sw_no_timestamp ? std::string{} : utc_timestamp()};
            write_json(out, sweep_json(result, prov));
        }
    } else if (ingest->parsed()) {
        const auto series = read_csv_file(in_path, in_opt);
        emit_series(in_common, {series.begin(), series.end()});
    } else if (config->parsed()) {
        const auto cfg = load(cf_common);
        Output out(cf_common.out_path);
        write_json(out, json(cfg));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
