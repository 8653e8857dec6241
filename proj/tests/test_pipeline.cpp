#include <mycofreq/mycofreq.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace mycofreq;
using namespace mycofreq::pipeline;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.sweep_hz = {0.005, 0.01, 0.05};
    return cfg;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    const ExperimentConfig cfg;
    EXPECT_EQ(cfg.sweep_hz.size(), 19u);
    const auto back = config_from_json(json(cfg));
    EXPECT_EQ(json(back), json(cfg));
    EXPECT_EQ(config_hash(back), config_hash(cfg));
}

TEST(Config, EveryFieldRoundTrips) {
    ExperimentConfig cfg;
    cfg.sweep_hz = {0.002, 0.004};
    cfg.drive_vpp_v = 4.0;
    cfg.paths = {Path::path2};
    cfg.topology = default_topology(DualTransportParams{1e-7, 2e-5, 30.0, 0.01, 0.02, 3.0});
    cfg.sim.dt_s = 0.5;
    cfg.sim.newton_max_iter = 12;
    cfg.sim.freeze_state = true;
    cfg.periods_per_record = 10;
    cfg.settle_s = 0;
    cfg.analysis.k_max = 6;
    cfg.analysis.ref_freq_hz = 0.004;
    cfg.analysis.exclusions = {0.002};
    cfg.analysis.threshold_freq_hz = 0.003;
    cfg.partition = fuzzy::FuzzyPartition({{"lo", fuzzy::Sigmoid{10, -1}}, {"hi", fuzzy::Gaussian{30, 12}}});
    cfg.noise.rms_v = 0.002;
    cfg.mixing.f2_hz = {0.003};
    cfg.mixing.max_order = 5;
    cfg.seed = 0xfedcba9876543210ULL;

    const auto text = json(cfg).dump();
    const auto back = parse_config(text);
    EXPECT_EQ(back.sweep_hz, cfg.sweep_hz);
    EXPECT_EQ(back.paths, cfg.paths);
    EXPECT_EQ(back.topology, cfg.topology);
    EXPECT_EQ(back.sim, cfg.sim);
    EXPECT_EQ(back.analysis, cfg.analysis);
    EXPECT_EQ(back.partition, cfg.partition);
    EXPECT_EQ(back.mixing, cfg.mixing);
    EXPECT_EQ(back.seed, cfg.seed);
    EXPECT_EQ(json(back).dump(), text);
    EXPECT_NE(config_hash(back), config_hash(ExperimentConfig{}));
}

TEST(Config, PartialFileKeepsDefaults) {
    const auto cfg = parse_config(R"({"seed": 9, "sim": {"dt_s": 1.0}})");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.sweep_hz, default_sweep());
    EXPECT_EQ(cfg.topology, default_topology());
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("{"), ValidationError);
    EXPECT_THROW(parse_config(R"({"sweeep_hz": [0.01]})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"sweep_hz": [0.02, 0.01]})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"sweep_hz": [-0.01, 0.01]})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"sweep_hz": [0.02, 0.03]})"), ValidationError);  // reference missing
    EXPECT_NO_THROW(parse_config(R"({"sweep_hz": [0.02, 0.03], "analysis": {"normalize": false}})"));
    EXPECT_THROW(parse_config(R"({"paths": ["path3"]})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"sim": {"dt_s": "fast"}})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"partition": {"sets": [{"label": "x", "variant": "cone"}]}})"), ValidationError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Ingest, WellFormed) {
    std::istringstream in("time_s,ch1,ch2\n0,1,2\n1,3,4\n2,5,6\n");
    const auto series = ingest_csv(in);
    ASSERT_EQ(series.size(), 2u);
    EXPECT_DOUBLE_EQ(series.at("ch1").dt_s(), 1.0);
    EXPECT_DOUBLE_EQ(series.at("ch2")[2], 6.0);
    EXPECT_EQ(series.at("ch1").size(), 3u);
}

TEST(Ingest, ErrorsNameTheLine) {
    std::istringstream bad("t,a\n0,1\n1,x\n2,3\n");
    try {
        ingest_csv(bad);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    std::istringstream headerless("0,1\n1,2\n");
    EXPECT_THROW(ingest_csv(headerless), ValidationError);
    std::istringstream one_row("t,a\n0,1\n");
    EXPECT_THROW(ingest_csv(one_row), ValidationError);
    std::istringstream backwards("t,a\n0,1\n2,1\n1,1\n");
    EXPECT_THROW(ingest_csv(backwards), ValidationError);
    std::istringstream ragged("t,a,b\n0,1,2\n1,1\n");
    EXPECT_THROW(ingest_csv(ragged), ValidationError);
    std::istringstream empty("");
    EXPECT_THROW(ingest_csv(empty), ValidationError);
}

TEST(Ingest, JitterNeedsResampling) {
    const double dt = 1.0;
    const std::size_t n = 8192;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    const auto signal = [](double t) {
        return std::sin(2 * std::numbers::pi * 0.01 * t) + 0.3 * std::sin(2 * std::numbers::pi * 0.05 * t) +
               0.1 * std::sin(2 * std::numbers::pi * 0.1 * t);
    };
    std::ostringstream jittered;
    std::vector<double> clean(n);
    jittered << "time_s,v\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt + (i == 0 ? 0.0 : jitter(rng) * dt);
        jittered << format_number(t) << ',' << format_number(signal(t)) << '\n';
        clean[i] = signal(static_cast<double>(i) * dt);
    }
    // A grid error of 3% must be rejected without resampling.
    std::ostringstream coarse;
    coarse << "t,v\n0,0\n1,0\n2.03,0\n3,0\n4,0\n";
    std::istringstream coarse_in(coarse.str());
    EXPECT_THROW(ingest_csv(coarse_in), ValidationError);
    std::istringstream coarse_again(coarse.str());
    EXPECT_NO_THROW(ingest_csv(coarse_again, IngestOptions{true, 0.01}));

    std::istringstream in(jittered.str());
    const auto series = ingest_csv(in, IngestOptions{true, 0.01});
    const auto& v = series.at("v");
    EXPECT_NEAR(v.dt_s(), dt, 0.005);
    const TimeSeries reference(dt, clean);
    const auto a = amplitude_spectrum(v, Window::blackman, 8);
    const auto b = amplitude_spectrum(reference, Window::blackman, 8);
    for (double f : {0.01, 0.05, 0.1}) {
        const double got = a.amplitude_near(f, 2);
        const double want = b.amplitude_near(f, 2);
        EXPECT_NEAR(got, want, 0.01 * want) << "f=" << f;
    }
}

TEST(Sweep, SinglePointNormalizesToOne) {
    ExperimentConfig cfg;
    cfg.sweep_hz = {0.01};
    const auto r = run_sweep(cfg);
    ASSERT_EQ(r.points.size(), 4u);
    for (const auto& p : r.points) {
        ASSERT_TRUE(p.normalized_ratio.has_value());
        EXPECT_EQ(*p.normalized_ratio, 1.0);
        EXPECT_EQ(p.side, fuzzy::Side::above);
    }
}

TEST(Sweep, OrderingAndThreadIndependence) {
    const auto cfg = small_config();
    const auto serial = run_sweep(cfg, 1);
    const auto parallel = run_sweep(cfg, 5);
    EXPECT_EQ(serial, parallel);
    ASSERT_EQ(serial.points.size(), 12u);
    for (std::size_t i = 1; i < serial.points.size(); ++i) {
        EXPECT_LT(serial.points[i - 1].key(), serial.points[i].key());
    }
    EXPECT_EQ(serial.config_hash, config_hash(cfg));
    EXPECT_EQ(serial.seed, cfg.seed);
}

TEST(Sweep, ExclusionsDropRatios) {
    auto cfg = small_config();
    cfg.analysis.exclusions = {0.05};
    const auto r = run_sweep(cfg);
    for (const auto& p : r.points) EXPECT_EQ(p.normalized_ratio.has_value(), p.f_hz != 0.05);
}

TEST(Sweep, SlowDrivesDistortMoreAndRatioBelowThreshold) {
    const auto r = run_sweep(ExperimentConfig{});
    double low = 0.0;
    double high = 0.0;
    int n_low = 0;
    int n_high = 0;
    for (const auto& p : r.points) {
        if (p.f_hz <= 0.01 + 1e-12) {
            low += p.report.thd_f;
            ++n_low;
        }
        if (p.f_hz >= 0.02 - 1e-12) {
            high += p.report.thd_f;
            ++n_high;
        }
    }
    EXPECT_GT(low / n_low, high / n_high);
    for (auto path : {Path::path1, Path::path2}) {
        for (std::size_t c = 0; c < 2; ++c) {
            const auto* p = r.find(0.005, path, c);
            ASSERT_NE(p, nullptr);
            EXPECT_EQ(fuzzy::threshold_discriminate(*p->normalized_ratio, 1.0), fuzzy::Side::below);
        }
    }
}

TEST(Sweep, LinearNetworkHasNoDistortion) {
    ExperimentConfig cfg;
    for (auto& e : cfg.topology.edges) e.params = linear_params(e.params.g_fast_S + e.params.g_slow_S * 0.3);
    cfg.noise.rms_v = 0.0;
    cfg.analysis.normalize = false;
    const auto r = run_sweep(cfg);
    for (const auto& p : r.points) EXPECT_LT(p.report.thd_f, 1e-6) << "f=" << p.f_hz;
}

TEST(Sweep, DivergenceIsAnnotated) {
    auto cfg = small_config();
    cfg.sim.newton_max_iter = 1;
    cfg.sim.newton_tol_V = 1e-300;
    try {
        run_sweep(cfg);
        FAIL();
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("f = 0.005 Hz"), std::string::npos) << msg;
        EXPECT_NE(msg.find("path1"), std::string::npos) << msg;
    }
}

TEST(Report, EmptyCsvIsHeaderOnly) {
    SweepResult empty;
    empty.k_max = 3;
    std::ostringstream out;
    write_sweep_csv(out, empty);
    EXPECT_EQ(out.str(), "f_hz,path,channel,V1,V2,V3,thd_f,thd_r,ratio_2_3,normalized_ratio,label\n");
}

TEST(Report, JsonRoundTripAndCsvAgreement) {
    const auto r = run_sweep(small_config());
    const Provenance prov{r.config_hash, r.seed, std::string(kToolVersion), "2020-01-01T00:00:00Z"};
    const auto j = sweep_json(r, prov);
    EXPECT_EQ(j.at("provenance").at("timestamp"), "2020-01-01T00:00:00Z");
    const auto back = sweep_from_json(json::parse(j.dump()));
    EXPECT_EQ(back, r);
    EXPECT_EQ(sweep_json(back, prov).dump(), j.dump());

    std::ostringstream csv;
    write_sweep_csv(csv, r);
    const auto lines = split_lines(csv.str());
    ASSERT_EQ(lines.size(), r.points.size() + 1);
    const auto header = split_fields(lines[0]);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto fields = split_fields(lines[i + 1]);
        ASSERT_EQ(fields.size(), header.size());
        const auto& jp = j.at("points")[i];
        EXPECT_NEAR(std::stod(fields[0]), jp.at("f_hz").get<double>(), 1e-12);
        const auto& hv = jp.at("harmonics_v");
        for (std::size_t k = 0; k < r.k_max; ++k) {
            if (k < hv.size()) {
                EXPECT_NEAR(std::stod(fields[3 + k]), hv[k].get<double>(), 1e-12);
            } else {
                EXPECT_TRUE(fields[3 + k].empty());  // truncated at Nyquist
            }
        }
        EXPECT_NEAR(std::stod(fields[3 + r.k_max]), jp.at("thd_f").get<double>(), 1e-12);
        EXPECT_NEAR(std::stod(fields[4 + r.k_max]), jp.at("thd_r").get<double>(), 1e-12);
        for (auto [col, key] : {std::pair{5u, "ratio_2_3"}, std::pair{6u, "normalized_ratio"}}) {
            if (jp.at(key).is_null()) {
                EXPECT_TRUE(fields[col + r.k_max].empty()) << key;
            } else {
                EXPECT_NEAR(std::stod(fields[col + r.k_max]), jp.at(key).get<double>(), 1e-12) << key;
            }
        }
        EXPECT_EQ(fields[7 + r.k_max], jp.at("classification").at("label").get<std::string>());
    }
}

TEST(Report, MixJsonRoundTrip) {
    mixing::MixingConfig cfg;
    cfg.f2_hz = {0.005};
    const auto reports = mixing::run_mixing_experiment(default_topology(), cfg, SimConfig{});
    const auto j = mix_json(reports, Provenance{"abc", 1, "test", ""});
    EXPECT_EQ(mix_from_json(json::parse(j.dump())), reports);
    std::ostringstream csv;
    write_mix_csv(csv, reports);
    std::size_t matched = 0;
    for (const auto& c : reports.at(0.005).channels) matched += c.matched.size();
    EXPECT_EQ(split_lines(csv.str()).size(), matched + 1);
}

TEST(Report, SeriesCsvReadsBack) {
    const auto ts = synthesize(WaveformSpec{WaveKind::triangle, 0.01, 3.0, 0.1}, 0.5, 300.0);
    std::stringstream io;
    write_series_csv(io, {{"signal", ts}});
    const auto back = ingest_csv(io);
    ASSERT_EQ(back.count("signal"), 1u);
    const auto& s = back.at("signal");
    ASSERT_EQ(s.size(), ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(s[i], ts[i]);
}
