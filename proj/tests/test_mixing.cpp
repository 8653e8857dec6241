#include "oracle.hpp"

#include <mycofreq/mixing.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace mycofreq;
using namespace mycofreq::mixing;

namespace {

std::set<long long> as_set(const std::vector<IntermodProduct>& ps, double quantum) {
    std::set<long long> out;
    for (const auto& p : ps) out.insert(std::llround(p.freq_hz / quantum));
    return out;
}

bool contains(const std::vector<IntermodProduct>& ps, double f) {
    for (const auto& p : ps) {
        if (std::abs(p.freq_hz - f) < 1e-12) return true;
    }
    return false;
}

NetworkTopology linear_topology() {
    auto top = default_topology();
    for (auto& e : top.edges) e.params = linear_params(e.params.g_fast_S + e.params.g_slow_S * 0.5);
    return top;
}

}  // namespace

TEST(Products, SatellitesAroundSecondHarmonic) {
    const auto p5 = predict_products(0.001, 0.005, 3);
    EXPECT_TRUE(contains(p5, 0.009));
    EXPECT_TRUE(contains(p5, 0.011));
    const auto p7 = predict_products(0.001, 0.007, 3);
    EXPECT_TRUE(contains(p7, 0.013));
    EXPECT_TRUE(contains(p7, 0.015));
}

TEST(Products, MatchBruteForceEnumeration) {
    const double q = 1e-7;
    for (auto [f1, f2] : {std::pair{0.001, 0.005}, std::pair{0.001, 0.002}, std::pair{0.003, 0.0071}}) {
        for (int order = 1; order <= 5; ++order) {
            const auto ps = predict_products(f1, f2, order);
            EXPECT_EQ(as_set(ps, q), oracle::mixing_products(f1, f2, order, q));
            EXPECT_EQ(as_set(ps, q), as_set(predict_products(f2, f1, order), q));  // symmetric as a set
            for (std::size_t i = 0; i < ps.size(); ++i) {
                EXPECT_GT(ps[i].freq_hz, 0.0);
                EXPECT_GE(ps[i].order(), 1);
                EXPECT_LE(ps[i].order(), order);
                EXPECT_DOUBLE_EQ(ps[i].freq_hz, ps[i].recompute(f1, f2));
                if (i > 0) {
                    EXPECT_GT(ps[i].freq_hz, ps[i - 1].freq_hz);
                }
            }
        }
    }
}

TEST(Products, CoincidentTonesCollapseToHarmonics) {
    const auto ps = predict_products(0.002, 0.002, 4);
    ASSERT_EQ(ps.size(), 4u);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_NEAR(ps[i].freq_hz, 0.002 * static_cast<double>(i + 1), 1e-15);
        EXPECT_EQ(ps[i].order(), static_cast<int>(i + 1));  // lowest order kept
    }
}

TEST(Products, DedupKeepsLowestOrder) {
    // 2*f1 = f2 : the order-1 reading of f2 wins over 2*f1.
    const auto ps = predict_products(0.001, 0.002, 3);
    for (const auto& p : ps) {
        if (std::abs(p.freq_hz - 0.002) < 1e-12) {
            EXPECT_EQ(p.order(), 1);
            EXPECT_EQ(p.n, 1);
        }
    }
}

TEST(Matching, Basics) {
    const auto products = predict_products(0.001, 0.005, 3);
    const auto empty = match_products(PeakList{}, products, 1e-4);
    EXPECT_TRUE(empty.matched.empty());
    EXPECT_TRUE(empty.unmatched_peaks.empty());

    PeakList exact;
    for (const auto& p : products) exact.peaks.push_back(Peak{p.freq_hz, 1.0, 1.0});
    const auto all = match_products(exact, products, 1e-5);
    EXPECT_EQ(all.matched.size(), products.size());
    EXPECT_TRUE(all.unmatched_peaks.empty());
    for (const auto& m : all.matched) EXPECT_LE(std::abs(m.observed_freq_hz - m.product.freq_hz), 1e-5);

    PeakList stray{{Peak{0.0123, 1.0, 1.0}}};
    EXPECT_EQ(match_products(stray, products, 1e-5).unmatched_peaks.size(), 1u);
    EXPECT_THROW(match_products(stray, products, 0.0), ValidationError);
}

TEST(Matching, EquidistantTieGoesToLowerOrder) {
    const std::vector<IntermodProduct> products{{3, 0, Sign::plus, 0.003}, {1, 0, Sign::plus, 0.001}};
    PeakList p{{Peak{0.002, 1.0, 1.0}}};
    const auto m = match_products(p, products, 0.0015);
    ASSERT_EQ(m.matched.size(), 1u);
    EXPECT_EQ(m.matched[0].product.order(), 1);
}

TEST(Experiment, DefaultRunsKeyedByF2) {
    const auto reports = run_mixing_experiment(default_topology(), MixingConfig{}, SimConfig{});
    ASSERT_EQ(reports.size(), 3u);
    for (double f2 : {0.002, 0.005, 0.007}) {
        ASSERT_EQ(reports.count(f2), 1u);
        const auto& r = reports.at(f2);
        EXPECT_EQ(r.channels.size(), 2u);
        for (const auto& c : r.channels) {
            for (const auto& m : c.matched) {
                EXPECT_LE(std::abs(m.observed_freq_hz - m.product.freq_hz), r.tol_hz);
            }
        }
    }
}

TEST(Experiment, ThirdOrderSatellitesAppear) {
    const auto reports = run_mixing_experiment(default_topology(), MixingConfig{}, SimConfig{});
    for (auto [f2, lo, hi] : {std::tuple{0.005, 0.009, 0.011}, std::tuple{0.007, 0.013, 0.015}}) {
        const auto& r = reports.at(f2);
        for (const auto& c : r.channels) {
            for (double f : {lo, hi}) {
                const auto* m = c.find_match(f, 1e-9);
                ASSERT_NE(m, nullptr) << "f2=" << f2 << " product " << f;
                EXPECT_EQ(m->product.order(), 3);
                EXPECT_EQ(m->product.n, 2);
            }
        }
    }
}

TEST(Experiment, LinearNetworkDoesNotMix) {
    const auto top = linear_topology();
    const auto reports = run_mixing_experiment(top, MixingConfig{}, SimConfig{});
    for (const auto& [f2, r] : reports) {
        for (const auto& c : r.channels) {
            for (const auto& m : c.matched) EXPECT_EQ(m.product.order(), 1) << "f2=" << f2 << " at " << m.product.freq_hz;
        }
    }
}

TEST(Experiment, LinearNetworkSuperposes) {
    const auto top = linear_topology();
    const double duration = 3000.0;
    const auto d1 = synthesize(WaveformSpec{WaveKind::sine, 0.001, 10.0}, 1.0, duration);
    const auto d2 = synthesize(WaveformSpec{WaveKind::sine, 0.005, 10.0}, 1.0, duration);
    const TimeSeries ground(1.0, std::vector<double>(d1.size(), 0.0));
    SimConfig cfg;
    cfg.newton_tol_V = 1e-13;
    const auto both = simulate(top, DriveMap{{Terminal::input1, d1}, {Terminal::input2, d2}}, cfg);
    const auto only1 = simulate(top, DriveMap{{Terminal::input1, d1}, {Terminal::input2, ground}}, cfg);
    const auto only2 = simulate(top, DriveMap{{Terminal::input1, ground}, {Terminal::input2, d2}}, cfg);
    for (std::size_t c = 0; c < both.size(); ++c) {
        const auto sum = superpose(only1[c], only2[c]);
        for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_NEAR(both[c][i], sum[i], 1e-9);
    }
}

TEST(Experiment, NoiseIsSeeded) {
    MixingConfig cfg;
    cfg.f2_hz = {0.005};
    const EndogenousNoiseSpec noise{0.05, 0.2, 0.5e-3, 0};
    const auto a = run_mixing_experiment(default_topology(), cfg, SimConfig{}, noise, 1);
    const auto b = run_mixing_experiment(default_topology(), cfg, SimConfig{}, noise, 1);
    const auto c = run_mixing_experiment(default_topology(), cfg, SimConfig{}, noise, 2);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.at(0.005).channels[0].median_amplitude_v, c.at(0.005).channels[0].median_amplitude_v);
}

TEST(Config, Validation) {
    MixingConfig c;
    c.max_order = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = MixingConfig{};
    c.f2_hz = {0.005, -0.001};
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_THROW(predict_products(0.0, 0.001, 3), ValidationError);
    EXPECT_EQ(parse_sign(to_string(Sign::minus)), Sign::minus);
}
