// Drives the default network at a slow and a fast frequency and prints the
// distortion of the first sense channel together with its fuzzy label.

#include <mycofreq/mycofreq.hpp>

#include <cstdio>

int main() {
    using namespace mycofreq;

    const auto topology = default_topology();
    const auto partition = fuzzy::default_partition();

    for (double f : {0.002, 0.05}) {
        const double record_s = 8.0 / f;
        const double settle_s = 100.0;

        SimConfig sim;
        sim.duration_s = record_s + settle_s;
        DriveMap drives;
        drives.emplace(Terminal::input1, synthesize(WaveformSpec{WaveKind::sine, f, 10.0}, sim.dt_s, sim.duration_s));

        const auto outputs = simulate(topology, drives, sim);
        const auto record = outputs[0].slice(100, outputs[0].size() - 100);
        const auto report = analyze_harmonics(amplitude_spectrum(record, Window::blackman, 4), f);
        const auto label = fuzzy::classify(partition, 100.0 * report.thd_f).label;

        std::printf("f = %6.3f Hz  V1 = %.4g V  THD = %5.2f %%  (%s)\n", f, report.harmonics_v[0],
                    100.0 * report.thd_f, label.c_str());
    }
}
