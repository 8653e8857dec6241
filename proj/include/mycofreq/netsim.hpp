#pragma once

/*! \file
 *  \brief Transient simulation of a nonlinear conductive network with a slow
 *         internal state per edge.
 *
 *  Each edge carries
 *
 *      i = (g_fast + g_slow * w) * (v + alpha2 * v^2 + alpha3 * v^3)
 *      dw/dt = (s(|v| / v_half) - w) / tau,      s(x) = x^2 / (1 + x^2)
 *
 *  with w clamped to [0, 1]. Each time step first solves Kirchhoff current
 *  balance at the free nodes with w frozen (damped Newton), then advances w
 *  by one implicit Euler step at the new edge voltages.
 */

#include "errors.hpp"
#include "signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mycofreq {

struct DualTransportParams {
    double g_fast_S = 0.05e-6;
    double g_slow_S = 100e-6;
    double tau_s = 10.0;
    double alpha2_per_V = 0.02;
    double alpha3_per_V2 = 0.01;
    double v_half_V = 20.0;

    void validate() const {
        detail::require(g_fast_S >= 0.0 && g_slow_S >= 0.0, "edge params: conductances must be nonnegative");
        detail::require(g_fast_S + g_slow_S > 0.0, "edge params: g_fast + g_slow must be positive");
        detail::require(tau_s > 0.0, "edge params: tau must be positive");
        detail::require(v_half_V > 0.0, "edge params: v_half must be positive");
        detail::require(std::isfinite(alpha2_per_V) && std::isfinite(alpha3_per_V2),
                        "edge params: nonlinearity coefficients must be finite");
    }

    bool operator==(const DualTransportParams&) const = default;
};

// Ohmic contact: fast conduction only, no nonlinearity.
inline DualTransportParams linear_params(double conductance_S) {
    return DualTransportParams{conductance_S, 0.0, 1.0, 0.0, 0.0, 1.0};
}

struct EdgeState {
    double w = 0.0;
};

inline double activation(double x) {
    const double x2 = x * x;
    return x2 / (1.0 + x2);
}

inline double edge_current(double v_V, double w, const DualTransportParams& p) {
    return (p.g_fast_S + p.g_slow_S * w) * (v_V + p.alpha2_per_V * v_V * v_V + p.alpha3_per_V2 * v_V * v_V * v_V);
}

// di/dv at fixed w.
inline double edge_conductance(double v_V, double w, const DualTransportParams& p) {
    return (p.g_fast_S + p.g_slow_S * w) * (1.0 + 2.0 * p.alpha2_per_V * v_V + 3.0 * p.alpha3_per_V2 * v_V * v_V);
}

inline double state_target(double v_V, const DualTransportParams& p) {
    return activation(std::abs(v_V) / p.v_half_V);
}

inline double state_derivative(double v_V, double w, const DualTransportParams& p) {
    return (state_target(v_V, p) - w) / p.tau_s;
}

// One implicit Euler step of the relaxation, exact for the linear ODE at fixed v.
inline double advance_state(double w, double v_V, double dt_s, const DualTransportParams& p) {
    const double r = dt_s / p.tau_s;
    return std::clamp((w + r * state_target(v_V, p)) / (1.0 + r), 0.0, 1.0);
}

struct Edge {
    std::size_t node_a = 0;
    std::size_t node_b = 0;
    DualTransportParams params;

    bool operator==(const Edge&) const = default;
};

struct Terminals {
    std::size_t input1 = 1;
    std::size_t input2 = 2;
    std::size_t ground = 0;

    bool operator==(const Terminals&) const = default;
};

// Differential sense pair: reports v(positive) - v(negative).
struct Channel {
    std::size_t positive = 0;
    std::size_t negative = 0;

    bool operator==(const Channel&) const = default;
};

enum class Terminal { input1, input2 };

inline std::string_view to_string(Terminal t) { return t == Terminal::input1 ? "input1" : "input2"; }

struct NetworkTopology {
    std::size_t node_count = 0;
    std::vector<Edge> edges;
    Terminals terminals;
    std::vector<Channel> channels;

    std::size_t node_of(Terminal t) const { return t == Terminal::input1 ? terminals.input1 : terminals.input2; }

    void validate() const {
        detail::require(node_count > 0, "topology: node_count must be positive");
        const auto valid = [this](std::size_t n) { return n < node_count; };
        detail::require(valid(terminals.input1) && valid(terminals.input2) && valid(terminals.ground),
                        "topology: terminal node out of range");
        detail::require(terminals.input1 != terminals.input2 && terminals.input1 != terminals.ground &&
                            terminals.input2 != terminals.ground,
                        "topology: terminal nodes must be distinct");
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto& edge = edges[e];
            detail::require(valid(edge.node_a) && valid(edge.node_b),
                            "topology: edge " + std::to_string(e) + " references an invalid node");
            detail::require(edge.node_a != edge.node_b, "topology: edge " + std::to_string(e) + " is a self loop");
            edge.params.validate();
        }
        for (const auto& ch : channels) {
            detail::require(valid(ch.positive) && valid(ch.negative), "topology: channel node out of range");
        }
        const auto reach = reachable_from(terminals.ground);
        detail::require(reach[terminals.input1], "topology: input1 has no conductive path to ground");
        detail::require(reach[terminals.input2], "topology: input2 has no conductive path to ground");
    }

    std::vector<bool> reachable_from(std::size_t start) const {
        std::vector<std::vector<std::size_t>> adjacency(node_count);
        for (const auto& e : edges) {
            adjacency[e.node_a].push_back(e.node_b);
            adjacency[e.node_b].push_back(e.node_a);
        }
        std::vector<bool> seen(node_count, false);
        std::queue<std::size_t> pending;
        seen[start] = true;
        pending.push(start);
        while (!pending.empty()) {
            const auto n = pending.front();
            pending.pop();
            for (auto m : adjacency[n]) {
                if (!seen[m]) {
                    seen[m] = true;
                    pending.push(m);
                }
            }
        }
        return seen;
    }

    bool operator==(const NetworkTopology&) const = default;
};

// Slow-transport mycelium edge. Values tuned so that low drive frequencies
// (period >> tau) are strongly distorted while fast drives pass nearly intact.
inline DualTransportParams default_mycelium_params() { return DualTransportParams{}; }

// Electrode-to-ground contacts of the two sense electrodes.
inline constexpr double kDefaultContact1_S = 50e-6;
inline constexpr double kDefaultContact2_S = 25e-6;

/// Two-path, one-ground layout with two sense electrodes.
///
/// Nodes: 0 ground, 1 input1, 2 input2, 3 junction, 4 sense1, 5 sense2.
/// input1 and input2 reach the junction through one mycelium edge each; the
/// junction reaches each sense electrode through a mycelium edge; each sense
/// electrode is tied to ground through an ohmic contact. Channel 0 reads
/// sense1 - ground and channel 1 reads sense2 - ground.
inline NetworkTopology default_topology(const DualTransportParams& mycelium = default_mycelium_params()) {
    NetworkTopology top;
    top.node_count = 6;
    top.terminals = Terminals{1, 2, 0};
    top.edges = {
        Edge{1, 3, mycelium},
        Edge{2, 3, mycelium},
        Edge{3, 4, mycelium},
        Edge{3, 5, mycelium},
        Edge{4, 0, linear_params(kDefaultContact1_S)},
        Edge{5, 0, linear_params(kDefaultContact2_S)},
    };
    top.channels = {Channel{4, 0}, Channel{5, 0}};
    return top;
}

struct SimConfig {
    double dt_s = 1.0;
    double duration_s = 1000.0;
    double newton_tol_V = 1e-9;
    int newton_max_iter = 50;
    double w_initial = 0.0;
    // Hold every w at w_initial for the whole run.
    bool freeze_state = false;

    void validate() const {
        detail::require(dt_s > 0.0, "sim config: dt must be positive");
        detail::require(duration_s > 0.0, "sim config: duration must be positive");
        detail::require(newton_tol_V > 0.0, "sim config: newton tolerance must be positive");
        detail::require(newton_max_iter >= 1, "sim config: newton_max_iter must be at least 1");
        detail::require(w_initial >= 0.0 && w_initial <= 1.0, "sim config: w_initial must lie in [0,1]");
    }

    bool operator==(const SimConfig&) const = default;
};

using DriveMap = std::map<Terminal, TimeSeries>;

// Per-step view handed to a simulation observer.
struct StepView {
    std::size_t step;
    std::span<const double> node_voltages;
    std::span<const EdgeState> states;  // after the state update of this step
    // max over free nodes of |net current| / (sum of incident edge conductances)
    double balance_V;
    int newton_iterations;
};

namespace detail {

class NodalSolver {
public:
    NodalSolver(const NetworkTopology& top, const std::vector<bool>& fixed)
        : top_(top), index_(top.node_count, kFixed) {
        for (std::size_t n = 0; n < top.node_count; ++n) {
            if (!fixed[n]) {
                index_[n] = free_.size();
                free_.push_back(n);
            }
        }
        const auto m = static_cast<Eigen::Index>(free_.size());
        jacobian_.resize(m, m);
        residual_.resize(m);
        scale_.resize(m);
    }

    std::size_t free_count() const { return free_.size(); }

    // Solves for the free node voltages in place; returns iterations used.
    int solve(std::vector<double>& v, const std::vector<EdgeState>& states, const SimConfig& cfg,
              std::size_t step, double& balance_V) {
        if (free_.empty()) {
            balance_V = 0.0;
            return 0;
        }
        double worst = assemble(v, states, true);
        for (int iter = 0; iter < cfg.newton_max_iter; ++iter) {
            if (worst <= cfg.newton_tol_V) {
                balance_V = worst;
                return iter;
            }
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(jacobian_);
            const Eigen::VectorXd dx = lu.solve(-residual_);
            if (!dx.allFinite()) {
                throw SingularSystem("singular nodal system at step " + std::to_string(step));
            }

            const double start_norm = residual_norm();
            std::vector<double> trial = v;
            double damping = 1.0;
            double trial_norm = 0.0;
            // Halve the Newton step while the residual grows (at most 8 times).
            for (int halving = 0; halving <= 8; ++halving) {
                for (std::size_t k = 0; k < free_.size(); ++k) {
                    trial[free_[k]] = v[free_[k]] + damping * dx(static_cast<Eigen::Index>(k));
                }
                assemble(trial, states, false);
                trial_norm = residual_norm();
                if (trial_norm <= start_norm || halving == 8) {
                    break;
                }
                damping *= 0.5;
            }
            v.swap(trial);
            worst = assemble(v, states, true);
        }
        if (worst <= cfg.newton_tol_V) {
            balance_V = worst;
            return cfg.newton_max_iter;
        }
        throw NewtonDivergence(step, cfg.newton_max_iter);
    }

private:
    static constexpr std::size_t kFixed = static_cast<std::size_t>(-1);

    double residual_norm() const { return residual_.cwiseAbs().maxCoeff(); }

    // Fills residual (and optionally the Jacobian); returns the worst scaled imbalance.
    double assemble(const std::vector<double>& v, const std::vector<EdgeState>& states, bool with_jacobian) {
        residual_.setZero();
        scale_.setZero();
        if (with_jacobian) {
            jacobian_.setZero();
        }
        for (std::size_t e = 0; e < top_.edges.size(); ++e) {
            const auto& edge = top_.edges[e];
            const double w = states[e].w;
            const double dv = v[edge.node_a] - v[edge.node_b];
            const double i = edge_current(dv, w, edge.params);
            const double chord = std::abs(edge.params.g_fast_S + edge.params.g_slow_S * w);
            const auto ia = index_[edge.node_a];
            const auto ib = index_[edge.node_b];
            if (ia != kFixed) {
                residual_(static_cast<Eigen::Index>(ia)) += i;
                scale_(static_cast<Eigen::Index>(ia)) += chord;
            }
            if (ib != kFixed) {
                residual_(static_cast<Eigen::Index>(ib)) -= i;
                scale_(static_cast<Eigen::Index>(ib)) += chord;
            }
            if (with_jacobian) {
                const double g = edge_conductance(dv, w, edge.params);
                if (ia != kFixed) jacobian_(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ia)) += g;
                if (ib != kFixed) jacobian_(static_cast<Eigen::Index>(ib), static_cast<Eigen::Index>(ib)) += g;
                if (ia != kFixed && ib != kFixed) {
                    jacobian_(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib)) -= g;
                    jacobian_(static_cast<Eigen::Index>(ib), static_cast<Eigen::Index>(ia)) -= g;
                }
            }
        }
        double worst = 0.0;
        for (Eigen::Index k = 0; k < residual_.size(); ++k) {
            if (scale_(k) <= 0.0) {
                throw SingularSystem("singular nodal system: node " + std::to_string(free_[static_cast<std::size_t>(k)]) +
                                     " has no conducting edge");
            }
            worst = std::max(worst, std::abs(residual_(k)) / scale_(k));
        }
        return worst;
    }

    const NetworkTopology& top_;
    std::vector<std::size_t> index_;
    std::vector<std::size_t> free_;
    Eigen::MatrixXd jacobian_;
    Eigen::VectorXd residual_;
    Eigen::VectorXd scale_;
};

}  // namespace detail

struct NoObserver {
    void operator()(const StepView&) const noexcept {}
};

/// Runs the transient simulation.
///
/// `drives` maps the driven input terminals to their voltage records; an
/// undriven input floats. All drives must share the grid and `cfg.dt_s`.
/// Returns one differential record per topology channel, in channel order.
/// Throws NewtonDivergence (with the failing step) or SingularSystem.
template <typename Observer = NoObserver>
std::vector<TimeSeries> simulate(const NetworkTopology& top, const DriveMap& drives, const SimConfig& cfg,
                                 Observer&& observer = Observer{}) {
    top.validate();
    cfg.validate();
    detail::require(!drives.empty(), "simulate: at least one drive is required");
    detail::require(!top.channels.empty(), "simulate: topology has no channels");
    const TimeSeries& first = drives.begin()->second;
    for (const auto& [terminal, series] : drives) {
        detail::require(series.same_grid(first), "simulate: drive series must share dt and length");
    }
    detail::require(std::abs(first.dt_s() - cfg.dt_s) <= 1e-12 * cfg.dt_s,
                    "simulate: drive dt does not match the simulation dt");

    std::vector<bool> fixed(top.node_count, false);
    fixed[top.terminals.ground] = true;
    for (const auto& [terminal, series] : drives) {
        fixed[top.node_of(terminal)] = true;
    }
    // A free node that cannot reach any fixed node has an undetermined voltage.
    {
        std::vector<bool> anchored(top.node_count, false);
        for (std::size_t n = 0; n < top.node_count; ++n) {
            if (fixed[n]) {
                const auto reach = top.reachable_from(n);
                for (std::size_t m = 0; m < top.node_count; ++m) {
                    anchored[m] = anchored[m] || reach[m];
                }
            }
        }
        for (std::size_t n = 0; n < top.node_count; ++n) {
            if (!anchored[n]) {
                throw SingularSystem("singular nodal system: node " + std::to_string(n) +
                                     " is disconnected from every driven node and ground");
            }
        }
    }

    const std::size_t steps = first.size();
    std::vector<double> v(top.node_count, 0.0);
    std::vector<EdgeState> states(top.edges.size(), EdgeState{cfg.w_initial});
    std::vector<std::vector<double>> outputs(top.channels.size(), std::vector<double>(steps));
    detail::NodalSolver solver(top, fixed);

    for (std::size_t step = 0; step < steps; ++step) {
        for (const auto& [terminal, series] : drives) {
            v[top.node_of(terminal)] = series[step];
        }
        double balance = 0.0;
        const int iterations = solver.solve(v, states, cfg, step, balance);

        if (!cfg.freeze_state) {
            for (std::size_t e = 0; e < top.edges.size(); ++e) {
                const auto& edge = top.edges[e];
                states[e].w = advance_state(states[e].w, v[edge.node_a] - v[edge.node_b], cfg.dt_s, edge.params);
            }
        }
        for (std::size_t c = 0; c < top.channels.size(); ++c) {
            outputs[c][step] = v[top.channels[c].positive] - v[top.channels[c].negative];
        }
        observer(StepView{step, v, states, balance, iterations});
    }

    std::vector<TimeSeries> result;
    result.reserve(outputs.size());
    for (auto& samples : outputs) {
        result.emplace_back(first.dt_s(), std::move(samples), first.t0_s());
    }
    return result;
}

}  // namespace mycofreq
