#pragma once

// Linguistic categories over the THD axis (percent) and crisp threshold
// discrimination.

#include "errors.hpp"

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mycofreq::fuzzy {

struct Gaussian {
    double center = 0.0;
    double sigma = 1.0;

    bool operator==(const Gaussian&) const = default;
};

// Negative slope gives a descending set.
struct Sigmoid {
    double midpoint = 0.0;
    double slope = 1.0;

    bool operator==(const Sigmoid&) const = default;
};

using MembershipFunction = std::variant<Gaussian, Sigmoid>;

inline void validate(const MembershipFunction& fn) {
    if (const auto* g = std::get_if<Gaussian>(&fn)) {
        detail::require(std::isfinite(g->center) && std::isfinite(g->sigma) && g->sigma > 0.0,
                        "gaussian set: sigma must be positive");
    } else {
        const auto& s = std::get<Sigmoid>(fn);
        detail::require(std::isfinite(s.midpoint) && std::isfinite(s.slope) && s.slope != 0.0,
                        "sigmoid set: slope must be nonzero");
    }
}

inline double membership(const MembershipFunction& fn, double x) {
    if (const auto* g = std::get_if<Gaussian>(&fn)) {
        const double z = (x - g->center) / g->sigma;
        return std::exp(-0.5 * z * z);
    }
    const auto& s = std::get<Sigmoid>(fn);
    // exp overflows to +inf for far tails, which still yields 0 here.
    return 1.0 / (1.0 + std::exp(-s.slope * (x - s.midpoint)));
}

struct FuzzySet {
    std::string label;
    MembershipFunction fn;

    bool operator==(const FuzzySet&) const = default;
};

using Memberships = std::vector<std::pair<std::string, double>>;

class FuzzyPartition {
public:
    static constexpr double kMinCoverage = 0.05;

    // Validates labels, parameters and coverage of [domain_lo, domain_hi].
    explicit FuzzyPartition(std::vector<FuzzySet> sets, double domain_lo = 0.0, double domain_hi = 50.0)
        : sets_(std::move(sets)), domain_lo_(domain_lo), domain_hi_(domain_hi) {
        detail::require(sets_.size() >= 1, "fuzzy partition: at least one set required");
        detail::require(domain_lo_ < domain_hi_, "fuzzy partition: empty domain");
        std::set<std::string> labels;
        for (const auto& s : sets_) {
            validate(s.fn);
            detail::require(!s.label.empty(), "fuzzy partition: empty label");
            detail::require(labels.insert(s.label).second, "fuzzy partition: duplicate label '" + s.label + "'");
        }
        constexpr int kScanSteps = 5000;
        for (int i = 0; i <= kScanSteps; ++i) {
            const double x = domain_lo_ + (domain_hi_ - domain_lo_) * i / kScanSteps;
            double best = 0.0;
            for (const auto& s : sets_) {
                best = std::max(best, membership(s.fn, x));
            }
            detail::require(best >= kMinCoverage,
                            "fuzzy partition: domain not covered near x = " + std::to_string(x));
        }
    }

    const std::vector<FuzzySet>& sets() const noexcept { return sets_; }
    std::size_t size() const noexcept { return sets_.size(); }
    double domain_lo() const noexcept { return domain_lo_; }
    double domain_hi() const noexcept { return domain_hi_; }

    std::size_t index_of(std::string_view label) const {
        for (std::size_t i = 0; i < sets_.size(); ++i) {
            if (sets_[i].label == label) return i;
        }
        throw ValidationError("fuzzy partition: no set labelled '" + std::string(label) + "'");
    }

    bool operator==(const FuzzyPartition&) const = default;

private:
    std::vector<FuzzySet> sets_;
    double domain_lo_;
    double domain_hi_;
};

// Membership of x in every set, in partition order.
inline Memberships fuzzify(const FuzzyPartition& p, double x) {
    Memberships out;
    out.reserve(p.size());
    for (const auto& s : p.sets()) {
        out.emplace_back(s.label, membership(s.fn, x));
    }
    return out;
}

struct Classification {
    std::string label;
    std::size_t index = 0;
    Memberships memberships;

    bool operator==(const Classification&) const = default;
};

// Argmax membership; ties go to the earlier set.
inline Classification classify(const FuzzyPartition& p, double x) {
    Classification c;
    c.memberships = fuzzify(p, x);
    for (std::size_t i = 1; i < c.memberships.size(); ++i) {
        if (c.memberships[i].second > c.memberships[c.index].second) {
            c.index = i;
        }
    }
    c.label = c.memberships[c.index].first;
    return c;
}

/// Five sets over THD in percent: "very low" (descending sigmoid), "low",
/// "medium", "high" (gaussians), "very high" (ascending sigmoid).
inline FuzzyPartition default_partition() {
    return FuzzyPartition({
        {"very low", Sigmoid{5.0, -1.5}},
        {"low", Gaussian{10.0, 4.0}},
        {"medium", Gaussian{20.0, 4.0}},
        {"high", Gaussian{30.0, 4.0}},
        {"very high", Sigmoid{38.0, 1.5}},
    });
}

enum class Side { below, above };

inline std::string_view to_string(Side s) { return s == Side::below ? "below" : "above"; }

inline Side parse_side(std::string_view s) {
    if (s == "below") return Side::below;
    if (s == "above") return Side::above;
    throw ValidationError("unknown side '" + std::string(s) + "'");
}

// Equality counts as above.
inline Side threshold_discriminate(double value, double threshold) {
    return value < threshold ? Side::below : Side::above;
}

}  // namespace mycofreq::fuzzy
