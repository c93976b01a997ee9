#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aoi {

enum class Method { closed_form, truncated_mc, simulation };

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::closed_form: return "closed-form";
        case Method::truncated_mc: return "truncated-mc";
        case Method::simulation: return "simulation";
    }
    return "?";
}

/// One average-age result. std_error is 0 for closed forms; terms_used counts
/// the terms of a truncated sum (0 where that does not apply).
struct AgeEstimate {
    double age = 0.0;
    Method method = Method::closed_form;
    double std_error = 0.0;
    std::size_t terms_used = 0;
    bool truncation_warning = false;    // truncated sum stopped at k_max, not by the tail rule
    bool bound_not_guaranteed = false;  // bound evaluated outside its log-concavity precondition
    std::optional<double> p_success;    // reported for preemption estimates
};

/// Flags column encoding shared by every table/CSV surface.
inline std::string flags_string(const AgeEstimate& e) {
    std::string s;
    if (e.truncation_warning) s = "truncated";
    if (e.bound_not_guaranteed) {
        if (!s.empty()) s += '|';
        s += "not-guaranteed";
    }
    return s;
}

struct MonteCarloConfig {
    std::size_t samples = 1'000'000;
    std::uint64_t seed = 1;
    std::size_t k_max = 64;      // hard cap on truncated-sum terms
    double tail_tol = 1e-6;      // relative tail threshold for the stop rule
    std::size_t k_min = 5;       // never stop before this many terms
};

inline void validate(const MonteCarloConfig& mc) {
    if (mc.samples < 1000) throw std::invalid_argument("mc.samples must be at least 1000");
    if (mc.k_min < 1 || mc.k_min > mc.k_max) throw std::invalid_argument("mc requires 1 <= k_min <= k_max");
    if (!(mc.tail_tol > 0)) throw std::invalid_argument("mc.tail_tol must be positive");
}

/// Estimate of the mean number of arrivals per effective interarrival.
struct KEstimate {
    double value = 1.0;
    Method method = Method::closed_form;
    double std_error = 0.0;
    std::size_t terms_used = 0;
    bool truncation_warning = false;
};

/// Success-event statistics of a preemptive system: an arrival is successful
/// when its service finishes no later than the next arrival.
struct SuccessStats {
    double p_success = 0.0;                // Pr(S <= Y)
    double mean_success_service = 0.0;     // E[S | S <= Y]
    double mean_blocked_interarrival = 0.0;  // E[Y | Y < S]; NaN when p_success == 1
};

}  // namespace aoi
