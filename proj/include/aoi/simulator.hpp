#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoi/blocking.hpp"
#include "aoi/distribution.hpp"
#include "aoi/estimate.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

namespace aoi {

enum class Discipline { blocking, preemption };

inline std::string_view discipline_name(Discipline d) {
    return d == Discipline::blocking ? "blocking" : "preemption";
}

inline Discipline parse_discipline(std::string_view s) {
    if (s == "blocking") return Discipline::blocking;
    if (s == "preemption") return Discipline::preemption;
    throw std::invalid_argument("unknown discipline '" + std::string(s) + "'");
}

struct QueueModel {
    DistributionSpec arrival;
    DistributionSpec service;
    Discipline discipline = Discipline::blocking;
};

inline void validate(const QueueModel& m) {
    validate(m.arrival);
    validate(m.service);
    detail::require_positive_mean(m.arrival, "arrival");
}

struct SimConfig {
    std::size_t cycles = 100'000;
    std::uint64_t seed = 1;
    std::size_t replications = 1;
    std::uint64_t event_cap = 1'000'000'000;  // arrivals processed per run
};

inline void validate(const SimConfig& c) {
    if (c.cycles < 100) throw std::invalid_argument("sim.cycles must be at least 100");
    if (c.replications < 1) throw std::invalid_argument("sim.replications must be at least 1");
    if (c.event_cap == 0) throw std::invalid_argument("sim.event_cap must be positive");
}

/// Thrown when the event cap expires before the requested cycle count; carries
/// how many full cycles were completed.
class partial_result_error : public std::runtime_error {
public:
    explicit partial_result_error(std::size_t done)
        : std::runtime_error("event cap reached after " + std::to_string(done) + " completed cycles"),
          cycles_completed(done) {}
    std::size_t cycles_completed;
};

/// One regenerative cycle, delimited by consecutive successful arrivals.
/// completed_service belongs to the update that closes the cycle; area is the
/// exact age-curve area in the two-triangle bookkeeping
/// ((G + S_next)^2 - S_next^2)/2.
struct CycleRecord {
    double effective_interarrival = 0.0;  // G
    double completed_service = 0.0;       // service of the closing update
    std::uint64_t num_arrivals = 0;       // K, arrivals within the cycle including the closing one
    double waiting = 0.0;                 // idle gap W of the cycle
    double area = 0.0;
};

namespace detail {
inline void spend_event(std::uint64_t& budget, std::size_t cycles_done) {
    if (budget == 0) throw partial_result_error(cycles_done);
    --budget;
}
}  // namespace detail

/// Runs `cycles` full regenerative cycles of the model (replication picks the
/// derived stream pair) and feeds each CycleRecord to the visitor in order.
/// The system starts empty; under preemption, cycle accounting starts at the
/// first successful arrival. A departure simultaneous with an arrival is
/// processed first, so that arrival sees an idle server.
template <class Visitor>
void run_cycles(const QueueModel& model, std::size_t cycles, std::uint64_t seed,
                std::size_t replication, std::uint64_t& events_budget, Visitor&& visit) {
    validate(model);
    SampleStream ys(model.arrival, seed, 2 * replication);
    SampleStream ss(model.service, seed, 2 * replication + 1);

    if (model.discipline == Discipline::blocking) {
        double s_open = ss.next();  // service of the update opening the next cycle
        for (std::size_t c = 0; c < cycles; ++c) {
            double g = 0.0;
            std::uint64_t k = 0;
            for (;;) {
                detail::spend_event(events_budget, c);
                g += ys.next();
                ++k;
                if (g >= s_open) break;  // arrival at or after the departure succeeds
            }
            const double s_close = ss.next();
            CycleRecord r;
            r.effective_interarrival = g;
            r.completed_service = s_close;
            r.num_arrivals = k;
            r.waiting = g - s_open;
            r.area = 0.5 * ((g + s_close) * (g + s_close) - s_close * s_close);
            visit(r);
            s_open = s_close;
        }
        return;
    }

    // preemption: every arrival takes over the server; an update is delivered
    // only if its service ends at or before the next arrival
    detail::spend_event(events_budget, 0);
    ys.next();  // first arrival
    double s_open = 0.0, y_next = 0.0;
    for (;;) {
        const double s = ss.next();
        detail::spend_event(events_budget, 0);
        y_next = ys.next();
        if (s <= y_next) {
            s_open = s;
            break;
        }
    }
    for (std::size_t c = 0; c < cycles; ++c) {
        const double first_gap = y_next;
        double g = 0.0, s_close = 0.0;
        std::uint64_t k = 0;
        for (;;) {
            g += y_next;
            ++k;
            const double s = ss.next();
            detail::spend_event(events_budget, c);
            y_next = ys.next();
            if (s <= y_next) {
                s_close = s;
                break;
            }
        }
        CycleRecord r;
        r.effective_interarrival = g;
        r.completed_service = s_close;
        r.num_arrivals = k;
        r.waiting = first_gap - s_open;
        r.area = 0.5 * ((g + s_close) * (g + s_close) - s_close * s_close);
        visit(r);
        s_open = s_close;
    }
}

/// Simulated time-average age: ratio of total sawtooth area to total effective
/// interarrival time. Replications run on derived stream pairs and are
/// averaged in index order; the standard error combines per-replication
/// batch-means errors. Bit-identical output for identical (model, cfg).
inline AgeEstimate simulate_age(const QueueModel& model, const SimConfig& cfg) {
    validate(cfg);
    std::uint64_t budget = cfg.event_cap;
    double est_sum = 0.0, var_sum = 0.0;
    std::size_t completed = 0;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
        std::array<double, kNumBatches> area_b{}, g_b{};
        std::size_t b = 0;
        std::size_t left = detail::batch_size(cfg.cycles, 0);
        try {
            run_cycles(model, cfg.cycles, cfg.seed, rep, budget, [&](const CycleRecord& r) {
                while (left == 0) left = detail::batch_size(cfg.cycles, ++b);
                area_b[b] += r.area;
                g_b[b] += r.effective_interarrival;
                --left;
            });
        } catch (const partial_result_error& e) {
            throw partial_result_error(completed + e.cycles_completed);
        }
        completed += cfg.cycles;

        std::array<double, kNumBatches> ratios{};
        double area_tot = 0.0, g_tot = 0.0;
        for (std::size_t i = 0; i < kNumBatches; ++i) {
            ratios[i] = g_b[i] > 0 ? area_b[i] / g_b[i] : std::nan("");
            area_tot += area_b[i];
            g_tot += g_b[i];
        }
        est_sum += area_tot / g_tot;
        const double se = detail::batch_standard_error(ratios);
        var_sum += se * se;
    }

    AgeEstimate e;
    e.age = est_sum / static_cast<double>(cfg.replications);
    e.method = Method::simulation;
    e.std_error = std::sqrt(var_sum) / static_cast<double>(cfg.replications);
    return e;
}

/// Cycle-level summary across all replications. wald_gap is
/// mean(G) - mean(K) E[Y], which should vanish within noise (Wald identity);
/// wald_se is its batch-means standard error.
struct CycleStatistics {
    double mean_G = 0.0;
    double mean_G_sq = 0.0;
    double mean_K = 0.0;
    double mean_W = 0.0;
    double se_G = 0.0;
    double se_K = 0.0;
    double wald_gap = 0.0;
    double wald_se = 0.0;
    std::size_t cycles = 0;
};

inline CycleStatistics cycle_statistics(const QueueModel& model, const SimConfig& cfg) {
    validate(cfg);
    const double m1y = mean(model.arrival);
    std::uint64_t budget = cfg.event_cap;

    std::vector<double> g_means, k_means, d_means;  // per batch, all replications
    double g_tot = 0.0, g2_tot = 0.0, k_tot = 0.0, w_tot = 0.0;
    std::size_t completed = 0;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
        std::array<double, kNumBatches> g_b{}, k_b{};
        std::array<std::size_t, kNumBatches> n_b{};
        std::size_t b = 0;
        std::size_t left = detail::batch_size(cfg.cycles, 0);
        try {
            run_cycles(model, cfg.cycles, cfg.seed, rep, budget, [&](const CycleRecord& r) {
                while (left == 0) left = detail::batch_size(cfg.cycles, ++b);
                g_b[b] += r.effective_interarrival;
                k_b[b] += static_cast<double>(r.num_arrivals);
                ++n_b[b];
                --left;
                g_tot += r.effective_interarrival;
                g2_tot += r.effective_interarrival * r.effective_interarrival;
                k_tot += static_cast<double>(r.num_arrivals);
                w_tot += r.waiting;
            });
        } catch (const partial_result_error& e) {
            throw partial_result_error(completed + e.cycles_completed);
        }
        completed += cfg.cycles;
        for (std::size_t i = 0; i < kNumBatches; ++i) {
            if (n_b[i] == 0) continue;
            const double m = static_cast<double>(n_b[i]);
            g_means.push_back(g_b[i] / m);
            k_means.push_back(k_b[i] / m);
            d_means.push_back(g_b[i] / m - (k_b[i] / m) * m1y);
        }
    }

    CycleStatistics st;
    st.cycles = completed;
    const double n = static_cast<double>(completed);
    st.mean_G = g_tot / n;
    st.mean_G_sq = g2_tot / n;
    st.mean_K = k_tot / n;
    st.mean_W = w_tot / n;
    st.se_G = detail::batch_standard_error(g_means);
    st.se_K = detail::batch_standard_error(k_means);
    st.wald_gap = st.mean_G - st.mean_K * m1y;
    st.wald_se = detail::batch_standard_error(d_means);
    return st;
}

/// First `cycles` records of replication 0, e.g. for dumps and distributional tests.
inline std::vector<CycleRecord> collect_cycles(const QueueModel& model, std::size_t cycles,
                                               std::uint64_t seed,
                                               std::uint64_t event_cap = 1'000'000'000) {
    std::vector<CycleRecord> out;
    out.reserve(cycles);
    std::uint64_t budget = event_cap;
    run_cycles(model, cycles, seed, 0, budget, [&](const CycleRecord& r) { out.push_back(r); });
    return out;
}

/// CSV dump of cycle records: cycle,G,K,W,area (12 significant digits).
inline void write_cycles_csv(std::ostream& os, const std::vector<CycleRecord>& records) {
    os << "cycle,G,K,W,area\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const CycleRecord& r = records[i];
        os << (i + 1) << ',' << detail::format_number(r.effective_interarrival) << ','
           << r.num_arrivals << ',' << detail::format_number(r.waiting) << ','
           << detail::format_number(r.area) << '\n';
    }
}

}  // namespace aoi
