#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aoi/blocking.hpp"
#include "aoi/preemption.hpp"
#include "aoi/simulator.hpp"
#include "aoi/table.hpp"

namespace aoi {

namespace detail {

inline int default_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("AOI_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

/// Runs fn(i) for i in [0, n) across worker threads. Each index's work must be
/// self-contained; results land in caller-owned slots, so the outcome does not
/// depend on the worker count. The lowest-index exception wins.
template <class Fn>
void parallel_for_indexed(std::size_t n, int threads, Fn&& fn) {
    const int t = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
    if (t <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int w = 0; w < t; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Concrete evaluator tokens accepted by sweeps, validation, and the CLI.
/// "exact" resolves to the cheapest applicable exact path; "bounds" expands to
/// every bound defined for the model's discipline and families.
inline std::vector<std::string> expand_evaluators(const QueueModel& m,
                                                  const std::vector<std::string>& tokens) {
    const bool s_exp = m.service.family == Family::exponential;
    const bool y_exp = m.arrival.family == Family::exponential;
    const bool blocking = m.discipline == Discipline::blocking;

    std::vector<std::string> out;
    auto resolve_exact = [&]() -> std::string {
        if (s_exp) return "exact-gm";
        if (y_exp) return "exact-mg";
        return "exact-gg";
    };
    for (const std::string& t : tokens) {
        if (t == "exact") {
            out.push_back(resolve_exact());
        } else if (t == "bounds") {
            if (blocking) {
                out.push_back("bound-lcg");
                if (s_exp) out.push_back("bound-lcm");
                out.push_back("bound-decoupled");
                out.push_back("bound-mlc");
            } else {
                out.push_back("bound-preemption");
            }
        } else if (t == "exact-gm") {
            if (!s_exp) throw std::invalid_argument("evaluator exact-gm requires exponential service");
            out.push_back(t);
        } else if (t == "exact-mg") {
            if (!y_exp) throw std::invalid_argument("evaluator exact-mg requires exponential arrivals");
            out.push_back(t);
        } else if (t == "exact-gg" || t == "simulation" || t == "sim") {
            out.push_back(t == "sim" ? "simulation" : t);
        } else if (t == "gm-equiv") {
            if (!blocking) throw std::invalid_argument("evaluator gm-equiv applies to blocking only");
            if (!s_exp) throw std::invalid_argument("evaluator gm-equiv requires exponential service");
            out.push_back(t);
        } else if (t == "bound-lcg" || t == "bound-decoupled" || t == "bound-mlc") {
            if (!blocking) throw std::invalid_argument("evaluator " + t + " applies to blocking only");
            out.push_back(t);
        } else if (t == "bound-lcm") {
            if (!blocking) throw std::invalid_argument("evaluator bound-lcm applies to blocking only");
            if (!s_exp) throw std::invalid_argument("evaluator bound-lcm requires exponential service");
            out.push_back(t);
        } else if (t == "bound-preemption") {
            if (blocking) throw std::invalid_argument("evaluator bound-preemption applies to preemption only");
            out.push_back(t);
        } else {
            throw std::invalid_argument("unknown evaluator '" + t + "'");
        }
    }
    if (out.empty()) throw std::invalid_argument("evaluator list is empty");
    return out;
}

/// Evaluates one concrete token (or the meta token "exact") for a model.
inline AgeEstimate run_evaluator(std::string_view token, const QueueModel& m,
                                 const MonteCarloConfig& mc, const SimConfig& sim) {
    const auto& Y = m.arrival;
    const auto& S = m.service;
    if (token == "simulation" || token == "sim") return simulate_age(m, sim);
    if (m.discipline == Discipline::blocking) {
        if (token == "exact") return age_blocking(Y, S, mc);
        if (token == "exact-gm") return age_gm_blocking(Y, S.rate);
        if (token == "exact-mg") return age_mg_blocking(Y.rate, S);
        if (token == "exact-gg") return age_gg_blocking(Y, S, mc);
        if (token == "gm-equiv") return age_gm_blocking_equiv(Y, S.rate, mc);
        if (token == "bound-lcg") return bound_lcg_blocking(Y, S, mc);
        if (token == "bound-lcm") return bound_lcm_blocking(Y, S.rate);
        if (token == "bound-decoupled") return bound_lcg_decoupled(Y, S);
        if (token == "bound-mlc") return bound_mlc_blocking(Y, S);
    } else {
        if (token == "exact") return age_preemption(Y, S, mc);
        if (token == "exact-gm") return age_gm_preemption(Y, S.rate);
        if (token == "exact-mg") return age_mg_preemption(Y.rate, S);
        if (token == "exact-gg") return age_gg_preemption(Y, S, mc);
        if (token == "bound-preemption") return bound_gg_preemption(Y, S, mc);
    }
    throw std::invalid_argument("unknown evaluator '" + std::string(token) + "' for discipline " +
                                std::string(discipline_name(m.discipline)));
}

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols = {"param1", "param2",     "evaluator", "age",
                                                  "std_err", "terms_used", "flags"};
    return cols;
}

struct SweepAxis {
    bool on_service = false;  // false: arrival parameter, true: service parameter
    std::string parameter;
    std::vector<double> values;
};

struct SweepSpec {
    QueueModel model;
    std::vector<SweepAxis> axes;  // one or two swept parameters
    std::vector<std::string> evaluators = {"exact"};
    MonteCarloConfig mc;
    SimConfig sim;
    int threads = 0;  // 0: AOI_THREADS env var, else hardware default
};

namespace detail {
inline void check_axis(const SweepAxis& a) {
    if (a.values.empty()) throw std::invalid_argument("sweep axis has no grid values");
    double prev = 0.0;
    for (double v : a.values) {
        if (!(v > 0) || !std::isfinite(v))
            throw std::invalid_argument("sweep grid values must be positive");
        if (!(v > prev)) throw std::invalid_argument("sweep grid values must be strictly increasing");
        prev = v;
    }
}
}  // namespace detail

/// Evaluates every evaluator on every grid point. Rows come out in grid order
/// (axis 0 major, axis 1 minor, evaluators innermost) no matter how the grid
/// is scheduled across threads; all grid points share the configured seeds.
inline ResultTable run_sweep(const SweepSpec& spec) {
    validate(spec.model);
    validate(spec.mc);
    validate(spec.sim);
    if (spec.axes.empty() || spec.axes.size() > 2)
        throw std::invalid_argument("sweep requires one or two axes");
    for (const auto& a : spec.axes) detail::check_axis(a);

    const std::vector<std::string> evals = expand_evaluators(spec.model, spec.evaluators);

    // pre-validate every grid point so bad parameters fail before any work
    const std::size_t n0 = spec.axes[0].values.size();
    const std::size_t n1 = spec.axes.size() == 2 ? spec.axes[1].values.size() : 1;
    std::vector<QueueModel> models(n0 * n1);
    for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < n1; ++j) {
            QueueModel m = spec.model;
            auto apply = [&](const SweepAxis& a, double v) {
                set_parameter(a.on_service ? m.service : m.arrival, a.parameter, v);
            };
            apply(spec.axes[0], spec.axes[0].values[i]);
            if (spec.axes.size() == 2) apply(spec.axes[1], spec.axes[1].values[j]);
            validate(m);
            models[i * n1 + j] = m;
        }

    std::vector<std::vector<AgeEstimate>> results(models.size());
    detail::parallel_for_indexed(models.size(), detail::default_thread_count(spec.threads),
                                 [&](std::size_t g) {
                                     results[g].reserve(evals.size());
                                     for (const auto& t : evals)
                                         results[g].push_back(run_evaluator(t, models[g], spec.mc, spec.sim));
                                 });

    ResultTable table(result_columns());
    for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < n1; ++j) {
            const std::size_t g = i * n1 + j;
            for (std::size_t e = 0; e < evals.size(); ++e) {
                const AgeEstimate& est = results[g][e];
                table.add_row({ResultTable::cell(spec.axes[0].values[i]),
                               spec.axes.size() == 2 ? ResultTable::cell(spec.axes[1].values[j])
                                                     : ResultTable::cell(""),
                               ResultTable::cell(evals[e]), ResultTable::cell(est.age),
                               ResultTable::cell(est.std_error), ResultTable::cell(est.terms_used),
                               ResultTable::cell(flags_string(est))});
            }
        }
    return table;
}

/// Family template for fixed-mean comparisons: det | exp | gamma:shape=A | uniform.
/// The free scale parameter is solved so the instance has the requested mean
/// (uniform spans [0, 2 mean]).
inline DistributionSpec instantiate_candidate(std::string_view candidate, double mean_value) {
    if (!(mean_value > 0)) throw std::invalid_argument("candidate mean must be positive");
    const std::string t = detail::lower(candidate);
    DistributionSpec d;
    if (t == "det")
        d = deterministic(mean_value);
    else if (t == "exp")
        d = exponential(1.0 / mean_value);
    else if (t == "uniform")
        d = uniform(0.0, 2.0 * mean_value);
    else if (t.rfind("gamma:shape=", 0) == 0) {
        const double shape = detail::parse_number(std::string_view(t).substr(12), "shape");
        d = gamma(shape, shape / mean_value);
    } else {
        throw std::invalid_argument("unknown candidate template '" + t +
                                    "' (expected det | exp | gamma:shape=A | uniform)");
    }
    if (std::abs(mean(d) - mean_value) > 1e-9)
        throw std::logic_error("candidate instantiation missed the requested mean");
    return d;
}

struct ComparisonSpec {
    Discipline discipline = Discipline::blocking;
    std::vector<std::string> candidates = {"det", "gamma:shape=2", "exp", "gamma:shape=0.5"};
    DistributionSpec service;
    std::string evaluator = "exact";
    std::vector<double> mean_grid;
    MonteCarloConfig mc;
    SimConfig sim;
    int threads = 0;
};

/// Ages of each candidate arrival family at every common-mean grid point; the
/// winning (smallest-age) row per grid point carries the "argmin" flag.
inline ResultTable compare_at_fixed_mean(const ComparisonSpec& spec) {
    validate(spec.service);
    validate(spec.mc);
    validate(spec.sim);
    if (spec.candidates.empty()) throw std::invalid_argument("comparison needs at least one candidate");
    if (spec.mean_grid.empty()) throw std::invalid_argument("comparison needs a mean grid");
    {
        double prev = 0.0;
        for (double v : spec.mean_grid) {
            if (!(v > prev)) throw std::invalid_argument("mean grid must be positive and strictly increasing");
            prev = v;
        }
    }

    const std::size_t nc = spec.candidates.size();
    std::vector<QueueModel> models(spec.mean_grid.size() * nc);
    for (std::size_t i = 0; i < spec.mean_grid.size(); ++i)
        for (std::size_t c = 0; c < nc; ++c) {
            QueueModel m;
            m.arrival = instantiate_candidate(spec.candidates[c], spec.mean_grid[i]);
            m.service = spec.service;
            m.discipline = spec.discipline;
            models[i * nc + c] = m;
        }

    std::vector<AgeEstimate> results(models.size());
    detail::parallel_for_indexed(models.size(), detail::default_thread_count(spec.threads),
                                 [&](std::size_t g) {
                                     results[g] = run_evaluator(spec.evaluator, models[g], spec.mc, spec.sim);
                                 });

    ResultTable table(result_columns());
    for (std::size_t i = 0; i < spec.mean_grid.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < nc; ++c)
            if (results[i * nc + c].age < results[i * nc + best].age) best = c;
        for (std::size_t c = 0; c < nc; ++c) {
            const AgeEstimate& est = results[i * nc + c];
            std::string flags = flags_string(est);
            if (c == best) flags = flags.empty() ? "argmin" : flags + "|argmin";
            table.add_row({ResultTable::cell(spec.mean_grid[i]), ResultTable::cell(""),
                           ResultTable::cell(spec.candidates[c]), ResultTable::cell(est.age),
                           ResultTable::cell(est.std_error), ResultTable::cell(est.terms_used),
                           ResultTable::cell(flags)});
        }
    }
    return table;
}

/// Blocking-age estimates forced to stop after each requested term count, on
/// one shared set of sample paths, against the fully converged reference (last
/// row). The rel_error column is relative to that reference.
inline ResultTable truncation_report(const DistributionSpec& Y, const DistributionSpec& S,
                                     std::vector<std::size_t> k_values, const MonteCarloConfig& mc) {
    if (k_values.empty()) throw std::invalid_argument("truncation report needs at least one k");
    std::sort(k_values.begin(), k_values.end());
    k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
    if (k_values.front() < 1) throw std::invalid_argument("truncation points must be at least 1");
    if (k_values.back() > mc.k_max)
        throw std::invalid_argument("requested truncation point exceeds k_max");
    detail::require_positive_mean(Y, "arrival");

    const auto sums = detail::accumulate_blocking_sums(Y, S, mc, k_values.back());
    const double base = renewal_process_age(Y) + mean(S);
    const auto ref = detail::blocking_middle_at(sums, sums.terms);
    const double ref_age = base + ref.value;

    std::vector<std::string> cols = result_columns();
    cols.push_back("rel_error");
    ResultTable table(cols);
    for (std::size_t k : k_values) {
        const auto mid = detail::blocking_middle_at(sums, k);
        const double age = base + mid.value;
        table.add_row({ResultTable::cell(static_cast<std::size_t>(k)), ResultTable::cell(""),
                       ResultTable::cell("exact-gg"), ResultTable::cell(age),
                       ResultTable::cell(mid.std_error), ResultTable::cell(static_cast<std::size_t>(k)),
                       ResultTable::cell(""), ResultTable::cell(std::abs(age - ref_age) / ref_age)});
    }
    table.add_row({ResultTable::cell(sums.terms), ResultTable::cell(""),
                   ResultTable::cell("exact-gg-reference"), ResultTable::cell(ref_age),
                   ResultTable::cell(ref.std_error), ResultTable::cell(sums.terms),
                   ResultTable::cell(sums.converged ? "" : "truncated"), ResultTable::cell(0.0)});
    return table;
}

inline void table_row(ResultTable& t, const std::string& p1, const std::string& p2,
                      const std::string& evaluator, const AgeEstimate& est,
                      ResultTable::Cell extra = ResultTable::cell("")) {
    std::vector<ResultTable::Cell> cells = {ResultTable::cell(p1),
                                            ResultTable::cell(p2),
                                            ResultTable::cell(evaluator),
                                            ResultTable::cell(est.age),
                                            ResultTable::cell(est.std_error),
                                            ResultTable::cell(est.terms_used),
                                            ResultTable::cell(flags_string(est))};
    if (t.columns().size() == cells.size() + 1) cells.push_back(std::move(extra));
    t.add_row(std::move(cells));
}

struct ValidationReport {
    ResultTable table{result_columns()};
    bool consistent = true;
    double worst_z = 0.0;
};

/// Runs every applicable analytic evaluator plus the simulator and scores each
/// against the simulation with z = |diff| / combined standard error. The
/// report is consistent when every exact evaluator (bounds excluded) has
/// z <= 4.
inline ValidationReport validate_model(const QueueModel& m, const MonteCarloConfig& mc,
                                       const SimConfig& sim) {
    validate(m);
    const bool s_exp = m.service.family == Family::exponential;
    const bool y_exp = m.arrival.family == Family::exponential;

    std::vector<std::string> tokens;
    if (s_exp) tokens.push_back("exact-gm");
    if (y_exp) tokens.push_back("exact-mg");
    tokens.push_back("exact-gg");
    if (m.discipline == Discipline::blocking && s_exp) tokens.push_back("gm-equiv");
    for (const auto& t : expand_evaluators(m, {"bounds"})) tokens.push_back(t);
    tokens.push_back("simulation");

    std::vector<AgeEstimate> results(tokens.size());
    detail::parallel_for_indexed(tokens.size(), detail::default_thread_count(0), [&](std::size_t i) {
        results[i] = run_evaluator(tokens[i], m, mc, sim);
    });
    const AgeEstimate& simulated = results.back();

    std::vector<std::string> cols = result_columns();
    cols.push_back("z");
    ValidationReport report;
    report.table = ResultTable(cols);
    const auto p1 = encode_distribution(m.arrival);
    const auto p2 = encode_distribution(m.service);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const AgeEstimate& est = results[i];
        double z = 0.0;
        const bool is_sim = tokens[i] == "simulation";
        if (!is_sim) {
            const double se = std::hypot(est.std_error, simulated.std_error);
            const double diff = std::abs(est.age - simulated.age);
            z = se > 0 ? diff / se : (diff == 0 ? 0.0 : std::numeric_limits<double>::infinity());
            if (tokens[i].rfind("bound", 0) != 0) {
                report.worst_z = std::max(report.worst_z, z);
                if (z > 4.0) report.consistent = false;
            }
        }
        table_row(report.table, p1, p2, tokens[i], est, is_sim ? ResultTable::cell("")
                                                               : ResultTable::cell(z));
    }
    return report;
}

}  // namespace aoi
