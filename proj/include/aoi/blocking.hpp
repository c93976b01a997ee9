#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "aoi/distribution.hpp"
#include "aoi/estimate.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

namespace aoi {

namespace detail {
inline void require_positive_mean(const DistributionSpec& d, const char* what) {
    if (!(moment(d, 1) > 0))
        throw std::invalid_argument(std::string(what) + " must have positive mean");
}
}  // namespace detail

/// Time-average age of a renewal process observed at renewal instants:
/// E[X^2] / (2 E[X]).
inline double renewal_process_age(const DistributionSpec& x) {
    detail::require_positive_mean(x, "renewal_process_age: distribution");
    return moment(x, 2) / (2.0 * moment(x, 1));
}

namespace detail {

/// Shared driver for the blocking truncated sums
///   num_k = E[A_k ccdf_S(A_k)],  den_k = E[ccdf_S(A_k)],  A_k = Y_1+...+Y_k,
/// accumulated k-major on common interarrival paths. Cumulative per-batch sums
/// are kept for every k so callers can read the estimate at any truncation
/// point. The stop rule compares the k-th increment of the watched sum
/// (numerator by default) against tail_tol times its running total, never
/// stopping before k_min or min_terms, and gives up at k_max.
struct TruncatedSums {
    std::size_t terms = 0;
    bool converged = false;
    std::vector<std::array<double, kNumBatches>> num_cum;  // [k-1][batch]
    std::vector<std::array<double, kNumBatches>> den_cum;
    std::array<std::size_t, kNumBatches> batch_sizes{};
    std::size_t total_paths = 0;
};

inline TruncatedSums accumulate_blocking_sums(const DistributionSpec& Y, const DistributionSpec& S,
                                              const MonteCarloConfig& mc, std::size_t min_terms = 0,
                                              bool stop_on_denominator = false) {
    validate(Y);
    validate(S);
    validate(mc);
    if (min_terms > mc.k_max)
        throw std::invalid_argument("requested truncation point exceeds k_max");

    const std::size_t n = mc.samples;
    TruncatedSums out;
    out.total_paths = n;

    std::vector<SampleStream> streams;
    streams.reserve(kNumBatches);
    std::array<std::size_t, kNumBatches> offsets{};
    {
        std::size_t off = 0;
        for (std::size_t b = 0; b < kNumBatches; ++b) {
            out.batch_sizes[b] = batch_size(n, b);
            offsets[b] = off;
            off += out.batch_sizes[b];
            streams.emplace_back(Y, mc.seed, b);
        }
    }

    std::vector<double> paths(n, 0.0);  // A_k per sample path
    double watch_total = 0.0;
    for (std::size_t k = 1; k <= mc.k_max; ++k) {
        std::array<double, kNumBatches> num_k{}, den_k{};
        for (std::size_t b = 0; b < kNumBatches; ++b) {
            double ni = 0.0, di = 0.0;
            SampleStream& ys = streams[b];
            const std::size_t end = offsets[b] + out.batch_sizes[b];
            for (std::size_t i = offsets[b]; i < end; ++i) {
                paths[i] += ys.next();
                const double t = ccdf(S, paths[i]);
                di += t;
                ni += paths[i] * t;
            }
            num_k[b] = ni;
            den_k[b] = di;
        }

        std::array<double, kNumBatches> nc = out.num_cum.empty() ? std::array<double, kNumBatches>{}
                                                                 : out.num_cum.back();
        std::array<double, kNumBatches> dc = out.den_cum.empty() ? std::array<double, kNumBatches>{}
                                                                 : out.den_cum.back();
        double num_inc = 0.0, den_inc = 0.0;
        for (std::size_t b = 0; b < kNumBatches; ++b) {
            nc[b] += num_k[b];
            dc[b] += den_k[b];
            num_inc += num_k[b];
            den_inc += den_k[b];
        }
        out.num_cum.push_back(nc);
        out.den_cum.push_back(dc);
        out.terms = k;

        const double watch_inc = stop_on_denominator ? den_inc : num_inc;
        watch_total += watch_inc;
        if (k >= mc.k_min && k >= min_terms && watch_inc <= mc.tail_tol * watch_total) {
            out.converged = true;
            break;
        }
    }
    return out;
}

struct RatioStats {
    double value = 0.0;
    double std_error = 0.0;
};

/// Middle term of the blocking age read at truncation point k (1-based):
/// mean(num)/ (1 + mean(den)), batch-means standard error.
inline RatioStats blocking_middle_at(const TruncatedSums& s, std::size_t k) {
    const auto& nc = s.num_cum.at(k - 1);
    const auto& dc = s.den_cum.at(k - 1);
    std::array<double, kNumBatches> per_batch{};
    double num_tot = 0.0, den_tot = 0.0;
    for (std::size_t b = 0; b < kNumBatches; ++b) {
        const double m = static_cast<double>(s.batch_sizes[b]);
        per_batch[b] = (nc[b] / m) / (1.0 + dc[b] / m);
        num_tot += nc[b];
        den_tot += dc[b];
    }
    const double n = static_cast<double>(s.total_paths);
    return {(num_tot / n) / (1.0 + den_tot / n), batch_standard_error(per_batch)};
}

inline KEstimate expected_k_from(const TruncatedSums& s) {
    const auto& dc = s.den_cum.back();
    std::array<double, kNumBatches> per_batch{};
    double den_tot = 0.0;
    for (std::size_t b = 0; b < kNumBatches; ++b) {
        per_batch[b] = 1.0 + dc[b] / static_cast<double>(s.batch_sizes[b]);
        den_tot += dc[b];
    }
    KEstimate k;
    k.value = 1.0 + den_tot / static_cast<double>(s.total_paths);
    k.method = Method::truncated_mc;
    k.std_error = batch_standard_error(per_batch);
    k.terms_used = s.terms;
    k.truncation_warning = !s.converged;
    return k;
}

}  // namespace detail

/// Blocking discipline, general interarrival Y and general service S.
/// Truncated-sum Monte Carlo on common interarrival paths:
///   age = E[Y^2]/(2 E[Y]) + sum_k E[A_k ccdf_S(A_k)] / (1 + sum_k E[ccdf_S(A_k)]) + E[S].
inline AgeEstimate age_gg_blocking(const DistributionSpec& Y, const DistributionSpec& S,
                                   const MonteCarloConfig& mc) {
    detail::require_positive_mean(Y, "arrival");
    const auto sums = detail::accumulate_blocking_sums(Y, S, mc);
    const auto mid = detail::blocking_middle_at(sums, sums.terms);
    AgeEstimate e;
    e.age = renewal_process_age(Y) + mid.value + mean(S);
    e.method = Method::truncated_mc;
    e.std_error = mid.std_error;
    e.terms_used = sums.terms;
    e.truncation_warning = !sums.converged;
    return e;
}

/// Mean number of arrivals per effective interarrival, 1 + sum_k E[ccdf_S(A_k)].
/// Closed form for exponential service (1/(1 - E[e^{-mu Y}])) or exponential
/// arrivals ((E[Y]+E[S])/E[Y]); truncated-sum Monte Carlo otherwise.
inline KEstimate expected_k_blocking(const DistributionSpec& Y, const DistributionSpec& S,
                                     const MonteCarloConfig& mc) {
    validate(Y);
    validate(S);
    detail::require_positive_mean(Y, "arrival");
    KEstimate k;
    if (S.family == Family::exponential) {
        k.value = 1.0 / (1.0 - laplace(Y, S.rate));
        return k;
    }
    if (Y.family == Family::exponential) {
        k.value = (mean(Y) + mean(S)) / mean(Y);
        return k;
    }
    const auto sums = detail::accumulate_blocking_sums(Y, S, mc, 0, /*stop_on_denominator=*/true);
    return detail::expected_k_from(sums);
}

/// Blocking, exponential service with rate mu (closed form):
/// E[Y^2]/(2 E[Y]) + E[Y e^{-mu Y}]/(1 - E[e^{-mu Y}]) + 1/mu.
inline AgeEstimate age_gm_blocking(const DistributionSpec& Y, double mu) {
    validate(Y);
    detail::require_positive_mean(Y, "arrival");
    if (!(mu > 0)) throw std::invalid_argument("service rate must be positive");
    const double l = laplace(Y, mu);
    AgeEstimate e;
    e.age = renewal_process_age(Y) + weighted_laplace(Y, mu) / (1.0 - l) + 1.0 / mu;
    return e;
}

/// Same model as age_gm_blocking through the conditional-service identity:
/// E[Y^2]/(2 E[Y]) + 2 E[S] - E[S | S <= Y], with the conditional mean
/// estimated by pair sampling.
inline AgeEstimate age_gm_blocking_equiv(const DistributionSpec& Y, double mu,
                                         const MonteCarloConfig& mc) {
    validate(Y);
    validate(mc);
    detail::require_positive_mean(Y, "arrival");
    if (!(mu > 0)) throw std::invalid_argument("service rate must be positive");
    const DistributionSpec S = exponential(mu);

    std::array<double, kNumBatches> per_batch{};
    double sum_all = 0.0;
    std::size_t cnt_all = 0;
    for (std::size_t b = 0; b < kNumBatches; ++b) {
        SampleStream ys(Y, mc.seed, kNumBatches + b);
        SampleStream ss(S, mc.seed, 2 * kNumBatches + b);
        double sum = 0.0;
        std::size_t cnt = 0;
        const std::size_t m = detail::batch_size(mc.samples, b);
        for (std::size_t i = 0; i < m; ++i) {
            const double y = ys.next();
            const double s = ss.next();
            if (s <= y) {
                sum += s;
                ++cnt;
            }
        }
        per_batch[b] = cnt ? sum / static_cast<double>(cnt) : std::nan("");
        sum_all += sum;
        cnt_all += cnt;
    }
    if (cnt_all == 0)
        throw std::domain_error("no successful service completed before an arrival in mc.samples draws");

    AgeEstimate e;
    e.age = renewal_process_age(Y) + 2.0 / mu - sum_all / static_cast<double>(cnt_all);
    e.method = Method::truncated_mc;
    e.std_error = detail::batch_standard_error(per_batch);
    return e;
}

/// Blocking, exponential arrivals with rate lambda (closed form):
/// 1/lambda + lambda E[S^2] / (2 (1 + lambda E[S])) + E[S].
inline AgeEstimate age_mg_blocking(double lambda, const DistributionSpec& S) {
    validate(S);
    if (!(lambda > 0)) throw std::invalid_argument("arrival rate must be positive");
    AgeEstimate e;
    e.age = 1.0 / lambda + lambda * moment(S, 2) / (2.0 * (1.0 + lambda * mean(S))) + mean(S);
    return e;
}

/// Fully exponential blocking reduction: 1/lambda + 2/mu - 1/(lambda+mu).
inline AgeEstimate age_mm_blocking(double lambda, double mu) {
    if (!(lambda > 0) || !(mu > 0)) throw std::invalid_argument("rates must be positive");
    AgeEstimate e;
    e.age = 1.0 / lambda + 2.0 / mu - 1.0 / (lambda + mu);
    return e;
}

/// Upper bound for log-concave interarrivals, general service:
/// E[Y^2]/(2 E[Y]) + E[S^2]/(2 E[K] E[Y]) + E[S]. Outside log-concavity the
/// value is still computed and flagged.
inline AgeEstimate bound_lcg_blocking(const DistributionSpec& Y, const DistributionSpec& S,
                                      const MonteCarloConfig& mc) {
    const KEstimate k = expected_k_blocking(Y, S, mc);
    const double m1y = mean(Y);
    const double m2s = moment(S, 2);
    AgeEstimate e;
    e.age = renewal_process_age(Y) + m2s / (2.0 * k.value * m1y) + mean(S);
    e.method = k.method;
    e.std_error = k.std_error > 0 ? m2s / (2.0 * k.value * k.value * m1y) * k.std_error : 0.0;
    e.terms_used = k.terms_used;
    e.truncation_warning = k.truncation_warning;
    e.bound_not_guaranteed = !is_log_concave(Y);
    return e;
}

/// Upper bound for log-concave interarrivals, exponential service (closed form):
/// E[Y^2]/(2 E[Y]) + (1 - E[e^{-mu Y}])/(mu^2 E[Y]) + 1/mu.
inline AgeEstimate bound_lcm_blocking(const DistributionSpec& Y, double mu) {
    validate(Y);
    detail::require_positive_mean(Y, "arrival");
    if (!(mu > 0)) throw std::invalid_argument("service rate must be positive");
    AgeEstimate e;
    e.age = renewal_process_age(Y) + (1.0 - laplace(Y, mu)) / (mu * mu * mean(Y)) + 1.0 / mu;
    e.bound_not_guaranteed = !is_log_concave(Y);
    return e;
}

/// Decoupled upper bound (no cross-term): E[Y^2]/(2 E[Y]) + E[S^2]/(2 E[S]) + E[S].
inline AgeEstimate bound_lcg_decoupled(const DistributionSpec& Y, const DistributionSpec& S) {
    validate(Y);
    validate(S);
    detail::require_positive_mean(Y, "arrival");
    if (!(mean(S) > 0)) throw std::domain_error("decoupled bound undefined for zero-mean service");
    AgeEstimate e;
    e.age = renewal_process_age(Y) + moment(S, 2) / (2.0 * mean(S)) + mean(S);
    e.bound_not_guaranteed = !is_log_concave(Y);
    return e;
}

/// Upper bound by exponentializing the arrivals at equal mean: the exponential
/// arrival value 1/E[Y] fed through the exponential-arrival closed form.
/// Guaranteed for log-concave Y and S; flagged otherwise.
inline AgeEstimate bound_mlc_blocking(const DistributionSpec& Y, const DistributionSpec& S) {
    validate(Y);
    validate(S);
    detail::require_positive_mean(Y, "arrival");
    AgeEstimate e = age_mg_blocking(1.0 / mean(Y), S);
    e.bound_not_guaranteed = !(is_log_concave(Y) && is_log_concave(S));
    return e;
}

/// Exact blocking age with the cheapest applicable path: closed form when the
/// service (or else the arrival) is exponential, truncated Monte Carlo otherwise.
inline AgeEstimate age_blocking(const DistributionSpec& Y, const DistributionSpec& S,
                                const MonteCarloConfig& mc) {
    if (S.family == Family::exponential) return age_gm_blocking(Y, S.rate);
    if (Y.family == Family::exponential) return age_mg_blocking(Y.rate, S);
    return age_gg_blocking(Y, S, mc);
}

}  // namespace aoi
