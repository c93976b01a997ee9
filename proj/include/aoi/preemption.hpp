#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "aoi/blocking.hpp"
#include "aoi/distribution.hpp"
#include "aoi/estimate.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

namespace aoi {

namespace detail {

// E[ccdf_S(Y)] and E[Y ccdf_S(Y)] estimated on shared Y samples with the
// service tail evaluated exactly.
struct ConditionalSums {
    std::array<double, kNumBatches> f{}, yf{};
    std::array<std::size_t, kNumBatches> sizes{};
    double f_tot = 0.0, yf_tot = 0.0;
    std::size_t n = 0;
};

inline ConditionalSums conditional_preemption_sums(const DistributionSpec& Y, const DistributionSpec& S,
                                                   const MonteCarloConfig& mc) {
    ConditionalSums out;
    out.n = mc.samples;
    for (std::size_t b = 0; b < kNumBatches; ++b) {
        SampleStream ys(Y, mc.seed, b);
        out.sizes[b] = batch_size(mc.samples, b);
        double f = 0.0, yf = 0.0;
        for (std::size_t i = 0; i < out.sizes[b]; ++i) {
            const double y = ys.next();
            const double t = ccdf(S, y);
            f += t;
            yf += y * t;
        }
        out.f[b] = f;
        out.yf[b] = yf;
        out.f_tot += f;
        out.yf_tot += yf;
    }
    return out;
}

struct PairConditional {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t successes = 0;
};

// E[S | S <= Y] by pair sampling (independent Y and S streams per batch).
inline PairConditional pair_mean_success_service(const DistributionSpec& Y, const DistributionSpec& S,
                                                 const MonteCarloConfig& mc) {
    std::array<double, kNumBatches> per_batch{};
    double sum_all = 0.0;
    std::size_t cnt_all = 0;
    for (std::size_t b = 0; b < kNumBatches; ++b) {
        SampleStream ys(Y, mc.seed, kNumBatches + b);
        SampleStream ss(S, mc.seed, 2 * kNumBatches + b);
        const std::size_t m = batch_size(mc.samples, b);
        double sum = 0.0;
        std::size_t cnt = 0;
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
        throw std::domain_error("estimated success probability is 0 after mc.samples draws");
    return {sum_all / static_cast<double>(cnt_all), batch_standard_error(per_batch), cnt_all};
}

}  // namespace detail

/// Success probability Pr(S <= Y), mean service of successful updates
/// E[S | S <= Y], and mean interarrival of blocked cycles E[Y | Y < S].
/// A simultaneous departure and arrival counts as a success (the departure is
/// processed first). mean_blocked_interarrival is NaN when nothing is blocked.
inline SuccessStats success_stats(const DistributionSpec& Y, const DistributionSpec& S,
                                  const MonteCarloConfig& mc) {
    validate(Y);
    validate(S);
    validate(mc);
    detail::require_positive_mean(Y, "arrival");

    const bool y_exp = Y.family == Family::exponential;
    const bool s_exp = S.family == Family::exponential;
    SuccessStats st;

    if (s_exp) {
        const double l = laplace(Y, S.rate);
        st.p_success = 1.0 - l;
        st.mean_blocked_interarrival = weighted_laplace(Y, S.rate) / l;
    } else if (y_exp) {
        const double ls = laplace(S, Y.rate);
        st.p_success = ls;
        st.mean_blocked_interarrival =
            ls < 1.0 ? 1.0 / Y.rate - weighted_laplace(S, Y.rate) / (1.0 - ls) : std::nan("");
    } else {
        const auto cs = detail::conditional_preemption_sums(Y, S, mc);
        const double fbar = cs.f_tot / static_cast<double>(cs.n);
        st.p_success = 1.0 - fbar;
        if (!(st.p_success > 0))
            throw std::domain_error("estimated success probability is 0 after mc.samples draws");
        st.mean_blocked_interarrival = cs.f_tot > 0 ? cs.yf_tot / cs.f_tot : std::nan("");
    }

    if (y_exp && s_exp)
        st.mean_success_service = 1.0 / (Y.rate + S.rate);
    else
        st.mean_success_service = detail::pair_mean_success_service(Y, S, mc).value;
    return st;
}

/// Preemption-in-service, general interarrival Y and general service S:
///   age = E[Y^2]/(2 E[Y]) + E[Y ccdf_S(Y)]/(1 - E[ccdf_S(Y)]) + E[S | S <= Y].
/// The middle term is closed-form for exponential service; the conditional
/// service mean is closed-form only in the fully exponential case.
inline AgeEstimate age_gg_preemption(const DistributionSpec& Y, const DistributionSpec& S,
                                     const MonteCarloConfig& mc) {
    validate(Y);
    validate(S);
    validate(mc);
    detail::require_positive_mean(Y, "arrival");

    const bool y_exp = Y.family == Family::exponential;
    const bool s_exp = S.family == Family::exponential;

    double mid = 0.0, mid_se = 0.0, p = 0.0;
    if (s_exp) {
        const double l = laplace(Y, S.rate);
        p = 1.0 - l;
        mid = weighted_laplace(Y, S.rate) / p;
    } else {
        const auto cs = detail::conditional_preemption_sums(Y, S, mc);
        const double n = static_cast<double>(cs.n);
        p = 1.0 - cs.f_tot / n;
        if (!(p > 0))
            throw std::domain_error("estimated success probability is 0 after mc.samples draws");
        std::array<double, kNumBatches> per_batch{};
        for (std::size_t b = 0; b < kNumBatches; ++b) {
            const double m = static_cast<double>(cs.sizes[b]);
            const double pb = 1.0 - cs.f[b] / m;
            per_batch[b] = pb > 0 ? (cs.yf[b] / m) / pb : std::nan("");
        }
        mid = (cs.yf_tot / n) / p;
        mid_se = detail::batch_standard_error(per_batch);
    }

    double stil = 0.0, stil_se = 0.0;
    if (y_exp && s_exp) {
        stil = 1.0 / (Y.rate + S.rate);
    } else {
        const auto pc = detail::pair_mean_success_service(Y, S, mc);
        stil = pc.value;
        stil_se = pc.std_error;
    }

    AgeEstimate e;
    e.age = renewal_process_age(Y) + mid + stil;
    e.method = (y_exp && s_exp) ? Method::closed_form : Method::truncated_mc;
    e.std_error = std::hypot(mid_se, stil_se);
    e.p_success = p;
    return e;
}

/// Upper bound on the preemptive age: the middle term's E[Y ccdf_S(Y)] is
/// replaced by E[Y] E[ccdf_S(Y)]. Guaranteed for log-concave Y, flagged otherwise.
inline AgeEstimate bound_gg_preemption(const DistributionSpec& Y, const DistributionSpec& S,
                                       const MonteCarloConfig& mc) {
    validate(Y);
    validate(S);
    validate(mc);
    detail::require_positive_mean(Y, "arrival");

    const bool y_exp = Y.family == Family::exponential;
    const bool s_exp = S.family == Family::exponential;
    const double m1y = mean(Y);

    double mid = 0.0, mid_se = 0.0, p = 0.0;
    if (s_exp) {
        const double l = laplace(Y, S.rate);
        p = 1.0 - l;
        mid = m1y * l / p;
    } else {
        const auto cs = detail::conditional_preemption_sums(Y, S, mc);
        const double n = static_cast<double>(cs.n);
        const double fbar = cs.f_tot / n;
        p = 1.0 - fbar;
        if (!(p > 0))
            throw std::domain_error("estimated success probability is 0 after mc.samples draws");
        std::array<double, kNumBatches> per_batch{};
        for (std::size_t b = 0; b < kNumBatches; ++b) {
            const double m = static_cast<double>(cs.sizes[b]);
            const double fb = cs.f[b] / m;
            per_batch[b] = fb < 1.0 ? m1y * fb / (1.0 - fb) : std::nan("");
        }
        mid = m1y * fbar / p;
        mid_se = detail::batch_standard_error(per_batch);
    }

    double stil = 0.0, stil_se = 0.0;
    if (y_exp && s_exp) {
        stil = 1.0 / (Y.rate + S.rate);
    } else {
        const auto pc = detail::pair_mean_success_service(Y, S, mc);
        stil = pc.value;
        stil_se = pc.std_error;
    }

    AgeEstimate e;
    e.age = renewal_process_age(Y) + mid + stil;
    e.method = (y_exp && s_exp) ? Method::closed_form : Method::truncated_mc;
    e.std_error = std::hypot(mid_se, stil_se);
    // holds for any distributions: the numerator swap only needs E[Y|Y<S] <= E[Y]
    e.p_success = p;
    return e;
}

/// Preemption with exponential service (closed form): E[Y^2]/(2 E[Y]) + 1/mu.
inline AgeEstimate age_gm_preemption(const DistributionSpec& Y, double mu) {
    validate(Y);
    detail::require_positive_mean(Y, "arrival");
    if (!(mu > 0)) throw std::invalid_argument("service rate must be positive");
    AgeEstimate e;
    e.age = renewal_process_age(Y) + 1.0 / mu;
    e.p_success = 1.0 - laplace(Y, mu);
    return e;
}

/// Preemption with exponential arrivals (closed form): 1/(lambda E[e^{-lambda S}]).
inline AgeEstimate age_mg_preemption(double lambda, const DistributionSpec& S) {
    validate(S);
    if (!(lambda > 0)) throw std::invalid_argument("arrival rate must be positive");
    const double l = laplace(S, lambda);
    if (!(l > 0))
        throw std::domain_error("service Laplace transform underflows to 0; age is not representable");
    AgeEstimate e;
    e.age = 1.0 / (lambda * l);
    e.p_success = l;
    return e;
}

/// Fully exponential preemption reduction: 1/lambda + 1/mu.
inline AgeEstimate age_mm_preemption(double lambda, double mu) {
    if (!(lambda > 0) || !(mu > 0)) throw std::invalid_argument("rates must be positive");
    AgeEstimate e;
    e.age = 1.0 / lambda + 1.0 / mu;
    e.p_success = mu / (lambda + mu);
    return e;
}

/// Exact preemptive age with the cheapest applicable path.
inline AgeEstimate age_preemption(const DistributionSpec& Y, const DistributionSpec& S,
                                  const MonteCarloConfig& mc) {
    if (S.family == Family::exponential) return age_gm_preemption(Y, S.rate);
    if (Y.family == Family::exponential) return age_mg_preemption(Y.rate, S);
    return age_gg_preemption(Y, S, mc);
}

}  // namespace aoi
