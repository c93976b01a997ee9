#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aoi/blocking.hpp"
#include "aoi/preemption.hpp"

using namespace aoi;
using Catch::Approx;

namespace {

MonteCarloConfig quick_mc(std::size_t samples = 200000, std::uint64_t seed = 13) {
    MonteCarloConfig mc;
    mc.samples = samples;
    mc.seed = seed;
    return mc;
}

double zscore(const AgeEstimate& a, const AgeEstimate& b) {
    return std::abs(a.age - b.age) / std::hypot(a.std_error, b.std_error);
}

}  // namespace

TEST_CASE("fully exponential closed forms meet at 2.0", "[preemption]") {
    const auto via_mm = age_mm_preemption(1, 1);
    const auto via_gm = age_gm_preemption(exponential(1), 1);
    const auto via_mg = age_mg_preemption(1, exponential(1));
    CHECK(via_mm.age == Approx(2.0).epsilon(1e-12));
    CHECK(via_gm.age == Approx(2.0).epsilon(1e-12));
    CHECK(via_mg.age == Approx(2.0).epsilon(1e-12));
    CHECK(via_mm.p_success.value() == Approx(0.5).epsilon(1e-12));

    CHECK(age_mm_preemption(2, 3).age == Approx(1.0 / 2.0 + 1.0 / 3.0).epsilon(1e-12));
    CHECK(age_gm_preemption(exponential(2), 3).age == Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(age_mg_preemption(2, exponential(3)).age == Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("exponential-service preemption is the renewal age plus a service time",
          "[preemption]") {
    CHECK(age_gm_preemption(deterministic(1), 2).age == Approx(1.0).epsilon(1e-12));
    CHECK(age_gm_preemption(gamma(2, 2), 1).age == Approx(1.75).epsilon(1e-12));
    CHECK(age_gm_preemption(uniform(0, 2), 3).age == Approx(2.0 / 3.0 + 1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(age_gm_preemption(deterministic(1), 0.0), std::invalid_argument);
}

TEST_CASE("exponential-arrival preemption anchors", "[preemption]") {
    // deterministic service tuned so e^{-lambda s} = 1/2
    CHECK(age_mg_preemption(1, deterministic(std::log(2.0))).age == Approx(2.0).epsilon(1e-12));
    CHECK(age_mg_preemption(1, deterministic(0)).age == Approx(1.0).epsilon(1e-12));
    CHECK(age_mg_preemption(2, gamma(2, 2)).age == Approx(2.0).epsilon(1e-12));
    // deterministic service far beyond the interarrival scale starves the system
    CHECK_THROWS_AS(age_mg_preemption(1, deterministic(1e10)), std::domain_error);
    CHECK_THROWS_AS(age_mg_preemption(0.0, deterministic(1)), std::invalid_argument);
}

TEST_CASE("success statistics", "[preemption]") {
    const auto mc = quick_mc();
    const auto mm = success_stats(exponential(1), exponential(1), mc);
    CHECK(mm.p_success == Approx(0.5).epsilon(1e-12));
    CHECK(mm.mean_success_service == Approx(0.5).epsilon(1e-12));
    CHECK(mm.mean_blocked_interarrival == Approx(0.5).epsilon(1e-12));

    const auto dm = success_stats(deterministic(1), exponential(1), mc);
    CHECK(dm.p_success == Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(dm.mean_blocked_interarrival == Approx(1.0).epsilon(1e-12));

    const auto md = success_stats(exponential(1), deterministic(2), mc);
    CHECK(md.p_success == Approx(std::exp(-2.0)).epsilon(1e-12));

    // ties count as successes: equal deterministic pair always succeeds
    const auto dd = success_stats(deterministic(1), deterministic(1), mc);
    CHECK(dd.p_success == Approx(1.0).epsilon(1e-12));
    CHECK(dd.mean_success_service == Approx(1.0).epsilon(1e-12));
    CHECK(std::isnan(dd.mean_blocked_interarrival));

    // general pair: estimated p agrees with the analytic value 1 - E[ccdf_S(Y)]
    const auto gg = success_stats(gamma(2, 2), gamma(2, 4), mc);
    CHECK(gg.p_success == Approx(0.7407407407).margin(0.01));
    CHECK(gg.mean_success_service > 0.0);
    CHECK(gg.mean_success_service < mean(gamma(2, 4)));
}

TEST_CASE("completed service is stochastically smaller than service", "[preemption]") {
    const auto mc = quick_mc();
    struct Pair {
        DistributionSpec y, s;
    };
    const Pair pairs[] = {{exponential(1), gamma(2, 2)},
                          {gamma(2, 2), uniform(0, 1)},
                          {uniform(0.5, 1.5), gamma(2, 4)},
                          {deterministic(1), exponential(1)}};
    for (const auto& [y, s] : pairs) {
        const auto st = success_stats(y, s, mc);
        INFO(encode_distribution(y) << " / " << encode_distribution(s));
        CHECK(st.p_success > 0.0);
        CHECK(st.p_success <= 1.0);
        CHECK(st.mean_success_service <= mean(s) + 1e-12);
    }
}

TEST_CASE("general estimator agrees with the closed forms", "[preemption]") {
    const auto mc = quick_mc(400000);
    // exponential service: middle term closed, conditional mean by pairs
    const auto a = age_gg_preemption(deterministic(1), exponential(1), mc);
    const auto a_closed = age_gm_preemption(deterministic(1), 1);
    CHECK(zscore(a, a_closed) < 4.0);
    CHECK(a.p_success.value() == Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));

    // exponential arrivals: fully sampled path against the transform form
    const auto b = age_gg_preemption(exponential(1), gamma(2, 2), mc);
    const auto b_closed = age_mg_preemption(1, gamma(2, 2));
    CHECK(zscore(b, b_closed) < 4.0);

    const auto c = age_gg_preemption(exponential(1), uniform(0, 1), mc);
    const auto c_closed = age_mg_preemption(1, uniform(0, 1));
    CHECK(zscore(c, c_closed) < 4.0);

    // fully exponential resolves in closed form with zero error
    const auto d = age_gg_preemption(exponential(1), exponential(1), mc);
    CHECK(d.age == Approx(2.0).epsilon(1e-12));
    CHECK(d.std_error == 0.0);
    CHECK(d.method == Method::closed_form);
}

TEST_CASE("estimator reports a failure when nothing ever completes", "[preemption]") {
    // deterministic service strictly longer than every interarrival
    CHECK_THROWS_AS(age_gg_preemption(deterministic(1), deterministic(2), quick_mc(1000)),
                    std::domain_error);
    CHECK_THROWS_AS(success_stats(uniform(0, 1), deterministic(2), quick_mc(1000)),
                    std::domain_error);
}

TEST_CASE("preemption bound dominates the exact age", "[preemption]") {
    const auto mc = quick_mc();
    struct Pair {
        DistributionSpec y, s;
    };
    const Pair pairs[] = {{deterministic(1), exponential(1)},
                          {gamma(2, 2), gamma(2, 4)},
                          {uniform(0.5, 1.5), deterministic(0.5)},
                          {exponential(1), gamma(2, 2)},
                          {gamma(3, 3), uniform(0, 1)}};
    for (const auto& [y, s] : pairs) {
        const auto exact = age_gg_preemption(y, s, mc);
        const auto bound = bound_gg_preemption(y, s, mc);
        INFO(encode_distribution(y) << " / " << encode_distribution(s));
        CHECK(bound.age >= exact.age - 3.0 * std::hypot(exact.std_error, bound.std_error));
        CHECK_FALSE(bound.bound_not_guaranteed);
    }
    // fully exponential anchor: 1 + 1*0.5/0.5 + 0.5
    const auto mm = bound_gg_preemption(exponential(1), exponential(1), mc);
    CHECK(mm.age == Approx(2.5).epsilon(1e-12));
    // degenerate interarrivals decorrelate Y from the ccdf term, so the bound is exact
    const auto det_exact = age_gg_preemption(deterministic(1), exponential(1), mc);
    const auto det_bound = bound_gg_preemption(deterministic(1), exponential(1), mc);
    CHECK(det_bound.age ==
          Approx(det_exact.age).margin(std::hypot(det_exact.std_error, det_bound.std_error) + 1e-12));
    // unlike the blocking bounds, this one needs no shape assumption at all
    CHECK_FALSE(bound_gg_preemption(gamma(0.5, 0.5), exponential(1), mc).bound_not_guaranteed);
}

TEST_CASE("dispatcher picks the closed forms where they exist", "[preemption]") {
    const auto mc = quick_mc(50000);
    CHECK(age_preemption(gamma(2, 2), exponential(1), mc).age == Approx(1.75).epsilon(1e-12));
    CHECK(age_preemption(exponential(1), deterministic(std::log(2.0)), mc).age ==
          Approx(2.0).epsilon(1e-12));
    CHECK(age_preemption(gamma(2, 2), gamma(2, 4), mc).method == Method::truncated_mc);
}

TEST_CASE("time rescaling scales the age", "[preemption]") {
    const double c = 2.0;
    CHECK(age_mm_preemption(1.0 / c, 2.0 / c).age ==
          Approx(c * age_mm_preemption(1, 2).age).epsilon(1e-12));
    CHECK(age_gm_preemption(scaled(gamma(2, 2), c), 1.0 / c).age ==
          Approx(c * age_gm_preemption(gamma(2, 2), 1).age).epsilon(1e-12));
    CHECK(age_mg_preemption(1.0 / c, scaled(gamma(2, 2), c)).age ==
          Approx(c * age_mg_preemption(1, gamma(2, 2)).age).epsilon(1e-12));

    const auto mc = quick_mc(50000);
    const auto base = age_gg_preemption(gamma(2, 2), gamma(2, 4), mc);
    const auto big = age_gg_preemption(scaled(gamma(2, 2), c), scaled(gamma(2, 4), c), mc);
    CHECK(big.age == Approx(c * base.age).epsilon(1e-9));
}

TEST_CASE("preemption never beats blocking for exponential service", "[preemption]") {
    // with memoryless service, preempting costs no progress and swaps in a
    // fresher update, so it can only lower the age
    for (const auto& y : {deterministic(1), gamma(2, 2), uniform(0.5, 1.5)}) {
        for (double mu : {0.5, 1.0, 2.0}) {
            INFO(encode_distribution(y) << " mu=" << mu);
            CHECK(age_gm_preemption(y, mu).age <= age_gm_blocking(y, mu).age + 1e-12);
        }
    }
}
