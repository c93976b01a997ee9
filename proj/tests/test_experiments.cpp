#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "aoi/experiments.hpp"

using namespace aoi;
using Catch::Approx;

namespace {

MonteCarloConfig quick_mc(std::size_t samples = 100000, std::uint64_t seed = 5) {
    MonteCarloConfig mc;
    mc.samples = samples;
    mc.seed = seed;
    return mc;
}

double num_at(const ResultTable& t, std::size_t row, std::string_view col) {
    return std::stod(t.at(row, col).text);
}

}  // namespace

TEST_CASE("evaluator tokens expand and validate against the model", "[experiments]") {
    QueueModel gm{gamma(2, 2), exponential(2), Discipline::blocking};
    CHECK(expand_evaluators(gm, {"exact"}) == std::vector<std::string>{"exact-gm"});
    CHECK(expand_evaluators(gm, {"bounds"}) ==
          std::vector<std::string>{"bound-lcg", "bound-lcm", "bound-decoupled", "bound-mlc"});
    CHECK(expand_evaluators(gm, {"sim"}) == std::vector<std::string>{"simulation"});

    QueueModel mg{exponential(1), gamma(2, 4), Discipline::blocking};
    CHECK(expand_evaluators(mg, {"exact"}) == std::vector<std::string>{"exact-mg"});
    CHECK(expand_evaluators(mg, {"bounds"}) ==
          std::vector<std::string>{"bound-lcg", "bound-decoupled", "bound-mlc"});
    CHECK_THROWS_AS(expand_evaluators(mg, {"exact-gm"}), std::invalid_argument);
    CHECK_THROWS_AS(expand_evaluators(mg, {"bound-lcm"}), std::invalid_argument);
    CHECK_THROWS_AS(expand_evaluators(mg, {"gm-equiv"}), std::invalid_argument);

    QueueModel gg{gamma(2, 2), gamma(2, 4), Discipline::blocking};
    CHECK(expand_evaluators(gg, {"exact"}) == std::vector<std::string>{"exact-gg"});

    QueueModel pre{gamma(2, 2), gamma(2, 2), Discipline::preemption};
    CHECK(expand_evaluators(pre, {"bounds"}) == std::vector<std::string>{"bound-preemption"});
    CHECK_THROWS_AS(expand_evaluators(pre, {"bound-lcg"}), std::invalid_argument);
    CHECK_THROWS_AS(expand_evaluators(pre, {"gm-equiv"}), std::invalid_argument);
    QueueModel blk{exponential(1), exponential(1), Discipline::blocking};
    CHECK_THROWS_AS(expand_evaluators(blk, {"bound-preemption"}), std::invalid_argument);
    CHECK_THROWS_AS(expand_evaluators(blk, {"thm1"}), std::invalid_argument);
    CHECK_THROWS_AS(expand_evaluators(blk, {}), std::invalid_argument);
}

TEST_CASE("sweeps respect the grid order and the documented monotonicities", "[experiments]") {
    // growing arrival rate at fixed exponential service lowers the age
    SweepSpec spec;
    spec.model = {gamma(2, 1), exponential(2), Discipline::blocking};
    spec.axes = {{false, "rate", {1.0, 2.0, 4.0}}};
    spec.mc = quick_mc();
    const auto t = run_sweep(spec);
    REQUIRE(t.rows().size() == 3);
    CHECK(t.at(0, "evaluator").text == "exact-gm");
    CHECK(t.at(0, "param1").text == "1");
    CHECK(t.at(1, "param1").text == "2");
    CHECK(t.at(2, "param1").text == "4");
    CHECK(num_at(t, 0, "age") > num_at(t, 1, "age"));
    CHECK(num_at(t, 1, "age") > num_at(t, 2, "age"));

    // growing shape at fixed rates raises the age
    SweepSpec shape;
    shape.model = {gamma(1, 2), exponential(2), Discipline::blocking};
    shape.axes = {{false, "shape", {1.0, 2.0, 4.0}}};
    shape.mc = quick_mc();
    const auto ts = run_sweep(shape);
    CHECK(num_at(ts, 0, "age") < num_at(ts, 1, "age"));
    CHECK(num_at(ts, 1, "age") < num_at(ts, 2, "age"));

    // preemption against gamma service is not monotone in the arrival rate
    SweepSpec pre;
    pre.model = {exponential(1), gamma(2, 2), Discipline::preemption};
    pre.axes = {{false, "rate", {0.5, 1.0, 2.0, 4.0, 8.0}}};
    pre.mc = quick_mc();
    const auto tp = run_sweep(pre);
    REQUIRE(tp.rows().size() == 5);
    // (2+l)^2/(4l): falls to the minimum at l=2, then climbs
    CHECK(num_at(tp, 0, "age") > num_at(tp, 1, "age"));
    CHECK(num_at(tp, 1, "age") > num_at(tp, 2, "age"));
    CHECK(num_at(tp, 2, "age") == Approx(2.0).epsilon(1e-12));
    CHECK(num_at(tp, 3, "age") > num_at(tp, 2, "age"));
    CHECK(num_at(tp, 4, "age") > num_at(tp, 3, "age"));
}

TEST_CASE("two-axis sweeps enumerate the grid row-major", "[experiments]") {
    SweepSpec spec;
    spec.model = {exponential(1), exponential(1), Discipline::blocking};
    spec.axes = {{false, "rate", {1.0, 2.0}}, {true, "rate", {1.0, 3.0}}};
    spec.evaluators = {"exact", "bounds"};
    spec.mc = quick_mc();
    const auto t = run_sweep(spec);
    // 2 x 2 grid, 5 evaluators each (exact-gm + four bounds)
    REQUIRE(t.rows().size() == 20);
    CHECK(t.at(0, "param1").text == "1");
    CHECK(t.at(0, "param2").text == "1");
    CHECK(t.at(5, "param1").text == "1");
    CHECK(t.at(5, "param2").text == "3");
    CHECK(t.at(10, "param1").text == "2");
    CHECK(t.at(10, "param2").text == "1");
    CHECK(t.at(0, "evaluator").text == "exact-gm");
    CHECK(t.at(1, "evaluator").text == "bound-lcg");
    // cells carry 12 significant digits, so the text round-trip costs ~5e-12
    for (std::size_t r = 0; r < 20; r += 5)
        CHECK(num_at(t, r, "age") == Approx(age_mm_blocking(std::stod(t.at(r, "param1").text),
                                                            std::stod(t.at(r, "param2").text))
                                                .age)
                                         .epsilon(1e-11));
}

TEST_CASE("sweep validation fails before any computation", "[experiments]") {
    SweepSpec spec;
    spec.model = {gamma(2, 2), gamma(2, 4), Discipline::blocking};
    spec.mc = quick_mc();
    spec.axes = {};
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
    spec.axes = {{false, "rate", {1.0, 2.0}},
                 {true, "rate", {1.0, 2.0}},
                 {true, "shape", {1.0, 2.0}}};
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
    spec.axes = {{false, "rate", {2.0, 1.0}}};
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
    spec.axes = {{false, "rate", {0.0, 1.0}}};
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
    spec.axes = {{false, "mu", {1.0, 2.0}}};
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
    spec.axes = {{false, "rate", {1.0, 2.0}}};
    spec.evaluators = {"exact-gm"};  // service is not exponential
    CHECK_THROWS_AS(run_sweep(spec), std::invalid_argument);
}

TEST_CASE("sweep output does not depend on the worker count", "[experiments]") {
    SweepSpec spec;
    spec.model = {gamma(2, 2), gamma(2, 4), Discipline::blocking};
    spec.axes = {{false, "rate", {1.0, 2.0, 3.0, 4.0}}};
    spec.evaluators = {"exact", "bounds", "simulation"};
    spec.mc = quick_mc(50000);
    spec.sim.cycles = 20000;
    spec.threads = 1;
    const auto serial = run_sweep(spec).to_csv();
    spec.threads = 4;
    const auto parallel = run_sweep(spec).to_csv();
    CHECK(serial == parallel);
}

TEST_CASE("candidate instantiation hits the requested mean", "[experiments]") {
    for (const char* c : {"det", "exp", "gamma:shape=2", "gamma:shape=0.5", "uniform"}) {
        const auto d = instantiate_candidate(c, 1.7);
        INFO(c);
        CHECK(mean(d) == Approx(1.7).margin(1e-9));
    }
    CHECK(instantiate_candidate("det", 2.0).family == Family::deterministic);
    CHECK(instantiate_candidate("gamma:shape=2", 2.0).shape == Approx(2.0));
    CHECK_THROWS_AS(instantiate_candidate("weibull", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(instantiate_candidate("det", 0.0), std::invalid_argument);
}

TEST_CASE("fixed-mean comparison flags the argmin family", "[experiments]") {
    ComparisonSpec spec;
    spec.discipline = Discipline::blocking;
    spec.candidates = {"det", "gamma:shape=2", "exp"};
    spec.service = exponential(2);
    spec.mean_grid = {0.2, 0.5, 1.0, 2.0, 3.0};
    spec.mc = quick_mc();
    const auto t = compare_at_fixed_mean(spec);
    REQUIRE(t.rows().size() == 15);
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t base = i * 3;
        CHECK(t.at(base + 0, "evaluator").text == "det");
        // deterministic wins, exponential loses, at every mean
        CHECK(t.at(base + 0, "flags").text == "argmin");
        CHECK(num_at(t, base + 0, "age") < num_at(t, base + 1, "age"));
        CHECK(num_at(t, base + 1, "age") < num_at(t, base + 2, "age"));
    }
}

TEST_CASE("preemption comparison switches winners across the mean grid", "[experiments]") {
    ComparisonSpec spec;
    spec.discipline = Discipline::preemption;
    spec.candidates = {"det", "exp"};
    spec.service = gamma(2, 2);
    spec.mean_grid = {0.2, 3.0};
    spec.mc = quick_mc(200000);
    const auto t = compare_at_fixed_mean(spec);
    REQUIRE(t.rows().size() == 4);
    // frequent updates: preempting a gamma service too eagerly starves it, so
    // exponential arrivals win; sparse updates: deterministic wins
    CHECK(t.at(1, "flags").text == "argmin");
    CHECK(t.at(1, "evaluator").text == "exp");
    CHECK(t.at(2, "flags").text == "argmin");
    CHECK(t.at(2, "evaluator").text == "det");
}

TEST_CASE("comparison argmin is invariant under joint rescaling", "[experiments]") {
    ComparisonSpec spec;
    spec.discipline = Discipline::blocking;
    spec.candidates = {"det", "gamma:shape=2", "exp"};
    spec.service = exponential(2);
    spec.mean_grid = {0.5, 1.0};
    spec.mc = quick_mc();
    const auto base = compare_at_fixed_mean(spec);

    const double c = 3.0;
    spec.service = scaled(spec.service, c);
    for (double& m : spec.mean_grid) m *= c;
    const auto big = compare_at_fixed_mean(spec);
    for (std::size_t r = 0; r < base.rows().size(); ++r) {
        CHECK(base.at(r, "evaluator").text == big.at(r, "evaluator").text);
        CHECK((base.at(r, "flags").text == "argmin") == (big.at(r, "flags").text == "argmin"));
    }
}

TEST_CASE("bound rows flag non-log-concave candidates", "[experiments]") {
    ComparisonSpec spec;
    spec.discipline = Discipline::blocking;
    spec.candidates = {"det", "gamma:shape=0.5"};
    spec.service = exponential(2);
    spec.evaluator = "bound-lcm";
    spec.mean_grid = {1.0};
    spec.mc = quick_mc();
    const auto t = compare_at_fixed_mean(spec);
    REQUIRE(t.rows().size() == 2);
    CHECK(t.at(0, "flags").text.find("not-guaranteed") == std::string::npos);
    CHECK(t.at(1, "flags").text.find("not-guaranteed") != std::string::npos);
}

TEST_CASE("truncation report tracks convergence of the partial sums", "[experiments]") {
    const auto mc = quick_mc(200000);
    const auto t = truncation_report(exponential(1), exponential(1), {1, 2, 4, 8, 16}, mc);
    REQUIRE(t.rows().size() == 6);  // five requested points plus the reference
    CHECK(t.at(0, "param1").text == "1");
    CHECK(t.at(0, "evaluator").text == "exact-gg");
    CHECK(t.at(5, "evaluator").text == "exact-gg-reference");
    CHECK(num_at(t, 5, "rel_error") == 0.0);
    // one term keeps only the first arrival: 2 + (1/4)/(3/2), far below 2.5
    CHECK(num_at(t, 0, "age") == Approx(2.0 + 1.0 / 6.0).margin(0.01));
    CHECK(num_at(t, 0, "rel_error") > 0.05);
    CHECK(num_at(t, 3, "rel_error") < num_at(t, 0, "rel_error"));
    CHECK(num_at(t, 4, "rel_error") < 0.001);
    CHECK(num_at(t, 5, "age") == Approx(2.5).margin(0.01));

    CHECK_THROWS_AS(truncation_report(exponential(1), exponential(1), {}, mc),
                    std::invalid_argument);
    CHECK_THROWS_AS(truncation_report(exponential(1), exponential(1), {0, 2}, mc),
                    std::invalid_argument);
    CHECK_THROWS_AS(truncation_report(exponential(1), exponential(1), {1, 1000}, mc),
                    std::invalid_argument);
}

TEST_CASE("lighter service loads converge in fewer terms", "[experiments]") {
    const auto mc = quick_mc(100000);
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= 12; ++k) ks.push_back(k);
    const auto equal_load = truncation_report(gamma(2, 2), gamma(2, 2), ks, mc);
    const auto half_load = truncation_report(gamma(2, 2), gamma(2, 4), ks, mc);
    auto first_below = [&](const ResultTable& t) {
        for (std::size_t r = 0; r + 1 < t.rows().size(); ++r)
            if (num_at(t, r, "rel_error") < 0.005) return r + 1;
        return t.rows().size();
    };
    CHECK(first_below(half_load) < first_below(equal_load));
}

TEST_CASE("model validation scores every evaluator against the simulator", "[experiments]") {
    MonteCarloConfig mc = quick_mc(200000);
    SimConfig sim;
    sim.cycles = 100000;

    QueueModel mm{exponential(1), exponential(1), Discipline::blocking};
    const auto rep = validate_model(mm, mc, sim);
    CHECK(rep.consistent);
    CHECK(rep.worst_z < 4.0);
    const auto& t = rep.table;
    REQUIRE(t.rows().size() >= 5);
    bool saw_sim = false;
    for (std::size_t r = 0; r < t.rows().size(); ++r) {
        if (t.at(r, "evaluator").text == "simulation") {
            saw_sim = true;
            CHECK(t.at(r, "z").text.empty());
        } else {
            CHECK(!t.at(r, "z").text.empty());
        }
        if (t.at(r, "evaluator").text.rfind("exact", 0) == 0)
            CHECK(num_at(t, r, "age") == Approx(2.5).margin(0.05));
    }
    CHECK(saw_sim);

    QueueModel md{exponential(1), deterministic(std::log(2.0)), Discipline::preemption};
    const auto rep2 = validate_model(md, mc, sim);
    CHECK(rep2.consistent);
    for (std::size_t r = 0; r < rep2.table.rows().size(); ++r)
        if (rep2.table.at(r, "evaluator").text == "exact-mg")
            CHECK(num_at(rep2.table, r, "age") == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("result tables render stable csv and json", "[experiments]") {
    ResultTable t(result_columns());
    AgeEstimate est;
    est.age = 2.5;
    est.std_error = 0.001953125;
    est.terms_used = 7;
    est.truncation_warning = true;
    est.bound_not_guaranteed = true;
    table_row(t, "gamma:shape=2,rate=4", "exp:rate=1", "exact-gg", est);
    AgeEstimate nan_est;
    nan_est.age = std::nan("");
    table_row(t, "p1", "p2", "other", nan_est);

    const std::string csv = t.to_csv();
    CHECK(csv ==
          "param1,param2,evaluator,age,std_err,terms_used,flags\n"
          "\"gamma:shape=2,rate=4\",exp:rate=1,exact-gg,2.5,0.001953125,7,truncated|not-guaranteed\n"
          "p1,p2,other,nan,0,0,\n");

    const auto parsed = nlohmann::json::parse(t.to_json());
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0]["param1"] == "gamma:shape=2,rate=4");
    CHECK(parsed[0]["age"] == 2.5);
    CHECK(parsed[0]["terms_used"] == 7);
    CHECK(parsed[0]["flags"] == "truncated|not-guaranteed");
    CHECK(parsed[1]["age"].is_null());

    CHECK_THROWS_AS(t.add_row({ResultTable::cell("short")}), std::logic_error);
    CHECK_THROWS_AS(t.at(0, "nope"), std::out_of_range);
}
