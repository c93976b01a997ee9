// Command-line front end: age / bound / sim / sweep / compare / truncation /
// validate, CSV or JSON output, JSON config files for the grid drivers.
// Exit codes: 0 ok, 2 configuration error, 3 consistency failure, 4 partial result.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aoi/aoi.hpp"

namespace {

using nlohmann::json;

struct OutputOptions {
    std::string format = "csv";
    std::string path;
};

void add_output_options(CLI::App* cmd, OutputOptions& out) {
    cmd->add_option("--format", out.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", out.path, "Write the result here instead of stdout");
}

void emit(const aoi::ResultTable& table, const OutputOptions& out) {
    const std::string payload = out.format == "json" ? table.to_json() : table.to_csv();
    if (out.path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream f(out.path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file '" + out.path + "'");
    f << payload;
}

aoi::QueueModel parse_model(const std::string& discipline, const std::string& arrival,
                            const std::string& service) {
    aoi::QueueModel m;
    m.discipline = aoi::parse_discipline(discipline);
    m.arrival = aoi::parse_distribution(arrival);
    m.service = aoi::parse_distribution(service);
    validate(m);
    return m;
}

// columns for single-model commands; preemption rows carry the success probability
aoi::ResultTable model_table(const aoi::QueueModel& m) {
    std::vector<std::string> cols = aoi::result_columns();
    if (m.discipline == aoi::Discipline::preemption) cols.push_back("p_success");
    return aoi::ResultTable(cols);
}

void append_result(aoi::ResultTable& t, const aoi::QueueModel& m, const std::string& evaluator,
                   const aoi::AgeEstimate& est) {
    aoi::table_row(t, aoi::encode_distribution(m.arrival), aoi::encode_distribution(m.service),
                   evaluator, est,
                   est.p_success ? aoi::ResultTable::cell(*est.p_success)
                                 : aoi::ResultTable::cell(""));
}

aoi::MonteCarloConfig mc_from_json(const json& j) {
    aoi::MonteCarloConfig mc;
    if (j.contains("samples")) mc.samples = j.at("samples").get<std::size_t>();
    if (j.contains("seed")) mc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("k_max")) mc.k_max = j.at("k_max").get<std::size_t>();
    if (j.contains("tail_tol")) mc.tail_tol = j.at("tail_tol").get<double>();
    if (j.contains("k_min")) mc.k_min = j.at("k_min").get<std::size_t>();
    return mc;
}

aoi::SimConfig sim_from_json(const json& j) {
    aoi::SimConfig sc;
    if (j.contains("cycles")) sc.cycles = j.at("cycles").get<std::size_t>();
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("replications")) sc.replications = j.at("replications").get<std::size_t>();
    if (j.contains("event_cap")) sc.event_cap = j.at("event_cap").get<std::uint64_t>();
    return sc;
}

json load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read config file '" + path + "'");
    return json::parse(f);
}

// flags that override whatever a config file or default said; one instance
// per subcommand so the counts come from the options that actually parsed
struct Overrides {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::size_t cycles = 0;
    int threads = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* samples_opt = nullptr;
    CLI::Option* cycles_opt = nullptr;
    CLI::Option* threads_opt = nullptr;

    void attach(CLI::App* cmd, bool with_threads) {
        seed_opt = cmd->add_option("--seed", seed, "Root seed for both estimators");
        samples_opt = cmd->add_option("--samples", samples, "Monte Carlo sample paths");
        cycles_opt = cmd->add_option("--cycles", cycles, "Simulated regenerative cycles");
        if (with_threads)
            threads_opt = cmd->add_option("--threads", threads, "Worker threads (0: AOI_THREADS or hardware)");
    }
    void apply(aoi::MonteCarloConfig& mc, aoi::SimConfig& sim, int* threads_out = nullptr) const {
        if (seed_opt->count()) {
            mc.seed = seed;
            sim.seed = seed;
        }
        if (samples_opt->count()) mc.samples = samples;
        if (cycles_opt->count()) sim.cycles = cycles;
        if (threads_out && threads_opt && threads_opt->count()) *threads_out = threads;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Average age of information of G/G/1/1 queues: exact values, bounds, simulation"};
    app.require_subcommand(1);

    std::string discipline = "blocking", arrival, service;
    std::vector<std::string> evaluators;
    OutputOptions out;
    std::deque<Overrides> override_store;
    auto make_overrides = [&](CLI::App* cmd, bool with_threads) -> Overrides& {
        override_store.emplace_back();
        override_store.back().attach(cmd, with_threads);
        return override_store.back();
    };

    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--discipline", discipline, "blocking | preemption")->required();
        cmd->add_option("--arrival", arrival, "Interarrival spec, e.g. gamma:shape=2,rate=2")->required();
        cmd->add_option("--service", service, "Service spec, e.g. exp:rate=2")->required();
    };

    CLI::App* age = app.add_subcommand("age", "Average age of one model");
    add_model(age);
    age->add_option("--evaluator", evaluators, "exact | exact-gm | exact-mg | exact-gg | gm-equiv | sim");
    add_output_options(age, out);
    Overrides& ovr_age = make_overrides(age, false);

    CLI::App* bound = app.add_subcommand("bound", "Upper bounds for one model");
    add_model(bound);
    bound->add_option("--evaluator", evaluators, "bounds | bound-lcg | bound-lcm | bound-decoupled | bound-mlc | bound-preemption");
    add_output_options(bound, out);
    Overrides& ovr_bound = make_overrides(bound, false);

    std::size_t replications = 1, dump_cycles = 0;
    std::uint64_t event_cap = 1'000'000'000;
    CLI::App* sim = app.add_subcommand("sim", "Discrete-event simulation of one model");
    add_model(sim);
    sim->add_option("--replications", replications, "Independent replications")->capture_default_str();
    sim->add_option("--event-cap", event_cap, "Abort after this many arrivals")->capture_default_str();
    sim->add_option("--dump-cycles", dump_cycles, "Write the first N cycle records instead of the age");
    add_output_options(sim, out);
    Overrides& ovr_sim = make_overrides(sim, false);

    std::string config_path;
    CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep from a JSON config");
    sweep->add_option("--config", config_path, "JSON sweep description")->required();
    add_output_options(sweep, out);
    Overrides& ovr_sweep = make_overrides(sweep, true);

    CLI::App* compare = app.add_subcommand("compare", "Fixed-mean family comparison from a JSON config");
    compare->add_option("--config", config_path, "JSON comparison description")->required();
    add_output_options(compare, out);
    Overrides& ovr_compare = make_overrides(compare, true);

    std::vector<std::size_t> k_values;
    CLI::App* truncation = app.add_subcommand("truncation", "Convergence of the truncated blocking sums");
    truncation->add_option("--arrival", arrival, "Interarrival spec")->required();
    truncation->add_option("--service", service, "Service spec")->required();
    truncation->add_option("--k-values", k_values, "Truncation points, e.g. 1,2,5,10")
        ->required()
        ->delimiter(',');
    add_output_options(truncation, out);
    Overrides& ovr_trunc = make_overrides(truncation, false);

    CLI::App* validate_cmd = app.add_subcommand("validate", "Cross-check every evaluator against the simulator");
    add_model(validate_cmd);
    add_output_options(validate_cmd, out);
    Overrides& ovr_validate = make_overrides(validate_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        aoi::MonteCarloConfig mc;
        aoi::SimConfig sim_cfg;

        if (app.got_subcommand(age) || app.got_subcommand(bound)) {
            const bool bounds = app.got_subcommand(bound);
            (bounds ? ovr_bound : ovr_age).apply(mc, sim_cfg);
            const auto model = parse_model(discipline, arrival, service);
            if (evaluators.empty()) evaluators = {bounds ? "bounds" : "exact"};
            auto table = model_table(model);
            for (const auto& token : aoi::expand_evaluators(model, evaluators))
                append_result(table, model, token, aoi::run_evaluator(token, model, mc, sim_cfg));
            emit(table, out);
        } else if (app.got_subcommand(sim)) {
            sim_cfg.replications = replications;
            sim_cfg.event_cap = event_cap;
            ovr_sim.apply(mc, sim_cfg);
            const auto model = parse_model(discipline, arrival, service);
            if (dump_cycles > 0) {
                if (out.format != "csv")
                    throw std::invalid_argument("--dump-cycles writes csv only");
                const auto records =
                    aoi::collect_cycles(model, dump_cycles, sim_cfg.seed, sim_cfg.event_cap);
                std::ostringstream os;
                aoi::write_cycles_csv(os, records);
                if (out.path.empty()) {
                    std::cout << os.str();
                } else {
                    std::ofstream f(out.path, std::ios::binary);
                    if (!f) throw std::invalid_argument("cannot open output file '" + out.path + "'");
                    f << os.str();
                }
            } else {
                auto table = model_table(model);
                append_result(table, model, "simulation", aoi::simulate_age(model, sim_cfg));
                emit(table, out);
            }
        } else if (app.got_subcommand(sweep)) {
            const json cfg = load_config(config_path);
            aoi::SweepSpec spec;
            spec.model.discipline = aoi::parse_discipline(cfg.at("discipline").get<std::string>());
            spec.model.arrival = aoi::parse_distribution(cfg.at("arrival").get<std::string>());
            spec.model.service = aoi::parse_distribution(cfg.at("service").get<std::string>());
            for (const auto& axis : cfg.at("axes")) {
                aoi::SweepAxis a;
                const auto target = axis.at("target").get<std::string>();
                if (target != "arrival" && target != "service")
                    throw std::invalid_argument("axis target must be arrival or service");
                a.on_service = target == "service";
                a.parameter = axis.at("parameter").get<std::string>();
                a.values = axis.at("values").get<std::vector<double>>();
                spec.axes.push_back(std::move(a));
            }
            if (cfg.contains("evaluators"))
                spec.evaluators = cfg.at("evaluators").get<std::vector<std::string>>();
            if (cfg.contains("mc")) spec.mc = mc_from_json(cfg.at("mc"));
            if (cfg.contains("sim")) spec.sim = sim_from_json(cfg.at("sim"));
            if (cfg.contains("threads")) spec.threads = cfg.at("threads").get<int>();
            ovr_sweep.apply(spec.mc, spec.sim, &spec.threads);
            emit(aoi::run_sweep(spec), out);
        } else if (app.got_subcommand(compare)) {
            const json cfg = load_config(config_path);
            aoi::ComparisonSpec spec;
            spec.discipline = aoi::parse_discipline(cfg.at("discipline").get<std::string>());
            spec.service = aoi::parse_distribution(cfg.at("service").get<std::string>());
            spec.mean_grid = cfg.at("mean_grid").get<std::vector<double>>();
            if (cfg.contains("candidates"))
                spec.candidates = cfg.at("candidates").get<std::vector<std::string>>();
            if (cfg.contains("evaluator")) spec.evaluator = cfg.at("evaluator").get<std::string>();
            if (cfg.contains("mc")) spec.mc = mc_from_json(cfg.at("mc"));
            if (cfg.contains("sim")) spec.sim = sim_from_json(cfg.at("sim"));
            if (cfg.contains("threads")) spec.threads = cfg.at("threads").get<int>();
            ovr_compare.apply(spec.mc, spec.sim, &spec.threads);
            emit(aoi::compare_at_fixed_mean(spec), out);
        } else if (app.got_subcommand(truncation)) {
            ovr_trunc.apply(mc, sim_cfg);
            const auto Y = aoi::parse_distribution(arrival);
            const auto S = aoi::parse_distribution(service);
            emit(aoi::truncation_report(Y, S, k_values, mc), out);
        } else if (app.got_subcommand(validate_cmd)) {
            ovr_validate.apply(mc, sim_cfg);
            const auto model = parse_model(discipline, arrival, service);
            const auto report = aoi::validate_model(model, mc, sim_cfg);
            emit(report.table, out);
            if (!report.consistent) {
                std::cerr << "inconsistent: an exact evaluator differs from the simulation by more "
                             "than 4 combined standard errors (worst z = "
                          << report.worst_z << ")\n";
                return 3;
            }
        }
    } catch (const aoi::partial_result_error& e) {
        std::cerr << "partial result: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
