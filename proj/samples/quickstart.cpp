// Minimal tour of the library: closed forms, the generic estimator, bounds,
// and the simulator, all on one gamma-arrival model.
#include "aoi/aoi.hpp"

#include <iostream>

int main() {
    using namespace aoi;

    const DistributionSpec arrival = gamma(2.0, 2.0);   // mean 1
    const DistributionSpec service = exponential(2.0);  // mean 1/2

    // exponential service has a closed form for any arrival process
    const AgeEstimate exact = age_gm_blocking(arrival, 2.0);
    std::cout << "blocking age (closed form):  " << exact.age << "\n";

    // the Monte Carlo estimator handles the same model without the closed form
    MonteCarloConfig mc;
    mc.samples = 200'000;
    mc.seed = 42;
    const AgeEstimate estimated = age_gg_blocking(arrival, service, mc);
    std::cout << "blocking age (estimated):    " << estimated.age << " +/- "
              << estimated.std_error << " using " << estimated.terms_used << " terms\n";

    // upper bounds for log-concave interarrivals
    std::cout << "upper bound (lcg):           " << bound_lcg_blocking(arrival, service, mc).age
              << "\n";

    // preemption in service: fresher updates can replace the one in service
    const AgeEstimate preempt = age_gm_preemption(arrival, 2.0);
    std::cout << "preemption age (closed):     " << preempt.age << "\n";

    // the event-driven simulator is the independent check on all of the above
    QueueModel model{arrival, service, Discipline::blocking};
    SimConfig sim;
    sim.cycles = 100'000;
    sim.seed = 42;
    const AgeEstimate simulated = simulate_age(model, sim);
    std::cout << "blocking age (simulated):    " << simulated.age << " +/- "
              << simulated.std_error << "\n";
    return 0;
}
