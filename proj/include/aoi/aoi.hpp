#pragma once

// Average age of information of single-server, unit-capacity update systems
// under the blocking and preemption-in-service disciplines: closed forms,
// truncated-sum Monte Carlo, upper bounds, and a discrete-event simulator.

#include "aoi/distribution.hpp"
#include "aoi/rng.hpp"
#include "aoi/estimate.hpp"
#include "aoi/stats.hpp"
#include "aoi/blocking.hpp"
#include "aoi/preemption.hpp"
#include "aoi/simulator.hpp"
#include "aoi/table.hpp"
#include "aoi/experiments.hpp"
