#pragma once

#include <vector>

#include "pollinglab/model.hpp"
#include "pollinglab/options.hpp"
#include "pollinglab/steady_state.hpp"

namespace pollinglab {

/// Strategy-dependent steady-state expectations: per station the server's
/// waiting time per cycle f_i, the backward recurrence time w_i at a random
/// waiting instant, the conditional mean switchover r_tilde_i out of the
/// station, and the sojourn time c_i.
struct QuantitySet {
    std::vector<double> f;
    std::vector<double> w;
    std::vector<double> r_tilde;
    std::vector<double> c;
    double f0 = 0;
    double c0 = 0;
    double mean_cycle = 0;
};

QuantitySet quantities_strategy_iii(const ValidatedModel& m, const NumericOptions& opts = {});

QuantitySet quantities_strategy_ii(SteadyStateContext& ctx);
QuantitySet quantities_strategy_ii(const ValidatedModel& m, const NumericOptions& opts = {});

QuantitySet quantities_strategy_iv(SteadyStateContext& ctx);
QuantitySet quantities_strategy_iv(const ValidatedModel& m, const NumericOptions& opts = {});

/// Exhaustive-service quantity set (f = w = 0, r_tilde = r).
QuantitySet quantities_exhaustive(const ValidatedModel& m);

/// Dispatch on the model's strategy; Strategy I has no analytic quantity
/// set and is rejected.
QuantitySet quantities_for(const ValidatedModel& m, const NumericOptions& opts = {});

/// E C = (r0 + f0) / (1 - rho0).
double mean_cycle_time(const QuantitySet& S, const ValidatedModel& m);

}  // namespace pollinglab
