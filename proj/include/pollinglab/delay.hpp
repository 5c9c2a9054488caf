#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pollinglab/model.hpp"
#include "pollinglab/options.hpp"
#include "pollinglab/quantities.hpp"

namespace pollinglab {

struct WorkloadDiagnostics {
    double expected_workload = 0;    // E V
    double switching_given_idle = 0; // q = r0 / (r0 + f0)
    double mean_cycle = 0;
};

/// Mean average queueing delay with a named breakdown of the applied
/// formula's summands, the exhaustive baseline and the difference.
struct DelayReport {
    double d_bar = 0;
    std::vector<std::pair<std::string, double>> terms;
    double d_exhaustive = 0;
    double delta = 0;
    WorkloadDiagnostics diagnostics;
    QuantitySet quantities;
    Strategy strategy = Strategy::Exhaustive;
    int theorem = 0;  // 1 = N-station strategy III formula, 2 = two-station formula
};

/// Three-term closed form for the exhaustive strategy.
double exhaustive_delay(const ValidatedModel& m);

/// N-station strategy III delay from the quantity set.
DelayReport delay_strategy_iii(const ValidatedModel& m, const QuantitySet& S);

/// Two-station delay for strategies II-IV from the matching quantity set.
DelayReport delay_two_station(const ValidatedModel& m, const QuantitySet& S);

/// Delta vs the exhaustive baseline, recomputed from the report's quantity
/// set and reconciled against d_bar - d_exhaustive.
double delta_delay(const DelayReport& report, const ValidatedModel& m);

/// E V via the workload identity plus the switching probability.
WorkloadDiagnostics workload_diagnostics(const ValidatedModel& m, const DelayReport& report);

/// Full analytic pipeline for the model's strategy (quantities, delay,
/// baseline, diagnostics).
DelayReport analyze(const ValidatedModel& m, const NumericOptions& opts = {});

}  // namespace pollinglab
