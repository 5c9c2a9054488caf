#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pollinglab/model.hpp"

namespace pollinglab {

struct SimConfig {
    PollingModel model;
    std::uint64_t seed = 1;
    std::uint64_t max_events = 1000000;  // horizon as total processed events
    double max_time = 0;                 // optional horizon in simulated time (0 = unused)
    double warmup_fraction = 0.1;        // fraction of the event horizon discarded
    int batches = 30;                    // batch-means batches for the CIs
    bool record_distributions = false;   // queue-length histograms at arrival/departure epochs
};

struct Estimate {
    double value = 0;
    double ci_lo = 0;
    double ci_hi = 0;
};

struct StationEstimate {
    Estimate delay;                // E D_i, 99% CI
    double f_hat = 0;              // waiting time per cycle
    double w_hat = 0;              // backward recurrence time at waiting instants (NaN if none)
    double r_tilde_hat = 0;        // mean preceding switchover out of this station, sampled
                                   // while waiting at the next station (NaN if none)
    bool waiting_observed = false;
    std::uint64_t served = 0;
    double mean_queue = 0;         // time-average number in system
};

struct SimEstimate {
    Estimate d_bar;                // traffic-weighted mean delay, 99% CI
    std::vector<StationEstimate> stations;
    double mean_cycle_hat = 0;
    double mean_workload_hat = 0;
    std::uint64_t cycles = 0;
    std::uint64_t total_served = 0;
    std::uint64_t events = 0;
    double sim_time = 0;
    std::uint64_t seed = 0;
    // present when record_distributions is set: queue length seen by the
    // server at arrival epochs (pi) and at the other station on departure
    // epochs (nu), normalized
    std::vector<std::vector<double>> arrival_dist;
    std::vector<std::vector<double>> departure_dist;
};

/// Event-driven simulation of the polling model under the configured
/// strategy. Deterministic per seed.
SimEstimate simulate(const SimConfig& config);

/// (f_hat, w_hat, r_tilde_hat) per station from a simulation run.
std::vector<StationEstimate> measure_quantities(const SimConfig& config);

/// Human-readable event log of the first max_events events.
std::vector<std::string> trace(const SimConfig& config, std::uint64_t max_events);

/// Two-sided Student-t quantile used by the batch-means CIs (exposed for
/// tests).
double student_t_quantile(double p, double dof);

}  // namespace pollinglab
