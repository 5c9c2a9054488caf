#pragma once

#include <memory>
#include <vector>

#include "pollinglab/model.hpp"
#include "pollinglab/numerics.hpp"
#include "pollinglab/options.hpp"

namespace pollinglab {

/// Truncated probability vector over queue lengths 0..K at server arrival
/// (pi) or departure (nu) epochs.
struct QueueLengthDist {
    std::vector<double> probs;
    int truncation = 0;
    double tail_mass_bound = 0;

    double operator[](std::size_t n) const { return n < probs.size() ? probs[n] : 0.0; }
    double sum() const;
};

enum class OperatorKind { PiDirect, NuDeparture };

/// (K+1)x(K+1) truncation of the visit operator: columns are the current
/// state, rows the state after one visit. For NuDeparture operators the
/// states live at departure epochs and carry the conversion data of
/// eq. pi_n.
struct TruncatedOperator {
    OperatorKind kind = OperatorKind::PiDirect;
    int from_station = 0;
    int to_station = 0;
    int K = 0;
    std::vector<double> entries;  // row-major
    double min_column_sum = 0;

    SwitchoverSpec incoming_switchover;  // out of from_station, into to_station
    double to_lambda = 0;

    double at(int n, int k) const { return entries[static_cast<std::size_t>(n) * (K + 1) + k]; }
};

/// Shared per-model numerical kernels (busy-period grids and their
/// Poisson-count integrals). Building them is the expensive part of the
/// Strategy II/IV analysis; the cache is reused across timer settings by
/// the optimizer and sweep paths.
class SteadyStateContext {
public:
    SteadyStateContext(const ValidatedModel& m, const NumericOptions& opts = {});
    ~SteadyStateContext();
    SteadyStateContext(const SteadyStateContext&) = delete;
    SteadyStateContext& operator=(const SteadyStateContext&) = delete;

    const ValidatedModel& model() const { return *model_; }
    const NumericOptions& options() const { return opts_; }

    /// V[l][v] = int pois_v(lambda_other x) g_station^{(*l)}(x) dx for
    /// v = 0..vmax, l = 0..lmax.
    const std::vector<std::vector<double>>& vtable(int station, int vmax, int lmax);

    /// Swap in a model with different timers but identical rates and
    /// distributions (used by the optimizer; kernels stay valid).
    void rebind(const ValidatedModel& m);

private:
    struct Kernel;
    const ValidatedModel* model_;
    NumericOptions opts_;
    std::vector<std::unique_ptr<Kernel>> kernels_;
};

/// The operator kind defaults to PiDirect for all-deterministic switchovers
/// and NuDeparture otherwise; force_kind overrides (both paths must agree on
/// deterministic models).
TruncatedOperator build_arrival_operator_ii(SteadyStateContext& ctx, int from_station,
                                            int to_station, int K,
                                            const OperatorKind* force_kind = nullptr);
TruncatedOperator build_arrival_operator_iv(SteadyStateContext& ctx, int from_station,
                                            int to_station, int K,
                                            const OperatorKind* force_kind = nullptr);

/// Convenience overloads matching the module contract (one-shot context).
TruncatedOperator build_arrival_operator_ii(const ValidatedModel& m, int from_station,
                                            int to_station, int K,
                                            const NumericOptions& opts = {});
TruncatedOperator build_arrival_operator_iv(const ValidatedModel& m, int from_station,
                                            int to_station, int K,
                                            const NumericOptions& opts = {});

struct SteadyStateResult {
    QueueLengthDist pi1, pi2;  // arrival-epoch distributions (stations 1 and 2)
    QueueLengthDist nu1, nu2;  // departure-epoch distributions (NuDeparture only)
    OperatorKind kind = OperatorKind::PiDirect;
    int K = 0;
    int iterations = 0;
};

/// Power iteration on the composed cycle map. A maps station-2 state to
/// station-1 state and B the reverse. Returns the arrival-epoch
/// distributions, converting departure-epoch fixed points when needed.
SteadyStateResult solve_cycle_fixed_point(const TruncatedOperator& A, const TruncatedOperator& B,
                                          const NumericOptions& opts = {});

/// Adaptive-truncation driver: builds operators starting at K = k_start and
/// doubles K until the column sums, the tail mass and the fixed-point
/// perturbation all drop below eps_trunc.
SteadyStateResult solve_strategy_distributions(SteadyStateContext& ctx, Strategy strategy);

}  // namespace pollinglab
