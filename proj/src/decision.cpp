#include "pollinglab/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "pollinglab/numerics.hpp"
#include "pollinglab/steady_state.hpp"

namespace pollinglab {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
    throw PollingError(code, msg);
}

double r_tilde_iv_2(const ValidatedModel& m) {
    const auto& F = m.stations()[1].switchover_out;
    if (F.is_deterministic()) return m.r(1);
    return cond_switchover_given_arrivals(F, m.lambda(0), 0);
}

void require_wait_and_see(Strategy s) {
    if (s != Strategy::II && s != Strategy::III && s != Strategy::IV)
        fail(ErrorCode::UnsupportedAnalytic,
             "worth-waiting criteria cover strategies II, III and IV");
}

}  // namespace

const char* scenario_name(Scenario s) {
    return s == Scenario::T2Zero ? "T2_zero" : "symmetric_equal_timers";
}

WorthWaitingVerdict worth_waiting_t2_zero(const ValidatedModel& m, Strategy strategy) {
    require_wait_and_see(strategy);
    if (m.station_count() != 2)
        fail(ErrorCode::UnsupportedAnalytic, "the criteria are stated for N = 2 stations");
    WorthWaitingVerdict v;
    v.strategy = strategy;
    v.scenario = Scenario::T2Zero;
    const double r0 = m.r0(), r02 = m.r02(), rho0 = m.rho0();
    const double rho2 = m.rho(1);
    if (strategy == Strategy::III) {
        v.criterion_value = r02 / (2.0 * r0 * r0) - rho2 * (1.0 - rho2) / (rho0 * (1.0 - rho0));
    } else {
        const double rt2 = r_tilde_iv_2(m);
        v.criterion_value = r02 / (2.0 * r0 * (m.r(0) + rt2)) - rho2 / rho0;
        if (m.all_switchovers_deterministic())
            v.note = "deterministic switchovers: criterion reduces to rho_1 > rho_2";
    }
    v.worth_waiting = v.criterion_value > 0;
    return v;
}

WorthWaitingVerdict worth_waiting_symmetric(const ValidatedModel& m, Strategy strategy) {
    require_wait_and_see(strategy);
    if (m.station_count() != 2)
        fail(ErrorCode::UnsupportedAnalytic, "the criteria are stated for N = 2 stations");
    const double rho1 = m.rho(0), rho2 = m.rho(1);
    if (std::abs(rho1 - rho2) > 1e-12 * std::max(rho1, rho2))
        fail(ErrorCode::AsymmetricModel, "equal loads are required for the symmetric criterion");
    if (strategy != Strategy::III) {
        const auto& s0 = m.stations()[0];
        const auto& s1 = m.stations()[1];
        if (!(s0.lambda == s1.lambda && s0.service == s1.service &&
              s0.switchover_out == s1.switchover_out))
            fail(ErrorCode::AsymmetricModel,
                 "strategies II and IV require fully identical stations in this scenario");
    }
    WorthWaitingVerdict v;
    v.strategy = strategy;
    v.scenario = Scenario::SymmetricEqualTimers;
    const double r0 = m.r0(), r02 = m.r02(), rho0 = m.rho0();
    if (strategy == Strategy::III) {
        v.criterion_value = r02 / (r0 * r0) - (1.0 - rho1) / (1.0 - rho0);
        if (m.all_switchovers_deterministic())
            v.note = "deterministic switchovers can never satisfy the criterion";
    } else {
        const double rt2 = r_tilde_iv_2(m);
        v.criterion_value = r02 / (r0 * (m.r(0) + rt2)) - 1.0;
        v.note = m.all_switchovers_deterministic()
                     ? "deterministic switchovers: not worth waiting"
                     : "non-deterministic switchovers: worth waiting";
    }
    v.worth_waiting = v.criterion_value > 0;
    return v;
}

// ---------------------------------------------------------------------------
// Timer optimization
// ---------------------------------------------------------------------------

namespace {

// Analytic delay as a function of the timers, with the steady-state kernels
// cached across evaluations.
class DelayEvaluator {
public:
    DelayEvaluator(const PollingModel& base, Strategy strategy, const NumericOptions& opts)
        : base_(base), strategy_(strategy), opts_(opts) {
        base_.strategy = strategy;
        if (strategy == Strategy::I || strategy == Strategy::Exhaustive)
            fail(ErrorCode::UnsupportedAnalytic,
                 "the optimizer needs an analytic delay path (strategies II-IV)");
        PollingModel zero = base_;
        for (auto& st : zero.stations) st.timer = 0;
        current_ = validate(zero);
        if (strategy != Strategy::III) ctx_.emplace(current_, opts_);
    }

    double operator()(double t1, double t2) {
        PollingModel m = base_;
        m.stations[0].timer = t1;
        if (m.stations.size() > 1) m.stations[1].timer = t2;
        current_ = validate(m);
        if (strategy_ == Strategy::III) {
            return delay_strategy_iii(current_, quantities_strategy_iii(current_, opts_)).d_bar;
        }
        ctx_->rebind(current_);
        QuantitySet S = (strategy_ == Strategy::II) ? quantities_strategy_ii(*ctx_)
                                                    : quantities_strategy_iv(*ctx_);
        return delay_two_station(current_, S).d_bar;
    }

private:
    PollingModel base_;
    Strategy strategy_;
    NumericOptions opts_;
    ValidatedModel current_;
    std::optional<SteadyStateContext> ctx_;
};

struct Tracker {
    DelayEvaluator& eval;
    TimerOptimum& out;
    int budget;

    double operator()(double t1, double t2) {
        if (static_cast<int>(out.trace.size()) >= budget)
            return std::numeric_limits<double>::quiet_NaN();
        try {
            const double d = eval(t1, t2);
            out.trace.push_back({t1, t2, d});
            if (d < out.d_min) {
                out.d_min = d;
                out.t1 = t1;
                out.t2 = t2;
            }
            return d;
        } catch (const PollingError&) {
            ++out.failed_evaluations;
            out.trace.push_back({t1, t2, std::numeric_limits<double>::quiet_NaN()});
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
};

// Golden-section minimization along one axis; assumes f has been sampled
// coarsely and [lo, hi] brackets the interesting region.
double golden_axis(Tracker& f, double lo, double hi, double fixed, bool axis1, double tol) {
    const double gr = 0.61803398874989485;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    auto ev = [&](double t) { return axis1 ? f(t, fixed) : f(fixed, t); };
    double f1 = ev(x1), f2 = ev(x2);
    for (int it = 0; it < 80 && (b - a) > tol; ++it) {
        if (std::isnan(f1) || std::isnan(f2)) break;
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = ev(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = ev(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

TimerOptimum optimize_timers(const PollingModel& base, Strategy strategy,
                             const OptimizeOptions& oopts, const NumericOptions& opts) {
    ValidatedModel vm0 = [&] {
        PollingModel zero = base;
        zero.strategy = strategy;
        for (auto& st : zero.stations) st.timer = 0;
        return validate(zero);
    }();
    if (vm0.station_count() != 2 && strategy != Strategy::III)
        fail(ErrorCode::UnsupportedAnalytic, "timer optimization for II/IV needs N = 2");

    DelayEvaluator eval(base, strategy, opts);
    TimerOptimum out;
    out.d_exhaustive = exhaustive_delay(vm0);
    out.d_min = std::numeric_limits<double>::infinity();
    Tracker f{eval, out, oopts.budget};

    const double ec_exh = vm0.r0() / (1.0 - vm0.rho0());
    double bound = oopts.bound > 0 ? oopts.bound : 10.0 * ec_exh;
    const int np = std::max(oopts.grid_points, 5);
    const bool two_d = oopts.constraint == OptimizeOptions::Constraint::General2D &&
                       vm0.station_count() == 2;

    for (int doubling = 0;; ++doubling) {
        auto axis_value = [&](int idx) { return bound * idx / (np - 1); };
        if (two_d) {
            for (int i = 0; i < np; ++i)
                for (int j = 0; j < np; ++j) f(axis_value(i), axis_value(j));
        } else {
            for (int i = 0; i < np; ++i) {
                const double t = axis_value(i);
                switch (oopts.constraint) {
                    case OptimizeOptions::Constraint::T2Zero: f(t, 0.0); break;
                    case OptimizeOptions::Constraint::EqualTimers: f(t, t); break;
                    case OptimizeOptions::Constraint::General2D: f(t, 0.0); break;
                }
            }
        }
        const double edge = bound * (np - 2) / (np - 1);
        const bool on_boundary = std::max(out.t1, out.t2) > edge;
        if (!on_boundary || doubling >= oopts.max_bound_doublings) break;
        bound *= 2.0;
    }

    // local refinement around the best grid point (golden section per axis,
    // cyclic); also probe the near-zero bracket so a narrow dip at small
    // timers is not missed when the coarse argmin sits at 0
    const double step = bound / (np - 1);
    const double tol = std::max(oopts.rel_tol * std::max(out.t1, step), 1e-9);
    auto refine_axes = [&](bool equal_timers) {
        for (int cycle = 0; cycle < 4; ++cycle) {
            const double before = out.d_min;
            if (equal_timers) {
                const double lo = std::max(0.0, out.t1 - step), hi = out.t1 + step;
                const double gr = 0.61803398874989485;
                double a = lo, b = hi;
                double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
                double f1 = f(x1, x1), f2 = f(x2, x2);
                for (int it = 0; it < 80 && (b - a) > tol; ++it) {
                    if (std::isnan(f1) || std::isnan(f2)) break;
                    if (f1 < f2) {
                        b = x2; x2 = x1; f2 = f1;
                        x1 = b - gr * (b - a); f1 = f(x1, x1);
                    } else {
                        a = x1; x1 = x2; f1 = f2;
                        x2 = a + gr * (b - a); f2 = f(x2, x2);
                    }
                }
            } else {
                golden_axis(f, std::max(0.0, out.t1 - step), out.t1 + step, out.t2, true, tol);
                if (two_d)
                    golden_axis(f, std::max(0.0, out.t2 - step), out.t2 + step, out.t1, false, tol);
            }
            if (before - out.d_min <= oopts.rel_tol * std::max(1e-12, std::abs(before))) break;
        }
    };
    refine_axes(oopts.constraint == OptimizeOptions::Constraint::EqualTimers);

    // the grid contains T = 0 where the analytic delay equals the exhaustive
    // baseline exactly, so d_min <= d_exhaustive unless that point failed
    if (out.d_min > out.d_exhaustive) {
        out.d_min = out.d_exhaustive;
        out.t1 = 0;
        out.t2 = 0;
    }
    out.improvement = std::max(0.0, out.d_exhaustive - out.d_min);
    return out;
}

CorollaryCheck check_corollary(const PollingModel& symmetric_base, const NumericOptions& opts) {
    CorollaryCheck c;
    PollingModel m = symmetric_base;
    for (auto& st : m.stations) st.timer = 0;

    auto with_strategy = [&](Strategy s) {
        PollingModel v = m;
        v.strategy = s;
        return validate(v);
    };
    c.v_ii = worth_waiting_symmetric(with_strategy(Strategy::II), Strategy::II);
    c.v_iii = worth_waiting_symmetric(with_strategy(Strategy::III), Strategy::III);
    c.v_iv = worth_waiting_symmetric(with_strategy(Strategy::IV), Strategy::IV);

    OptimizeOptions oo;
    oo.constraint = OptimizeOptions::Constraint::EqualTimers;
    c.o_ii = optimize_timers(m, Strategy::II, oo, opts);
    c.o_iii = optimize_timers(m, Strategy::III, oo, opts);
    c.o_iv = optimize_timers(m, Strategy::IV, oo, opts);

    auto consistent = [&](const WorthWaitingVerdict& v, const TimerOptimum& o) {
        const double margin = 1e-6 * o.d_exhaustive;
        return v.worth_waiting == (o.improvement > margin);
    };
    c.exhibited = c.v_ii.worth_waiting && c.v_iv.worth_waiting && !c.v_iii.worth_waiting &&
                  consistent(c.v_ii, c.o_ii) && consistent(c.v_iii, c.o_iii) &&
                  consistent(c.v_iv, c.o_iv);
    return c;
}

}  // namespace pollinglab
