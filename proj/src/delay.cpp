#include "pollinglab/delay.hpp"

#include <cmath>
#include <sstream>

namespace pollinglab {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
    throw PollingError(code, msg);
}

void require_switching_regime(const ValidatedModel& m) {
    if (!(m.r0() > 0))
        fail(ErrorCode::UnsupportedAnalytic, "delay formulas require r0 > 0");
}

double mg1_term(const ValidatedModel& m) {
    double lb2 = 0;
    for (std::size_t i = 0; i < m.station_count(); ++i) lb2 += m.lambda(i) * m.b2(i);
    return lb2 / (2.0 * (1.0 - m.rho0()));
}

void attach_baseline(DelayReport& rep, const ValidatedModel& m) {
    rep.d_exhaustive = exhaustive_delay(m);
    rep.delta = rep.d_bar - rep.d_exhaustive;
    rep.diagnostics = workload_diagnostics(m, rep);
}

}  // namespace

double exhaustive_delay(const ValidatedModel& m) {
    require_switching_regime(m);
    const double rho0 = m.rho0(), r0 = m.r0(), r02 = m.r02();
    double sumrho2 = 0;
    for (std::size_t i = 0; i < m.station_count(); ++i) sumrho2 += m.rho(i) * m.rho(i);
    return mg1_term(m) + r0 * (rho0 * rho0 - sumrho2) / (2.0 * rho0 * (1.0 - rho0)) +
           r02 / (2.0 * r0);
}

DelayReport delay_strategy_iii(const ValidatedModel& m, const QuantitySet& S) {
    require_switching_regime(m);
    const std::size_t n = m.station_count();
    const double rho0 = m.rho0(), r0 = m.r0(), r02 = m.r02();
    const double rf = r0 + S.f0;

    double sumrho2 = 0, fw = 0, ff = 0, frho = 0, f_weighted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sumrho2 += m.rho(i) * m.rho(i);
        fw += S.f[i] * S.w[i] * (rho0 - m.rho(i));
        f_weighted += S.f[i] * (rho0 - m.rho(i));
        frho += S.f[i] * m.rho(i) * (rho0 - m.rho(i));
        for (std::size_t j = i + 1; j < n; ++j)
            ff += S.f[i] * S.f[j] * (rho0 - m.rho(i) - m.rho(j));
    }

    const double t1 = mg1_term(m);
    const double t2 = rf * (rho0 * rho0 - sumrho2) / (2.0 * rho0 * (1.0 - rho0));
    const double t3 = (0.5 * rho0 * r02 + r0 * f_weighted) / (rho0 * rf);
    const double t4 = (fw + ff) / (rho0 * rf);
    const double t5 = -frho / (rho0 * (1.0 - rho0));

    DelayReport rep;
    rep.strategy = m.strategy();
    rep.theorem = 1;
    rep.quantities = S;
    rep.terms = {{"mg1", t1},
                 {"cycle_load", t2},
                 {"switchover_mix", t3},
                 {"wait_mix", t4},
                 {"load_correction", t5}};
    rep.d_bar = t1 + t2 + t3 + t4 + t5;
    attach_baseline(rep, m);
    return rep;
}

DelayReport delay_two_station(const ValidatedModel& m, const QuantitySet& S) {
    require_switching_regime(m);
    if (m.station_count() != 2)
        fail(ErrorCode::UnsupportedAnalytic, "the two-station formula requires N = 2");
    const double rho0 = m.rho0(), r0 = m.r0(), r02 = m.r02();
    const double rho1 = m.rho(0), rho2 = m.rho(1);
    const double rf = r0 + S.f0;

    const double t1 = mg1_term(m);
    const double t2 = r0 * rho1 * rho2 / (rho0 * (1.0 - rho0));
    const double t3 = r02 / (2.0 * rf);
    const double t4 = rho2 * S.f[0] * (m.r(0) + S.r_tilde[1] + S.w[0]) / (rho0 * rf);
    const double t5 = rho1 * S.f[1] * (S.r_tilde[0] + m.r(1) + S.w[1]) / (rho0 * rf);

    DelayReport rep;
    rep.strategy = m.strategy();
    rep.theorem = 2;
    rep.quantities = S;
    rep.terms = {{"mg1", t1},
                 {"cross_load", t2},
                 {"switchover_moment", t3},
                 {"wait_station_1", t4},
                 {"wait_station_2", t5}};
    rep.d_bar = t1 + t2 + t3 + t4 + t5;
    attach_baseline(rep, m);
    return rep;
}

double delta_delay(const DelayReport& report, const ValidatedModel& m) {
    if (m.station_count() != 2 || report.theorem != 2)
        fail(ErrorCode::UnsupportedAnalytic, "the delta identity is stated for the N = 2 formula");
    const QuantitySet& S = report.quantities;
    const double r0 = m.r0(), r02 = m.r02(), rho0 = m.rho0();
    const double rf = r0 + S.f0;
    const double delta = -r02 / (2.0 * r0) + r02 / (2.0 * rf) +
                         m.rho(1) * S.f[0] * (m.r(0) + S.r_tilde[1] + S.w[0]) / (rho0 * rf) +
                         m.rho(0) * S.f[1] * (S.r_tilde[0] + m.r(1) + S.w[1]) / (rho0 * rf);
    const double direct = report.d_bar - report.d_exhaustive;
    if (std::abs(delta - direct) > 1e-9) {
        std::ostringstream os;
        os << "delta " << delta << " does not reconcile with d_bar - d_exh " << direct;
        fail(ErrorCode::ReconciliationFailure, os.str());
    }
    return delta;
}

WorkloadDiagnostics workload_diagnostics(const ValidatedModel& m, const DelayReport& report) {
    WorkloadDiagnostics d;
    double resid = 0;
    for (std::size_t i = 0; i < m.station_count(); ++i)
        resid += m.rho(i) * m.b2(i) / (2.0 * m.b(i));
    d.expected_workload = m.rho0() * report.d_bar + resid;
    d.switching_given_idle = m.r0() / (m.r0() + report.quantities.f0);
    d.mean_cycle = report.quantities.mean_cycle;
    return d;
}

DelayReport analyze(const ValidatedModel& m, const NumericOptions& opts) {
    switch (m.strategy()) {
        case Strategy::Exhaustive: {
            QuantitySet S = quantities_exhaustive(m);
            if (m.station_count() == 2) return delay_two_station(m, S);
            DelayReport rep;
            rep.strategy = m.strategy();
            rep.theorem = 0;
            rep.quantities = S;
            rep.d_bar = exhaustive_delay(m);
            rep.terms = {{"exhaustive", rep.d_bar}};
            attach_baseline(rep, m);
            return rep;
        }
        case Strategy::III:
            return delay_strategy_iii(m, quantities_strategy_iii(m, opts));
        case Strategy::II:
            return delay_two_station(m, quantities_strategy_ii(m, opts));
        case Strategy::IV:
            return delay_two_station(m, quantities_strategy_iv(m, opts));
        case Strategy::I: break;
    }
    fail(ErrorCode::UnsupportedAnalytic, "strategy I is covered by the simulator only");
}

}  // namespace pollinglab
