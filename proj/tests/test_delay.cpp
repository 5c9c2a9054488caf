#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pollinglab/delay.hpp"
#include "pollinglab/simulator.hpp"
#include "oracles.hpp"

using namespace pollinglab;

namespace {

PollingModel two_station(Strategy s, double t1, double t2, const SwitchoverSpec& sw,
                         double l1 = 0.5, double l2 = 0.3, double mu = 2.0) {
    PollingModel m;
    m.strategy = s;
    m.stations = {
        {l1, ServiceSpec::exponential(mu), sw, t1},
        {l2, ServiceSpec::exponential(mu), sw, t2},
    };
    return m;
}

}  // namespace

TEST_CASE("exhaustive delay closed form by hand") {
    // lambda = (0.3, 0.3), mu = (1, 1), deterministic r = (0.5, 0.5):
    // 1.5 + 0.375 + 0.5 = 2.375
    auto m = two_station(Strategy::Exhaustive, 0, 0, SwitchoverSpec::deterministic(0.5), 0.3, 0.3,
                         1.0);
    auto vm = validate(m);
    CHECK(exhaustive_delay(vm) == doctest::Approx(2.375).epsilon(1e-14));
}

TEST_CASE("higher switchover variance raises the exhaustive delay") {
    auto det = validate(two_station(Strategy::Exhaustive, 0, 0, SwitchoverSpec::deterministic(0.5)));
    auto exp_ = validate(two_station(Strategy::Exhaustive, 0, 0, SwitchoverSpec::exponential(2.0)));
    CHECK(exhaustive_delay(exp_) > exhaustive_delay(det));
}

TEST_CASE("exhaustive delay matches simulation") {
    auto m = two_station(Strategy::Exhaustive, 0, 0, SwitchoverSpec::deterministic(0.5));
    auto vm = validate(m);
    SimConfig cfg;
    cfg.model = m;
    cfg.seed = 404;
    cfg.max_events = 4000000;
    auto est = simulate(cfg);
    CHECK(std::abs(est.d_bar.value - exhaustive_delay(vm)) / exhaustive_delay(vm) < 0.005);
}

TEST_CASE("strategy III formula with zero timers collapses to exhaustive") {
    auto vm = validate(two_station(Strategy::III, 0, 0, SwitchoverSpec::deterministic(0.5)));
    auto rep = delay_strategy_iii(vm, quantities_strategy_iii(vm));
    CHECK(rep.d_bar == doctest::Approx(exhaustive_delay(vm)).epsilon(1e-12));
    CHECK(rep.delta == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("N-station and two-station formulas agree for strategy III") {
    oracles::SplitMix64 rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        const double l1 = 0.2 + 0.6 * rng.uniform();
        const double l2 = 0.2 + 0.6 * rng.uniform();
        const double mu = 2.0 + 2.0 * rng.uniform();
        if (l1 / mu + l2 / mu > 0.85) continue;
        PollingModel m;
        m.strategy = Strategy::III;
        const auto sw = (trial % 2) ? SwitchoverSpec::exponential(2.0 + rng.uniform())
                                    : SwitchoverSpec::deterministic(0.3 + 0.4 * rng.uniform());
        m.stations = {
            {l1, ServiceSpec::exponential(mu), sw, 2.0 * rng.uniform()},
            {l2, ServiceSpec::exponential(mu), sw, 2.0 * rng.uniform()},
        };
        auto vm = validate(m);
        auto S = quantities_strategy_iii(vm);
        auto r1 = delay_strategy_iii(vm, S);
        auto r2 = delay_two_station(vm, S);
        CHECK(std::abs(r1.d_bar - r2.d_bar) < 1e-10 * std::max(1.0, r1.d_bar));
    }
}

TEST_CASE("three-station strategy III delay matches simulation") {
    PollingModel m;
    m.strategy = Strategy::III;
    m.stations = {
        {0.4, ServiceSpec::exponential(3.0), SwitchoverSpec::deterministic(1.0 / 3.0), 0.5},
        {0.3, ServiceSpec::exponential(3.0), SwitchoverSpec::deterministic(1.0 / 3.0), 0.0},
        {0.2, ServiceSpec::exponential(3.0), SwitchoverSpec::deterministic(1.0 / 3.0), 0.0},
    };
    auto vm = validate(m);
    auto rep = delay_strategy_iii(vm, quantities_strategy_iii(vm));

    SimConfig cfg;
    cfg.model = m;
    cfg.seed = 505;
    cfg.max_events = 6000000;
    auto est = simulate(cfg);
    CHECK(std::abs(rep.d_bar - est.d_bar.value) / rep.d_bar < 0.01);
}

TEST_CASE("two-station delay is continuous at zero timers") {
    for (Strategy s : {Strategy::II, Strategy::III, Strategy::IV}) {
        auto base = validate(two_station(s, 0, 0, SwitchoverSpec::exponential(2.0)));
        const double dexh = exhaustive_delay(base);
        double prev_gap = 1e9;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            auto vm = validate(two_station(s, eps, 0, SwitchoverSpec::exponential(2.0)));
            auto rep = (s == Strategy::III)
                           ? delay_strategy_iii(vm, quantities_strategy_iii(vm))
                           : delay_two_station(vm, quantities_for(vm));
            const double gap = std::abs(rep.d_bar - dexh);
            CHECK(gap <= prev_gap + 1e-12);
            prev_gap = gap;
            if (eps == 1e-4) CHECK(gap < 1e-4);
        }
    }
}

TEST_CASE("strategy IV delay matches simulation") {
    auto m = two_station(Strategy::IV, 1.0, 0.0, SwitchoverSpec::exponential(2.0));
    auto vm = validate(m);
    auto rep = delay_two_station(vm, quantities_strategy_iv(vm));
    SimConfig cfg;
    cfg.model = m;
    cfg.seed = 606;
    cfg.max_events = 6000000;
    auto est = simulate(cfg);
    CHECK(std::abs(rep.d_bar - est.d_bar.value) / rep.d_bar < 0.01);
    CHECK(rep.d_bar >= est.d_bar.ci_lo);
    CHECK(rep.d_bar <= est.d_bar.ci_hi);
}

TEST_CASE("delta reconciles with the baseline difference") {
    auto vm = validate(two_station(Strategy::II, 0.8, 0.0, SwitchoverSpec::exponential(2.0)));
    auto rep = delay_two_station(vm, quantities_strategy_ii(vm));
    const double delta = delta_delay(rep, vm);
    CHECK(delta == doctest::Approx(rep.d_bar - rep.d_exhaustive).epsilon(1e-10).scale(1.0));

    // f0 = 0 makes the delta vanish
    auto vm0 = validate(two_station(Strategy::II, 0.0, 0.0, SwitchoverSpec::exponential(2.0)));
    auto rep0 = delay_two_station(vm0, quantities_strategy_ii(vm0));
    CHECK(delta_delay(rep0, vm0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("workload diagnostics") {
    // q = 1 when the server never waits
    auto vm0 = validate(two_station(Strategy::Exhaustive, 0, 0, SwitchoverSpec::deterministic(0.5)));
    auto rep0 = analyze(vm0);
    CHECK(rep0.diagnostics.switching_given_idle == doctest::Approx(1.0).epsilon(1e-14));

    // E V against the time-averaged simulated workload, exhaustive fixture
    SimConfig cfg;
    cfg.model = vm0.model();
    cfg.seed = 707;
    cfg.max_events = 4000000;
    auto est = simulate(cfg);
    CHECK(std::abs(rep0.diagnostics.expected_workload - est.mean_workload_hat) /
              rep0.diagnostics.expected_workload <
          0.01);

    // the same identity on a strategy III fixture, both directions
    auto m3 = two_station(Strategy::III, 1.0, 0.0, SwitchoverSpec::deterministic(0.5));
    auto vm3 = validate(m3);
    auto rep3 = analyze(vm3);
    SimConfig cfg3;
    cfg3.model = m3;
    cfg3.seed = 708;
    cfg3.max_events = 4000000;
    auto est3 = simulate(cfg3);
    CHECK(std::abs(rep3.diagnostics.expected_workload - est3.mean_workload_hat) /
              rep3.diagnostics.expected_workload <
          0.01);
    // back out d_bar from the simulated workload via the same identity
    double resid = 0;
    for (std::size_t i = 0; i < 2; ++i) resid += vm3.rho(i) * vm3.b2(i) / (2.0 * vm3.b(i));
    const double dbar_from_v = (est3.mean_workload_hat - resid) / vm3.rho0();
    CHECK(std::abs(dbar_from_v - rep3.d_bar) / rep3.d_bar < 0.01);
    CHECK(rep3.diagnostics.switching_given_idle > 0.0);
    CHECK(rep3.diagnostics.switching_given_idle <= 1.0);
}

TEST_CASE("analyze dispatches per strategy and embeds the baseline") {
    for (Strategy s : {Strategy::Exhaustive, Strategy::II, Strategy::III, Strategy::IV}) {
        auto vm = validate(two_station(s, 0.6, 0.0, SwitchoverSpec::exponential(2.0)));
        auto rep = analyze(vm);
        CHECK(rep.d_bar == doctest::Approx(rep.d_exhaustive + rep.delta).epsilon(1e-10));
        CHECK(std::isfinite(rep.d_bar));
        for (const auto& [name, value] : rep.terms) {
            CHECK(std::isfinite(value));
            CHECK(!name.empty());
        }
    }
    auto vm1 = validate(two_station(Strategy::I, 0.6, 0.0, SwitchoverSpec::exponential(2.0)));
    CHECK_THROWS_AS(analyze(vm1), PollingError);
}
