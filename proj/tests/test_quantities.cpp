#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pollinglab/quantities.hpp"
#include "pollinglab/simulator.hpp"
#include "oracles.hpp"

using namespace pollinglab;

namespace {

PollingModel fixture(Strategy s, double t1, double t2, const SwitchoverSpec& sw) {
    PollingModel m;
    m.strategy = s;
    m.stations = {
        {0.5, ServiceSpec::exponential(2.0), sw, t1},
        {0.3, ServiceSpec::exponential(2.0), sw, t2},
    };
    return m;
}

PollingModel det_fixture(Strategy s, double t1, double t2) {
    return fixture(s, t1, t2, SwitchoverSpec::deterministic(0.5));
}

}  // namespace

TEST_CASE("strategy III with zero timers degenerates to exhaustive") {
    auto vm = validate(det_fixture(Strategy::III, 0.0, 0.0));
    auto S = quantities_strategy_iii(vm);
    CHECK(S.f[0] == 0.0);
    CHECK(S.f[1] == 0.0);
    CHECK(S.f0 == 0.0);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(S.c[i] == doctest::Approx(vm.rho(i) * vm.r0() / (1 - vm.rho0())).epsilon(1e-12));
    CHECK(S.mean_cycle == doctest::Approx(vm.r0() / (1 - vm.rho0())).epsilon(1e-12));
}

TEST_CASE("strategy III sojourn times match the printed two-station solution") {
    auto vm = validate(det_fixture(Strategy::III, 1.0, 0.4));
    auto S = quantities_strategy_iii(vm);
    const double rho1 = vm.rho(0), rho2 = vm.rho(1), rho0 = vm.rho0(), r0 = vm.r0();
    const double T1 = 1.0, T2 = 0.4, b1 = vm.b(0), b2 = vm.b(1);
    TransientQueue q1{0.5, 2.0}, q2{0.3, 2.0};
    const double qq1 = expected_queue_from_empty(q1, T1);
    const double qq2 = expected_queue_from_empty(q2, T2);
    const double c2 = (r0 * rho2 + (1 - rho1) * (1 - rho2) * T2 + rho2 * (1 - rho1) * T1 +
                       (1 - rho1) * qq2 * b2 + rho2 * qq1 * b1) /
                      (1 - rho0);
    const double c1 = (r0 * rho1 + (1 - rho1) * (1 - rho2) * T1 + rho1 * (1 - rho2) * T2 +
                       (1 - rho2) * qq1 * b1 + rho1 * qq2 * b2) /
                      (1 - rho0);
    CHECK(S.c[0] == doctest::Approx(c1).epsilon(1e-12));
    CHECK(S.c[1] == doctest::Approx(c2).epsilon(1e-12));
}

TEST_CASE("strategy III quantities match simulation") {
    auto model = det_fixture(Strategy::III, 1.0, 0.0);
    auto vm = validate(model);
    auto S = quantities_strategy_iii(vm);

    SimConfig cfg;
    cfg.model = model;
    cfg.seed = 101;
    cfg.max_events = 4000000;
    auto est = simulate(cfg);

    CHECK(std::abs(S.f[0] - est.stations[0].f_hat) / S.f[0] < 0.01);
    CHECK(std::abs(S.w[0] - est.stations[0].w_hat) / S.w[0] < 0.01);
    const double c1_hat = vm.rho(0) * est.mean_cycle_hat + est.stations[0].f_hat;
    CHECK(std::abs(S.c[0] - c1_hat) / S.c[0] < 0.01);
    CHECK(std::abs(S.mean_cycle - est.mean_cycle_hat) / S.mean_cycle < 0.01);
}

TEST_CASE("strategy II with zero timers is exhaustive") {
    auto vm = validate(det_fixture(Strategy::II, 0.0, 0.0));
    auto S = quantities_strategy_ii(vm);
    CHECK(S.f[0] == 0.0);
    CHECK(S.w[0] == 0.0);
    CHECK(S.r_tilde[0] == vm.r(0));
    CHECK(S.r_tilde[1] == vm.r(1));
}

TEST_CASE("deterministic switchovers make the conditional mean exact") {
    auto vm = validate(det_fixture(Strategy::II, 0.8, 0.3));
    auto S = quantities_strategy_ii(vm);
    CHECK(S.r_tilde[0] == vm.r(0));
    CHECK(S.r_tilde[1] == vm.r(1));
}

TEST_CASE("strategy II quantities match simulation with exponential switchovers") {
    auto model = fixture(Strategy::II, 0.8, 0.0, SwitchoverSpec::exponential(2.0));
    auto vm = validate(model);
    auto S = quantities_strategy_ii(vm);

    SimConfig cfg;
    cfg.model = model;
    cfg.seed = 202;
    cfg.max_events = 6000000;
    auto est = simulate(cfg);

    CHECK(std::abs(S.f[0] - est.stations[0].f_hat) / S.f[0] < 0.015);
    CHECK(std::abs(S.w[0] - est.stations[0].w_hat) / S.w[0] < 0.015);
    // switchover out of station 2 sampled while waiting at station 1
    CHECK(std::abs(S.r_tilde[1] - est.stations[1].r_tilde_hat) / S.r_tilde[1] < 0.015);
    // selection bias pushes the conditional mean below the plain mean
    CHECK(S.r_tilde[1] < vm.r(1));
}

TEST_CASE("strategy II sojourn times agree with the direct formula") {
    auto model = det_fixture(Strategy::II, 0.8, 0.3);
    auto vm = validate(model);
    SteadyStateContext ctx(vm);
    auto res = solve_strategy_distributions(ctx, Strategy::II);
    auto S = quantities_strategy_ii(vm);

    for (std::size_t i = 0; i < 2; ++i) {
        const QueueLengthDist& pi = (i == 0) ? res.pi1 : res.pi2;
        TransientQueue q{vm.lambda(i), 1.0 / vm.b(i)};
        TransientEvaluator ev(q, vm.timer(i), res.K + 64);
        double leftover = 0;
        for (int k = 0; k <= res.K; ++k) {
            double mean_l = 0;
            for (int l = 0; l <= res.K + 60; ++l) mean_l += l * ev.prob(k, l);
            leftover += pi[k] * mean_l;
        }
        const double c_direct = vm.timer(i) + leftover * vm.b(i) / (1 - vm.rho(i));
        CHECK(S.c[i] == doctest::Approx(c_direct).epsilon(1e-5));
    }
}

TEST_CASE("strategy IV closed forms and limits") {
    // small timer: f and w vanish
    auto vm0 = validate(det_fixture(Strategy::IV, 1e-7, 0.0));
    auto S0 = quantities_strategy_iv(vm0);
    CHECK(S0.f[0] < 1e-6);
    CHECK(S0.w[0] < 1e-6);

    // huge timer: the residual becomes the memoryless mean 1/lambda
    auto vminf = validate(det_fixture(Strategy::IV, 60.0, 0.0));
    auto Sinf = quantities_strategy_iv(vminf);
    CHECK(Sinf.w[0] == doctest::Approx(1.0 / 0.5).epsilon(1e-9));

    // lambda = 1, T = 1: w = 1 - 1/(e-1), cross-checked by quadrature of
    // E[min(E,T)^2] / (2 E[min(E,T)])
    PollingModel m = det_fixture(Strategy::IV, 1.0, 0.0);
    m.stations[0].lambda = 1.0;
    m.stations[0].service = ServiceSpec::exponential(4.0);
    auto vm = validate(m);
    auto S = quantities_strategy_iv(vm);
    const double even2 = oracles::simpson([](double x) { return x * x * std::exp(-x); }, 0, 1.0) +
                         1.0 * std::exp(-1.0);
    const double even1 = oracles::simpson([](double x) { return x * std::exp(-x); }, 0, 1.0) +
                         1.0 * std::exp(-1.0);
    CHECK(S.w[0] == doctest::Approx(1.0 - 1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-12));
    CHECK(S.w[0] == doctest::Approx(even2 / (2.0 * even1)).epsilon(1e-7));
}

TEST_CASE("strategy IV quantities match simulation") {
    auto model = fixture(Strategy::IV, 1.0, 0.0, SwitchoverSpec::exponential(2.0));
    auto vm = validate(model);
    auto S = quantities_strategy_iv(vm);

    SimConfig cfg;
    cfg.model = model;
    cfg.seed = 303;
    cfg.max_events = 6000000;
    auto est = simulate(cfg);

    CHECK(std::abs(S.f[0] - est.stations[0].f_hat) / S.f[0] < 0.015);
    CHECK(std::abs(S.w[0] - est.stations[0].w_hat) / S.w[0] < 0.015);
    CHECK(std::abs(S.r_tilde[1] - est.stations[1].r_tilde_hat) / S.r_tilde[1] < 0.015);
    CHECK(std::abs(S.mean_cycle - est.mean_cycle_hat) / S.mean_cycle < 0.005);
}

TEST_CASE("waiting-time positivity and timer bounds") {
    for (Strategy s : {Strategy::II, Strategy::III, Strategy::IV}) {
        auto vm = validate(det_fixture(s, 0.7, 0.0));
        auto S = quantities_for(vm);
        CHECK(S.f[0] > 0.0);
        CHECK(S.f[1] == 0.0);
        CHECK(S.f[0] <= 0.7 + 1e-12);
        if (s != Strategy::III) CHECK(S.w[0] <= 0.7 + 1e-12);
    }
}

TEST_CASE("strategy ordering of the conditional switchover means") {
    // r2_IV <= r2 and r2_IV <= r2_II(T1) on exponential-switchover fixtures
    auto sw = SwitchoverSpec::exponential(2.0);
    auto vm_iv = validate(fixture(Strategy::IV, 0.8, 0.0, sw));
    auto Siv = quantities_strategy_iv(vm_iv);
    CHECK(Siv.r_tilde[1] <= vm_iv.r(1) + 1e-12);
    for (double t1 : {0.2, 0.8, 2.0}) {
        auto vm_ii = validate(fixture(Strategy::II, t1, 0.0, sw));
        auto Sii = quantities_strategy_ii(vm_ii);
        CHECK(Siv.r_tilde[1] <= Sii.r_tilde[1] + 1e-10);
    }
}

TEST_CASE("cycle-time identities") {
    // printed examples
    auto vm = validate(det_fixture(Strategy::Exhaustive, 0.0, 0.0));
    auto S = quantities_exhaustive(vm);
    CHECK(mean_cycle_time(S, vm) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    QuantitySet fake = S;
    fake.f0 = 0.3;
    // (1 + 0.3) / (1 - 0.35) with matching loads
    CHECK((1.0 + fake.f0) / (1.0 - 0.35) == doctest::Approx(2.0).epsilon(1e-14));

    // c0 + r0 = E C for each strategy
    for (Strategy s : {Strategy::II, Strategy::III, Strategy::IV}) {
        auto v = validate(det_fixture(s, 0.9, 0.4));
        auto q = quantities_for(v);
        CHECK(q.c0 + v.r0() == doctest::Approx(q.mean_cycle).epsilon(1e-10));
    }
}
