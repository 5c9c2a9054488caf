#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pollinglab/numerics.hpp"
#include "oracles.hpp"

using namespace pollinglab;

namespace {

double interp(const GridDensity& g, double x) {
    if (g.values.empty()) return 0.0;
    const double pos = x / g.step - 0.5;
    if (pos <= 0) return g.values.front();
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= g.values.size()) return g.values.back();
    const double frac = pos - static_cast<double>(i);
    return g.values[i] * (1.0 - frac) + g.values[i + 1] * frac;
}

}  // namespace

TEST_CASE("scaled Bessel basics") {
    CHECK(bessel_i_scaled(0, 0.0) == 1.0);
    CHECK(bessel_i_scaled(3, 0.0) == 0.0);
    // symmetry in the order
    for (double x : {0.3, 2.0, 17.5}) {
        CHECK(bessel_i_scaled(-3, x) == doctest::Approx(bessel_i_scaled(3, x)).epsilon(1e-15));
    }
    // e^{-2} I_1(2)
    CHECK(bessel_i_scaled(1, 2.0) == doctest::Approx(0.21526928924893765).epsilon(1e-12));
}

TEST_CASE("scaled Bessel matches extended-precision series on a lattice") {
    const int ks[10] = {0, 1, 2, 3, 5, 8, 13, 21, 30, 40};
    int checked = 0;
    for (int ik = 0; ik < 10; ++ik) {
        for (int ix = 1; ix <= 20; ++ix) {
            const double x = 0.005 * std::pow(1.6, ix);  // 0.008 .. ~90
            const double got = bessel_i_scaled(ks[ik], x);
            const double want = static_cast<double>(oracles::bessel_series_scaled(ks[ik], x));
            if (want > 1e-280) {
                CHECK(got == doctest::Approx(want).epsilon(1e-12));
            } else {
                CHECK(got <= 1e-280);
            }
            ++checked;
        }
    }
    CHECK(checked == 200);
}

TEST_CASE("transient probability identity at time zero") {
    TransientQueue q{0.5, 1.0};
    for (int j : {0, 1, 4})
        for (int k : {0, 1, 4})
            CHECK(transient_prob(q, j, k, 0.0) == (j == k ? 1.0 : 0.0));
}

TEST_CASE("transient probability approaches the ergodic limit") {
    TransientQueue q{0.5, 1.0};
    // relaxation rate is (sqrt(mu)-sqrt(lambda))^2 ~ 0.086, so the 1e-6
    // neighborhood of 1-rho is reached around x = 200
    CHECK(transient_prob(q, 0, 0, 200.0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(transient_prob(q, 0, 0, 50.0) - 0.5) < 1e-4);
}

TEST_CASE("transient probability matches the uniformization oracle") {
    TransientQueue q{0.5, 1.0};
    CHECK(transient_prob(q, 0, 0, 1.0) ==
          doctest::Approx(oracles::uniformization_prob(0.5, 1.0, 0, 0, 1.0)).epsilon(1e-8));
    for (int j : {0, 1, 3, 6}) {
        for (int k : {0, 2, 5}) {
            for (double x : {0.25, 1.0, 4.0}) {
                const double want = oracles::uniformization_prob(0.5, 1.0, j, k, x);
                CHECK(transient_prob(q, j, k, x) == doctest::Approx(want).epsilon(2e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("transient rows are distributions") {
    TransientQueue q{0.7, 1.0};
    for (double x : {0.3, 2.0, 11.0}) {
        TransientEvaluator ev(q, x, 80);
        for (int j : {0, 2, 9}) {
            auto row = ev.row(j, 120);
            double s = 0;
            for (double p : row) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                s += p;
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("Chapman-Kolmogorov on sampled transitions") {
    TransientQueue q{0.5, 1.0};
    const double s = 0.7, t = 1.3;
    TransientEvaluator evs(q, s, 64), evt(q, t, 64), evst(q, s + t, 64);
    for (int j : {0, 1, 3}) {
        for (int k : {0, 2, 5}) {
            double sum = 0;
            for (int m = 0; m < 160; ++m) sum += evs.prob(j, m) * evt.prob(m, k);
            CHECK(sum == doctest::Approx(evst.prob(j, k)).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("expected queue length from empty") {
    TransientQueue q{0.5, 1.0};
    CHECK(expected_queue_from_empty(q, 0.0) == 0.0);
    // stationary M/M/1 mean rho/(1-rho) = 1
    CHECK(expected_queue_from_empty(q, 200.0) == doctest::Approx(1.0).epsilon(1e-6));
    const double want = oracles::uniformization_mean_queue(0.5, 1.0, 0, 1.0);
    CHECK(expected_queue_from_empty(q, 1.0) == doctest::Approx(want).epsilon(1e-8));
    // monotone nondecreasing in t
    double prev = 0.0;
    for (double t = 0.25; t <= 8.0; t += 0.25) {
        const double v = expected_queue_from_empty(q, t);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("empty dwell integrals") {
    TransientQueue q{0.5, 1.0};
    CHECK(empty_dwell_integrals(q, 0, 0.0) == std::pair{0.0, 0.0});

    // lambda -> 0: P_{0,0} -> 1, so m0 -> T
    TransientQueue q0{1e-9, 1.0};
    auto [m0, m1] = empty_dwell_integrals(q0, 0, 3.0);
    CHECK(m0 == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(m1 == doctest::Approx(4.5).epsilon(1e-6));

    // oracle: dense Simpson over uniformization values
    auto [a0, a1] = empty_dwell_integrals(q, 1, 2.0);
    const double w0 = oracles::simpson(
        [&](double x) { return oracles::uniformization_prob(0.5, 1.0, 1, 0, x); }, 0.0, 2.0, 400);
    const double w1 = oracles::simpson(
        [&](double x) { return x * oracles::uniformization_prob(0.5, 1.0, 1, 0, x); }, 0.0, 2.0,
        400);
    CHECK(a0 == doctest::Approx(w0).epsilon(1e-7));
    CHECK(a1 == doctest::Approx(w1).epsilon(1e-7));
}

TEST_CASE("dwell integrals for all starting levels match the scalar path") {
    TransientQueue q{0.6, 2.0};
    auto [m0s, m1s] = dwell_integrals_upto(q, 6, 1.5);
    for (int k = 0; k <= 6; ++k) {
        auto [m0, m1] = empty_dwell_integrals(q, k, 1.5);
        CHECK(m0s[k] == doctest::Approx(m0).epsilon(1e-9).scale(1.0));
        CHECK(m1s[k] == doctest::Approx(m1).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("busy-period density: mass, mean, pointwise closed form") {
    TransientQueue q{0.5, 1.0};
    auto g = busy_period_density(q, 0.002, 320.0);
    CHECK(g.atom_at_zero == 0.0);
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.mean() == doctest::Approx(2.0).epsilon(1e-6));  // b/(1-rho)

    // closed Bessel representation: g(x) = (1/(x sqrt(rho))) e^{-(l+m-a)x} Ibar_1(ax)
    for (double x : {0.25, 1.0, 3.0, 10.0}) {
        const double a = q.a();
        const double ib = static_cast<double>(oracles::bessel_series_scaled(1, a * x));
        const double want = ib * std::exp(-(q.lambda + q.mu - a) * x) / (x * std::sqrt(q.rho()));
        CHECK(busy_period_pdf(q, x) == doctest::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("busy-period auto grid meets tolerances for several loads") {
    for (auto [l, m] : std::vector<std::pair<double, double>>{{0.5, 2.0}, {0.3, 1.0}, {1.2, 2.0}}) {
        TransientQueue q{l, m};
        auto g = busy_period_density_auto(q);
        CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(g.mean() == doctest::Approx(q.mean_busy_period()).epsilon(1e-6));
    }
}

TEST_CASE("busy-period grid too coarse is rejected") {
    TransientQueue q{0.5, 1.0};
    CHECK_THROWS_AS(busy_period_density(q, 0.2, 40.0), PollingError);
}

TEST_CASE("convolution powers of the busy period") {
    TransientQueue q{0.5, 2.0};
    auto g = busy_period_density_auto(q);

    auto g0 = convolve_busy(g, 0);
    CHECK(g0.atom_at_zero == 1.0);
    CHECK(g0.mean() == 0.0);

    auto g2 = convolve_busy(g, 2);
    const double base_mean = convolve_busy(g, 1).mean();
    // means add under convolution; residual drift comes from tail trimming
    CHECK(g2.mean() == doctest::Approx(2.0 * base_mean).epsilon(1e-9));
    CHECK(g2.mean() == doctest::Approx(2.0 * q.mean_busy_period()).epsilon(4e-6));
    CHECK(g2.mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("three-fold convolution agrees with a refined-grid oracle") {
    TransientQueue q{0.5, 2.0};
    NumericOptions coarse;
    NumericOptions fine;
    fine.grid_divisor = coarse.grid_divisor * 2;  // halve the step
    auto g3c = convolve_busy(busy_period_density_auto(q, coarse), 3);
    auto g3f = convolve_busy(busy_period_density_auto(q, fine), 3);
    for (double x : {0.5, 1.0, 2.0, 4.0, 6.0}) {
        CHECK(interp(g3c, x) == doctest::Approx(interp(g3f, x)).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("poisson transform closed forms") {
    const double lambda = 0.8;
    auto det = SwitchoverSpec::deterministic(1.25);
    for (int j : {0, 1, 4}) {
        const double z = lambda * 1.25;
        const double want = std::exp(-z) * std::pow(z, j) / std::tgamma(j + 1.0);
        CHECK(poisson_transform(det, lambda, j, false) == doctest::Approx(want).epsilon(1e-14));
        CHECK(poisson_transform(det, lambda, j, true) ==
              doctest::Approx(1.25 * want).epsilon(1e-14));
    }

    auto expo = SwitchoverSpec::exponential(2.0);
    for (int j : {0, 1, 3}) {
        const double th = 2.0;
        const double want = th * std::pow(lambda, j) / std::pow(lambda + th, j + 1);
        CHECK(poisson_transform(expo, lambda, j, false) == doctest::Approx(want).epsilon(1e-13));
        // quadrature oracle
        const double byquad = oracles::simpson(
            [&](double x) {
                return std::exp(-lambda * x) * std::pow(lambda * x, j) / std::tgamma(j + 1.0) *
                       th * std::exp(-th * x);
            },
            0.0, 40.0, 40000);
        CHECK(poisson_transform(expo, lambda, j, false) == doctest::Approx(byquad).epsilon(1e-9));
    }

    auto gam = SwitchoverSpec::gamma(2.5, 3.0);
    const double byquad = oracles::simpson(
        [&](double x) {
            return std::exp(-lambda * x) * std::pow(lambda * x, 2) / 2.0 *
                   std::pow(3.0, 2.5) * std::pow(x, 1.5) * std::exp(-3.0 * x) / std::tgamma(2.5);
        },
        0.0, 40.0, 40000);
    CHECK(poisson_transform(gam, lambda, 2, false) == doctest::Approx(byquad).epsilon(1e-9));

    // Poisson mixture over j normalizes for every family
    for (const auto& F : {det, expo, gam, SwitchoverSpec::mixture({{0.0, 0.25}, {1.5, 0.75}})}) {
        double s = 0;
        for (int j = 0; j < 300; ++j) s += poisson_transform(F, lambda, j, false);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("conditional switchover mean given arrivals") {
    // conditioning cannot change a constant
    auto det = SwitchoverSpec::deterministic(0.75);
    for (int j : {0, 2, 7})
        CHECK(cond_switchover_given_arrivals(det, 1.3, j) == doctest::Approx(0.75).epsilon(1e-14));

    // exponential rate 1, lambda = 1, j = 0 -> 0.5
    auto e1 = SwitchoverSpec::exponential(1.0);
    CHECK(cond_switchover_given_arrivals(e1, 1.0, 0) == doctest::Approx(0.5).epsilon(1e-13));

    // nondecreasing in j, and bounded by alpha (j^2 + 1) with alpha fitted on j <= 10.
    // The bounded mixture runs out of representable P(B_j) around j = 60.
    struct Fixture {
        SwitchoverSpec F;
        int jmax;
    };
    const Fixture fixtures[] = {
        {e1, 200},
        {SwitchoverSpec::gamma(2.0, 2.0), 200},
        {SwitchoverSpec::mixture({{0.2, 0.5}, {2.0, 0.5}}), 60},
    };
    for (const auto& [F, jmax] : fixtures) {
        double prev = 0.0;
        double alpha = 0.0;
        for (int j = 0; j <= 10; ++j) {
            const double v = cond_switchover_given_arrivals(F, 1.1, j);
            CHECK(v >= prev - 1e-12);
            prev = v;
            alpha = std::max(alpha, v / (static_cast<double>(j) * j + 1.0));
        }
        for (int j = 11; j <= jmax; ++j) {
            const double v = cond_switchover_given_arrivals(F, 1.1, j);
            CHECK(v >= prev - 1e-12);
            CHECK(v <= alpha * (static_cast<double>(j) * j + 1.0) + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("degenerate conditioning is reported") {
    auto mix = SwitchoverSpec::mixture({{0.2, 0.5}, {2.0, 0.5}});
    CHECK_THROWS_AS(cond_switchover_given_arrivals(mix, 1.1, 500), PollingError);
}
