#include "pollinglab/quantities.hpp"

#include <algorithm>
#include <cmath>

#include "pollinglab/numerics.hpp"

namespace pollinglab {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
    throw PollingError(code, msg);
}

void finalize_cycle(QuantitySet& S, const ValidatedModel& m) {
    S.f0 = 0;
    for (double f : S.f) S.f0 += f;
    S.mean_cycle = (m.r0() + S.f0) / (1.0 - m.rho0());
    S.c0 = 0;
    for (double c : S.c) S.c0 += c;
}

// E[R | B_j] with a guard instead of an exception when P(B_j) underflows;
// such terms carry zero weight in the mixtures they enter.
bool cond_mean_or_skip(const SwitchoverSpec& F, double lambda, int j, double& out) {
    const double denom = poisson_transform(F, lambda, j, false);
    if (denom < 1e-300) return false;
    out = poisson_transform(F, lambda, j, true) / denom;
    return true;
}

}  // namespace

QuantitySet quantities_strategy_iii(const ValidatedModel& m, const NumericOptions& opts) {
    if (!m.all_service_exponential())
        fail(ErrorCode::UnsupportedAnalytic, "strategy III analysis requires exponential service");
    const std::size_t n = m.station_count();
    QuantitySet S;
    S.f.assign(n, 0.0);
    S.w.assign(n, 0.0);
    S.r_tilde.assign(n, 0.0);
    S.c.assign(n, 0.0);

    NumericOptions tight = opts;
    tight.quad_tol = std::min(opts.quad_tol, 1e-12);

    // expected leftover work at timer expiry and the linear system for c_i:
    // c_i (1 + beta_i) - beta_i c0 = beta_i r0 + T_i + q_i b_i / (1 - rho_i)
    std::vector<double> q(n), rhs(n), beta(n);
    for (std::size_t i = 0; i < n; ++i) {
        TransientQueue tq{m.lambda(i), 1.0 / m.b(i)};
        q[i] = m.timer(i) > 0 ? expected_queue_from_empty(tq, m.timer(i), tight) : 0.0;
        beta[i] = m.rho(i) / (1.0 - m.rho(i));
        rhs[i] = beta[i] * m.r0() + m.timer(i) + q[i] * m.b(i) / (1.0 - m.rho(i));
    }
    // Gaussian elimination on M[i][j] = delta_ij (1 + beta_i) - beta_i
    std::vector<std::vector<double>> M(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) M[i][j] = (i == j ? 1.0 + beta[i] : 0.0) - beta[i];
        M[i][n] = rhs[i];
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        if (std::abs(M[piv][col]) < 1e-12)
            fail(ErrorCode::SingularSystem, "sojourn-time system is singular");
        std::swap(M[col], M[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double fac = M[r][col] / M[col][col];
            for (std::size_t j = col; j <= n; ++j) M[r][j] -= fac * M[col][j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) S.c[i] = M[i][n] / M[i][i];
    double c0 = 0;
    for (double c : S.c) c0 += c;

    for (std::size_t i = 0; i < n; ++i) {
        const double T = m.timer(i);
        S.r_tilde[i] = m.r(i);  // a waiting period happens every cycle
        if (T <= 0) continue;
        TransientQueue tq{m.lambda(i), 1.0 / m.b(i)};
        auto [m0, m1] = empty_dwell_integrals(tq, 0, T, tight);
        S.f[i] = m0;
        const double first_busy =
            m.lambda(i) * (m.r0() + c0 - S.c[i]) * m.b(i) / (1.0 - m.rho(i));
        S.w[i] = first_busy + (m0 > 0 ? m1 / m0 : 0.0);
    }
    finalize_cycle(S, m);
    return S;
}

QuantitySet quantities_strategy_ii(SteadyStateContext& ctx) {
    const ValidatedModel& m = ctx.model();
    const NumericOptions& opts = ctx.options();
    auto res = solve_strategy_distributions(ctx, Strategy::II);

    const std::size_t n = m.station_count();
    QuantitySet S;
    S.f.assign(n, 0.0);
    S.w.assign(n, 0.0);
    S.r_tilde.assign(n, 0.0);
    S.c.assign(n, 0.0);

    NumericOptions tight = opts;
    tight.quad_tol = std::min(opts.quad_tol, 1e-12);

    std::vector<std::vector<double>> m0s(n), m1s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const QueueLengthDist& pi = (i == 0) ? res.pi1 : res.pi2;
        TransientQueue tq{m.lambda(i), 1.0 / m.b(i)};
        const double T = m.timer(i);
        if (T > 0) {
            std::tie(m0s[i], m1s[i]) = dwell_integrals_upto(tq, res.K, T, tight);
            double f = 0, wnum = 0, wden = 0;
            for (int k = 0; k <= res.K; ++k) {
                f += pi[k] * m0s[i][k];
                wnum += pi[k] * m1s[i][k];
                wden += pi[k] * m0s[i][k];
            }
            S.f[i] = f;
            S.w[i] = wden > 0 ? wnum / wden : 0.0;
        }
    }

    // conditional mean switchover out of station i, sampled while the server
    // waits at the next station
    for (std::size_t i = 0; i < n; ++i) {
        const auto& F = m.stations()[i].switchover_out;
        const std::size_t j = m.next(i);
        if (F.is_deterministic() || m.timer(j) <= 0 || res.kind == OperatorKind::PiDirect) {
            S.r_tilde[i] = m.r(i);
            continue;
        }
        const QueueLengthDist& pij = (j == 0) ? res.pi1 : res.pi2;
        const QueueLengthDist& nui = (i == 0) ? res.nu1 : res.nu2;
        const double lam_j = m.lambda(j);
        // p_k over arrival states of station j, weighted by waiting time
        double pden = 0;
        for (int k = 0; k <= res.K; ++k) pden += pij[k] * m0s[j][k];
        if (pden <= 0) {
            S.r_tilde[i] = m.r(i);
            continue;
        }
        std::vector<double> pb(static_cast<std::size_t>(res.K) + 1, 0.0);
        std::vector<double> er(static_cast<std::size_t>(res.K) + 1, 0.0);
        for (int v = 0; v <= res.K; ++v) {
            pb[v] = poisson_transform(F, lam_j, v, false);
            double e;
            er[v] = cond_mean_or_skip(F, lam_j, v, e) ? e : 0.0;
        }
        double rt = 0;
        for (int k = 0; k <= res.K; ++k) {
            const double pk = pij[k] * m0s[j][k] / pden;
            if (pk == 0.0) continue;
            double ck = 0, num = 0;
            for (int v = 0; v <= k; ++v) {
                const double t = nui[k - v] * pb[v];
                ck += t;
                num += t * er[v];
            }
            if (ck > 0) rt += pk * (num / ck);
        }
        S.r_tilde[i] = rt;
    }

    finalize_cycle(S, m);
    for (std::size_t i = 0; i < n; ++i) S.c[i] = m.rho(i) * S.mean_cycle + S.f[i];
    S.c0 = 0;
    for (double c : S.c) S.c0 += c;
    return S;
}

QuantitySet quantities_strategy_ii(const ValidatedModel& m, const NumericOptions& opts) {
    SteadyStateContext ctx(m, opts);
    return quantities_strategy_ii(ctx);
}

QuantitySet quantities_strategy_iv(SteadyStateContext& ctx) {
    const ValidatedModel& m = ctx.model();
    auto res = solve_strategy_distributions(ctx, Strategy::IV);

    const std::size_t n = m.station_count();
    QuantitySet S;
    S.f.assign(n, 0.0);
    S.w.assign(n, 0.0);
    S.r_tilde.assign(n, 0.0);
    S.c.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const QueueLengthDist& pi = (i == 0) ? res.pi1 : res.pi2;
        const double lam = m.lambda(i);
        const double T = m.timer(i);
        if (T > 0) {
            S.f[i] = pi[0] * (-std::expm1(-lam * T)) / lam;
            S.w[i] = 1.0 / lam - T / std::expm1(lam * T);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& F = m.stations()[i].switchover_out;
        const std::size_t j = m.next(i);
        if (F.is_deterministic() || m.timer(j) <= 0) {
            S.r_tilde[i] = m.r(i);
        } else {
            S.r_tilde[i] = cond_switchover_given_arrivals(F, m.lambda(j), 0);
        }
    }
    finalize_cycle(S, m);
    for (std::size_t i = 0; i < n; ++i) S.c[i] = m.rho(i) * S.mean_cycle + S.f[i];
    S.c0 = 0;
    for (double c : S.c) S.c0 += c;
    return S;
}

QuantitySet quantities_strategy_iv(const ValidatedModel& m, const NumericOptions& opts) {
    if (!m.all_service_exponential())
        fail(ErrorCode::UnsupportedAnalytic,
             "strategy IV analysis is implemented for exponential service");
    SteadyStateContext ctx(m, opts);
    return quantities_strategy_iv(ctx);
}

QuantitySet quantities_exhaustive(const ValidatedModel& m) {
    const std::size_t n = m.station_count();
    QuantitySet S;
    S.f.assign(n, 0.0);
    S.w.assign(n, 0.0);
    S.r_tilde.assign(n, 0.0);
    S.c.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) S.r_tilde[i] = m.r(i);
    finalize_cycle(S, m);
    for (std::size_t i = 0; i < n; ++i) S.c[i] = m.rho(i) * S.mean_cycle;
    S.c0 = 0;
    for (double c : S.c) S.c0 += c;
    return S;
}

QuantitySet quantities_for(const ValidatedModel& m, const NumericOptions& opts) {
    switch (m.strategy()) {
        case Strategy::Exhaustive: return quantities_exhaustive(m);
        case Strategy::II: return quantities_strategy_ii(m, opts);
        case Strategy::III: return quantities_strategy_iii(m, opts);
        case Strategy::IV: return quantities_strategy_iv(m, opts);
        case Strategy::I: break;
    }
    fail(ErrorCode::UnsupportedAnalytic,
         "strategy I has no analytic quantity set; use the simulator");
}

double mean_cycle_time(const QuantitySet& S, const ValidatedModel& m) {
    return (m.r0() + S.f0) / (1.0 - m.rho0());
}

}  // namespace pollinglab
