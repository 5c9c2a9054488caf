#include "pollinglab/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pollinglab {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
    throw PollingError(code, msg);
}

// P(Pois(z) >= s+1) for s = 0..smax, computed from the upper side so no
// cancellation occurs near 1.
std::vector<double> poisson_upper_tail(double z, int smax) {
    const int hi = std::max(smax + 1, static_cast<int>(z + 12.0 * std::sqrt(z + 1.0)) + 40);
    const std::vector<double> pmf = poisson_pmf(z, hi);
    double total = 0;
    for (double p : pmf) total += p;
    std::vector<double> tail(static_cast<std::size_t>(smax) + 1, 0.0);
    double acc = std::max(0.0, 1.0 - total);
    for (int u = hi; u > smax; --u) acc += pmf[u];
    for (int s = smax; s >= 0; --s) {
        tail[s] = acc;
        acc += pmf[s];
    }
    return tail;
}

}  // namespace

double QueueLengthDist::sum() const {
    double s = 0;
    for (double p : probs) s += p;
    return s;
}

// ---------------------------------------------------------------------------
// Kernel cache
// ---------------------------------------------------------------------------

struct SteadyStateContext::Kernel {
    double lambda_obs = 0;  // arrival rate of the observing (other) station
    GridDensity g;
    std::unique_ptr<BusyConvolver> conv;
    int vmax = -1;
    std::vector<std::vector<double>> V;  // V[l][v]

    void ensure(const TransientQueue& q, double lam_obs, int want_vmax, int want_lmax,
                const NumericOptions& opts) {
        if (want_vmax > vmax) {
            // extending the count dimension needs all powers again; provision
            // double the request so the adaptive-K driver's next level fits
            conv.reset();
            V.clear();
            vmax = 2 * want_vmax;
        }
        if (!conv) {
            lambda_obs = lam_obs;
            if (g.values.empty()) {
                // operator entries tolerate a slightly coarser grid than the
                // busy-period contract itself; column sums are exact either way
                NumericOptions relaxed = opts;
                relaxed.eps_mass = std::max(opts.eps_mass, 1e-5);
                g = busy_period_density_auto(q, relaxed);
            }
            conv = std::make_unique<BusyConvolver>(g);
            V.clear();
            std::vector<double> v0(static_cast<std::size_t>(vmax) + 1, 0.0);
            v0[0] = 1.0;  // zero busy periods take zero time
            V.push_back(std::move(v0));
            append_power(conv->current());
        }
        while (static_cast<int>(V.size()) <= want_lmax) {
            conv->advance();
            append_power(conv->current());
        }
    }

    void append_power(const GridDensity& gl) {
        std::vector<double> col(static_cast<std::size_t>(vmax) + 1, 0.0);
        const double lam = lambda_obs;
        for (std::size_t i = 0; i < gl.values.size(); ++i) {
            const double x = gl.cell_center(i);
            const double gv = gl.values[i] * gl.step;
            if (gv == 0.0) continue;
            double w = std::exp(-lam * x);
            if (w == 0.0) continue;
            for (int v = 0; v <= vmax; ++v) {
                col[v] += w * gv;
                w *= lam * x / (v + 1);
            }
        }
        if (gl.atom_at_zero > 0) col[0] += gl.atom_at_zero;
        V.push_back(std::move(col));
    }
};

SteadyStateContext::SteadyStateContext(const ValidatedModel& m, const NumericOptions& opts)
    : model_(&m), opts_(opts) {
    kernels_.resize(m.station_count());
    for (auto& k : kernels_) k = std::make_unique<Kernel>();
}

SteadyStateContext::~SteadyStateContext() = default;

void SteadyStateContext::rebind(const ValidatedModel& m) {
    if (m.station_count() != model_->station_count())
        fail(ErrorCode::InvalidParameter, "rebind requires the same station layout");
    for (std::size_t i = 0; i < m.station_count(); ++i) {
        if (m.lambda(i) != model_->lambda(i) || m.b(i) != model_->b(i) ||
            !(m.stations()[i].switchover_out == model_->stations()[i].switchover_out))
            fail(ErrorCode::InvalidParameter, "rebind requires identical rates and distributions");
    }
    model_ = &m;
}

const std::vector<std::vector<double>>& SteadyStateContext::vtable(int station, int vmax,
                                                                   int lmax) {
    const auto& m = *model_;
    const std::size_t st = static_cast<std::size_t>(station);
    const std::size_t other = m.next(st);
    if (!m.stations()[st].service.is_exponential())
        fail(ErrorCode::UnsupportedAnalytic, "busy-period grids require exponential service");
    TransientQueue q{m.lambda(st), 1.0 / m.b(st)};
    kernels_[st]->ensure(q, m.lambda(other), vmax, lmax, opts_);
    return kernels_[st]->V;
}

// ---------------------------------------------------------------------------
// Operator construction
// ---------------------------------------------------------------------------

namespace {

struct BuildInputs {
    const ValidatedModel* m;
    NumericOptions opts;
    std::size_t from, to;
    int K;
    double lam_to, lam_from;
};

// Transient rows P_{r,l}(T) of the given station for r = 0..rmax with enough
// columns that every row keeps 1 - eps of its mass; returns the table and
// writes the chosen lmax.
std::vector<std::vector<double>> transient_table(const ValidatedModel& m, std::size_t station,
                                                 double T, int rmax, const NumericOptions& opts,
                                                 int& lmax_out) {
    TransientQueue q{m.lambda(station), 1.0 / m.b(station)};
    // row r concentrates within births-minus-deaths of r; the verification
    // loop below extends the range if a row still leaks mass
    const double spread = m.lambda(station) * T +
                          8.0 * std::sqrt((m.lambda(station) + 1.0 / m.b(station)) * T + 1.0);
    int lmax = (T == 0.0) ? rmax : rmax + static_cast<int>(std::ceil(spread)) + 8;
    for (int attempt = 0;; ++attempt) {
        TransientEvaluator ev(q, T, rmax + lmax + 2, opts);
        std::vector<std::vector<double>> table(static_cast<std::size_t>(rmax) + 1);
        double worst = 1.0;
        for (int r = 0; r <= rmax; ++r) {
            table[r] = ev.row(r, lmax);
            double s = 0;
            for (double p : table[r]) s += p;
            worst = std::min(worst, s);
        }
        if (worst >= 1.0 - 1e-12 || attempt >= 6) {
            if (worst < 1.0 - opts.eps_trunc)
                fail(ErrorCode::TruncationInsufficient,
                     "transient rows lose mass at the configured cap");
            lmax_out = lmax;
            return table;
        }
        lmax = lmax + lmax / 2 + 16;
    }
}

double column_min(const std::vector<double>& entries, int K) {
    double worst = 1.0;
    for (int k = 0; k <= K; ++k) {
        double s = 0;
        for (int n = 0; n <= K; ++n) s += entries[static_cast<std::size_t>(n) * (K + 1) + k];
        worst = std::min(worst, s);
    }
    return worst;
}

// Arrivals at the to-station during the switchover out of the from-station,
// jointly with arrivals at the from-station: J[m][j], m (to) outer.
// Truncates m when the marginal mass reaches 1 - eps_sum.
std::vector<std::vector<double>> joint_switchover_counts(const SwitchoverSpec& F, double lam_to,
                                                         double lam_from, int jmax,
                                                         const NumericOptions& opts) {
    const double beta = lam_to + lam_from;
    const double lp = std::log(lam_to / beta), lq = std::log(lam_from / beta);
    std::vector<std::vector<double>> J;
    double marginal = 0;
    const int m_cap = 4096;
    for (int m = 0; m < m_cap; ++m) {
        std::vector<double> row(static_cast<std::size_t>(jmax) + 1, 0.0);
        for (int j = 0; j <= jmax; ++j) {
            const double tot = poisson_transform(F, beta, m + j, false);
            if (tot == 0.0) continue;
            const double lc = std::lgamma(m + j + 1.0) - std::lgamma(m + 1.0) -
                              std::lgamma(j + 1.0) + m * lp + j * lq;
            row[j] = std::exp(lc) * tot;
        }
        marginal += poisson_transform(F, lam_to, m, false);
        J.push_back(std::move(row));
        if (marginal >= 1.0 - opts.eps_sum) break;
    }
    return J;
}

TruncatedOperator assemble(BuildInputs in, OperatorKind kind, bool strategy_iv,
                           SteadyStateContext& ctx) {
    const ValidatedModel& m = *in.m;
    const int K = in.K;
    const int cols = K + 1;
    TruncatedOperator op;
    op.kind = kind;
    op.from_station = static_cast<int>(in.from);
    op.to_station = static_cast<int>(in.to);
    op.K = K;
    op.incoming_switchover = m.stations()[in.from].switchover_out;
    op.to_lambda = in.lam_to;
    op.entries.assign(static_cast<std::size_t>(cols) * cols, 0.0);
    auto at = [&](int n, int k) -> double& {
        return op.entries[static_cast<std::size_t>(n) * cols + k];
    };

    if (kind == OperatorKind::PiDirect) {
        // Deterministic switchovers: the whole cycle's switchover time is the
        // scalar r0 and arrivals at `to` accumulate over r0 + stay at `from`.
        const double r0 = m.r0();
        const double T = m.timer(in.from);
        if (!strategy_iv) {
            int lmax = 0;
            auto Q = transient_table(m, in.from, T, K, in.opts, lmax);
            const auto& V = ctx.vtable(static_cast<int>(in.from), K, lmax);
            // M1[k][s] = P(s arrivals at `to` during the clearing | k on arrival)
            std::vector<std::vector<double>> M1(cols, std::vector<double>(cols, 0.0));
            for (int k = 0; k <= K; ++k)
                for (int l = 0; l <= lmax; ++l) {
                    const double qkl = Q[k][l];
                    if (qkl == 0.0) continue;
                    const auto& col = V[l];
                    for (int s = 0; s <= K; ++s) M1[k][s] += qkl * col[s];
                }
            const auto W = poisson_pmf(in.lam_to * (r0 + T), K);
            for (int k = 0; k <= K; ++k)
                for (int n = 0; n <= K; ++n) {
                    double acc = 0;
                    for (int u = 0; u <= n; ++u) acc += W[u] * M1[k][n - u];
                    at(n, k) = acc;
                }
        } else {
            const int lmax = K;
            const auto& V = ctx.vtable(static_cast<int>(in.from), K, std::max(lmax, 1));
            // timer branch for an empty queue on arrival
            std::vector<double> term(cols, 0.0);
            {
                const double beta = in.lam_to + in.lam_from;
                const auto tail = poisson_upper_tail(beta * T, K);
                std::vector<double> wt(cols, 0.0);
                double geo = in.lam_from / beta;
                for (int s = 0; s <= K; ++s) {
                    wt[s] = geo * tail[s];
                    geo *= in.lam_to / beta;
                }
                const auto pT = poisson_pmf(in.lam_to * T, K);
                const double no_arrival = std::exp(-in.lam_from * T);
                for (int s = 0; s <= K; ++s) {
                    double acc = no_arrival * pT[s];
                    for (int u = 0; u <= s; ++u) acc += V[1][u] * wt[s - u];
                    term[s] = acc;
                }
            }
            const auto W = poisson_pmf(in.lam_to * r0, K);
            for (int k = 0; k <= K; ++k) {
                const std::vector<double>& base = (k == 0) ? term : V[k];
                for (int n = 0; n <= K; ++n) {
                    double acc = 0;
                    for (int u = 0; u <= n; ++u) acc += W[u] * base[n - u];
                    at(n, k) = acc;
                }
            }
        }
    } else {
        // Departure-epoch system for general switchover distributions.
        const double T = m.timer(in.to);
        const auto J = joint_switchover_counts(op.incoming_switchover, in.lam_to, in.lam_from, K,
                                               in.opts);
        const int mcut = static_cast<int>(J.size()) - 1;
        const int rmax = K + mcut;

        if (!strategy_iv) {
            int lmax = 0;
            auto Q = transient_table(m, in.to, T, rmax, in.opts, lmax);
            const auto& V = ctx.vtable(static_cast<int>(in.to), K, std::max(lmax, 1));
            // G[s][l] = sum_u pois_u(lam_from T) V[l][s-u]
            const auto pT = poisson_pmf(in.lam_from * T, K);
            std::vector<std::vector<double>> G(cols, std::vector<double>(lmax + 1, 0.0));
            for (int s = 0; s <= K; ++s)
                for (int l = 0; l <= lmax; ++l) {
                    double acc = 0;
                    for (int u = 0; u <= s; ++u) acc += pT[u] * V[l][s - u];
                    G[s][l] = acc;
                }
            // H[r][s] = sum_l Q[r][l] G[s][l]
            std::vector<std::vector<double>> H(rmax + 1, std::vector<double>(cols, 0.0));
            for (int r = 0; r <= rmax; ++r)
                for (int l = 0; l <= lmax; ++l) {
                    const double qrl = Q[r][l];
                    if (qrl == 0.0) continue;
                    for (int s = 0; s <= K; ++s) H[r][s] += qrl * G[s][l];
                }
            for (int k = 0; k <= K; ++k)
                for (int mm = 0; mm <= mcut; ++mm) {
                    const auto& hrow = H[k + mm];
                    const auto& jrow = J[mm];
                    for (int j = 0; j <= K; ++j) {
                        const double w = jrow[j];
                        if (w == 0.0) continue;
                        for (int n = j; n <= K; ++n) at(n, k) += w * hrow[n - j];
                    }
                }
        } else {
            // strategy IV: the timer only arms when the server finds the
            // station empty (k = m = 0); otherwise k+m busy periods clear
            const auto& V = ctx.vtable(static_cast<int>(in.to), K, std::max(rmax, 1));
            std::vector<double> term(cols, 0.0);
            {
                const double beta = in.lam_to + in.lam_from;
                const auto tail = poisson_upper_tail(beta * T, K);
                std::vector<double> wt(cols, 0.0);
                double geo = in.lam_to / beta;
                for (int s = 0; s <= K; ++s) {
                    wt[s] = geo * tail[s];
                    geo *= in.lam_from / beta;
                }
                const auto pT = poisson_pmf(in.lam_from * T, K);
                const double no_arrival = std::exp(-in.lam_to * T);
                for (int s = 0; s <= K; ++s) {
                    double acc = no_arrival * pT[s];
                    for (int u = 0; u <= s; ++u) acc += V[1][u] * wt[s - u];
                    term[s] = acc;
                }
            }
            for (int k = 0; k <= K; ++k)
                for (int mm = 0; mm <= mcut; ++mm) {
                    const std::vector<double>& base = (k + mm == 0) ? term : V[k + mm];
                    const auto& jrow = J[mm];
                    for (int j = 0; j <= K; ++j) {
                        const double w = jrow[j];
                        if (w == 0.0) continue;
                        for (int n = j; n <= K; ++n) at(n, k) += w * base[n - j];
                    }
                }
        }
    }
    op.min_column_sum = column_min(op.entries, K);
    if (K >= in.opts.k_cap && op.min_column_sum < 1.0 - in.opts.eps_trunc) {
        std::ostringstream os;
        os << "column sum " << op.min_column_sum << " below tolerance at the K cap";
        fail(ErrorCode::TruncationInsufficient, os.str());
    }
    return op;
}

BuildInputs make_inputs(const ValidatedModel& m, int from, int to, int K,
                        const NumericOptions& opts) {
    if (m.station_count() != 2)
        fail(ErrorCode::UnsupportedAnalytic, "arrival operators require N = 2 stations");
    if (from == to || from < 0 || from > 1 || to < 0 || to > 1)
        fail(ErrorCode::InvalidParameter, "from/to must name the two distinct stations");
    BuildInputs in;
    in.m = &m;
    in.opts = opts;
    in.from = static_cast<std::size_t>(from);
    in.to = static_cast<std::size_t>(to);
    in.K = K;
    in.lam_to = m.lambda(in.to);
    in.lam_from = m.lambda(in.from);
    return in;
}

OperatorKind kind_for(const ValidatedModel& m) {
    return m.all_switchovers_deterministic() ? OperatorKind::PiDirect
                                             : OperatorKind::NuDeparture;
}

}  // namespace

TruncatedOperator build_arrival_operator_ii(SteadyStateContext& ctx, int from_station,
                                            int to_station, int K,
                                            const OperatorKind* force_kind) {
    auto in = make_inputs(ctx.model(), from_station, to_station, K, ctx.options());
    const OperatorKind kind = force_kind ? *force_kind : kind_for(ctx.model());
    if (kind == OperatorKind::PiDirect && !ctx.model().all_switchovers_deterministic())
        fail(ErrorCode::UnsupportedAnalytic,
             "the direct arrival-epoch system requires deterministic switchovers");
    return assemble(in, kind, false, ctx);
}

TruncatedOperator build_arrival_operator_iv(SteadyStateContext& ctx, int from_station,
                                            int to_station, int K,
                                            const OperatorKind* force_kind) {
    auto in = make_inputs(ctx.model(), from_station, to_station, K, ctx.options());
    const OperatorKind kind = force_kind ? *force_kind : kind_for(ctx.model());
    if (kind == OperatorKind::PiDirect && !ctx.model().all_switchovers_deterministic())
        fail(ErrorCode::UnsupportedAnalytic,
             "the direct arrival-epoch system requires deterministic switchovers");
    return assemble(in, kind, true, ctx);
}

TruncatedOperator build_arrival_operator_ii(const ValidatedModel& m, int from_station,
                                            int to_station, int K, const NumericOptions& opts) {
    SteadyStateContext ctx(m, opts);
    return build_arrival_operator_ii(ctx, from_station, to_station, K);
}

TruncatedOperator build_arrival_operator_iv(const ValidatedModel& m, int from_station,
                                            int to_station, int K, const NumericOptions& opts) {
    SteadyStateContext ctx(m, opts);
    return build_arrival_operator_iv(ctx, from_station, to_station, K);
}

// ---------------------------------------------------------------------------
// Fixed point
// ---------------------------------------------------------------------------

namespace {

QueueLengthDist make_dist(std::vector<double> probs, int K) {
    QueueLengthDist d;
    d.probs = std::move(probs);
    d.truncation = K;
    double s = 0;
    for (double p : d.probs) s += p;
    d.tail_mass_bound = std::max(0.0, 1.0 - s);
    return d;
}

// eq. pi_n: arrivals over the incoming switchover on top of the
// departure-epoch state.
QueueLengthDist nu_to_pi(const QueueLengthDist& nu, const SwitchoverSpec& F, double lambda) {
    const int K = nu.truncation;
    std::vector<double> pt(static_cast<std::size_t>(K) + 1, 0.0);
    for (int j = 0; j <= K; ++j) pt[j] = poisson_transform(F, lambda, j, false);
    std::vector<double> pi(static_cast<std::size_t>(K) + 1, 0.0);
    for (int n = 0; n <= K; ++n) {
        double acc = 0;
        for (int k = 0; k <= n; ++k) acc += nu[k] * pt[n - k];
        pi[n] = acc;
    }
    return make_dist(std::move(pi), K);
}

}  // namespace

SteadyStateResult solve_cycle_fixed_point(const TruncatedOperator& A, const TruncatedOperator& B,
                                          const NumericOptions& opts) {
    if (A.K != B.K) fail(ErrorCode::InvalidParameter, "operators must share the truncation level");
    if (A.kind != B.kind) fail(ErrorCode::InvalidParameter, "operators must share a kind");
    const int K = A.K;
    const int n = K + 1;

    // compose C = A * B once, then iterate
    std::vector<double> C(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
            const double a = A.entries[static_cast<std::size_t>(i) * n + l];
            if (a == 0.0) continue;
            const double* brow = &B.entries[static_cast<std::size_t>(l) * n];
            double* crow = &C[static_cast<std::size_t>(i) * n];
            for (int k = 0; k < n; ++k) crow[k] += a * brow[k];
        }

    std::vector<double> v(n, 1.0 / n), w(n, 0.0);
    int iters = 0;
    double diff = 1.0;
    for (; iters < opts.fixed_point_iter_cap; ++iters) {
        for (int i = 0; i < n; ++i) {
            const double* crow = &C[static_cast<std::size_t>(i) * n];
            double acc = 0;
            for (int k = 0; k < n; ++k) acc += crow[k] * v[k];
            w[i] = acc;
        }
        double s = 0;
        for (double x : w) s += x;
        if (s <= 0) fail(ErrorCode::NoConvergence, "iteration collapsed to zero mass");
        for (double& x : w) x /= s;
        diff = 0;
        for (int i = 0; i < n; ++i) diff += std::abs(w[i] - v[i]);
        std::swap(v, w);
        if (diff < opts.fixed_point_tol) break;
    }
    if (diff >= opts.fixed_point_tol) {
        std::ostringstream os;
        os << "fixed point did not converge; last L1 residual " << diff;
        fail(ErrorCode::NoConvergence, os.str());
    }

    // second station's state: push the fixed point through B and renormalize
    std::vector<double> v2(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* brow = &B.entries[static_cast<std::size_t>(i) * n];
        double acc = 0;
        for (int k = 0; k < n; ++k) acc += brow[k] * v[k];
        v2[i] = acc;
    }
    double s2 = 0;
    for (double x : v2) s2 += x;
    for (double& x : v2) x /= s2;

    SteadyStateResult out;
    out.kind = A.kind;
    out.K = K;
    out.iterations = iters + 1;
    const int side1 = A.to_station;  // fixed point lives on A's output side

    QueueLengthDist d1 = make_dist(std::move(v), K);
    QueueLengthDist d2 = make_dist(std::move(v2), K);
    if (A.kind == OperatorKind::PiDirect) {
        if (side1 == 0) {
            out.pi1 = std::move(d1);
            out.pi2 = std::move(d2);
        } else {
            out.pi1 = std::move(d2);
            out.pi2 = std::move(d1);
        }
    } else {
        // d1 = departure state written by A (exit from A.to), d2 by B
        const QueueLengthDist& nu_exit_from_Ato = d1;
        const QueueLengthDist& nu_exit_from_Bto = d2;
        // pi at A.to needs the nu at exit from A.from = B.to, and the
        // switchover out of A.from (stored in A)
        QueueLengthDist piA = nu_to_pi(nu_exit_from_Bto, A.incoming_switchover, A.to_lambda);
        QueueLengthDist piB = nu_to_pi(nu_exit_from_Ato, B.incoming_switchover, B.to_lambda);
        if (side1 == 0) {
            out.pi1 = std::move(piA);
            out.pi2 = std::move(piB);
            out.nu1 = std::move(d1);
            out.nu2 = std::move(d2);
        } else {
            out.pi1 = std::move(piB);
            out.pi2 = std::move(piA);
            out.nu1 = std::move(d2);
            out.nu2 = std::move(d1);
        }
    }
    return out;
}

SteadyStateResult solve_strategy_distributions(SteadyStateContext& ctx, Strategy strategy) {
    if (strategy != Strategy::II && strategy != Strategy::IV)
        fail(ErrorCode::UnsupportedAnalytic, "arrival-epoch systems exist for strategies II and IV");
    const NumericOptions& opts = ctx.options();

    auto build_pair = [&](int K) {
        TruncatedOperator A = (strategy == Strategy::II)
                                  ? build_arrival_operator_ii(ctx, 1, 0, K)
                                  : build_arrival_operator_iv(ctx, 1, 0, K);
        TruncatedOperator B = (strategy == Strategy::II)
                                  ? build_arrival_operator_ii(ctx, 0, 1, K)
                                  : build_arrival_operator_iv(ctx, 0, 1, K);
        return std::pair{std::move(A), std::move(B)};
    };

    // Far columns may leak mass long before the fixed point cares (their
    // weight decays geometrically); the acceptance gate is therefore the
    // distribution tail plus the perturbation under doubling. Column sums
    // only become fatal at the K cap.
    bool have_prev = false;
    SteadyStateResult prev;
    double worst_column = 1.0;
    for (int K = opts.k_start; K <= opts.k_cap; K *= 2) {
        auto [A, B] = build_pair(K);
        worst_column = std::min(A.min_column_sum, B.min_column_sum);
        SteadyStateResult cur = solve_cycle_fixed_point(A, B, opts);
        if (have_prev) {
            double perturb = 0;
            for (int i = 0; i <= prev.K; ++i) {
                perturb = std::max(perturb, std::abs(prev.pi1[i] - cur.pi1[i]));
                perturb = std::max(perturb, std::abs(prev.pi2[i] - cur.pi2[i]));
            }
            const double tails = std::max({prev.pi1.probs.back(), prev.pi2.probs.back()});
            if (perturb < opts.eps_trunc && tails < opts.eps_trunc) return cur;
        }
        prev = std::move(cur);
        have_prev = true;
    }
    std::ostringstream os;
    os << "queue-length truncation did not stabilize below the configured cap"
       << " (worst column sum " << worst_column << ")";
    fail(ErrorCode::TruncationInsufficient, os.str());
}

}  // namespace pollinglab
