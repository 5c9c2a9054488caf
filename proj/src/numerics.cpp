#include "pollinglab/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace pollinglab {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
    throw PollingError(code, msg);
}

// Downward Miller recurrence for e^{-x} I_l(x), l = 0..kmax, normalized by
// Ibar_0 + 2 sum_{l>=1} Ibar_l = 1. Start order high enough that the
// recurrence has converged onto the minimal solution by the time it reaches
// kmax.
std::vector<double> miller_scaled(double x, int kmax) {
    const int base = std::max(kmax, static_cast<int>(std::ceil(x)));
    const int start = base + 2 * static_cast<int>(std::ceil(std::sqrt(40.0 * (base + 1)))) + 40;

    std::vector<double> f(static_cast<std::size_t>(start) + 2, 0.0);
    f[start + 1] = 0.0;
    f[start] = 1e-280;
    for (int l = start; l >= 1; --l) {
        f[l - 1] = f[l + 1] + (2.0 * l / x) * f[l];
        if (f[l - 1] > 1e260) {
            for (int m = l - 1; m <= start + 1; ++m) f[m] *= 1e-260;
        }
    }
    double norm = f[0];
    for (int l = 1; l <= start; ++l) norm += 2.0 * f[l];
    f.resize(static_cast<std::size_t>(kmax) + 1);
    for (double& v : f) v /= norm;
    return f;
}

// Power series for e^{-x} I_k(x), adequate for small x.
double series_scaled(double x, int k) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int m = 1; m <= k; ++m) term *= half / m;  // (x/2)^k / k!
    double sum = term;
    const double h2 = half * half;
    for (int m = 1; m < 40 && term > 0; ++m) {
        term *= h2 / (static_cast<double>(m) * (k + m));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum * std::exp(-x);
}

}  // namespace

std::vector<double> bessel_i_scaled_array(double x, int kmax) {
    if (x < 0) fail(ErrorCode::InvalidParameter, "bessel argument must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    if (x < 1e-2) {
        for (int k = 0; k <= kmax; ++k) out[k] = series_scaled(x, k);
        return out;
    }
    return miller_scaled(x, kmax);
}

double bessel_i_scaled(int k, double x, const NumericOptions& opts) {
    if (k < 0) k = -k;  // I_{-k} = I_k
    if (k > opts.bessel_k_cap)
        fail(ErrorCode::InvalidParameter, "bessel order exceeds configured cap");
    if (x < 0) fail(ErrorCode::InvalidParameter, "bessel argument must be >= 0");
    if (x == 0.0) return k == 0 ? 1.0 : 0.0;
    if (x < 1e-2) return series_scaled(x, k);
    return miller_scaled(x, k)[k];
}

// ---------------------------------------------------------------------------
// Transient M/M/1
// ---------------------------------------------------------------------------

double TransientQueue::a() const { return 2.0 * mu * std::sqrt(rho()); }

TransientEvaluator::TransientEvaluator(const TransientQueue& q, double x, int order_hint,
                                       const NumericOptions& opts)
    : lambda_(q.lambda), mu_(q.mu), rho_(q.rho()), x_(x) {
    if (!(lambda_ > 0) || !(mu_ > 0)) fail(ErrorCode::InvalidParameter, "rates must be > 0");
    if (!(rho_ < 1)) fail(ErrorCode::Unstable, "transient analysis requires rho < 1");
    if (x < 0) fail(ErrorCode::InvalidParameter, "time must be >= 0");
    log_rho_ = std::log(rho_);
    if (x == 0.0) return;  // prob() handles the identity case

    const double ax = q.a() * x;
    expfac_ = std::exp(-(lambda_ + mu_ - q.a()) * x);

    // The suffix sums need orders until rho^{-l/2} Ibar_l(ax) ~ (mu x)^l / l!
    // has decayed; that happens a little past l = e * mu * x.
    int m = std::max({order_hint + 8, static_cast<int>(std::ceil(2.8 * mu_ * x)) + 16,
                      static_cast<int>(std::ceil(lambda_ * x + 12.0 * std::sqrt(lambda_ * x + 1.0))) + 24,
                      32});
    const double inv_sqrt_rho = std::exp(-0.5 * log_rho_);
    for (int attempt = 0; attempt < 12; ++attempt) {
        ibar_ = bessel_i_scaled_array(ax, m);
        // u_l = rho^{-l/2} Ibar_l, with a log-space fallback when the power
        // factor alone would overflow.
        std::vector<double> u(ibar_.size());
        double p = 1.0;
        bool overflowed = false;
        for (std::size_t l = 0; l < ibar_.size(); ++l) {
            if (p > 1e280 || overflowed) {
                overflowed = true;
                u[l] = ibar_[l] > 0
                           ? std::exp(-0.5 * static_cast<double>(l) * log_rho_ + std::log(ibar_[l]))
                           : 0.0;
            } else {
                u[l] = p * ibar_[l];
                p *= inv_sqrt_rho;
            }
        }
        if (u.back() < 1e-18 * opts.eps_sum || m >= opts.term_cap) {
            suffix_.assign(u.size() + 1, 0.0);
            for (std::size_t l = u.size(); l-- > 0;) suffix_[l] = suffix_[l + 1] + u[l];
            if (m >= opts.term_cap && u.back() > opts.eps_sum)
                fail(ErrorCode::ToleranceNotReached, "Bessel tail did not converge within term cap");
            return;
        }
        m *= 2;
    }
    fail(ErrorCode::ToleranceNotReached, "Bessel tail did not converge");
}

double TransientEvaluator::prob(int j, int k) const {
    if (j < 0 || k < 0) fail(ErrorCode::InvalidParameter, "queue lengths must be >= 0");
    if (x_ == 0.0) return j == k ? 1.0 : 0.0;

    const int last = static_cast<int>(ibar_.size()) - 1;
    if (k + j + 2 > last) {
        // the constructor sized the order range so that everything beyond it
        // is below the tail tolerance
        return 0.0;
    }
    // rho^e * ib without intermediate overflow
    auto scaled = [&](double e, double ib) {
        const double lp = e * log_rho_;
        if (std::abs(lp) < 600.0) return std::exp(lp) * ib;
        return ib > 0 ? std::exp(lp + std::log(ib)) : 0.0;
    };

    const double term1 = scaled(0.5 * (k - j), ibar_[std::abs(k - j)]);
    const double term2 = scaled(0.5 * (k - j - 1), ibar_[k + j + 1]);
    const double term3 = (1.0 - rho_) * scaled(k, suffix_[k + j + 2]);

    const double p = expfac_ * (term1 + term2 + term3);
    return std::clamp(p, 0.0, 1.0);
}

std::vector<double> TransientEvaluator::row(int j, int kmax) const {
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1);
    for (int k = 0; k <= kmax; ++k) out[k] = prob(j, k);
    return out;
}

double transient_prob(const TransientQueue& q, int j, int k, double x,
                      const NumericOptions& opts) {
    TransientEvaluator ev(q, x, j + k + 2, opts);
    return ev.prob(j, k);
}

double expected_queue_from_empty(const TransientQueue& q, double t, const NumericOptions& opts) {
    if (t == 0.0) return 0.0;
    TransientEvaluator ev(q, t, static_cast<int>(q.lambda * t) + 32, opts);
    double sum = 0.0;
    const int kmin = static_cast<int>(q.lambda * t + 10.0 * std::sqrt(q.lambda * t) + 10.0);
    for (int k = 1; k < opts.term_cap; ++k) {
        const double term = k * ev.prob(0, k);
        sum += term;
        if (k > kmin && term < opts.eps_sum) return sum;
    }
    fail(ErrorCode::ToleranceNotReached, "queue-length series did not converge");
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod quadrature
// ---------------------------------------------------------------------------

namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (QUADPACK constants).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a, b, err;
    std::vector<double> k15;
};

void gk15(const std::function<void(double, double*)>& f, int dim, double a, double b,
          std::vector<double>& k15, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::vector<double> fv(dim);
    std::vector<double> g7(dim, 0.0);
    k15.assign(dim, 0.0);
    for (int i = 0; i < 8; ++i) {
        const int reps = (i == 7) ? 1 : 2;
        for (int s = 0; s < reps; ++s) {
            const double x = c + (s == 0 ? -1.0 : 1.0) * h * kXgk[i];
            f(x, fv.data());
            for (int d = 0; d < dim; ++d) k15[d] += kWgk[i] * fv[d];
            if (i % 2 == 1)
                for (int d = 0; d < dim; ++d) g7[d] += kWg[i / 2] * fv[d];
        }
    }
    err = 0.0;
    for (int d = 0; d < dim; ++d) {
        k15[d] *= h;
        g7[d] *= h;
        err = std::max(err, std::abs(k15[d] - g7[d]));
    }
}

}  // namespace

void gk_adaptive(const std::function<void(double, double*)>& f, int dim, double a, double b,
                 double abs_tol, double* result, int max_intervals) {
    for (int d = 0; d < dim; ++d) result[d] = 0.0;
    if (!(b > a)) return;

    std::deque<Interval> work;
    Interval first{a, b, 0.0, {}};
    gk15(f, dim, a, b, first.k15, first.err);
    work.push_back(std::move(first));

    int made = 1;
    while (true) {
        double total_err = 0.0;
        for (const auto& iv : work) total_err += iv.err;
        if (total_err <= abs_tol) break;
        // split the worst interval
        auto worst = std::max_element(work.begin(), work.end(),
                                      [](const Interval& l, const Interval& r) { return l.err < r.err; });
        if (made >= max_intervals || worst->b - worst->a < 1e-14 * (b - a))
            fail(ErrorCode::ToleranceNotReached, "quadrature tolerance not reached");
        const double mid = 0.5 * (worst->a + worst->b);
        Interval left{worst->a, mid, 0.0, {}};
        Interval right{mid, worst->b, 0.0, {}};
        gk15(f, dim, left.a, left.b, left.k15, left.err);
        gk15(f, dim, right.a, right.b, right.k15, right.err);
        *worst = std::move(left);
        work.push_back(std::move(right));
        ++made;
    }
    for (const auto& iv : work)
        for (int d = 0; d < dim; ++d) result[d] += iv.k15[d];
}

std::pair<double, double> empty_dwell_integrals(const TransientQueue& q, int k0, double T,
                                                const NumericOptions& opts) {
    if (T < 0) fail(ErrorCode::InvalidParameter, "T must be >= 0");
    if (T == 0.0) return {0.0, 0.0};
    double out[2];
    gk_adaptive(
        [&](double x, double* v) {
            const double p = transient_prob(q, k0, 0, x, opts);
            v[0] = p;
            v[1] = x * p;
        },
        2, 0.0, T, opts.quad_tol, out);
    return {out[0], out[1]};
}

std::pair<std::vector<double>, std::vector<double>> dwell_integrals_upto(
    const TransientQueue& q, int kmax, double T, const NumericOptions& opts) {
    std::vector<double> m0(static_cast<std::size_t>(kmax) + 1, 0.0);
    std::vector<double> m1(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (T == 0.0) return {m0, m1};

    const int dim = 2 * (kmax + 1);
    std::vector<double> out(dim);
    gk_adaptive(
        [&](double x, double* v) {
            TransientEvaluator ev(q, x, kmax + 2, opts);
            for (int k = 0; k <= kmax; ++k) {
                const double p = ev.prob(k, 0);
                v[2 * k] = p;
                v[2 * k + 1] = x * p;
            }
        },
        dim, 0.0, T, opts.quad_tol, out.data());
    for (int k = 0; k <= kmax; ++k) {
        m0[k] = out[2 * k];
        m1[k] = out[2 * k + 1];
    }
    return {m0, m1};
}

// ---------------------------------------------------------------------------
// Busy periods on grids
// ---------------------------------------------------------------------------

double GridDensity::mass() const {
    double s = 0;
    for (double v : values) s += v;
    return atom_at_zero + step * s;
}

double GridDensity::mean() const {
    double s = 0;
    for (std::size_t i = 0; i < values.size(); ++i) s += cell_center(i) * values[i];
    return step * s;
}

double busy_period_pdf(const TransientQueue& q, double x) {
    // g(x) = sum_{n>=1} e^{-(l+m)x} mu (l mu x^2)^{n-1} / (n! (n-1)!),
    // summed outward from the peak term so large x stays representable.
    if (x <= 0) return 0.0;
    const double l = q.lambda, m = q.mu;
    const double z = l * m * x * x;  // ratio driver: T_{n+1}/T_n = z / (n(n+1))
    const int npeak = std::max(1, static_cast<int>(std::sqrt(z)));
    const double log_peak = -(l + m) * x + std::log(m) + (npeak - 1) * std::log(z) -
                            std::lgamma(npeak + 1.0) - std::lgamma(static_cast<double>(npeak));
    if (log_peak < -745.0) return 0.0;
    const double peak = std::exp(log_peak);
    double sum = peak;
    double t = peak;
    for (int n = npeak; n < npeak + 100000; ++n) {  // upward
        t *= z / (static_cast<double>(n) * (n + 1.0));
        sum += t;
        if (t < sum * 1e-17) break;
    }
    t = peak;
    for (int n = npeak - 1; n >= 1; --n) {  // downward
        t *= (static_cast<double>(n) * (n + 1.0)) / z;
        sum += t;
        if (t < sum * 1e-17) break;
    }
    return sum;
}

namespace {

GridDensity busy_grid_raw(const TransientQueue& q, double step, double x_max) {
    GridDensity g;
    g.step = step;
    g.atom_at_zero = 0.0;
    const std::size_t n = static_cast<std::size_t>(std::ceil(x_max / step));
    g.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.values[i] = busy_period_pdf(q, g.cell_center(i));
    return g;
}

// Over-approximation of int_X^inf x g(x) dx using the exponential envelope
// g(x) <= g(X) e^{-delta (x-X)} for x >= X (valid since g e^{delta x} is
// eventually decreasing like x^{-3/2}).
double tail_mean_bound(const TransientQueue& q, double X) {
    const double delta = q.lambda + q.mu - q.a();
    const double gx = busy_period_pdf(q, X);
    if (delta <= 0) return std::numeric_limits<double>::infinity();
    return gx * (X / delta + 1.0 / (delta * delta));
}

}  // namespace

GridDensity busy_period_density(const TransientQueue& q, double step, double x_max,
                                const NumericOptions& opts) {
    if (!(q.rho() < 1)) fail(ErrorCode::Unstable, "busy period requires rho < 1");
    if (!(step > 0) || !(x_max > step)) fail(ErrorCode::InvalidParameter, "bad grid");
    GridDensity g = busy_grid_raw(q, step, x_max);
    const double exact_mean = q.mean_busy_period();
    const double mass_err = std::abs(g.mass() - 1.0);
    const double mean_err = std::abs(g.mean() - exact_mean) / exact_mean;
    if (mass_err > opts.eps_mass || mean_err > opts.eps_mass) {
        std::ostringstream os;
        os << "busy-period grid too coarse: |mass-1| = " << mass_err
           << ", relative mean error = " << mean_err;
        fail(ErrorCode::GridTooCoarse, os.str());
    }
    return g;
}

GridDensity busy_period_density_auto(const TransientQueue& q, const NumericOptions& opts) {
    if (!(q.rho() < 1)) fail(ErrorCode::Unstable, "busy period requires rho < 1");
    const double exact_mean = q.mean_busy_period();
    double step = (1.0 / q.mu) / opts.grid_divisor;
    double x_max = 8.0 * exact_mean;
    for (int d = 0; d < 40 && tail_mean_bound(q, x_max) > 1e-9 * exact_mean; ++d) x_max *= 2;

    for (int refine = 0; refine <= opts.max_grid_refines; ++refine) {
        GridDensity g = busy_grid_raw(q, step, x_max);
        const double mass_err = std::abs(g.mass() - 1.0);
        const double mean_err = std::abs(g.mean() - exact_mean) / exact_mean;
        if (mass_err <= opts.eps_mass && mean_err <= opts.eps_mass) return g;
        step *= 0.5;
    }
    fail(ErrorCode::GridTooCoarse, "busy-period grid failed to meet tolerances after refinement");
}

// ---------------------------------------------------------------------------
// FFT convolution
// ---------------------------------------------------------------------------

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Linear convolution of two nonnegative sequences via FFTW r2c/c2r.
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t full = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(full);
    const std::size_t nc = n / 2 + 1;

    double* ra = fftw_alloc_real(n);
    double* rb = fftw_alloc_real(n);
    fftw_complex* ca = fftw_alloc_complex(nc);
    fftw_complex* cb = fftw_alloc_complex(nc);

    std::fill(ra, ra + n, 0.0);
    std::fill(rb, rb + n, 0.0);
    std::copy(a.begin(), a.end(), ra);
    std::copy(b.begin(), b.end(), rb);

    fftw_plan pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), ra, ca, FFTW_ESTIMATE);
    fftw_plan pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), rb, cb, FFTW_ESTIMATE);
    fftw_execute(pa);
    fftw_execute(pb);
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = ca[i][0] * cb[i][0] - ca[i][1] * cb[i][1];
        const double im = ca[i][0] * cb[i][1] + ca[i][1] * cb[i][0];
        ca[i][0] = re;
        ca[i][1] = im;
    }
    fftw_plan pi = fftw_plan_dft_c2r_1d(static_cast<int>(n), ca, ra, FFTW_ESTIMATE);
    fftw_execute(pi);

    std::vector<double> out(full);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < full; ++i) out[i] = std::max(0.0, ra[i] * scale);

    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pi);
    fftw_free(ra);
    fftw_free(rb);
    fftw_free(ca);
    fftw_free(cb);
    return out;
}

// Convolution of two cell-centered density sample vectors: the exact
// convolution of the piecewise-constant interpretations, re-projected onto
// cells. Preserves mass and mean of the discrete measures exactly.
std::vector<double> cell_convolve(const std::vector<double>& a, const std::vector<double>& b,
                                  double h) {
    std::vector<double> u = fft_convolve(a, b);
    std::vector<double> out(u.size() + 1, 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
        out[k] += 0.5 * h * u[k];
        out[k + 1] += 0.5 * h * u[k];
    }
    return out;
}

void trim_tail(std::vector<double>& v, double h, double tol) {
    double tail = 0.0;
    std::size_t keep = v.size();
    while (keep > 1) {
        tail += h * v[keep - 1];
        if (tail > tol) break;
        --keep;
    }
    v.resize(keep);
}

GridDensity combine(const GridDensity& f, const GridDensity& g) {
    GridDensity out;
    out.step = f.step;
    out.atom_at_zero = f.atom_at_zero * g.atom_at_zero;
    std::vector<double> conv = cell_convolve(f.values, g.values, f.step);
    const std::size_t n = std::max({conv.size(), f.values.size(), g.values.size()});
    out.values.assign(n, 0.0);
    for (std::size_t i = 0; i < conv.size(); ++i) out.values[i] = conv[i];
    for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] += g.atom_at_zero * f.values[i];
    for (std::size_t i = 0; i < g.values.size(); ++i) out.values[i] += f.atom_at_zero * g.values[i];
    trim_tail(out.values, out.step, 1e-13);
    // renormalize: each true n-fold busy-period convolution has unit mass
    const double m = out.mass();
    if (m > 0 && std::abs(m - 1.0) < 0.1) {
        const double scale = (1.0 - out.atom_at_zero) / std::max(1e-300, m - out.atom_at_zero);
        if (out.atom_at_zero < 1.0)
            for (double& v : out.values) v *= scale;
    }
    return out;
}

}  // namespace

struct BusyConvolver::FftWorkspace {};  // plans are created per call

BusyConvolver::BusyConvolver(GridDensity g) : base_(std::move(g)) {
    // normalize the base so repeated convolution does not accumulate drift
    const double m = base_.mass();
    if (m <= 0) fail(ErrorCode::InvalidParameter, "empty density");
    const double scale = (1.0 - base_.atom_at_zero) / std::max(1e-300, m - base_.atom_at_zero);
    for (double& v : base_.values) v *= scale;
    current_ = base_;
}

BusyConvolver::~BusyConvolver() = default;

void BusyConvolver::advance() {
    current_ = combine(current_, base_);
    ++power_;
}

GridDensity convolve_busy(const GridDensity& g, int n) {
    if (n < 0) fail(ErrorCode::InvalidParameter, "convolution power must be >= 0");
    if (g.step <= 0) fail(ErrorCode::InvalidParameter, "empty grid");
    if (n == 0) {
        GridDensity atom;
        atom.step = g.step;
        atom.atom_at_zero = 1.0;
        return atom;
    }
    BusyConvolver conv(g);
    while (conv.current_power() < n) conv.advance();
    GridDensity out = conv.current();
    const double mass_err = std::abs(out.mass() - 1.0);
    if (mass_err > 1e-6)
        fail(ErrorCode::GridTooCoarse, "convolution mass drift exceeds tolerance");
    return out;
}

// ---------------------------------------------------------------------------
// Poisson transforms
// ---------------------------------------------------------------------------

namespace {

// e^{-a} a^j / j! evaluated safely for any magnitude.
double poisson_weight(double a, int j) {
    if (a == 0.0) return j == 0 ? 1.0 : 0.0;
    const double lg = j * std::log(a) - a - std::lgamma(j + 1.0);
    return lg < -745.0 ? 0.0 : std::exp(lg);
}

}  // namespace

std::vector<double> poisson_pmf(double a, int n) {
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    if (a == 0.0) {
        out[0] = 1.0;
        return out;
    }
    if (a < 700.0) {
        out[0] = std::exp(-a);
        for (int k = 1; k <= n; ++k) out[k] = out[k - 1] * a / k;
    } else {
        for (int k = 0; k <= n; ++k) out[k] = poisson_weight(a, k);
    }
    return out;
}

double poisson_transform(const SwitchoverSpec& F, double lambda, int j, bool weighted) {
    if (!(lambda > 0)) fail(ErrorCode::InvalidParameter, "lambda must be > 0");
    if (j < 0) fail(ErrorCode::InvalidParameter, "j must be >= 0");
    switch (F.kind) {
        case DistKind::Deterministic: {
            const double p = poisson_weight(lambda * F.value, j);
            return weighted ? F.value * p : p;
        }
        case DistKind::Exponential: {
            // theta lambda^j / (lambda+theta)^{j+1}; weighted adds (j+1)/(lambda+theta)
            const double th = F.rate;
            const double base = std::exp(std::log(th) + j * std::log(lambda) -
                                         (j + 1.0) * std::log(lambda + th));
            return weighted ? base * (j + 1.0) / (lambda + th) : base;
        }
        case DistKind::Gamma: {
            const double al = F.shape, be = F.rate;
            const double lg = std::lgamma(al + j) - std::lgamma(al) - std::lgamma(j + 1.0) +
                              al * std::log(be / (lambda + be)) +
                              j * std::log(lambda / (lambda + be));
            const double base = lg < -745.0 ? 0.0 : std::exp(lg);
            return weighted ? base * (al + j) / (lambda + be) : base;
        }
        case DistKind::FinitePointMixture: {
            double s = 0;
            for (const auto& [v, w] : F.points) {
                const double p = poisson_weight(lambda * v, j);
                s += w * (weighted ? v * p : p);
            }
            return s;
        }
    }
    fail(ErrorCode::InvalidParameter, "unsupported switchover kind");
}

double cond_switchover_given_arrivals(const SwitchoverSpec& F, double lambda, int j) {
    const double denom = poisson_transform(F, lambda, j, false);
    if (denom < 1e-300)
        fail(ErrorCode::DegenerateCondition, "P(B_j) vanishes for this distribution");
    return poisson_transform(F, lambda, j, true) / denom;
}

}  // namespace pollinglab
