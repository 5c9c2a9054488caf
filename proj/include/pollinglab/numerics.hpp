#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pollinglab/errors.hpp"
#include "pollinglab/model.hpp"
#include "pollinglab/options.hpp"

namespace pollinglab {

// ---------------------------------------------------------------------------
// Scaled modified Bessel functions
// ---------------------------------------------------------------------------

/// e^{-x} I_k(x), computed by Miller's downward recurrence normalized with
/// I_0 + 2 sum I_l = e^x (power series below x = 1e-2). Symmetric in k.
double bessel_i_scaled(int k, double x, const NumericOptions& opts = {});

/// e^{-x} I_l(x) for l = 0..kmax in one downward pass.
std::vector<double> bessel_i_scaled_array(double x, int kmax);

// ---------------------------------------------------------------------------
// Transient M/M/1 queue
// ---------------------------------------------------------------------------

struct TransientQueue {
    double lambda = 0;  // arrival rate
    double mu = 1;      // service rate

    double rho() const { return lambda / mu; }
    double a() const;  // 2 mu sqrt(rho)
    double mean_busy_period() const { return 1.0 / (mu - lambda); }
};

/// Evaluates P_{j,k}(x) — the probability that an M/M/1 queue holds k
/// messages at time x given j at time zero — for one fixed x, sharing a
/// single Bessel array and tail suffix sums across all (j, k).
class TransientEvaluator {
public:
    TransientEvaluator(const TransientQueue& q, double x, int order_hint = 0,
                       const NumericOptions& opts = {});

    double prob(int j, int k) const;

    /// P_{j,k}(x) for k = 0..kmax.
    std::vector<double> row(int j, int kmax) const;

    double x() const { return x_; }

private:
    double lambda_, mu_, rho_, x_;
    double log_rho_ = 0;
    double expfac_ = 1;            // e^{-(lambda+mu-a)x}
    std::vector<double> ibar_;     // e^{-ax} I_l(ax)
    std::vector<double> suffix_;   // sum_{l >= s} rho^{-l/2} Ibar_l
};

/// P_{j,k}(x) with the infinite Bessel tail truncated at eps_sum.
double transient_prob(const TransientQueue& q, int j, int k, double x,
                      const NumericOptions& opts = {});

/// q_i(t) = sum_k k P_{0,k}(t): expected queue length at t starting empty.
double expected_queue_from_empty(const TransientQueue& q, double t,
                                 const NumericOptions& opts = {});

/// (m0, m1) = (int_0^T P_{k0,0}(x) dx, int_0^T x P_{k0,0}(x) dx).
std::pair<double, double> empty_dwell_integrals(const TransientQueue& q, int k0, double T,
                                                const NumericOptions& opts = {});

/// Same integrals for every starting level k = 0..kmax in one pass.
/// Returns {m0[k], m1[k]}; shared quadrature nodes and Bessel arrays.
std::pair<std::vector<double>, std::vector<double>> dwell_integrals_upto(
    const TransientQueue& q, int kmax, double T, const NumericOptions& opts = {});

// ---------------------------------------------------------------------------
// Grid densities and busy periods
// ---------------------------------------------------------------------------

/// Numerical carrier for densities on [0, X_max]: values are samples at cell
/// centers x_i = (i + 1/2) step plus an explicit atom at zero.
struct GridDensity {
    double step = 0;
    double atom_at_zero = 0;
    std::vector<double> values;

    double mass() const;
    double mean() const;
    double cell_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * step; }
    std::size_t size() const { return values.size(); }
};

/// Busy-period density of an M/M/1 queue sampled on the given grid via the
/// series over Erlang components. Throws GridTooCoarse if the grid mass is
/// not within eps_mass of 1 or the grid mean not within eps_mass relative
/// of b/(1-rho).
GridDensity busy_period_density(const TransientQueue& q, double step, double x_max,
                                const NumericOptions& opts = {});

/// Default grid h = b/grid_divisor, X_max grown by doubling until the
/// exponential-envelope bound on the tail mean drops below 1e-9 relative;
/// halves h until the mass/mean tolerances hold.
GridDensity busy_period_density_auto(const TransientQueue& q, const NumericOptions& opts = {});

/// Busy-period density value g(x) by direct series evaluation (log-peak
/// summation; safe for large x).
double busy_period_pdf(const TransientQueue& q, double x);

/// n-fold self-convolution of a grid density; n = 0 is the atom at zero.
/// Results are renormalized to unit mass (drift from the discrete
/// convolution stays below eps_mass by construction).
GridDensity convolve_busy(const GridDensity& g, int n);

/// Streaming access to successive convolution powers of one density.
class BusyConvolver {
public:
    explicit BusyConvolver(GridDensity g);
    ~BusyConvolver();
    BusyConvolver(const BusyConvolver&) = delete;
    BusyConvolver& operator=(const BusyConvolver&) = delete;

    const GridDensity& base() const { return base_; }
    int current_power() const { return power_; }
    const GridDensity& current() const { return current_; }
    void advance();  // current <- current (*) base

private:
    GridDensity base_;
    GridDensity current_;
    int power_ = 1;
    struct FftWorkspace;
    std::unique_ptr<FftWorkspace> fft_;
};

// ---------------------------------------------------------------------------
// Poisson transforms of switchover distributions
// ---------------------------------------------------------------------------

/// int_0^inf e^{-lambda x} (lambda x)^j / j! dF(x); with weighted = true the
/// integrand carries an extra factor x. Closed forms for every supported
/// switchover family.
double poisson_transform(const SwitchoverSpec& F, double lambda, int j, bool weighted);

/// E[R | B_j]: mean switchover length given j Poisson arrivals during it.
double cond_switchover_given_arrivals(const SwitchoverSpec& F, double lambda, int j);

// ---------------------------------------------------------------------------
// Adaptive quadrature (Gauss-Kronrod 7-15 with interval subdivision)
// ---------------------------------------------------------------------------

/// Integrates a vector-valued integrand over [a, b] to absolute tolerance
/// abs_tol per component. f(x, out) fills dim values.
void gk_adaptive(const std::function<void(double, double*)>& f, int dim, double a, double b,
                 double abs_tol, double* result, int max_intervals = 4000);

// Poisson pmf e^{-a} a^k / k! for k = 0..n (stable recurrence).
std::vector<double> poisson_pmf(double a, int n);

}  // namespace pollinglab
