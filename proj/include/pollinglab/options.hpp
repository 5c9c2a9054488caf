#pragma once

namespace pollinglab {

/// Numerical tolerances shared across the analytic modules. Every emitted
/// report embeds the values in effect so results are reproducible.
struct NumericOptions {
    double eps_sum = 1e-12;    // absolute tail tolerance for infinite series
    double eps_trunc = 1e-9;   // operator truncation / fixed-point tolerance
    double eps_mass = 1e-6;    // grid density mass/mean tolerance
    double quad_tol = 1e-10;   // adaptive quadrature absolute tolerance
    double grid_divisor = 200; // busy-period grid step h = b / grid_divisor
    int max_grid_refines = 6;  // step halvings before GridTooCoarse is fatal
    int term_cap = 100000;     // hard cap on series terms
    int bessel_k_cap = 512;    // |k| limit for bessel_i_scaled
    int k_start = 64;          // initial queue-length truncation level
    int k_cap = 512;           // maximum queue-length truncation level
    int fixed_point_iter_cap = 100000;
    double fixed_point_tol = 1e-12;
};

}  // namespace pollinglab
