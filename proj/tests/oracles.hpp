#pragma once

// Test-only oracles, independent of the library implementation paths they
// check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracles {

// Transient distribution of a birth-death (M/M/1) chain by uniformization of
// the truncated generator: row j of exp(Qt) with state cap `cap`.
inline std::vector<double> uniformization_row(double lambda, double mu, int j, double t,
                                              int cap = 200) {
    const int n = cap + 1;
    std::vector<double> v(n, 0.0), w(n, 0.0), acc(n, 0.0);
    v[j] = 1.0;
    const double big = lambda + mu;
    if (t == 0.0) return v;

    // Poisson weights over big*t, summed until the remaining tail < 1e-16.
    const double a = big * t;
    long double logw = -static_cast<long double>(a);  // log of e^{-a} a^m / m!
    long double tail = 1.0L;
    int m = 0;
    while (true) {
        const long double wt = expl(logw);
        for (int s = 0; s < n; ++s) acc[s] += static_cast<double>(wt) * v[s];
        tail -= wt;
        if (tail < 1e-16L && m > a) break;
        // v <- v * P where P = I + Q / big
        for (int s = 0; s < n; ++s) {
            double up = (s > 0) ? v[s - 1] * lambda / big : 0.0;
            double down = (s + 1 < n) ? v[s + 1] * mu / big : 0.0;
            double diag = v[s];
            if (s > 0) diag -= v[s] * mu / big;
            if (s + 1 < n) diag -= v[s] * lambda / big;  // truncated: no birth out of cap
            w[s] = up + down + diag;
        }
        std::swap(v, w);
        ++m;
        logw += logl(static_cast<long double>(a)) - logl(static_cast<long double>(m));
        if (m > 2000000) break;
    }
    return acc;
}

inline double uniformization_prob(double lambda, double mu, int j, int k, double t,
                                  int cap = 200) {
    return uniformization_row(lambda, mu, j, t, cap)[k];
}

inline double uniformization_mean_queue(double lambda, double mu, int j, double t,
                                        int cap = 400) {
    auto row = uniformization_row(lambda, mu, j, t, cap);
    double s = 0;
    for (std::size_t k = 1; k < row.size(); ++k) s += static_cast<double>(k) * row[k];
    return s;
}

// Extended-precision power series for e^{-x} I_k(x).
inline long double bessel_series_scaled(int k, long double x) {
    if (k < 0) k = -k;
    const long double half = 0.5L * x;
    long double term = 1.0L;
    for (int m = 1; m <= k; ++m) term *= half / m;
    long double sum = term;
    const long double h2 = half * half;
    for (int m = 1; m <= 400; ++m) {
        term *= h2 / (static_cast<long double>(m) * (k + m));
        sum += term;
        if (term < sum * 1e-24L) break;
    }
    return sum * expl(-x);
}

// Simple composite-Simpson integral for smooth oracle integrands.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Deterministic small RNG for Monte-Carlo oracles.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double expo(double rate) { return -std::log1p(-uniform()) / rate; }
};

}  // namespace oracles
