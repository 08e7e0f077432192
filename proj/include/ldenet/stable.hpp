#ifndef LDENET_STABLE_HPP
#define LDENET_STABLE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "ldenet/rng.hpp"

namespace ldenet {

/**
 * Parameter tuple of an alpha-stable law S_alpha(sigma, beta, mu):
 * stability index, scale, skewness, location. The standard symmetric case
 * is (alpha, 1, 0, 0).
 */
struct StableParams {
    double alpha = 1.5;
    double sigma = 1.0;
    double beta = 0.0;
    double mu = 0.0;

    /// Throws InvalidParameter unless 0 < alpha <= 2, |beta| <= 1, sigma > 0.
    void validate() const;

    static StableParams standard_symmetric(double alpha) { return {alpha, 1.0, 0.0, 0.0}; }
};

/**
 * One draw from the standard symmetric stable law S_alpha(1,0,0) via the
 * Chambers-Mallows-Stuck transform (uniform angle on (-pi/2, pi/2) plus a
 * unit exponential). Exact for all alpha in (0, 2]; alpha = 1 takes the
 * dedicated Cauchy branch. Consumes exactly two uniforms per draw.
 */
double sample_standard(double alpha, RngStream& rng);

/// Euler-Maruyama noise increment dt^(1/alpha) * L with L ~ S_alpha(1,0,0).
double sample_increment(double alpha, double dt, RngStream& rng);

/// Two-sample Kolmogorov-Smirnov statistic; inputs are copied and sorted.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/**
 * Self-similarity diagnostic: KS distance between normalized n-fold sums
 * (X_1 + ... + X_n) / n^(1/alpha) and fresh S_alpha(1,0,0) draws. The
 * stability property makes both laws identical, so the statistic should sit
 * at the two-sample KS noise floor.
 */
double self_similarity_check(double alpha, int n, std::size_t draws, RngStream& rng);

struct TailFit {
    double slope = 0.0;        // fitted log-log slope of P(|X| > x); ~ -alpha
    double intercept = 0.0;
    std::vector<double> grid;  // abscissae used
    std::vector<double> survival;
};

/**
 * Log-log least-squares fit of the empirical two-sided survival function
 * over a geometric grid on [x_lo, x_hi]. For alpha < 2 the tail of
 * S_alpha(1,0,0) decays like x^(-alpha).
 */
TailFit tail_slope(double alpha, std::size_t draws, RngStream& rng,
                   double x_lo = 10.0, double x_hi = 100.0, int grid_points = 12);

} // namespace ldenet

#endif
