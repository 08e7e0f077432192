#ifndef LDENET_SDE_HPP
#define LDENET_SDE_HPP

#include <span>
#include <string>
#include <vector>

#include "ldenet/rng.hpp"

namespace ldenet {

/**
 * Scalar test SDE dx = f(x) dt + g dL^alpha with a named closed-form drift,
 * constant diffusion, and known Lipschitz constant. Used to measure the
 * strong convergence order of the Euler-Maruyama scheme.
 */
struct SdeSpec {
    enum class Drift { Zero, Linear }; // Linear: f(x) = -rate * x

    Drift drift = Drift::Linear;
    double rate = 1.0;
    double g = 1.0;
    double x0 = 1.0;
    double alpha = 1.5;
    double total_time = 1.0;

    double drift_value(double x) const { return drift == Drift::Zero ? 0.0 : -rate * x; }
    void validate() const;
};

struct SdePath {
    std::vector<double> values;     // n_steps + 1 grid values including x0
    std::vector<double> increments; // scaled noise dt^(1/alpha) * L_k per step
    double dt = 0.0;
};

/// Euler-Maruyama path on the grid {k dt}; increments are exposed so a
/// refined grid can reuse the same underlying noise.
SdePath em_integrate(const SdeSpec& spec, int n_steps, RngStream& rng);

/// Same path but driven by caller-supplied increments (one per step).
SdePath em_integrate_with_increments(const SdeSpec& spec, std::span<const double> increments);

struct CoupledPaths {
    SdePath coarse;
    SdePath fine;
};

/**
 * Coarse and fine EM paths driven by the same Levy path: the fine grid uses
 * n_coarse * refine steps and each coarse increment is the exact block sum
 * of `refine` fine increments.
 */
CoupledPaths coupled_refinement(const SdeSpec& spec, int n_coarse, int refine, RngStream& rng);

struct ConvergenceReport {
    double alpha = 0.0;
    std::vector<double> dts;          // strictly decreasing
    std::vector<double> mean_error;   // E sup_k |x_ref(t_k) - X_dt(t_k)| per dt
    std::vector<double> mom_error;    // median-of-means of the same sup errors
    double slope = 0.0;               // log-log fit; ~ 1/alpha for stable noise
    double slope_stderr = 0.0;
};

/**
 * Strong-error curve against a coupled reference path ref_refinement times
 * finer than the smallest dt in the grid. Every dt must divide the total
 * time and be an integer multiple of the reference step. Path evaluation
 * may be threaded; per-path streams make the report independent of the
 * scheduling.
 */
ConvergenceReport strong_error_curve(const SdeSpec& spec, std::span<const double> dt_grid,
                                     int n_paths, int ref_refinement, RngStream& rng,
                                     int workers = 0);

/// Least-squares slope of log(y) on log(x) with its standard error.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

} // namespace ldenet

#endif
