#ifndef LDENET_TESTS_ORACLES_HPP
#define LDENET_TESTS_ORACLES_HPP

// Independent reference implementations used only by tests. Everything here
// is deliberately written the straightforward way, separate from the library
// code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ldenet/rng.hpp"

namespace oracle {

/// Standard normal via the Marsaglia polar transform (rejection based, a
/// different algorithm from the library's Box-Muller).
inline double polar_gaussian(ldenet::RngStream& rng) {
    for (;;) {
        const double u = 2.0 * rng.uniform01() - 1.0;
        const double v = 2.0 * rng.uniform01() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

/**
 * CDF of the standard symmetric alpha-stable law by quadrature on the
 * characteristic function exp(-|t|^alpha):
 *   F(x) = 1/2 + (1/pi) * Int_0^inf sin(x t) exp(-t^alpha) / t dt.
 * Composite Simpson with a decay cutoff; plenty accurate for test grids.
 */
inline double stable_cdf(double alpha, double x) {
    const double cutoff = std::pow(41.5, 1.0 / alpha); // exp(-t^alpha) < 1e-18 beyond
    const int n = 60000;                               // even
    const double h = cutoff / n;
    auto integrand = [&](double t) {
        if (t == 0.0) return x;
        return std::sin(x * t) * std::exp(-std::pow(t, alpha)) / t;
    };
    double acc = integrand(0.0) + integrand(cutoff);
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(h * i);
    const double integral = acc * h / 3.0;
    return 0.5 + integral / 3.14159265358979323846;
}

/// One-sample Kolmogorov-Smirnov distance against a CDF evaluated on a grid.
inline double ks_vs_cdf(std::vector<double> sample, double alpha,
                        std::span<const double> grid) {
    std::sort(sample.begin(), sample.end());
    double worst = 0.0;
    for (double x : grid) {
        const auto it = std::upper_bound(sample.begin(), sample.end(), x);
        const double ecdf =
            static_cast<double>(it - sample.begin()) / static_cast<double>(sample.size());
        worst = std::max(worst, std::abs(ecdf - stable_cdf(alpha, x)));
    }
    return worst;
}

/// Orbit of the logistic map x -> r x (1 - x) after a transient burn-in.
inline std::vector<double> logistic_orbit(std::size_t n, double x0 = 0.371, double r = 4.0,
                                          std::size_t burn = 300) {
    std::vector<double> out;
    out.reserve(n);
    double x = x0;
    for (std::size_t i = 0; i < burn; ++i) x = r * x * (1.0 - x);
    for (std::size_t i = 0; i < n; ++i) {
        x = r * x * (1.0 - x);
        out.push_back(x);
    }
    return out;
}

/// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x0,
                           double step = 1e-5) {
    return (f(x0 + step) - f(x0 - step)) / (2.0 * step);
}

/// Mixed relative/absolute gradient agreement used by every gradient check.
inline bool grad_close(double analytic, double numeric, double tol) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) <= tol * scale;
}

} // namespace oracle

#endif
