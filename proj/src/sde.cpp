#include "ldenet/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "ldenet/errors.hpp"
#include "ldenet/stable.hpp"
#include "parallel.hpp"

namespace ldenet {

void SdeSpec::validate() const {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw InvalidParameter("stability index must satisfy 0 < alpha <= 2");
    if (!(total_time > 0.0)) throw InvalidParameter("total time must be positive");
    if (!std::isfinite(g) || !std::isfinite(x0) || !std::isfinite(rate))
        throw InvalidParameter("sde coefficients must be finite");
}

SdePath em_integrate(const SdeSpec& spec, int n_steps, RngStream& rng) {
    spec.validate();
    if (n_steps < 1) throw InvalidParameter("step count must be >= 1");
    const double dt = spec.total_time / n_steps;
    std::vector<double> increments(n_steps);
    for (auto& v : increments) v = sample_increment(spec.alpha, dt, rng);
    SdePath path = em_integrate_with_increments(spec, increments);
    return path;
}

SdePath em_integrate_with_increments(const SdeSpec& spec, std::span<const double> increments) {
    spec.validate();
    if (increments.empty()) throw InvalidParameter("need at least one increment");
    const int n = static_cast<int>(increments.size());
    SdePath path;
    path.dt = spec.total_time / n;
    path.increments.assign(increments.begin(), increments.end());
    path.values.resize(n + 1);
    double x = spec.x0;
    path.values[0] = x;
    for (int k = 0; k < n; ++k) {
        x += spec.drift_value(x) * path.dt + spec.g * increments[k];
        if (!std::isfinite(x)) throw DivergenceError("EM path left the finite range", k);
        path.values[k + 1] = x;
    }
    return path;
}

CoupledPaths coupled_refinement(const SdeSpec& spec, int n_coarse, int refine, RngStream& rng) {
    if (refine < 2) throw InvalidParameter("refinement factor must be >= 2");
    if (n_coarse < 1) throw InvalidParameter("coarse step count must be >= 1");
    spec.validate();

    const int n_fine = n_coarse * refine;
    const double dt_fine = spec.total_time / n_fine;
    std::vector<double> fine_inc(n_fine);
    for (auto& v : fine_inc) v = sample_increment(spec.alpha, dt_fine, rng);

    // coarse increments are block sums of the same driving noise
    std::vector<double> coarse_inc(n_coarse, 0.0);
    for (int k = 0; k < n_coarse; ++k)
        for (int j = 0; j < refine; ++j) coarse_inc[k] += fine_inc[static_cast<std::size_t>(k) * refine + j];

    CoupledPaths out;
    out.fine = em_integrate_with_increments(spec, fine_inc);
    out.coarse = em_integrate_with_increments(spec, coarse_inc);
    return out;
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidParameter("log-log fit needs at least two matched points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw InvalidParameter("log-log fit needs strictly positive data");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    if (denom == 0.0) throw InvalidParameter("degenerate abscissae in log-log fit");
    LogLogFit fit;
    fit.slope = (dn * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / dn;
    if (n > 2) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
            ss_res += r * r;
        }
        fit.slope_stderr = std::sqrt(ss_res / (dn - 2.0) / (sxx - sx * sx / dn));
    }
    return fit;
}

namespace {

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_of_means(const std::vector<double>& v, int bins) {
    const std::size_t n = v.size();
    bins = std::min<int>(bins, static_cast<int>(n));
    std::vector<double> means(bins, 0.0);
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int b = static_cast<int>(i % bins);
        means[b] += v[i];
        ++counts[b];
    }
    for (int b = 0; b < bins; ++b) means[b] /= static_cast<double>(counts[b]);
    return median(std::move(means));
}

} // namespace

ConvergenceReport strong_error_curve(const SdeSpec& spec, std::span<const double> dt_grid,
                                     int n_paths, int ref_refinement, RngStream& rng,
                                     int workers) {
    spec.validate();
    if (n_paths < 100)
        throw StatisticalPower("strong error estimation needs at least 100 paths, got " +
                               std::to_string(n_paths));
    if (dt_grid.size() < 2) throw InvalidParameter("dt grid needs at least two levels");
    for (std::size_t i = 1; i < dt_grid.size(); ++i)
        if (!(dt_grid[i] < dt_grid[i - 1]))
            throw InvalidParameter("dt grid must be strictly decreasing");
    if (ref_refinement < 64)
        throw InvalidParameter("reference grid must be at least 64x finer than the finest dt");

    const double T = spec.total_time;
    const double dt_min = dt_grid.back();
    const double dt_ref = dt_min / ref_refinement;

    // integer step counts and exact divisibility of every level by dt_ref
    const auto steps_of = [&](double dt) {
        const double raw = T / dt;
        const long long n = std::llround(raw);
        if (n < 1 || std::abs(raw - static_cast<double>(n)) > 1e-9)
            throw InvalidParameter("dt does not divide the total time");
        return n;
    };
    const long long n_ref = steps_of(dt_ref);
    const long long n_min = steps_of(dt_min);
    std::vector<long long> level_steps(dt_grid.size());
    for (std::size_t l = 0; l < dt_grid.size(); ++l) {
        level_steps[l] = steps_of(dt_grid[l]);
        if (n_min % level_steps[l] != 0)
            throw InvalidParameter("every dt must be an integer multiple of the finest dt");
    }
    const long long ref_per_min = n_ref / n_min;

    const std::size_t levels = dt_grid.size();
    std::vector<std::vector<double>> sup_err(levels, std::vector<double>(n_paths, 0.0));

    detail::parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
        RngStream stream = rng.substream(p);

        // One pass over the reference grid: step the reference EM while
        // accumulating noise block sums and reference values at dt_min
        // resolution (every coarser level lives on a subset of that grid).
        std::vector<double> block_inc(n_min, 0.0);
        std::vector<double> ref_at_min(n_min + 1, 0.0);
        double x = spec.x0;
        ref_at_min[0] = x;
        for (long long b = 0; b < n_min; ++b) {
            double acc = 0.0;
            for (long long j = 0; j < ref_per_min; ++j) {
                const double inc = sample_increment(spec.alpha, dt_ref, stream);
                acc += inc;
                x += spec.drift_value(x) * dt_ref + spec.g * inc;
            }
            block_inc[b] = acc;
            ref_at_min[b + 1] = x;
        }

        for (std::size_t l = 0; l < levels; ++l) {
            const long long ns = level_steps[l];
            const long long stride = n_min / ns;
            const double dt = dt_grid[l];
            double xl = spec.x0;
            double worst = 0.0;
            for (long long k = 0; k < ns; ++k) {
                double inc = 0.0;
                for (long long j = 0; j < stride; ++j) inc += block_inc[k * stride + j];
                xl += spec.drift_value(xl) * dt + spec.g * inc;
                worst = std::max(worst, std::abs(xl - ref_at_min[(k + 1) * stride]));
            }
            sup_err[l][p] = worst;
        }
    }, workers);

    ConvergenceReport report;
    report.alpha = spec.alpha;
    report.dts.assign(dt_grid.begin(), dt_grid.end());
    report.mean_error.resize(levels);
    report.mom_error.resize(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        double s = 0.0;
        for (double e : sup_err[l]) s += e;
        report.mean_error[l] = s / n_paths;
        report.mom_error[l] = median_of_means(sup_err[l], 20);
    }
    const LogLogFit fit = fit_loglog(report.dts, report.mean_error);
    report.slope = fit.slope;
    report.slope_stderr = fit.slope_stderr;
    return report;
}

} // namespace ldenet
