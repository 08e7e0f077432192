#include "ldenet/stable.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ldenet/errors.hpp"

namespace ldenet {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

void StableParams::validate() const {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw InvalidParameter("stability index must satisfy 0 < alpha <= 2, got " +
                               std::to_string(alpha));
    if (!(sigma > 0.0))
        throw InvalidParameter("scale must be positive, got " + std::to_string(sigma));
    if (!(std::abs(beta) <= 1.0))
        throw InvalidParameter("skewness must satisfy |beta| <= 1, got " + std::to_string(beta));
    if (!std::isfinite(mu)) throw InvalidParameter("location must be finite");
}

double sample_standard(double alpha, RngStream& rng) {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw InvalidParameter("stability index must satisfy 0 < alpha <= 2, got " +
                               std::to_string(alpha));

    const double v = kPi * (rng.uniform_open() - 0.5); // uniform on (-pi/2, pi/2)
    const double w = -std::log(rng.uniform_open());    // unit exponential, strictly positive

    if (alpha == 1.0) return std::tan(v); // CMS degenerates to the Cauchy quantile at alpha = 1

    const double sin_av = std::sin(alpha * v);
    const double cos_v = std::cos(v);
    const double cos_rest = std::cos((1.0 - alpha) * v);
    return sin_av / std::pow(cos_v, 1.0 / alpha) *
           std::pow(cos_rest / w, (1.0 - alpha) / alpha);
}

double sample_increment(double alpha, double dt, RngStream& rng) {
    if (!(dt > 0.0))
        throw InvalidParameter("time step must be positive, got " + std::to_string(dt));
    return std::pow(dt, 1.0 / alpha) * sample_standard(alpha, rng);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidParameter("KS statistic needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double self_similarity_check(double alpha, int n, std::size_t draws, RngStream& rng) {
    if (n < 1) throw InvalidParameter("aggregation count must be >= 1, got " + std::to_string(n));
    if (draws < 2) throw InvalidParameter("need at least 2 draws");

    const double scale = std::pow(static_cast<double>(n), 1.0 / alpha);
    std::vector<double> aggregated(draws), fresh(draws);
    for (std::size_t k = 0; k < draws; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += sample_standard(alpha, rng);
        aggregated[k] = s / scale;
    }
    for (std::size_t k = 0; k < draws; ++k) fresh[k] = sample_standard(alpha, rng);
    return ks_two_sample(std::move(aggregated), std::move(fresh));
}

TailFit tail_slope(double alpha, std::size_t draws, RngStream& rng,
                   double x_lo, double x_hi, int grid_points) {
    if (!(x_lo > 0.0) || !(x_hi > x_lo)) throw InvalidParameter("tail grid must satisfy 0 < x_lo < x_hi");
    if (grid_points < 2) throw InvalidParameter("tail grid needs at least 2 points");
    if (draws < 1000) throw InvalidParameter("tail fit needs at least 1000 draws");

    TailFit fit;
    fit.grid.resize(grid_points);
    const double ratio = std::log(x_hi / x_lo) / (grid_points - 1);
    for (int g = 0; g < grid_points; ++g) fit.grid[g] = x_lo * std::exp(ratio * g);

    std::vector<std::size_t> exceed(grid_points, 0);
    for (std::size_t k = 0; k < draws; ++k) {
        const double ax = std::abs(sample_standard(alpha, rng));
        if (ax <= fit.grid.front()) continue;
        for (int g = 0; g < grid_points; ++g)
            if (ax > fit.grid[g]) ++exceed[g];
    }

    fit.survival.resize(grid_points);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (int g = 0; g < grid_points; ++g) {
        fit.survival[g] = static_cast<double>(exceed[g]) / static_cast<double>(draws);
        if (exceed[g] == 0) continue; // empty tail bucket carries no information
        const double lx = std::log(fit.grid[g]);
        const double ly = std::log(fit.survival[g]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++used;
    }
    if (used < 2) throw StatisticalPower("too few tail exceedances to fit a slope");
    const double denom = used * sxx - sx * sx;
    fit.slope = (used * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / used;
    return fit;
}

} // namespace ldenet
