#include "ldenet/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ldenet/errors.hpp"
#include "parallel.hpp"

namespace ldenet {

void EmbeddingSpec::validate() const {
    if (tau < 1) throw InvalidParameter("delay must be >= 1, got " + std::to_string(tau));
    if (m < 1) throw InvalidParameter("embedding dimension must be >= 1, got " + std::to_string(m));
}

std::size_t EmbeddingSpec::embedded_count(std::size_t n) const {
    const std::size_t span = static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(tau);
    return n > span ? n - span : 0;
}

std::vector<std::vector<double>> delay_embed(std::span<const double> series, EmbeddingSpec spec) {
    spec.validate();
    const std::size_t count = spec.embedded_count(series.size());
    if (count == 0)
        throw InsufficientData("series of length " + std::to_string(series.size()) +
                               " too short for m=" + std::to_string(spec.m) +
                               ", tau=" + std::to_string(spec.tau));
    std::vector<std::vector<double>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i].resize(spec.m);
        for (int k = 0; k < spec.m; ++k) out[i][k] = series[i + static_cast<std::size_t>(k) * spec.tau];
    }
    return out;
}

namespace {

// Squared Euclidean distance between embedded points i and j, read off the
// raw series without materializing the embedding.
double dist2_embedded(std::span<const double> x, std::size_t i, std::size_t j, int m, int tau) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        const double d = x[i + static_cast<std::size_t>(k) * tau] -
                         x[j + static_cast<std::size_t>(k) * tau];
        s += d * d;
    }
    return s;
}

// Maximum-norm distance with early abort once `bound` is exceeded.
double dist_max_embedded(std::span<const double> x, std::size_t i, std::size_t j, int m, int tau,
                         double bound = std::numeric_limits<double>::infinity()) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        const double d = std::abs(x[i + static_cast<std::size_t>(k) * tau] -
                                  x[j + static_cast<std::size_t>(k) * tau]);
        if (d > s) {
            s = d;
            if (s > bound) return s;
        }
    }
    return s;
}

double cos_angle_embedded(std::span<const double> x, std::size_t cur, std::size_t a, std::size_t b,
                          int m, int tau) {
    // cosine between (y_a - y_cur) and (y_b - y_cur)
    double dot = 0, na = 0, nb = 0;
    for (int k = 0; k < m; ++k) {
        const std::size_t off = static_cast<std::size_t>(k) * tau;
        const double u = x[a + off] - x[cur + off];
        const double v = x[b + off] - x[cur + off];
        dot += u * v;
        na += u * u;
        nb += v * v;
    }
    if (na == 0.0 || nb == 0.0) return -1.0;
    return dot / std::sqrt(na * nb);
}

} // namespace

LyapunovReport max_lyapunov_wolf(std::span<const double> series, EmbeddingSpec spec,
                                 WolfOptions options) {
    spec.validate();
    const std::size_t count = spec.embedded_count(series.size());
    if (count < 10)
        throw InsufficientData("Wolf estimation needs at least 10 embedded points, got " +
                               std::to_string(count));

    const int m = spec.m;
    const int tau = spec.tau;
    const std::size_t theiler = options.theiler >= 0
                                    ? static_cast<std::size_t>(options.theiler)
                                    : static_cast<std::size_t>(m) * static_cast<std::size_t>(tau);

    double eps = options.eps;
    if (!(eps > 0.0)) {
        const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
        eps = 0.1 * (*hi - *lo) * std::sqrt(static_cast<double>(m));
    }
    if (!(eps > 0.0)) throw DegenerateGeometry("embedded attractor has zero extent", 0);

    const double cos_limit = std::cos(options.max_angle_deg * 3.14159265358979323846 / 180.0);
    const std::size_t last = count - 1; // evolvable points must sit strictly before this

    // Nearest usable neighbor of `cur`: outside the Theiler window, strictly
    // positive separation, and at least one future sample to evolve into.
    auto nearest = [&](std::size_t cur) -> std::size_t {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = count;
        for (std::size_t j = 0; j < last; ++j) {
            const std::size_t gap = j > cur ? j - cur : cur - j;
            if (gap <= theiler) continue;
            const double d2 = dist2_embedded(series, j, cur, m, tau);
            if (d2 > 0.0 && d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        return best_j;
    };

    // Replacement: among candidates within eps, take the one best aligned
    // with the old separation vector; if none aligns within the angular
    // limit, fall back to the plain nearest neighbor.
    auto replace = [&](std::size_t cur, std::size_t old_nb) -> std::size_t {
        double best_cos = -2.0;
        std::size_t best_angle_j = count;
        for (std::size_t j = 0; j < last; ++j) {
            const std::size_t gap = j > cur ? j - cur : cur - j;
            if (gap <= theiler) continue;
            const double d2 = dist2_embedded(series, j, cur, m, tau);
            if (!(d2 > 0.0) || d2 >= eps * eps) continue;
            const double c = cos_angle_embedded(series, cur, j, old_nb, m, tau);
            if (c > best_cos) {
                best_cos = c;
                best_angle_j = j;
            }
        }
        if (best_angle_j < count && best_cos >= cos_limit) return best_angle_j;
        return nearest(cur);
    };

    std::size_t cur = 0;
    std::size_t nb = nearest(cur);
    if (nb >= count) throw DegenerateGeometry("no valid initial neighbor", 0);
    double len = std::sqrt(dist2_embedded(series, cur, nb, m, tau));

    double log_sum = 0.0;
    std::size_t steps_total = 0;
    int iterations = 0;

    while (cur + 1 < count && nb + 1 < count) {
        ++cur;
        ++nb;
        ++steps_total;
        const double grown = std::sqrt(dist2_embedded(series, cur, nb, m, tau));
        const bool at_end = (cur + 1 >= count) || (nb + 1 >= count);
        if (grown > eps || at_end) {
            if (!(grown > 0.0))
                throw DegenerateGeometry("separation collapsed to zero", iterations);
            log_sum += std::log(grown / len);
            ++iterations;
            if (at_end) break;
            const std::size_t next = replace(cur, nb);
            if (next >= count) throw DegenerateGeometry("no replacement neighbor", iterations);
            nb = next;
            len = std::sqrt(dist2_embedded(series, cur, nb, m, tau));
        }
    }

    if (steps_total == 0) throw DegenerateGeometry("trajectory could not be evolved", 0);

    LyapunovReport report;
    report.lambda = log_sum / static_cast<double>(steps_total);
    report.iterations = iterations;
    report.chaotic = report.lambda > 0.0;
    if (report.chaotic) report.lyapunov_time = lyapunov_time(report.lambda);
    return report;
}

int lyapunov_time(double lambda) {
    if (!(lambda > 0.0))
        throw NotChaotic("Lyapunov time undefined for lambda = " + std::to_string(lambda));
    return static_cast<int>(std::floor(1.0 / lambda));
}

namespace {

struct CaoNeighborResult {
    double ratio = 0.0;        // a(i, m)
    double tail_gap = 0.0;     // |x_{i+m tau} - x_{nb+m tau}|
    bool found = false;
};

// Nearest neighbor of point i among the first `valid` embedded points in
// dimension m (max norm), skipping pairs whose separation falls below
// tie_eps in either dimension m or m+1.
CaoNeighborResult cao_neighbor(std::span<const double> x, std::size_t i, std::size_t valid, int m,
                               int tau, double tie_eps, std::size_t theiler) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = valid;
    double best_hi = 0.0;
    const std::size_t tail_off = static_cast<std::size_t>(m) * tau;
    for (std::size_t j = 0; j < valid; ++j) {
        const std::size_t gap = j > i ? j - i : i - j;
        if (gap <= theiler) continue;
        const double d = dist_max_embedded(x, i, j, m, tau, best);
        if (d >= best || d < tie_eps) continue;
        const double tail = std::abs(x[i + tail_off] - x[j + tail_off]);
        const double d_hi = std::max(d, tail); // distance in dimension m+1
        if (d_hi < tie_eps) continue;
        best = d;
        best_j = j;
        best_hi = d_hi;
    }
    CaoNeighborResult r;
    if (best_j >= valid) return r;
    r.found = true;
    r.ratio = best_hi / best;
    r.tail_gap = std::abs(x[i + tail_off] - x[best_j + tail_off]);
    return r;
}

} // namespace

CaoCurves cao_curves(std::span<const double> series, int tau, int m_max, CaoOptions options) {
    if (tau < 1) throw InvalidParameter("delay must be >= 1, got " + std::to_string(tau));
    if (m_max < 2) throw InvalidParameter("m_max must be >= 2, got " + std::to_string(m_max));
    const std::size_t n = series.size();
    const std::size_t need = static_cast<std::size_t>(m_max) * static_cast<std::size_t>(tau) + 2;
    if (n < need)
        throw InsufficientData("series of length " + std::to_string(n) +
                               " too short for Cao curves up to m_max=" + std::to_string(m_max) +
                               " (need " + std::to_string(need) + ")");

    std::vector<double> e_mean(m_max + 1, 0.0);     // E(m), 1-based
    std::vector<double> estar_mean(m_max + 1, 0.0); // E*(m), 1-based

    for (int m = 1; m <= m_max; ++m) {
        const std::size_t valid = n - static_cast<std::size_t>(m) * tau;
        std::vector<double> ratios(valid), tails(valid);
        std::vector<char> ok(valid, 0);
        detail::parallel_for(valid, [&](std::size_t i) {
            const auto r = cao_neighbor(series, i, valid, m, tau, options.tie_eps,
                                        static_cast<std::size_t>(options.theiler));
            if (r.found) {
                ratios[i] = r.ratio;
                tails[i] = r.tail_gap;
                ok[i] = 1;
            }
        });
        double sum_ratio = 0.0, sum_tail = 0.0;
        for (std::size_t i = 0; i < valid; ++i) {
            if (!ok[i])
                throw InsufficientData("no usable neighbor at point " + std::to_string(i) +
                                       " in dimension " + std::to_string(m) +
                                       " (distances degenerate)");
            sum_ratio += ratios[i];
            sum_tail += tails[i];
        }
        e_mean[m] = sum_ratio / static_cast<double>(valid);
        estar_mean[m] = sum_tail / static_cast<double>(valid);
    }

    CaoCurves curves;
    curves.m_max = m_max;
    curves.e2_band = options.e2_band;
    curves.e1.resize(m_max - 1);
    curves.e2.resize(m_max - 1);
    for (int m = 1; m < m_max; ++m) {
        curves.e1[m - 1] = e_mean[m + 1] / e_mean[m];
        curves.e2[m - 1] = estar_mean[m + 1] / estar_mean[m];
    }
    for (double v : curves.e2)
        if (std::abs(v - 1.0) > options.e2_band) curves.deterministic = true;

    try {
        curves.selected_m = select_embedding_dim(curves, options.saturation_tol);
    } catch (const NoSaturation&) {
        curves.selected_m.reset();
    }
    return curves;
}

int select_embedding_dim(const CaoCurves& curves, double saturation_tol) {
    if (curves.e1.size() < 2)
        throw InvalidParameter("need at least two E1 values to detect saturation");
    const std::size_t diffs = curves.e1.size() - 1;
    // smallest m whose forward differences all stay inside the tolerance
    std::size_t start = diffs; // index into the diff array, 0-based m-1
    for (std::size_t k = diffs; k-- > 0;) {
        if (std::abs(curves.e1[k + 1] - curves.e1[k]) < saturation_tol)
            start = k;
        else
            break;
    }
    if (start == diffs)
        throw NoSaturation("E1 never plateaus within m_max=" + std::to_string(curves.m_max) +
                           "; retry with a larger m_max");
    return static_cast<int>(start + 1) + 1; // m is 1-based; the rule returns m + 1
}

} // namespace ldenet
