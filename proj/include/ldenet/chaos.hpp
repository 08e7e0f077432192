#ifndef LDENET_CHAOS_HPP
#define LDENET_CHAOS_HPP

#include <optional>
#include <span>
#include <vector>

namespace ldenet {

/// Delay-embedding parameters: lag tau (samples) and dimension m.
struct EmbeddingSpec {
    int tau = 1;
    int m = 1;

    void validate() const;
    /// Number of embedded vectors a series of length n yields: n - (m-1)*tau.
    std::size_t embedded_count(std::size_t n) const;
};

/// Lift a scalar series into m-vectors (x_i, x_{i+tau}, ..., x_{i+(m-1)tau}).
std::vector<std::vector<double>> delay_embed(std::span<const double> series, EmbeddingSpec spec);

struct LyapunovReport {
    double lambda = 0.0;                    // nats per sample
    std::optional<int> lyapunov_time;       // floor(1/lambda) when lambda > 0
    int iterations = 0;                     // neighbor replacement count M
    bool chaotic = false;                   // lambda > 0
};

struct WolfOptions {
    /// Critical separation; <= 0 selects 10% of the embedded bounding-box diagonal.
    double eps = -1.0;
    /// Temporal exclusion window for neighbor candidates; < 0 selects m*tau.
    int theiler = -1;
    /// Replacement neighbors within eps must align with the old separation
    /// vector to within this angle; otherwise fall back to plain nearest.
    double max_angle_deg = 30.0;
};

/**
 * Maximum Lyapunov exponent by Wolf orbit tracking: follow the separation
 * between a trajectory point and its nearest neighbor until it exceeds eps,
 * log the growth ratio, replace the neighbor with one of small separation
 * and small angular deviation, and repeat to the end of the series.
 * Distances are Euclidean in the embedded space.
 */
LyapunovReport max_lyapunov_wolf(std::span<const double> series, EmbeddingSpec spec,
                                 WolfOptions options = {});

/// Safe prediction horizon floor(1/lambda); throws NotChaotic for lambda <= 0.
int lyapunov_time(double lambda);

struct CaoCurves {
    std::vector<double> e1;            // E1(m) = E(m+1)/E(m), m = 1..m_max-1
    std::vector<double> e2;            // E2(m) = E*(m+1)/E*(m), same range
    std::optional<int> selected_m;     // plateau rule result, when E1 saturates
    bool deterministic = false;        // some m has E2(m) outside 1 +/- band
    int m_max = 0;
    double e2_band = 0.1;
};

struct CaoOptions {
    /// Neighbor distances below this in either dimension force the
    /// next-nearest neighbor instead.
    double tie_eps = 1e-12;
    /// Temporal exclusion window; 0 excludes only the point itself.
    int theiler = 0;
    /// E1 plateau tolerance used to fill selected_m.
    double saturation_tol = 0.02;
    /// |E2 - 1| band separating random from deterministic series.
    double e2_band = 0.1;
};

/**
 * Cao's false-nearest-neighbour curves. Nearest neighbors use the maximum
 * norm; a(i,m) compares the (m+1)- and m-dimensional separations of the
 * neighbor found in dimension m. E1 saturating marks the intrinsic embedding
 * dimension; E2(m) = 1 for all m marks a purely random series.
 */
CaoCurves cao_curves(std::span<const double> series, int tau, int m_max, CaoOptions options = {});

/**
 * Smallest m whose E1 differences stay below saturation_tol from m onward;
 * returns m + 1 (the dimension to embed with). Throws NoSaturation when the
 * curve never plateaus within the computed range.
 */
int select_embedding_dim(const CaoCurves& curves, double saturation_tol);

} // namespace ldenet

#endif
