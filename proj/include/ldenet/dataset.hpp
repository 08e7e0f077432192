#ifndef LDENET_DATASET_HPP
#define LDENET_DATASET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ldenet/chaos.hpp"

namespace ldenet {

/// Ordered scalar series with original-unit values and source tag.
struct SeriesDataset {
    std::vector<std::string> timestamps;
    std::vector<double> values;
    std::string provenance;

    std::size_t size() const { return values.size(); }
};

/**
 * Load a CSV with a header row naming at least the timestamp and value
 * columns. Rows must parse, values must be finite, and timestamps must be
 * strictly increasing (numeric comparison when every timestamp parses as a
 * number, lexicographic otherwise, which orders ISO dates correctly).
 */
SeriesDataset load_csv(const std::string& path, const std::string& value_column = "close",
                       const std::string& timestamp_column = "date");

void write_csv(const std::string& path, const SeriesDataset& ds,
               const std::string& value_column = "close",
               const std::string& timestamp_column = "date");

/// Min-max constants fitted on the train split.
struct Normalization {
    double lo = 0.0;
    double hi = 1.0;

    double normalize(double x) const { return (x - lo) / (hi - lo); }
    double denormalize(double y) const { return lo + y * (hi - lo); }
};

struct SplitSpec {
    double train_fraction = 0.8;
    bool zscore = false; // alternative transform; min-max is the default
};

struct SplitResult {
    std::vector<double> train; // normalized
    std::vector<double> test;  // normalized with the train constants
    Normalization norm;
};

/**
 * Chronological split (first train_fraction of the samples) followed by
 * normalization fitted on the train portion only. Test values may leave
 * [0, 1]; that is allowed. In zscore mode lo/hi carry mean and mean+sd.
 */
SplitResult split_and_normalize(const SeriesDataset& ds, SplitSpec spec = {});
SplitResult split_and_normalize(std::span<const double> values, SplitSpec spec = {});

/**
 * Supervised pairs: the input is the delay-embedded window ending at index
 * t, the label is the series value at t + horizon. Labels always lie
 * strictly after every input index; the final observation is reserved and
 * never used as a label, so a series of length n yields
 * n - (m-1)*tau - horizon - 1 pairs.
 */
struct Supervised {
    std::vector<std::vector<double>> inputs;
    std::vector<double> labels;
    std::vector<std::size_t> label_index; // position of each label in the source series
    int horizon = 0;
};

Supervised make_supervised(std::span<const double> series, EmbeddingSpec spec, int horizon);

struct MetricsRow {
    int horizon = 0;
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
};

/// Standard MSE / RMSE / MAE over matched prediction-truth vectors.
MetricsRow compute_metrics(std::span<const double> predictions, std::span<const double> truths,
                           int horizon = 0);

/// Persistence forecast: the label is predicted by the last input value.
MetricsRow baseline_persistence(const Supervised& pairs);

/// Least-squares autoregression with intercept.
struct ArModel {
    std::vector<double> coeffs; // lag 1..p
    double intercept = 0.0;
    int order() const { return static_cast<int>(coeffs.size()); }

    /// Iterated h-step-ahead forecast from the trailing history (most
    /// recent value last).
    double forecast(std::span<const double> history, int h_steps) const;
};

ArModel fit_ar(std::span<const double> train, int order);

/**
 * AR(p) baseline evaluated on the same supervised pairs an LDE-Net model
 * sees: fit on the train series, iterate h steps from each test window.
 * Requires p <= (m-1)*tau + 1 so every window carries enough history.
 */
MetricsRow baseline_ar(std::span<const double> train, std::span<const double> test, int order,
                       EmbeddingSpec spec, int horizon);

struct HorizonSweep {
    std::vector<MetricsRow> rows;
    double pearson_r = 0.0; // correlation of MSE with horizon
    double slope = 0.0;     // linear fit MSE ~ slope*h + intercept
    double intercept = 0.0;
};

/// Per-horizon metric rows plus the linearity statistic of MSE vs horizon.
HorizonSweep summarize_horizons(const std::vector<MetricsRow>& rows);

double pearson(std::span<const double> x, std::span<const double> y);

/**
 * Seeded synthetic benchmark series: AR(1) with coefficient phi driven by
 * symmetric alpha-stable jump innovations of the given scale.
 */
std::vector<double> synthetic_ar_jump_series(std::size_t n, double phi, double alpha,
                                             double jump_scale, std::uint64_t seed);

/// Synthetic series wrapped as a dataset with day-index timestamps.
SeriesDataset synthetic_dataset(std::size_t n, double phi, double alpha, double jump_scale,
                                std::uint64_t seed);

} // namespace ldenet

#endif
