#ifndef LDENET_EXPERIMENT_HPP
#define LDENET_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldenet/chaos.hpp"
#include "ldenet/dataset.hpp"
#include "ldenet/model.hpp"

namespace ldenet {

/// Chaos-analysis settings shared by the analyze stage and CLI.
struct AnalyzeOptions {
    int tau = 1;
    int m_max = 30;
    double wolf_eps_fraction = 0.1;
    int theiler = -1; // < 0 selects m*tau inside Wolf
    double saturation_tol = 0.02;
    double e2_band = 0.1;
    int m_override = 0; // > 0 skips Cao selection
    int fallback_m = 8; // used when E1 never saturates
};

struct AnalyzeReport {
    double lambda = 0.0;
    std::optional<int> lyapunov_time;
    bool chaotic = false;
    std::vector<double> e1;
    std::vector<double> e2;
    std::optional<int> selected_m;
    bool deterministic = false;
    int embedding_m = 0; // dimension the pipeline will use
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

/// Cao curves plus Wolf exponent at the selected dimension, on one series.
AnalyzeReport analyze_series(std::span<const double> series, const AnalyzeOptions& options);

/// Every knob of an experiment, JSON round-trippable with spec defaults.
struct ExperimentConfig {
    std::string input_csv;
    std::string value_column = "close";
    std::string timestamp_column = "date";
    std::string output_dir = "ldenet-out";
    std::uint64_t seed = 7;
    double train_fraction = 0.8;
    std::string normalization = "minmax"; // or "zscore"
    AnalyzeOptions analyze;
    bool strict_chaos_gate = false;
    std::vector<int> horizons = {1, 2, 3, 4};
    double alpha = 1.5;
    double total_time = 1.0;
    int em_steps = 4;
    int n_paths = 1000;
    int hidden_width = 50;
    std::string activation = "relu";
    bool use_attention = false;
    bool per_step_params = false;
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double grad_clip = 0.0;      // off by default
    double increment_clip = 0.0; // off by default
    double noise_sigma = -1.0;   // <= 0 selects 2x train standard deviation
    int ar_order = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);

    ModelConfig model_config() const;
    TrainOptions train_options() const;
};

struct ExperimentResult {
    std::string output_dir;
    AnalyzeReport analysis;
    std::vector<MetricsRow> model_metrics;       // normalized units
    std::vector<MetricsRow> persistence_metrics;
    std::vector<MetricsRow> ar_metrics;
    HorizonSweep horizon_stats;
    double diffusion_score_train = 0.0;
    double diffusion_score_ood = 0.0;
    std::vector<TrainDiagnostics> diagnostics;
};

/**
 * Full pipeline: load -> split -> analyze -> train one model per horizon ->
 * Monte-Carlo predict on the test split -> evaluate against baselines.
 * Writes report.json, metrics.csv, predictions.jsonl, loss_curves.csv,
 * per-horizon checkpoints and plot-ready CSVs into output_dir. Any stage
 * failure aborts with the stage name and cause.
 */
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Table-4-shaped alpha sweep written as CSV + JSON under output_dir.
std::vector<AlphaSweepRow> run_alpha_sweep(const ExperimentConfig& config,
                                           const std::vector<double>& alphas);

struct ConvergenceRunConfig {
    double alpha = 1.5;
    int n_paths = 1000;
    int dt_pow_min = 4; // dt grid 2^-dt_pow_min .. 2^-dt_pow_max
    int dt_pow_max = 9;
    int ref_refinement = 1024;
    double drift_rate = 1.0;
    double g = 1.0;
    double x0 = 1.0;
    double total_time = 1.0;
    std::uint64_t seed = 7;
    std::string output_dir = "convergence-out";
};

/// Strong-error harness runner; writes convergence.csv and summary JSON.
ConvergenceReport run_convergence(const ConvergenceRunConfig& config);

/// Format a double with full round-trip precision (deterministic output).
std::string format_double(double v);

} // namespace ldenet

#endif
