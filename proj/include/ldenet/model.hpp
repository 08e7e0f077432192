#ifndef LDENET_MODEL_HPP
#define LDENET_MODEL_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldenet/attention.hpp"
#include "ldenet/dataset.hpp"
#include "ldenet/mlp.hpp"
#include "ldenet/rng.hpp"

namespace ldenet {

/// Euler-Maruyama discretization of one forecast interval: total pseudo-time
/// T split into N sub-steps with stability index alpha.
struct IntegratorConfig {
    double total_time = 1.0;
    int steps = 4;
    double alpha = 1.5;
    int n_paths = 1000;
    double increment_clip = 0.0; // clip |L_k| when > 0; 0 disables

    double dt() const { return total_time / steps; }
    void validate() const;
};

/**
 * Lifts the scalar coordinates of an embedded input into d-dimensional
 * tokens: token_j = x_j * weight + positional_row_j. Feeds the attention
 * block when multi-step input weighting is enabled.
 */
struct TokenLift {
    int dim = 0;
    std::vector<double> weight;     // d
    std::vector<double> positional; // d x d row-major

    void validate() const;
};

TokenLift make_token_lift(int dim, RngStream& rng);

/**
 * One LDE-Net forecaster: drift net(s) d->d, diffusion net(s) d->1 behind a
 * sigmoid, an affine readout d->1, optional attention front end, integrator
 * settings, and the normalization constants of its training split.
 *
 * drift/diffusion hold one shared net each by default; in per-step mode they
 * hold `steps` nets, one per EM sub-step.
 */
struct LdeNetModel {
    std::vector<MlpParams> drift;
    std::vector<MlpParams> diffusion;
    std::vector<double> readout_w;
    double readout_b = 0.0;
    bool use_attention = false;
    AttentionBlock attn;
    TokenLift lift;
    IntegratorConfig integrator;
    int horizon = 1;
    Normalization norm;

    int dim() const { return drift.empty() ? 0 : drift.front().in_dim; }
    bool per_step() const { return drift.size() > 1; }
    const MlpParams& drift_at(int k) const { return drift[drift.size() == 1 ? 0 : k]; }
    const MlpParams& diffusion_at(int k) const {
        return diffusion[diffusion.size() == 1 ? 0 : k];
    }
    void validate() const;

    /// Readout applied to a terminal state, in normalized units.
    double readout(std::span<const double> state) const;

    /// Initial EM state: the raw input, or its attention-weighted version.
    std::vector<double> initial_state(std::span<const double> x0) const;
};

struct ModelConfig {
    int width = 50;
    Activation act = Activation::ReLU;
    bool use_attention = false;
    bool per_step_params = false;
    IntegratorConfig integrator;
};

LdeNetModel make_model(int dim, const ModelConfig& config, Normalization norm, int horizon,
                       RngStream& rng);

/// Sigmoid output of the diffusion net at the raw input x0; serves as both
/// the EM diffusion coefficient and the out-of-distribution score (low means
/// in-distribution). Per-step models report the first net's score.
double diffusion_score(const LdeNetModel& model, std::span<const double> x0);

struct EmResult {
    std::vector<double> terminal;           // x_N
    std::vector<std::vector<double>> path;  // x_0 .. x_N (post-attention states)
    std::vector<double> increments;         // raw stable draws L_k, one per step
};

/**
 * N-step Euler-Maruyama composition x_{k+1} = x_k + f(x_k) dt
 * + g(x0) dt^(1/alpha) L_k with the diffusion coefficient evaluated once at
 * the raw input. Draws are recorded so a backward pass can reuse the noise.
 * Throws DivergenceError with the step index if the state leaves the finite
 * range.
 */
EmResult em_forward(const LdeNetModel& model, std::span<const double> x0, RngStream& rng);

/// Same composition driven by caller-supplied increments.
EmResult em_forward_frozen(const LdeNetModel& model, std::span<const double> x0,
                           std::span<const double> increments);

/// Gaussian input perturbations x + sigma * eps defining the OOD batch.
std::vector<std::vector<double>> make_ood(const std::vector<std::vector<double>>& inputs,
                                          double noise_sigma, RngStream& rng);

struct TrainBatch {
    std::vector<std::vector<double>> inputs;
    std::vector<double> labels;
    std::vector<std::vector<double>> ood_inputs;

    void validate() const;
};

/// Gradients for every trainable block of an LdeNetModel.
struct ModelGrads {
    std::vector<GradientBundle> drift;
    std::vector<GradientBundle> diffusion;
    std::vector<double> readout_w;
    double readout_b = 0.0;
    AttentionGrads attn;
    std::vector<double> lift_weight;
    std::vector<double> lift_positional;

    static ModelGrads zeros_like(const LdeNetModel& m);
    void accumulate(const ModelGrads& other, double scale = 1.0);
    void scale(double s);
    double norm() const;
};

struct LossResult {
    double loss = 0.0;
    double regression_term = 0.0;
    double bce_train_term = 0.0;
    double bce_ood_term = 0.0;
    ModelGrads grads;
};

/**
 * Three-term training loss: mean squared regression error of the readout at
 * x_N against the labels, plus binary cross-entropy pushing the diffusion
 * score toward 0 on training inputs and toward 1 on noise-perturbed inputs.
 * Gradients are pathwise with the sampled increments held fixed; pass
 * `frozen` to reuse a specific noise realization (one vector per sample).
 */
LossResult loss_total(const LdeNetModel& model, const TrainBatch& batch, RngStream& rng,
                      const std::vector<std::vector<double>>* frozen = nullptr);

struct TrainOptions {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double grad_clip = 0.0;   // global-norm clip when > 0
    double noise_sigma = -1.; // OOD sigma; <= 0 selects 2x the train std
    int max_retries = 3;      // per-epoch divergence retries (lr halves each)
};

struct TrainDiagnostics {
    std::vector<double> epoch_loss;
    std::vector<double> drift_path_norm;
    std::vector<double> diffusion_path_norm;
    int lr_halvings = 0;
    double final_learning_rate = 0.0;
    double noise_sigma = 0.0;
};

/// Train one horizon model on prepared supervised pairs.
LdeNetModel train_single(const Supervised& pairs, int dim, const ModelConfig& config,
                         const TrainOptions& options, Normalization norm, int horizon,
                         RngStream& rng, TrainDiagnostics* diagnostics = nullptr);

/**
 * One independent model per horizon: model h learns to predict the series
 * value h days ahead of its input window. The series must already be
 * normalized with the supplied constants.
 */
std::vector<LdeNetModel> train(std::span<const double> train_series, EmbeddingSpec embedding,
                               std::span<const int> horizons, const ModelConfig& config,
                               const TrainOptions& options, Normalization norm, RngStream& rng,
                               std::vector<TrainDiagnostics>* diagnostics = nullptr);

struct Prediction {
    double mean = 0.0;       // original data units
    double variance = 0.0;   // original data units squared
    std::vector<double> samples;
    int n_discarded = 0;
    bool single_sample_warning = false;
};

/**
 * Monte-Carlo prediction: n_paths independent chains on derived substreams,
 * readout per terminal state, sample mean/variance de-normalized to original
 * units. Diverged paths are discarded and counted; beyond 10% discarded the
 * prediction is refused as unstable.
 */
Prediction predict(const LdeNetModel& model, std::span<const double> x0, RngStream& rng);

struct AlphaSweepRow {
    double alpha = 0.0;
    std::vector<MetricsRow> per_horizon;
};

/// Train and evaluate one model family per alpha; emits per-horizon MSE rows.
std::vector<AlphaSweepRow> alpha_sweep(std::span<const double> train_series,
                                       std::span<const double> test_series,
                                       EmbeddingSpec embedding, std::span<const int> horizons,
                                       std::span<const double> alphas, const ModelConfig& config,
                                       const TrainOptions& options, Normalization norm,
                                       RngStream& rng);

/// Versioned JSON checkpoint; loading reproduces bit-identical predictions.
void save_checkpoint(const LdeNetModel& model, const std::string& path);
LdeNetModel load_checkpoint(const std::string& path);

} // namespace ldenet

#endif
