#include "ldenet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ldenet/errors.hpp"
#include "ldenet/stable.hpp"

namespace ldenet {

using Vec = std::vector<double>;

void IntegratorConfig::validate() const {
    if (!(total_time > 0.0)) throw InvalidParameter("total pseudo-time must be positive");
    if (steps < 1) throw InvalidParameter("sub-step count must be >= 1");
    // alpha = 2 is admitted as the Brownian ablation; the forecaster proper
    // uses 1 < alpha < 2
    if (!(alpha > 1.0) || !(alpha <= 2.0))
        throw InvalidParameter("stability index must satisfy 1 < alpha <= 2, got " +
                               std::to_string(alpha));
    if (n_paths < 1) throw InvalidParameter("path count must be >= 1");
    if (increment_clip < 0.0) throw InvalidParameter("increment clip must be >= 0");
}

void TokenLift::validate() const {
    if (dim < 1) throw ShapeError("token lift dimension must be positive");
    if (weight.size() != static_cast<std::size_t>(dim) ||
        positional.size() != static_cast<std::size_t>(dim) * dim)
        throw ShapeError("token lift parameter sizes inconsistent with dim");
}

TokenLift make_token_lift(int dim, RngStream& rng) {
    TokenLift lift;
    lift.dim = dim;
    lift.weight.assign(dim, 0.0);
    lift.positional.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
    // weight starts at the coordinate scale; positional rows start near the
    // identity so the lifted tokens initially echo the input window
    for (auto& v : lift.weight) v = 1.0 + 0.1 * sd * rng.gaussian();
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i)
            lift.positional[static_cast<std::size_t>(j) * dim + i] = 0.1 * sd * rng.gaussian();
    return lift;
}

void LdeNetModel::validate() const {
    integrator.validate();
    if (drift.empty() || diffusion.empty()) throw ShapeError("model has no networks");
    if (drift.size() != 1 && drift.size() != static_cast<std::size_t>(integrator.steps))
        throw ShapeError("drift net count must be 1 or equal to the step count");
    if (diffusion.size() != drift.size())
        throw ShapeError("drift and diffusion net counts must match");
    const int d = drift.front().in_dim;
    for (const auto& f : drift) {
        f.validate();
        if (f.in_dim != d || f.out_dim != d)
            throw ShapeError("drift nets must map d -> d with the shared dimension");
    }
    for (const auto& g : diffusion) {
        g.validate();
        if (g.in_dim != d || g.out_dim != 1) throw ShapeError("diffusion nets must map d -> 1");
    }
    if (readout_w.size() != static_cast<std::size_t>(d))
        throw ShapeError("readout weight length must equal d");
    if (!std::isfinite(readout_b)) throw ShapeError("readout bias must be finite");
    if (use_attention) {
        attn.validate();
        lift.validate();
        if (attn.dim != d || lift.dim != d)
            throw ShapeError("attention components must share the model dimension");
    }
    if (!(norm.hi > norm.lo)) throw ShapeError("normalization constants degenerate");
}

double LdeNetModel::readout(std::span<const double> state) const {
    if (state.size() != readout_w.size()) throw ShapeError("readout input has wrong dimension");
    double y = readout_b;
    for (std::size_t i = 0; i < state.size(); ++i) y += readout_w[i] * state[i];
    return y;
}

std::vector<double> LdeNetModel::initial_state(std::span<const double> x0) const {
    if (!use_attention) return Vec(x0.begin(), x0.end());
    const int d = dim();
    Vec tokens(static_cast<std::size_t>(d) * d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
            tokens[static_cast<std::size_t>(j) * d + i] =
                x0[j] * lift.weight[i] + lift.positional[static_cast<std::size_t>(j) * d + i];
    return attention_apply(attn, tokens, d);
}

LdeNetModel make_model(int dim, const ModelConfig& config, Normalization norm, int horizon,
                       RngStream& rng) {
    if (dim < 1) throw InvalidParameter("model dimension must be positive");
    config.integrator.validate();
    LdeNetModel m;
    m.integrator = config.integrator;
    m.horizon = horizon;
    m.norm = norm;
    const int nets = config.per_step_params ? config.integrator.steps : 1;
    m.drift.reserve(nets);
    m.diffusion.reserve(nets);
    for (int i = 0; i < nets; ++i) {
        m.drift.push_back(make_mlp(dim, dim, config.width, config.act, rng));
        m.diffusion.push_back(make_mlp(dim, 1, config.width, config.act, rng));
    }
    m.readout_w.resize(dim);
    const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& v : m.readout_w) v = sd * rng.gaussian();
    m.readout_b = 0.0;
    m.use_attention = config.use_attention;
    if (m.use_attention) {
        m.attn = make_attention(dim, rng);
        m.lift = make_token_lift(dim, rng);
    }
    return m;
}

namespace {

inline double sigmoid(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

// numerically stable -log(1 - sigmoid(u)) and -log(sigmoid(u))
inline double softplus(double u) {
    if (u > 30.0) return u;
    if (u < -30.0) return std::exp(u);
    return std::log1p(std::exp(u));
}

inline double raw_diffusion_output(const MlpParams& net, std::span<const double> x) {
    return mlp_forward(net, x)[0];
}

} // namespace

double diffusion_score(const LdeNetModel& model, std::span<const double> x0) {
    return sigmoid(raw_diffusion_output(model.diffusion.front(), x0));
}

namespace {

EmResult em_run(const LdeNetModel& model, std::span<const double> x0,
                std::span<const double> increments) {
    const int d = model.dim();
    if (x0.size() != static_cast<std::size_t>(d)) throw ShapeError("input dimension mismatch");
    for (double v : x0)
        if (!std::isfinite(v)) throw InvalidParameter("non-finite model input");
    const int n = model.integrator.steps;
    if (increments.size() != static_cast<std::size_t>(n))
        throw ShapeError("increment count must equal the step count");

    const double dt = model.integrator.dt();
    const double noise_scale = std::pow(dt, 1.0 / model.integrator.alpha);

    EmResult res;
    res.increments.assign(increments.begin(), increments.end());
    res.path.reserve(n + 1);
    res.path.push_back(model.initial_state(x0));

    // the diffusion coefficient is frozen at the raw input for every step
    std::vector<double> coeff(model.diffusion.size());
    for (std::size_t i = 0; i < model.diffusion.size(); ++i)
        coeff[i] = sigmoid(raw_diffusion_output(model.diffusion[i], x0));

    Vec state = res.path.front();
    for (int k = 0; k < n; ++k) {
        const Vec f = mlp_forward(model.drift_at(k), state);
        const double g = coeff[model.diffusion.size() == 1 ? 0 : k];
        const double jump = g * noise_scale * increments[k];
        for (int i = 0; i < d; ++i) {
            state[i] += f[i] * dt + jump;
            if (!std::isfinite(state[i]))
                throw DivergenceError("EM state left the finite range", k);
        }
        res.path.push_back(state);
    }
    res.terminal = state;
    return res;
}

} // namespace

EmResult em_forward(const LdeNetModel& model, std::span<const double> x0, RngStream& rng) {
    const int n = model.integrator.steps;
    Vec increments(n);
    const double clip = model.integrator.increment_clip;
    for (int k = 0; k < n; ++k) {
        double l = sample_standard(model.integrator.alpha, rng);
        if (clip > 0.0) l = std::clamp(l, -clip, clip);
        increments[k] = l;
    }
    return em_run(model, x0, increments);
}

EmResult em_forward_frozen(const LdeNetModel& model, std::span<const double> x0,
                           std::span<const double> increments) {
    return em_run(model, x0, increments);
}

std::vector<std::vector<double>> make_ood(const std::vector<std::vector<double>>& inputs,
                                          double noise_sigma, RngStream& rng) {
    if (!(noise_sigma > 0.0))
        throw InvalidParameter("noise sigma must be positive, got " + std::to_string(noise_sigma));
    std::vector<Vec> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        out[i] = inputs[i];
        for (auto& v : out[i]) v += noise_sigma * rng.gaussian();
    }
    return out;
}

void TrainBatch::validate() const {
    if (inputs.empty()) throw InsufficientData("empty training batch");
    if (inputs.size() != labels.size() || inputs.size() != ood_inputs.size())
        throw ShapeError("batch inputs, labels, and OOD inputs must have equal cardinality");
}

ModelGrads ModelGrads::zeros_like(const LdeNetModel& m) {
    ModelGrads g;
    g.drift.reserve(m.drift.size());
    g.diffusion.reserve(m.diffusion.size());
    for (const auto& net : m.drift) g.drift.push_back(GradientBundle::zeros_like(net));
    for (const auto& net : m.diffusion) g.diffusion.push_back(GradientBundle::zeros_like(net));
    g.readout_w.assign(m.readout_w.size(), 0.0);
    g.readout_b = 0.0;
    if (m.use_attention) {
        g.attn = AttentionGrads::zeros_like(m.attn);
        g.lift_weight.assign(m.lift.weight.size(), 0.0);
        g.lift_positional.assign(m.lift.positional.size(), 0.0);
    }
    return g;
}

void ModelGrads::accumulate(const ModelGrads& other, double s) {
    for (std::size_t i = 0; i < drift.size(); ++i) drift[i].accumulate(other.drift[i], s);
    for (std::size_t i = 0; i < diffusion.size(); ++i) diffusion[i].accumulate(other.diffusion[i], s);
    for (std::size_t i = 0; i < readout_w.size(); ++i) readout_w[i] += s * other.readout_w[i];
    readout_b += s * other.readout_b;
    if (!lift_weight.empty()) {
        attn.accumulate(other.attn, s);
        for (std::size_t i = 0; i < lift_weight.size(); ++i) lift_weight[i] += s * other.lift_weight[i];
        for (std::size_t i = 0; i < lift_positional.size(); ++i)
            lift_positional[i] += s * other.lift_positional[i];
    }
}

void ModelGrads::scale(double s) {
    for (auto& g : drift) g.scale(s);
    for (auto& g : diffusion) g.scale(s);
    for (auto& v : readout_w) v *= s;
    readout_b *= s;
    attn.scale(s);
    for (auto& v : lift_weight) v *= s;
    for (auto& v : lift_positional) v *= s;
}

double ModelGrads::norm() const {
    double s = readout_b * readout_b;
    for (const auto& g : drift) s += g.squared_norm();
    for (const auto& g : diffusion) s += g.squared_norm();
    for (double v : readout_w) s += v * v;
    s += attn.squared_norm();
    for (double v : lift_weight) s += v * v;
    for (double v : lift_positional) s += v * v;
    return std::sqrt(s);
}

LossResult loss_total(const LdeNetModel& model, const TrainBatch& batch, RngStream& rng,
                      const std::vector<std::vector<double>>* frozen) {
    model.validate();
    batch.validate();
    const int d = model.dim();
    const int n_steps = model.integrator.steps;
    const double dt = model.integrator.dt();
    const double noise_scale = std::pow(dt, 1.0 / model.integrator.alpha);
    const std::size_t batch_size = batch.inputs.size();
    const double inv_b = 1.0 / static_cast<double>(batch_size);
    const std::size_t n_nets = model.diffusion.size();
    const double inv_nets = 1.0 / static_cast<double>(n_nets);
    const double clip = model.integrator.increment_clip;

    if (frozen && frozen->size() != batch_size)
        throw ShapeError("frozen increments must provide one vector per sample");

    LossResult res;
    res.grads = ModelGrads::zeros_like(model);

    std::vector<double> upstream_dt(d);
    for (std::size_t s = 0; s < batch_size; ++s) {
        const Vec& x0 = batch.inputs[s];
        const Vec& ood = batch.ood_inputs[s];

        Vec increments;
        if (frozen) {
            increments = (*frozen)[s];
            if (increments.size() != static_cast<std::size_t>(n_steps))
                throw ShapeError("frozen increment vector has wrong length");
        } else {
            increments.resize(n_steps);
            for (auto& v : increments) {
                v = sample_standard(model.integrator.alpha, rng);
                if (clip > 0.0) v = std::clamp(v, -clip, clip);
            }
        }

        const EmResult em = em_forward_frozen(model, x0, increments);

        // regression head
        const double pred = model.readout(em.terminal);
        const double err = pred - batch.labels[s];
        res.regression_term += err * err * inv_b;
        const double dpred = 2.0 * err * inv_b;
        for (int i = 0; i < d; ++i) res.grads.readout_w[i] += dpred * em.terminal[i];
        res.grads.readout_b += dpred;

        // reverse sweep through the EM chain with the noise held fixed
        Vec delta(d);
        for (int i = 0; i < d; ++i) delta[i] = dpred * model.readout_w[i];
        std::vector<double> d_coeff(n_nets, 0.0);
        for (int k = n_steps - 1; k >= 0; --k) {
            double dsum = 0.0;
            for (int i = 0; i < d; ++i) dsum += delta[i];
            d_coeff[n_nets == 1 ? 0 : k] += dsum * noise_scale * increments[k];

            for (int i = 0; i < d; ++i) upstream_dt[i] = delta[i] * dt;
            const std::size_t net_idx = model.drift.size() == 1 ? 0 : static_cast<std::size_t>(k);
            MlpBackward back = mlp_backward(model.drift_at(k), em.path[k], upstream_dt);
            res.grads.drift[net_idx].accumulate(back.grads);
            for (int i = 0; i < d; ++i) delta[i] += back.dx[i];
        }

        // attention front end receives the initial-state gradient
        if (model.use_attention) {
            Vec tokens(static_cast<std::size_t>(d) * d);
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i)
                    tokens[static_cast<std::size_t>(j) * d + i] =
                        x0[j] * model.lift.weight[i] +
                        model.lift.positional[static_cast<std::size_t>(j) * d + i];
            AttentionBackward aback = attention_backward(model.attn, tokens, d, delta);
            res.grads.attn.accumulate(aback.grads);
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i) {
                    const double dt_ji = aback.d_tokens[static_cast<std::size_t>(j) * d + i];
                    res.grads.lift_positional[static_cast<std::size_t>(j) * d + i] += dt_ji;
                    res.grads.lift_weight[i] += x0[j] * dt_ji;
                }
        }

        // diffusion nets: pathwise coefficient gradient plus the two BCE terms
        for (std::size_t g = 0; g < n_nets; ++g) {
            const double u_train = raw_diffusion_output(model.diffusion[g], x0);
            const double u_ood = raw_diffusion_output(model.diffusion[g], ood);
            const double score_train = sigmoid(u_train);
            const double score_ood = sigmoid(u_ood);

            res.bce_train_term += softplus(u_train) * inv_b * inv_nets;
            res.bce_ood_term += softplus(-u_ood) * inv_b * inv_nets;

            const double du_train =
                d_coeff[g] * score_train * (1.0 - score_train) + score_train * inv_b * inv_nets;
            const double du_ood = (score_ood - 1.0) * inv_b * inv_nets;

            const double up_train[1] = {du_train};
            MlpBackward bt = mlp_backward(model.diffusion[g], x0, up_train);
            res.grads.diffusion[g].accumulate(bt.grads);
            const double up_ood[1] = {du_ood};
            MlpBackward bo = mlp_backward(model.diffusion[g], ood, up_ood);
            res.grads.diffusion[g].accumulate(bo.grads);
        }
    }

    res.loss = res.regression_term + res.bce_train_term + res.bce_ood_term;
    return res;
}

namespace {

LdeNetModel apply_sgd(const LdeNetModel& m, const ModelGrads& g, double lr) {
    LdeNetModel out = m;
    for (std::size_t i = 0; i < m.drift.size(); ++i)
        out.drift[i] = sgd_step(m.drift[i], g.drift[i], lr);
    for (std::size_t i = 0; i < m.diffusion.size(); ++i)
        out.diffusion[i] = sgd_step(m.diffusion[i], g.diffusion[i], lr);
    auto check = [](std::span<const double> v, const char* block) {
        for (double x : v)
            if (!std::isfinite(x)) throw NonFiniteUpdate("non-finite gradient", block);
    };
    check(g.readout_w, "readout");
    if (!std::isfinite(g.readout_b)) throw NonFiniteUpdate("non-finite gradient", "readout");
    for (std::size_t i = 0; i < out.readout_w.size(); ++i) out.readout_w[i] -= lr * g.readout_w[i];
    out.readout_b -= lr * g.readout_b;
    if (m.use_attention) {
        check(g.attn.wq, "attention");
        check(g.attn.wk, "attention");
        check(g.attn.wv, "attention");
        check(g.lift_weight, "lift");
        check(g.lift_positional, "lift");
        for (std::size_t i = 0; i < out.attn.wq.size(); ++i) {
            out.attn.wq[i] -= lr * g.attn.wq[i];
            out.attn.wk[i] -= lr * g.attn.wk[i];
            out.attn.wv[i] -= lr * g.attn.wv[i];
        }
        for (std::size_t i = 0; i < out.lift.weight.size(); ++i)
            out.lift.weight[i] -= lr * g.lift_weight[i];
        for (std::size_t i = 0; i < out.lift.positional.size(); ++i)
            out.lift.positional[i] -= lr * g.lift_positional[i];
    }
    return out;
}

double input_std(const std::vector<Vec>& inputs) {
    double mean = 0.0;
    std::size_t n = 0;
    for (const auto& v : inputs)
        for (double x : v) {
            mean += x;
            ++n;
        }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& v : inputs)
        for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(n));
}

} // namespace

LdeNetModel train_single(const Supervised& pairs, int dim, const ModelConfig& config,
                         const TrainOptions& options, Normalization norm, int horizon,
                         RngStream& rng, TrainDiagnostics* diagnostics) {
    if (pairs.inputs.empty()) throw InsufficientData("no supervised pairs to train on");
    if (options.epochs < 1) throw InvalidParameter("epoch count must be >= 1");
    if (options.batch_size < 1) throw InvalidParameter("batch size must be >= 1");
    if (!(options.learning_rate > 0.0)) throw InvalidParameter("learning rate must be positive");

    LdeNetModel model = make_model(dim, config, norm, horizon, rng);
    double sigma = options.noise_sigma;
    if (!(sigma > 0.0)) sigma = 2.0 * input_std(pairs.inputs);
    if (!(sigma > 0.0)) throw ConstantSeries("training inputs are constant; OOD sigma undefined");

    TrainDiagnostics local;
    TrainDiagnostics& diag = diagnostics ? *diagnostics : local;
    diag.noise_sigma = sigma;

    double lr = options.learning_rate;
    const std::size_t n = pairs.inputs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const LdeNetModel snapshot = model;
        int attempts = 0;
        for (;;) {
            try {
                // deterministic shuffle and fresh OOD perturbations per epoch
                for (std::size_t i = n - 1; i > 0; --i)
                    std::swap(order[i], order[rng.below(i + 1)]);
                const auto ood = make_ood(pairs.inputs, sigma, rng);

                double loss_sum = 0.0;
                for (std::size_t start = 0; start < n; start += options.batch_size) {
                    const std::size_t stop = std::min(n, start + options.batch_size);
                    TrainBatch batch;
                    batch.inputs.reserve(stop - start);
                    batch.labels.reserve(stop - start);
                    batch.ood_inputs.reserve(stop - start);
                    for (std::size_t i = start; i < stop; ++i) {
                        batch.inputs.push_back(pairs.inputs[order[i]]);
                        batch.labels.push_back(pairs.labels[order[i]]);
                        batch.ood_inputs.push_back(ood[order[i]]);
                    }
                    LossResult res = loss_total(model, batch, rng);
                    if (options.grad_clip > 0.0) {
                        const double gn = res.grads.norm();
                        if (gn > options.grad_clip) res.grads.scale(options.grad_clip / gn);
                    }
                    model = apply_sgd(model, res.grads, lr);
                    loss_sum += res.loss * static_cast<double>(stop - start);
                }
                diag.epoch_loss.push_back(loss_sum / static_cast<double>(n));
                double dpn = 0.0, gpn = 0.0;
                for (const auto& net : model.drift) dpn += path_norm(net);
                for (const auto& net : model.diffusion) gpn += path_norm(net);
                diag.drift_path_norm.push_back(dpn);
                diag.diffusion_path_norm.push_back(gpn);
                break;
            } catch (const DivergenceError&) {
                model = snapshot;
                lr *= 0.5;
                ++diag.lr_halvings;
                if (++attempts > options.max_retries) throw;
            } catch (const NonFiniteUpdate&) {
                model = snapshot;
                lr *= 0.5;
                ++diag.lr_halvings;
                if (++attempts > options.max_retries) throw;
            }
        }
    }
    diag.final_learning_rate = lr;
    return model;
}

std::vector<LdeNetModel> train(std::span<const double> train_series, EmbeddingSpec embedding,
                               std::span<const int> horizons, const ModelConfig& config,
                               const TrainOptions& options, Normalization norm, RngStream& rng,
                               std::vector<TrainDiagnostics>* diagnostics) {
    if (horizons.empty()) throw InvalidParameter("need at least one horizon");
    std::vector<LdeNetModel> models;
    models.reserve(horizons.size());
    if (diagnostics) diagnostics->resize(horizons.size());
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const Supervised pairs = make_supervised(train_series, embedding, horizons[h]);
        RngStream stream = rng.substream(0x70000000ULL + h);
        models.push_back(train_single(pairs, embedding.m, config, options, norm, horizons[h],
                                       stream, diagnostics ? &(*diagnostics)[h] : nullptr));
    }
    return models;
}

Prediction predict(const LdeNetModel& model, std::span<const double> x0, RngStream& rng) {
    model.validate();
    const int n_paths = model.integrator.n_paths;
    Prediction out;
    out.samples.reserve(n_paths);
    for (int p = 0; p < n_paths; ++p) {
        RngStream stream = rng.substream(static_cast<std::uint64_t>(p));
        try {
            const EmResult em = em_forward(model, x0, stream);
            out.samples.push_back(model.readout(em.terminal));
        } catch (const DivergenceError&) {
            ++out.n_discarded;
        }
    }
    if (out.samples.empty())
        throw PredictionUnstable("all Monte-Carlo paths diverged");
    if (out.n_discarded * 10 > n_paths)
        throw PredictionUnstable(std::to_string(out.n_discarded) + " of " +
                                 std::to_string(n_paths) + " paths diverged (> 10%)");

    const std::size_t n = out.samples.size();
    double mean = 0.0;
    for (double s : out.samples) mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    if (n > 1) {
        for (double s : out.samples) var += (s - mean) * (s - mean);
        var /= static_cast<double>(n - 1);
    } else {
        out.single_sample_warning = true;
    }

    const double span = model.norm.hi - model.norm.lo;
    out.mean = model.norm.denormalize(mean);
    out.variance = var * span * span;
    for (auto& s : out.samples) s = model.norm.denormalize(s);
    return out;
}

std::vector<AlphaSweepRow> alpha_sweep(std::span<const double> train_series,
                                       std::span<const double> test_series,
                                       EmbeddingSpec embedding, std::span<const int> horizons,
                                       std::span<const double> alphas, const ModelConfig& config,
                                       const TrainOptions& options, Normalization norm,
                                       RngStream& rng) {
    if (alphas.empty()) throw InvalidParameter("need at least one alpha");
    for (double a : alphas)
        if (!(a > 1.0) || !(a < 2.0))
            throw InvalidParameter("sweep alphas must lie strictly inside (1, 2), got " +
                                   std::to_string(a));

    std::vector<AlphaSweepRow> table;
    table.reserve(alphas.size());
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        ModelConfig cfg = config;
        cfg.integrator.alpha = alphas[ai];
        RngStream stream = rng.substream(0xa1f0000ULL + ai);
        const auto models = train(train_series, embedding, horizons, cfg, options, norm, stream);

        AlphaSweepRow row;
        row.alpha = alphas[ai];
        for (const auto& model : models) {
            const Supervised pairs = make_supervised(test_series, embedding, model.horizon);
            std::vector<double> pred(pairs.inputs.size());
            RngStream eval = stream.substream(0xe0000ULL + model.horizon);
            for (std::size_t i = 0; i < pairs.inputs.size(); ++i) {
                const Prediction p = predict(model, pairs.inputs[i], eval.substream(i));
                pred[i] = model.norm.normalize(p.mean);
            }
            row.per_horizon.push_back(compute_metrics(pred, pairs.labels, model.horizon));
        }
        table.push_back(std::move(row));
    }
    return table;
}

namespace {

nlohmann::json mlp_to_json(const MlpParams& p) {
    return {{"in_dim", p.in_dim},   {"out_dim", p.out_dim}, {"width", p.width},
            {"activation", to_string(p.act)}, {"outer", p.outer}, {"inner", p.inner},
            {"bias", p.bias}};
}

MlpParams mlp_from_json(const nlohmann::json& j) {
    MlpParams p;
    p.in_dim = j.at("in_dim").get<int>();
    p.out_dim = j.at("out_dim").get<int>();
    p.width = j.at("width").get<int>();
    p.act = activation_from_string(j.at("activation").get<std::string>());
    p.outer = j.at("outer").get<std::vector<double>>();
    p.inner = j.at("inner").get<std::vector<double>>();
    p.bias = j.at("bias").get<std::vector<double>>();
    p.validate();
    return p;
}

} // namespace

void save_checkpoint(const LdeNetModel& model, const std::string& path) {
    model.validate();
    nlohmann::json j;
    j["format_version"] = 1;
    j["alpha"] = model.integrator.alpha;
    j["N"] = model.integrator.steps;
    j["dt"] = model.integrator.dt();
    j["T"] = model.integrator.total_time;
    j["n_paths"] = model.integrator.n_paths;
    j["increment_clip"] = model.integrator.increment_clip;
    j["d"] = model.dim();
    j["horizon"] = model.horizon;
    j["widths"] = {model.drift.front().width, model.diffusion.front().width};
    j["per_step"] = model.per_step();
    j["drift"] = nlohmann::json::array();
    for (const auto& net : model.drift) j["drift"].push_back(mlp_to_json(net));
    j["diffusion"] = nlohmann::json::array();
    for (const auto& net : model.diffusion) j["diffusion"].push_back(mlp_to_json(net));
    j["readout"] = {{"w", model.readout_w}, {"b", model.readout_b}};
    j["attention"] = {{"enabled", model.use_attention}};
    if (model.use_attention) {
        j["attention"]["wq"] = model.attn.wq;
        j["attention"]["wk"] = model.attn.wk;
        j["attention"]["wv"] = model.attn.wv;
        j["attention"]["lift_weight"] = model.lift.weight;
        j["attention"]["lift_positional"] = model.lift.positional;
    }
    j["normalization"] = {{"lo", model.norm.lo}, {"hi", model.norm.hi}};

    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    out << j.dump(2) << "\n";
}

LdeNetModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid checkpoint JSON: ") + e.what(), 0);
    }
    const int version = j.at("format_version").get<int>();
    if (version != 1)
        throw ParseError("unsupported checkpoint format_version " + std::to_string(version), 0);

    LdeNetModel m;
    m.integrator.alpha = j.at("alpha").get<double>();
    m.integrator.steps = j.at("N").get<int>();
    m.integrator.total_time = j.at("T").get<double>();
    m.integrator.n_paths = j.at("n_paths").get<int>();
    m.integrator.increment_clip = j.at("increment_clip").get<double>();
    m.horizon = j.at("horizon").get<int>();
    for (const auto& net : j.at("drift")) m.drift.push_back(mlp_from_json(net));
    for (const auto& net : j.at("diffusion")) m.diffusion.push_back(mlp_from_json(net));
    m.readout_w = j.at("readout").at("w").get<std::vector<double>>();
    m.readout_b = j.at("readout").at("b").get<double>();
    m.use_attention = j.at("attention").at("enabled").get<bool>();
    if (m.use_attention) {
        m.attn.dim = m.drift.front().in_dim;
        m.attn.wq = j.at("attention").at("wq").get<std::vector<double>>();
        m.attn.wk = j.at("attention").at("wk").get<std::vector<double>>();
        m.attn.wv = j.at("attention").at("wv").get<std::vector<double>>();
        m.lift.dim = m.attn.dim;
        m.lift.weight = j.at("attention").at("lift_weight").get<std::vector<double>>();
        m.lift.positional = j.at("attention").at("lift_positional").get<std::vector<double>>();
    }
    m.norm.lo = j.at("normalization").at("lo").get<double>();
    m.norm.hi = j.at("normalization").at("hi").get<double>();
    m.validate();
    return m;
}

} // namespace ldenet
