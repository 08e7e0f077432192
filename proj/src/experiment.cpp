#include "ldenet/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ldenet/errors.hpp"
#include "ldenet/sde.hpp"

namespace ldenet {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json AnalyzeReport::to_json() const {
    nlohmann::json j;
    j["lambda"] = lambda;
    j["lyapunov_time"] = lyapunov_time ? nlohmann::json(*lyapunov_time) : nlohmann::json(nullptr);
    j["chaotic"] = chaotic;
    j["e1"] = e1;
    j["e2"] = e2;
    j["selected_m"] = selected_m ? nlohmann::json(*selected_m) : nlohmann::json(nullptr);
    j["deterministic"] = deterministic;
    j["embedding_m"] = embedding_m;
    j["warnings"] = warnings;
    return j;
}

AnalyzeReport analyze_series(std::span<const double> series, const AnalyzeOptions& options) {
    AnalyzeReport report;

    CaoOptions cao_opts;
    cao_opts.saturation_tol = options.saturation_tol;
    cao_opts.e2_band = options.e2_band;
    const CaoCurves curves = cao_curves(series, options.tau, options.m_max, cao_opts);
    report.e1 = curves.e1;
    report.e2 = curves.e2;
    report.selected_m = curves.selected_m;
    report.deterministic = curves.deterministic;

    if (options.m_override > 0) {
        report.embedding_m = options.m_override;
    } else if (curves.selected_m) {
        report.embedding_m = *curves.selected_m;
    } else {
        report.embedding_m = std::min(options.fallback_m, options.m_max);
        report.warnings.push_back("E1 never saturated; falling back to m=" +
                                  std::to_string(report.embedding_m));
    }
    if (!report.deterministic)
        report.warnings.push_back("E2 stays within 1 +/- " + format_double(options.e2_band) +
                                  ": series looks random rather than deterministic");

    EmbeddingSpec spec{options.tau, report.embedding_m};
    WolfOptions wolf_opts;
    wolf_opts.theiler = options.theiler;
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    wolf_opts.eps = options.wolf_eps_fraction * (*hi - *lo) *
                    std::sqrt(static_cast<double>(report.embedding_m));
    const LyapunovReport lyap = max_lyapunov_wolf(series, spec, wolf_opts);
    report.lambda = lyap.lambda;
    report.lyapunov_time = lyap.lyapunov_time;
    report.chaotic = lyap.chaotic;
    if (!report.chaotic)
        report.warnings.push_back("maximum Lyapunov exponent is not positive");
    return report;
}

void ExperimentConfig::validate() const {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw InvalidParameter("train_fraction must lie in (0, 1)");
    if (normalization != "minmax" && normalization != "zscore")
        throw InvalidParameter("normalization must be 'minmax' or 'zscore'");
    if (horizons.empty()) throw InvalidParameter("horizons must be nonempty");
    for (int h : horizons)
        if (h < 1) throw InvalidParameter("horizons must be >= 1");
    if (!(alpha > 1.0) || !(alpha < 2.0))
        throw InvalidParameter("alpha must lie strictly inside (1, 2), got " + format_double(alpha));
    if (em_steps < 1) throw InvalidParameter("em_steps must be >= 1");
    if (!(total_time > 0.0)) throw InvalidParameter("total_time must be positive");
    if (n_paths < 1) throw InvalidParameter("n_paths must be >= 1");
    if (hidden_width < 1) throw InvalidParameter("hidden_width must be >= 1");
    activation_from_string(activation);
    if (epochs < 1) throw InvalidParameter("epochs must be >= 1");
    if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidParameter("learning_rate must be positive");
    if (grad_clip < 0.0) throw InvalidParameter("grad_clip must be >= 0");
    if (increment_clip < 0.0) throw InvalidParameter("increment_clip must be >= 0");
    if (analyze.tau < 1) throw InvalidParameter("tau must be >= 1");
    if (analyze.m_max < 2) throw InvalidParameter("m_max must be >= 2");
    if (ar_order < 1) throw InvalidParameter("ar_order must be >= 1");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["input_csv"] = input_csv;
    j["value_column"] = value_column;
    j["timestamp_column"] = timestamp_column;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    j["train_fraction"] = train_fraction;
    j["normalization"] = normalization;
    j["tau"] = analyze.tau;
    j["m_max"] = analyze.m_max;
    j["m_override"] = analyze.m_override;
    j["fallback_m"] = analyze.fallback_m;
    j["saturation_tol"] = analyze.saturation_tol;
    j["e2_band"] = analyze.e2_band;
    j["wolf_eps_fraction"] = analyze.wolf_eps_fraction;
    j["theiler"] = analyze.theiler;
    j["strict_chaos_gate"] = strict_chaos_gate;
    j["horizons"] = horizons;
    j["alpha"] = alpha;
    j["total_time"] = total_time;
    j["em_steps"] = em_steps;
    j["n_paths"] = n_paths;
    j["hidden_width"] = hidden_width;
    j["activation"] = activation;
    j["use_attention"] = use_attention;
    j["per_step_params"] = per_step_params;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["grad_clip"] = grad_clip;
    j["increment_clip"] = increment_clip;
    j["noise_sigma"] = noise_sigma;
    j["ar_order"] = ar_order;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    auto get = [&](const char* key, auto& target) {
        if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
    };
    get("input_csv", c.input_csv);
    get("value_column", c.value_column);
    get("timestamp_column", c.timestamp_column);
    get("output_dir", c.output_dir);
    get("seed", c.seed);
    get("train_fraction", c.train_fraction);
    get("normalization", c.normalization);
    get("tau", c.analyze.tau);
    get("m_max", c.analyze.m_max);
    get("m_override", c.analyze.m_override);
    get("fallback_m", c.analyze.fallback_m);
    get("saturation_tol", c.analyze.saturation_tol);
    get("e2_band", c.analyze.e2_band);
    get("wolf_eps_fraction", c.analyze.wolf_eps_fraction);
    get("theiler", c.analyze.theiler);
    get("strict_chaos_gate", c.strict_chaos_gate);
    get("horizons", c.horizons);
    get("alpha", c.alpha);
    get("total_time", c.total_time);
    get("em_steps", c.em_steps);
    get("n_paths", c.n_paths);
    get("hidden_width", c.hidden_width);
    get("activation", c.activation);
    get("use_attention", c.use_attention);
    get("per_step_params", c.per_step_params);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("grad_clip", c.grad_clip);
    get("increment_clip", c.increment_clip);
    get("noise_sigma", c.noise_sigma);
    get("ar_order", c.ar_order);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path + "'", 0);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid config JSON: ") + e.what(), 0);
    }
    return from_json(j);
}

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig mc;
    mc.width = hidden_width;
    mc.act = activation_from_string(activation);
    mc.use_attention = use_attention;
    mc.per_step_params = per_step_params;
    mc.integrator.total_time = total_time;
    mc.integrator.steps = em_steps;
    mc.integrator.alpha = alpha;
    mc.integrator.n_paths = n_paths;
    mc.integrator.increment_clip = increment_clip;
    return mc;
}

TrainOptions ExperimentConfig::train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.learning_rate = learning_rate;
    t.grad_clip = grad_clip;
    t.noise_sigma = noise_sigma;
    return t;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& model_rows,
                       const std::vector<MetricsRow>& persistence_rows,
                       const std::vector<MetricsRow>& ar_rows, int ar_order) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "model,horizon,mse,rmse,mae\n";
    auto emit = [&](const std::string& name, const std::vector<MetricsRow>& rows) {
        for (const auto& r : rows)
            out << name << "," << r.horizon << "," << format_double(r.mse) << ","
                << format_double(r.rmse) << "," << format_double(r.mae) << "\n";
    };
    emit("lde-net", model_rows);
    emit("persistence", persistence_rows);
    emit("ar" + std::to_string(ar_order), ar_rows);
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult result;
    result.output_dir = config.output_dir;

    const SeriesDataset ds = stage("load", [&] {
        return load_csv(config.input_csv, config.value_column, config.timestamp_column);
    });

    SplitSpec split_spec;
    split_spec.train_fraction = config.train_fraction;
    split_spec.zscore = config.normalization == "zscore";
    const SplitResult split = stage("split", [&] { return split_and_normalize(ds, split_spec); });

    result.analysis = stage("analyze", [&] {
        // chaos statistics use the training samples only; test data stays unseen
        AnalyzeReport rep = analyze_series(split.train, config.analyze);
        if (config.strict_chaos_gate && (!rep.chaotic || !rep.deterministic))
            throw NotChaotic("strict chaos gate: series failed the chaos check");
        return rep;
    });

    const EmbeddingSpec embedding{config.analyze.tau, result.analysis.embedding_m};
    RngStream root(config.seed, 0);

    const std::vector<LdeNetModel> models = stage("train", [&] {
        return train(split.train, embedding, config.horizons, config.model_config(),
                     config.train_options(), split.norm, root, &result.diagnostics);
    });

    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);

    stage("checkpoint", [&] {
        for (const auto& model : models)
            save_checkpoint(model, (dir / ("checkpoint_h" + std::to_string(model.horizon) + ".json")).string());
        return 0;
    });

    // Monte-Carlo prediction over the test split, one JSONL record per
    // (test point, horizon) plus plot-ready CSVs in original units.
    struct PredRecord {
        std::size_t date_index;
        int horizon;
        Prediction pred;
        double truth_norm;
        double truth_raw;
    };
    std::vector<PredRecord> records;
    const std::size_t test_offset = split.train.size();

    stage("predict", [&] {
        RngStream pred_root = root.substream(0x9ced1c7);
        for (const auto& model : models) {
            const Supervised pairs = make_supervised(split.test, embedding, model.horizon);
            RngStream hstream = pred_root.substream(static_cast<std::uint64_t>(model.horizon));
            for (std::size_t i = 0; i < pairs.inputs.size(); ++i) {
                PredRecord rec;
                rec.date_index = test_offset + pairs.label_index[i];
                rec.horizon = model.horizon;
                rec.pred = predict(model, pairs.inputs[i], hstream.substream(i));
                rec.truth_norm = pairs.labels[i];
                rec.truth_raw = split.norm.denormalize(pairs.labels[i]);
                records.push_back(std::move(rec));
            }
        }
        return 0;
    });

    stage("evaluate", [&] {
        const Normalization& norm = split.norm;
        for (const auto& model : models) {
            std::vector<double> pred_norm, truth_norm;
            for (const auto& rec : records) {
                if (rec.horizon != model.horizon) continue;
                pred_norm.push_back(norm.normalize(rec.pred.mean));
                truth_norm.push_back(rec.truth_norm);
            }
            result.model_metrics.push_back(compute_metrics(pred_norm, truth_norm, model.horizon));

            const Supervised pairs = make_supervised(split.test, embedding, model.horizon);
            result.persistence_metrics.push_back(baseline_persistence(pairs));
            result.ar_metrics.push_back(
                baseline_ar(split.train, split.test, config.ar_order, embedding, model.horizon));
        }
        if (result.model_metrics.size() >= 3)
            result.horizon_stats = summarize_horizons(result.model_metrics);

        // diffusion-score ordering diagnostic on the training inputs
        const Supervised train_pairs = make_supervised(split.train, embedding, config.horizons[0]);
        RngStream ood_stream = root.substream(0x00d);
        double sigma = config.noise_sigma;
        if (!(sigma > 0.0)) sigma = result.diagnostics.empty() ? 0.1 : result.diagnostics[0].noise_sigma;
        const auto ood = make_ood(train_pairs.inputs, sigma, ood_stream);
        double s_train = 0.0, s_ood = 0.0;
        for (std::size_t i = 0; i < train_pairs.inputs.size(); ++i) {
            s_train += diffusion_score(models[0], train_pairs.inputs[i]);
            s_ood += diffusion_score(models[0], ood[i]);
        }
        result.diffusion_score_train = s_train / static_cast<double>(train_pairs.inputs.size());
        result.diffusion_score_ood = s_ood / static_cast<double>(train_pairs.inputs.size());
        return 0;
    });

    stage("report", [&] {
        // predictions.jsonl: meta line then one record per (point, horizon)
        std::ofstream jsonl(dir / "predictions.jsonl");
        if (!jsonl) throw Error("cannot write predictions.jsonl");
        nlohmann::json meta;
        meta["schema_version"] = 1;
        meta["kind"] = "meta";
        meta["normalization"] = {{"lo", split.norm.lo}, {"hi", split.norm.hi}};
        meta["horizons"] = config.horizons;
        meta["seed"] = config.seed;
        jsonl << meta.dump() << "\n";
        for (const auto& rec : records) {
            nlohmann::json j;
            j["date_index"] = rec.date_index;
            j["horizon"] = rec.horizon;
            j["mean"] = rec.pred.mean;
            j["variance"] = rec.pred.variance;
            j["truth"] = rec.truth_raw;
            j["n_discarded"] = rec.pred.n_discarded;
            jsonl << j.dump() << "\n";
        }

        write_metrics_csv((dir / "metrics.csv").string(), result.model_metrics,
                          result.persistence_metrics, result.ar_metrics, config.ar_order);

        std::ofstream curves(dir / "loss_curves.csv");
        curves << "horizon,epoch,loss,drift_path_norm,diffusion_path_norm\n";
        for (std::size_t h = 0; h < result.diagnostics.size(); ++h) {
            const auto& d = result.diagnostics[h];
            for (std::size_t e = 0; e < d.epoch_loss.size(); ++e)
                curves << config.horizons[h] << "," << e << "," << format_double(d.epoch_loss[e])
                       << "," << format_double(d.drift_path_norm[e]) << ","
                       << format_double(d.diffusion_path_norm[e]) << "\n";
        }

        for (const auto& model : models) {
            std::ofstream plot(dir / ("plotready_h" + std::to_string(model.horizon) + ".csv"));
            plot << "date_index,truth,mean,variance\n";
            for (const auto& rec : records) {
                if (rec.horizon != model.horizon) continue;
                plot << rec.date_index << "," << format_double(rec.truth_raw) << ","
                     << format_double(rec.pred.mean) << "," << format_double(rec.pred.variance)
                     << "\n";
            }
        }

        nlohmann::json report;
        report["schema_version"] = 1;
        report["config"] = config.to_json();
        report["analysis"] = result.analysis.to_json();
        auto rows_json = [](const std::vector<MetricsRow>& rows) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& r : rows)
                arr.push_back({{"horizon", r.horizon},
                               {"mse", r.mse},
                               {"rmse", r.rmse},
                               {"mae", r.mae}});
            return arr;
        };
        report["metrics"]["lde_net"] = rows_json(result.model_metrics);
        report["metrics"]["persistence"] = rows_json(result.persistence_metrics);
        report["metrics"]["ar"] = rows_json(result.ar_metrics);
        if (!result.horizon_stats.rows.empty()) {
            report["horizon_stats"] = {{"pearson_r", result.horizon_stats.pearson_r},
                                       {"slope", result.horizon_stats.slope},
                                       {"intercept", result.horizon_stats.intercept}};
        }
        report["diffusion_score"] = {{"train_mean", result.diffusion_score_train},
                                     {"ood_mean", result.diffusion_score_ood}};
        nlohmann::json train_summary = nlohmann::json::array();
        for (std::size_t h = 0; h < result.diagnostics.size(); ++h) {
            const auto& d = result.diagnostics[h];
            train_summary.push_back({{"horizon", config.horizons[h]},
                                     {"final_loss", d.epoch_loss.empty() ? 0.0 : d.epoch_loss.back()},
                                     {"lr_halvings", d.lr_halvings},
                                     {"final_learning_rate", d.final_learning_rate},
                                     {"noise_sigma", d.noise_sigma}});
        }
        report["training"] = train_summary;

        std::ofstream rep(dir / "report.json");
        if (!rep) throw Error("cannot write report.json");
        rep << report.dump(2) << "\n";
        return 0;
    });

    return result;
}

std::vector<AlphaSweepRow> run_alpha_sweep(const ExperimentConfig& config,
                                           const std::vector<double>& alphas) {
    config.validate();
    const SeriesDataset ds = stage("load", [&] {
        return load_csv(config.input_csv, config.value_column, config.timestamp_column);
    });
    SplitSpec split_spec;
    split_spec.train_fraction = config.train_fraction;
    split_spec.zscore = config.normalization == "zscore";
    const SplitResult split = stage("split", [&] { return split_and_normalize(ds, split_spec); });
    const AnalyzeReport analysis =
        stage("analyze", [&] { return analyze_series(split.train, config.analyze); });
    const EmbeddingSpec embedding{config.analyze.tau, analysis.embedding_m};

    RngStream root(config.seed, 0);
    const auto table = stage("sweep", [&] {
        return alpha_sweep(split.train, split.test, embedding, config.horizons, alphas,
                           config.model_config(), config.train_options(), split.norm, root);
    });

    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    std::ofstream csv(dir / "alpha_sweep.csv");
    csv << "alpha,horizon,mse,rmse,mae\n";
    for (const auto& row : table)
        for (const auto& m : row.per_horizon)
            csv << format_double(row.alpha) << "," << m.horizon << "," << format_double(m.mse)
                << "," << format_double(m.rmse) << "," << format_double(m.mae) << "\n";

    nlohmann::json j;
    j["schema_version"] = 1;
    j["alphas"] = alphas;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : table) {
        nlohmann::json r;
        r["alpha"] = row.alpha;
        r["per_horizon"] = nlohmann::json::array();
        for (const auto& m : row.per_horizon)
            r["per_horizon"].push_back(
                {{"horizon", m.horizon}, {"mse", m.mse}, {"rmse", m.rmse}, {"mae", m.mae}});
        j["rows"].push_back(r);
    }
    std::ofstream jf(dir / "alpha_sweep.json");
    jf << j.dump(2) << "\n";
    return table;
}

ConvergenceReport run_convergence(const ConvergenceRunConfig& config) {
    if (config.dt_pow_min >= config.dt_pow_max)
        throw InvalidParameter("dt grid needs dt_pow_min < dt_pow_max");
    SdeSpec spec;
    spec.drift = SdeSpec::Drift::Linear;
    spec.rate = config.drift_rate;
    spec.g = config.g;
    spec.x0 = config.x0;
    spec.alpha = config.alpha;
    spec.total_time = config.total_time;

    std::vector<double> dt_grid;
    for (int q = config.dt_pow_min; q <= config.dt_pow_max; ++q)
        dt_grid.push_back(std::ldexp(1.0, -q));

    RngStream rng(config.seed, 0xc0);
    const ConvergenceReport report =
        strong_error_curve(spec, dt_grid, config.n_paths, config.ref_refinement, rng);

    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    std::ofstream csv(dir / "convergence.csv");
    csv << "dt,mean_error,median_of_means_error\n";
    for (std::size_t i = 0; i < report.dts.size(); ++i)
        csv << format_double(report.dts[i]) << "," << format_double(report.mean_error[i]) << ","
            << format_double(report.mom_error[i]) << "\n";

    const double target = 1.0 / config.alpha;
    nlohmann::json j;
    j["schema_version"] = 1;
    j["alpha"] = config.alpha;
    j["slope"] = report.slope;
    j["slope_stderr"] = report.slope_stderr;
    j["target_rate"] = target;
    j["pass"] = std::abs(report.slope - target) <= 0.2;
    std::ofstream jf(dir / "convergence_summary.json");
    jf << j.dump(2) << "\n";
    return report;
}

} // namespace ldenet
