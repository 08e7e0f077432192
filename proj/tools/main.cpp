#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldenet/errors.hpp"
#include "ldenet/experiment.hpp"

namespace {

using nlohmann::json;

int cmd_analyze(const std::string& input, const std::string& value_col,
                const std::string& ts_col, double train_fraction, ldenet::AnalyzeOptions options,
                const std::string& output) {
    const auto ds = ldenet::load_csv(input, value_col, ts_col);
    ldenet::SplitSpec spec;
    spec.train_fraction = train_fraction;
    const auto split = ldenet::split_and_normalize(ds, spec);
    const auto report = ldenet::analyze_series(split.train, options);
    const std::string text = report.to_json().dump(2) + "\n";
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        std::ofstream out(output);
        if (!out) throw ldenet::Error("cannot write '" + output + "'");
        out << text;
    }
    return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& output_dir) {
    ldenet::ExperimentConfig config = ldenet::ExperimentConfig::load(config_path);
    if (seed) config.seed = *seed;
    if (!output_dir.empty()) config.output_dir = output_dir;
    const auto result = ldenet::run_experiment(config);
    std::cout << "artifacts written to " << result.output_dir << "\n";
    for (const auto& row : result.model_metrics)
        std::printf("h=%d  mse=%.6g  rmse=%.6g  mae=%.6g\n", row.horizon, row.mse, row.rmse,
                    row.mae);
    return 0;
}

int cmd_predict(const std::string& checkpoint_dir, const std::string& input,
                const std::string& value_col, const std::string& ts_col, std::uint64_t seed,
                const std::string& output) {
    namespace fs = std::filesystem;
    std::vector<ldenet::LdeNetModel> models;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(checkpoint_dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("checkpoint_h", 0) == 0 && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) models.push_back(ldenet::load_checkpoint(f.string()));
    if (models.empty())
        throw ldenet::Error("no checkpoint_h*.json files in '" + checkpoint_dir + "'");

    const auto ds = ldenet::load_csv(input, value_col, ts_col);
    std::vector<double> series(ds.values.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        series[i] = models.front().norm.normalize(ds.values[i]);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!output.empty() && output != "-") {
        file.open(output);
        if (!file) throw ldenet::Error("cannot write '" + output + "'");
        out = &file;
    }

    json meta;
    meta["schema_version"] = 1;
    meta["kind"] = "meta";
    meta["normalization"] = {{"lo", models.front().norm.lo}, {"hi", models.front().norm.hi}};
    json hs = json::array();
    for (const auto& m : models) hs.push_back(m.horizon);
    meta["horizons"] = hs;
    meta["seed"] = seed;
    (*out) << meta.dump() << "\n";

    ldenet::RngStream root(seed, 0);
    for (const auto& model : models) {
        ldenet::EmbeddingSpec spec{1, model.dim()};
        const auto pairs = ldenet::make_supervised(series, spec, model.horizon);
        ldenet::RngStream hstream = root.substream(static_cast<std::uint64_t>(model.horizon));
        for (std::size_t i = 0; i < pairs.inputs.size(); ++i) {
            const auto pred = ldenet::predict(model, pairs.inputs[i], hstream.substream(i));
            json j;
            j["date_index"] = pairs.label_index[i];
            j["horizon"] = model.horizon;
            j["mean"] = pred.mean;
            j["variance"] = pred.variance;
            j["truth"] = ds.values[pairs.label_index[i]];
            j["n_discarded"] = pred.n_discarded;
            (*out) << j.dump() << "\n";
        }
    }
    return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& value_col, const std::string& ts_col,
                 const std::string& output) {
    std::ifstream in(pred_path);
    if (!in) throw ldenet::ParseError("cannot open '" + pred_path + "'", 0);
    const auto truth_ds = ldenet::load_csv(truth_path, value_col, ts_col);

    ldenet::Normalization norm{0.0, 1.0};
    bool have_norm = false;
    struct Rec {
        std::size_t date_index;
        int horizon;
        double mean;
    };
    std::vector<Rec> recs;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ldenet::ParseError(std::string("invalid JSONL: ") + e.what(), row);
        }
        if (j.contains("kind") && j["kind"] == "meta") {
            norm.lo = j.at("normalization").at("lo").get<double>();
            norm.hi = j.at("normalization").at("hi").get<double>();
            have_norm = true;
            continue;
        }
        recs.push_back({j.at("date_index").get<std::size_t>(), j.at("horizon").get<int>(),
                        j.at("mean").get<double>()});
    }
    if (!have_norm)
        throw ldenet::ParseError("predictions file lacks the meta line with normalization", 1);
    if (recs.empty()) throw ldenet::InsufficientData("no prediction records");

    std::vector<int> horizons;
    for (const auto& r : recs)
        if (std::find(horizons.begin(), horizons.end(), r.horizon) == horizons.end())
            horizons.push_back(r.horizon);
    std::sort(horizons.begin(), horizons.end());

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!output.empty() && output != "-") {
        file.open(output);
        if (!file) throw ldenet::Error("cannot write '" + output + "'");
        out = &file;
    }
    (*out) << "horizon,mse,rmse,mae\n";
    for (int h : horizons) {
        std::vector<double> pred, truth;
        for (const auto& r : recs) {
            if (r.horizon != h) continue;
            if (r.date_index >= truth_ds.values.size())
                throw ldenet::OrderingError("prediction date_index beyond truth series",
                                            r.date_index);
            pred.push_back(norm.normalize(r.mean));
            truth.push_back(norm.normalize(truth_ds.values[r.date_index]));
        }
        const auto m = ldenet::compute_metrics(pred, truth, h);
        (*out) << h << "," << ldenet::format_double(m.mse) << "," << ldenet::format_double(m.rmse)
               << "," << ldenet::format_double(m.mae) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LDE-Net: Levy-driven neural SDE forecasting for chaotic time series"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "chaos analysis of the training split");
    std::string a_input, a_output;
    std::string a_valcol = "close", a_tscol = "date";
    double a_frac = 0.8;
    ldenet::AnalyzeOptions a_opts;
    analyze->add_option("--input", a_input, "input CSV")->required();
    analyze->add_option("--tau", a_opts.tau, "embedding delay");
    analyze->add_option("--m-max", a_opts.m_max, "largest embedding dimension for Cao curves");
    analyze->add_option("--value-column", a_valcol, "value column name");
    analyze->add_option("--timestamp-column", a_tscol, "timestamp column name");
    analyze->add_option("--train-fraction", a_frac, "chronological train fraction");
    analyze->add_option("--eps-fraction", a_opts.wolf_eps_fraction, "Wolf critical distance as a fraction of the attractor extent");
    analyze->add_option("--theiler", a_opts.theiler, "temporal exclusion window (-1: m*tau)");
    analyze->add_option("--saturation-tol", a_opts.saturation_tol, "E1 plateau tolerance");
    analyze->add_option("--e2-band", a_opts.e2_band, "random-series band around E2=1");
    analyze->add_option("--m-override", a_opts.m_override, "skip Cao selection and use this m");
    analyze->add_option("--output", a_output, "output JSON path (default stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "run the full experiment pipeline");
    std::string t_config, t_outdir;
    std::optional<std::uint64_t> t_seed;
    train_cmd->add_option("--config", t_config, "experiment config JSON")->required();
    train_cmd->add_option("--seed", t_seed, "override the config seed");
    train_cmd->add_option("--output-dir", t_outdir, "override the config output directory");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "predict with saved checkpoints");
    std::string p_ckpt, p_input, p_output;
    std::string p_valcol = "close", p_tscol = "date";
    std::uint64_t p_seed = 7;
    predict_cmd->add_option("--checkpoint", p_ckpt, "directory containing checkpoint_h*.json")->required();
    predict_cmd->add_option("--input", p_input, "input CSV")->required();
    predict_cmd->add_option("--value-column", p_valcol, "value column name");
    predict_cmd->add_option("--timestamp-column", p_tscol, "timestamp column name");
    predict_cmd->add_option("--seed", p_seed, "Monte-Carlo seed");
    predict_cmd->add_option("--output", p_output, "output JSONL path (default stdout)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against a truth CSV");
    std::string e_pred, e_truth, e_output;
    std::string e_valcol = "close", e_tscol = "date";
    eval_cmd->add_option("--pred", e_pred, "predictions JSONL")->required();
    eval_cmd->add_option("--truth", e_truth, "truth CSV")->required();
    eval_cmd->add_option("--value-column", e_valcol, "value column name");
    eval_cmd->add_option("--timestamp-column", e_tscol, "timestamp column name");
    eval_cmd->add_option("--output", e_output, "metrics CSV path (default stdout)");

    // convergence
    auto* conv_cmd = app.add_subcommand("convergence", "Euler-Maruyama strong-error harness");
    ldenet::ConvergenceRunConfig conv;
    conv_cmd->add_option("--alpha", conv.alpha, "stability index");
    conv_cmd->add_option("--paths", conv.n_paths, "coupled path count");
    conv_cmd->add_option("--dt-pow-min", conv.dt_pow_min, "coarsest dt = 2^-value");
    conv_cmd->add_option("--dt-pow-max", conv.dt_pow_max, "finest dt = 2^-value");
    conv_cmd->add_option("--ref-refinement", conv.ref_refinement, "reference grid refinement");
    conv_cmd->add_option("--seed", conv.seed, "seed");
    conv_cmd->add_option("--g", conv.g, "diffusion constant");
    conv_cmd->add_option("--drift-rate", conv.drift_rate, "linear drift rate a in f(x) = -a x");
    conv_cmd->add_option("--output-dir", conv.output_dir, "output directory");

    // sweep-alpha
    auto* sweep_cmd = app.add_subcommand("sweep-alpha", "train and evaluate across alpha values");
    std::string s_config, s_alphas, s_outdir;
    std::optional<std::uint64_t> s_seed;
    sweep_cmd->add_option("--config", s_config, "experiment config JSON")->required();
    sweep_cmd->add_option("--alphas", s_alphas, "comma-separated alpha list")->required();
    sweep_cmd->add_option("--seed", s_seed, "override the config seed");
    sweep_cmd->add_option("--output-dir", s_outdir, "override the config output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed())
            return cmd_analyze(a_input, a_valcol, a_tscol, a_frac, a_opts, a_output);
        if (train_cmd->parsed()) return cmd_train(t_config, t_seed, t_outdir);
        if (predict_cmd->parsed())
            return cmd_predict(p_ckpt, p_input, p_valcol, p_tscol, p_seed, p_output);
        if (eval_cmd->parsed()) return cmd_evaluate(e_pred, e_truth, e_valcol, e_tscol, e_output);
        if (conv_cmd->parsed()) {
            const auto report = ldenet::run_convergence(conv);
            std::printf("alpha=%.4g slope=%.4f stderr=%.4f (reports in %s)\n", conv.alpha,
                        report.slope, report.slope_stderr, conv.output_dir.c_str());
            return 0;
        }
        if (sweep_cmd->parsed()) {
            ldenet::ExperimentConfig config = ldenet::ExperimentConfig::load(s_config);
            if (s_seed) config.seed = *s_seed;
            if (!s_outdir.empty()) config.output_dir = s_outdir;
            std::vector<double> alphas;
            std::string token;
            std::stringstream ss(s_alphas);
            while (std::getline(ss, token, ','))
                if (!token.empty()) alphas.push_back(std::stod(token));
            const auto table = ldenet::run_alpha_sweep(config, alphas);
            for (const auto& row : table) {
                std::printf("alpha=%.3g:", row.alpha);
                for (const auto& m : row.per_horizon) std::printf("  mse(t+%d)=%.6g", m.horizon, m.mse);
                std::printf("\n");
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
