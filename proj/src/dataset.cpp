#include "ldenet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ldenet/errors.hpp"
#include "ldenet/stable.hpp"

namespace ldenet {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto a = f.find_first_not_of(" \t");
        const auto b = f.find_last_not_of(" \t");
        f = a == std::string::npos ? std::string{} : f.substr(a, b - a + 1);
    }
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

} // namespace

SeriesDataset load_csv(const std::string& path, const std::string& value_column,
                       const std::string& timestamp_column) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'", 0);
    const auto header = split_csv_line(line);
    std::size_t ts_col = header.size(), val_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == timestamp_column) ts_col = i;
        if (header[i] == value_column) val_col = i;
    }
    if (ts_col >= header.size())
        throw ParseError("timestamp column '" + timestamp_column + "' not found in header", 1);
    if (val_col >= header.size())
        throw ParseError("value column '" + value_column + "' not found in header", 1);

    SeriesDataset ds;
    ds.provenance = path;
    std::size_t row = 1;
    bool all_numeric_ts = true;
    std::vector<double> numeric_ts;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             row);
        double v = 0.0;
        if (!parse_double(fields[val_col], v) || !std::isfinite(v))
            throw ParseError("value '" + fields[val_col] + "' is not a finite number", row);
        double t = 0.0;
        if (all_numeric_ts && parse_double(fields[ts_col], t))
            numeric_ts.push_back(t);
        else
            all_numeric_ts = false;
        ds.timestamps.push_back(fields[ts_col]);
        ds.values.push_back(v);
    }
    if (ds.size() < 2) throw ParseError("need at least 2 data rows, got " + std::to_string(ds.size()), row);

    for (std::size_t i = 1; i < ds.size(); ++i) {
        const bool ordered = all_numeric_ts ? numeric_ts[i] > numeric_ts[i - 1]
                                            : ds.timestamps[i] > ds.timestamps[i - 1];
        if (!ordered) {
            const bool dup = all_numeric_ts ? numeric_ts[i] == numeric_ts[i - 1]
                                            : ds.timestamps[i] == ds.timestamps[i - 1];
            throw OrderingError(std::string(dup ? "duplicate" : "non-increasing") + " timestamp '" +
                                    ds.timestamps[i] + "'",
                                i + 2); // header is row 1
        }
    }
    return ds;
}

void write_csv(const std::string& path, const SeriesDataset& ds, const std::string& value_column,
               const std::string& timestamp_column) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << timestamp_column << "," << value_column << "\n";
    char buf[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.values[i]);
        out << ds.timestamps[i] << "," << buf << "\n";
    }
}

SplitResult split_and_normalize(const SeriesDataset& ds, SplitSpec spec) {
    return split_and_normalize(std::span<const double>(ds.values), spec);
}

SplitResult split_and_normalize(std::span<const double> values, SplitSpec spec) {
    if (values.size() < 10)
        throw InsufficientData("need at least 10 samples to split, got " +
                               std::to_string(values.size()));
    if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0))
        throw InvalidParameter("train fraction must lie in (0, 1)");

    const auto n = values.size();
    auto n_train = static_cast<std::size_t>(std::floor(n * spec.train_fraction + 1e-12));
    n_train = std::min(std::max<std::size_t>(n_train, 2), n - 1);

    SplitResult out;
    if (spec.zscore) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) mean += values[i];
        mean /= static_cast<double>(n_train);
        double var = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) var += (values[i] - mean) * (values[i] - mean);
        var /= static_cast<double>(n_train);
        if (!(var > 0.0)) throw ConstantSeries("train split has zero variance");
        out.norm.lo = mean;
        out.norm.hi = mean + std::sqrt(var); // hi - lo = sd
    } else {
        double lo = values[0], hi = values[0];
        for (std::size_t i = 0; i < n_train; ++i) {
            lo = std::min(lo, values[i]);
            hi = std::max(hi, values[i]);
        }
        if (!(hi > lo)) throw ConstantSeries("train split is constant; min-max scaling undefined");
        out.norm.lo = lo;
        out.norm.hi = hi;
    }

    out.train.resize(n_train);
    out.test.resize(n - n_train);
    for (std::size_t i = 0; i < n_train; ++i) out.train[i] = out.norm.normalize(values[i]);
    for (std::size_t i = n_train; i < n; ++i) out.test[i - n_train] = out.norm.normalize(values[i]);
    return out;
}

Supervised make_supervised(std::span<const double> series, EmbeddingSpec spec, int horizon) {
    spec.validate();
    if (horizon < 1) throw InvalidParameter("horizon must be >= 1, got " + std::to_string(horizon));
    const std::size_t n = series.size();
    const std::size_t window = static_cast<std::size_t>(spec.m - 1) * spec.tau;
    // the final observation is reserved: labels run up to index n - 2
    if (n < window + static_cast<std::size_t>(horizon) + 2)
        throw InsufficientData("series of length " + std::to_string(n) +
                               " too short for m=" + std::to_string(spec.m) +
                               ", tau=" + std::to_string(spec.tau) +
                               ", horizon=" + std::to_string(horizon));
    const std::size_t count = n - window - horizon - 1;

    Supervised out;
    out.horizon = horizon;
    out.inputs.resize(count);
    out.labels.resize(count);
    out.label_index.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.inputs[i].resize(spec.m);
        for (int k = 0; k < spec.m; ++k)
            out.inputs[i][k] = series[i + static_cast<std::size_t>(k) * spec.tau];
        const std::size_t li = i + window + horizon;
        out.labels[i] = series[li];
        out.label_index[i] = li;
    }
    return out;
}

MetricsRow compute_metrics(std::span<const double> predictions, std::span<const double> truths,
                           int horizon) {
    if (predictions.size() != truths.size() || predictions.empty())
        throw ShapeError("metrics need equal nonzero prediction/truth lengths");
    MetricsRow row;
    row.horizon = horizon;
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - truths[i];
        se += e * e;
        ae += std::abs(e);
    }
    row.mse = se / static_cast<double>(predictions.size());
    row.rmse = std::sqrt(row.mse);
    row.mae = ae / static_cast<double>(predictions.size());
    return row;
}

MetricsRow baseline_persistence(const Supervised& pairs) {
    if (pairs.inputs.empty()) throw InsufficientData("no supervised pairs");
    std::vector<double> pred(pairs.inputs.size());
    for (std::size_t i = 0; i < pairs.inputs.size(); ++i) pred[i] = pairs.inputs[i].back();
    return compute_metrics(pred, pairs.labels, pairs.horizon);
}

double ArModel::forecast(std::span<const double> history, int h_steps) const {
    const int p = order();
    if (static_cast<int>(history.size()) < p)
        throw InsufficientData("AR forecast needs " + std::to_string(p) + " history values");
    std::vector<double> buf(history.end() - p, history.end());
    double next = 0.0;
    for (int s = 0; s < h_steps; ++s) {
        next = intercept;
        for (int k = 0; k < p; ++k) next += coeffs[k] * buf[p - 1 - k];
        buf.erase(buf.begin());
        buf.push_back(next);
    }
    return next;
}

ArModel fit_ar(std::span<const double> train, int order) {
    if (order < 1) throw InvalidParameter("AR order must be >= 1");
    const std::size_t n = train.size();
    if (n < static_cast<std::size_t>(order) + 2)
        throw InsufficientData("AR fit needs more than order+1 samples");

    // normal equations for [coeffs..., intercept]
    const int dim = order + 1;
    std::vector<double> ata(static_cast<std::size_t>(dim) * dim, 0.0);
    std::vector<double> atb(dim, 0.0);
    std::vector<double> row(dim, 1.0);
    for (std::size_t t = order; t < n; ++t) {
        for (int k = 0; k < order; ++k) row[k] = train[t - 1 - k];
        row[order] = 1.0;
        for (int a = 0; a < dim; ++a) {
            for (int b = 0; b < dim; ++b) ata[static_cast<std::size_t>(a) * dim + b] += row[a] * row[b];
            atb[a] += row[a] * train[t];
        }
    }

    // Gaussian elimination with partial pivoting
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::abs(ata[static_cast<std::size_t>(r) * dim + col]) >
                std::abs(ata[static_cast<std::size_t>(piv) * dim + col]))
                piv = r;
        const double p = ata[static_cast<std::size_t>(piv) * dim + col];
        if (std::abs(p) < 1e-12) throw RankError("singular normal equations in AR fit");
        if (piv != col) {
            for (int c = 0; c < dim; ++c)
                std::swap(ata[static_cast<std::size_t>(piv) * dim + c],
                          ata[static_cast<std::size_t>(col) * dim + c]);
            std::swap(atb[piv], atb[col]);
        }
        for (int r = 0; r < dim; ++r) {
            if (r == col) continue;
            const double f = ata[static_cast<std::size_t>(r) * dim + col] / p;
            if (f == 0.0) continue;
            for (int c = col; c < dim; ++c)
                ata[static_cast<std::size_t>(r) * dim + c] -=
                    f * ata[static_cast<std::size_t>(col) * dim + c];
            atb[r] -= f * atb[col];
        }
    }
    ArModel model;
    model.coeffs.resize(order);
    for (int k = 0; k < order; ++k) model.coeffs[k] = atb[k] / ata[static_cast<std::size_t>(k) * dim + k];
    model.intercept = atb[order] / ata[static_cast<std::size_t>(order) * dim + order];
    return model;
}

MetricsRow baseline_ar(std::span<const double> train, std::span<const double> test, int order,
                       EmbeddingSpec spec, int horizon) {
    if (order > spec.m)
        throw InvalidParameter("AR order exceeds the supervised window length");
    if (spec.tau != 1 && order > 1)
        throw InvalidParameter("AR baseline needs consecutive history; use tau=1 or order=1");
    const ArModel model = fit_ar(train, order);
    const Supervised pairs = make_supervised(test, spec, horizon);
    std::vector<double> pred(pairs.inputs.size());
    for (std::size_t i = 0; i < pairs.inputs.size(); ++i)
        pred[i] = model.forecast(pairs.inputs[i], horizon);
    return compute_metrics(pred, pairs.labels, pairs.horizon);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidParameter("pearson needs two equal-length samples of size >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw InvalidParameter("pearson undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

HorizonSweep summarize_horizons(const std::vector<MetricsRow>& rows) {
    if (rows.size() < 3) throw InvalidParameter("horizon sweep needs at least 3 horizons");
    HorizonSweep sweep;
    sweep.rows = rows;
    std::vector<double> h(rows.size()), mse(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        h[i] = rows[i].horizon;
        mse[i] = rows[i].mse;
    }
    sweep.pearson_r = pearson(h, mse);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        sx += h[i];
        sy += mse[i];
        sxx += h[i] * h[i];
        sxy += h[i] * mse[i];
    }
    sweep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    sweep.intercept = (sy - sweep.slope * sx) / n;
    return sweep;
}

std::vector<double> synthetic_ar_jump_series(std::size_t n, double phi, double alpha,
                                             double jump_scale, std::uint64_t seed) {
    if (n < 2) throw InvalidParameter("need at least 2 samples");
    RngStream rng(seed, 0x5e1f);
    std::vector<double> y(n, 0.0);
    for (std::size_t t = 1; t < n; ++t)
        y[t] = phi * y[t - 1] + jump_scale * sample_standard(alpha, rng);
    return y;
}

SeriesDataset synthetic_dataset(std::size_t n, double phi, double alpha, double jump_scale,
                                std::uint64_t seed) {
    SeriesDataset ds;
    ds.provenance = "synthetic-ar-jump";
    ds.values = synthetic_ar_jump_series(n, phi, alpha, jump_scale, seed);
    ds.timestamps.resize(n);
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%06zu", i);
        ds.timestamps[i] = buf;
    }
    return ds;
}

} // namespace ldenet
