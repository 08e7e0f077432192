#include "ldenet/mlp.hpp"

#include <cmath>
#include <cstddef>

#include "ldenet/errors.hpp"

namespace ldenet {

std::string to_string(Activation a) { return a == Activation::ReLU ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "tanh") return Activation::Tanh;
    throw InvalidParameter("unknown activation '" + s + "' (expected relu or tanh)");
}

void MlpParams::validate() const {
    if (in_dim < 1 || out_dim < 1 || width < 1)
        throw ShapeError("mlp dimensions must be positive");
    if (outer.size() != static_cast<std::size_t>(out_dim) * width ||
        inner.size() != static_cast<std::size_t>(width) * in_dim ||
        bias.size() != static_cast<std::size_t>(width))
        throw ShapeError("mlp parameter array sizes inconsistent with declared shape");
    for (double v : outer)
        if (!std::isfinite(v)) throw ShapeError("non-finite outer weight");
    for (double v : inner)
        if (!std::isfinite(v)) throw ShapeError("non-finite inner weight");
    for (double v : bias)
        if (!std::isfinite(v)) throw ShapeError("non-finite bias");
}

bool MlpParams::same_shape(const MlpParams& other) const {
    return in_dim == other.in_dim && out_dim == other.out_dim && width == other.width;
}

GradientBundle GradientBundle::zeros_like(const MlpParams& p) {
    GradientBundle g;
    g.outer.assign(p.outer.size(), 0.0);
    g.inner.assign(p.inner.size(), 0.0);
    g.bias.assign(p.bias.size(), 0.0);
    return g;
}

void GradientBundle::accumulate(const GradientBundle& other, double s) {
    if (outer.size() != other.outer.size() || inner.size() != other.inner.size() ||
        bias.size() != other.bias.size())
        throw ShapeError("gradient bundles have mismatched shapes");
    for (std::size_t i = 0; i < outer.size(); ++i) outer[i] += s * other.outer[i];
    for (std::size_t i = 0; i < inner.size(); ++i) inner[i] += s * other.inner[i];
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += s * other.bias[i];
}

void GradientBundle::scale(double s) {
    for (auto& v : outer) v *= s;
    for (auto& v : inner) v *= s;
    for (auto& v : bias) v *= s;
}

double GradientBundle::squared_norm() const {
    double s = 0.0;
    for (double v : outer) s += v * v;
    for (double v : inner) s += v * v;
    for (double v : bias) s += v * v;
    return s;
}

MlpParams make_mlp(int in_dim, int out_dim, int width, Activation act, RngStream& rng) {
    if (in_dim < 1 || out_dim < 1 || width < 1)
        throw InvalidParameter("mlp dimensions must be positive");
    MlpParams p;
    p.in_dim = in_dim;
    p.out_dim = out_dim;
    p.width = width;
    p.act = act;
    p.outer.resize(static_cast<std::size_t>(out_dim) * width);
    p.inner.resize(static_cast<std::size_t>(width) * in_dim);
    p.bias.assign(width, 0.0);
    const double outer_sd = 1.0 / width;
    for (auto& v : p.outer) v = outer_sd * rng.gaussian();
    const double inner_range = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (auto& v : p.inner) v = inner_range * (2.0 * rng.uniform01() - 1.0);
    return p;
}

namespace {

inline double activate(Activation a, double z) {
    return a == Activation::ReLU ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double activate_grad(Activation a, double z, double h) {
    // h is the already-computed activation value, reused for tanh
    if (a == Activation::ReLU) return z > 0.0 ? 1.0 : 0.0;
    return 1.0 - h * h;
}

} // namespace

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(p.in_dim))
        throw ShapeError("input size " + std::to_string(x.size()) + " != in_dim " +
                         std::to_string(p.in_dim));
    std::vector<double> out(p.out_dim, 0.0);
    for (int k = 0; k < p.width; ++k) {
        double z = p.bias[k];
        const double* row = &p.inner[static_cast<std::size_t>(k) * p.in_dim];
        for (int i = 0; i < p.in_dim; ++i) z += row[i] * x[i];
        const double h = activate(p.act, z);
        if (h == 0.0) continue;
        for (int j = 0; j < p.out_dim; ++j)
            out[j] += p.outer[static_cast<std::size_t>(j) * p.width + k] * h;
    }
    return out;
}

MlpBackward mlp_backward(const MlpParams& p, std::span<const double> x,
                         std::span<const double> upstream) {
    if (x.size() != static_cast<std::size_t>(p.in_dim))
        throw ShapeError("input size mismatch in backward pass");
    if (upstream.size() != static_cast<std::size_t>(p.out_dim))
        throw ShapeError("upstream size " + std::to_string(upstream.size()) + " != out_dim " +
                         std::to_string(p.out_dim));

    MlpBackward r;
    r.grads = GradientBundle::zeros_like(p);
    r.dx.assign(p.in_dim, 0.0);

    for (int k = 0; k < p.width; ++k) {
        double z = p.bias[k];
        const double* row = &p.inner[static_cast<std::size_t>(k) * p.in_dim];
        for (int i = 0; i < p.in_dim; ++i) z += row[i] * x[i];
        const double h = activate(p.act, z);

        // d(loss)/d(neuron output) and the outer-weight gradients
        double dh = 0.0;
        for (int j = 0; j < p.out_dim; ++j) {
            const std::size_t idx = static_cast<std::size_t>(j) * p.width + k;
            r.grads.outer[idx] = upstream[j] * h;
            dh += upstream[j] * p.outer[idx];
        }

        const double dz = dh * activate_grad(p.act, z, h);
        if (dz == 0.0) continue;
        r.grads.bias[k] = dz;
        double* grow = &r.grads.inner[static_cast<std::size_t>(k) * p.in_dim];
        for (int i = 0; i < p.in_dim; ++i) {
            grow[i] = dz * x[i];
            r.dx[i] += dz * row[i];
        }
    }
    return r;
}

double path_norm(const MlpParams& p) {
    double total = 0.0;
    for (int k = 0; k < p.width; ++k) {
        double outer_l1 = 0.0;
        for (int j = 0; j < p.out_dim; ++j)
            outer_l1 += std::abs(p.outer[static_cast<std::size_t>(j) * p.width + k]);
        double inner_l1 = std::abs(p.bias[k]);
        const double* row = &p.inner[static_cast<std::size_t>(k) * p.in_dim];
        for (int i = 0; i < p.in_dim; ++i) inner_l1 += std::abs(row[i]);
        total += outer_l1 * inner_l1;
    }
    return total;
}

MlpParams sgd_step(const MlpParams& p, const GradientBundle& g, double lr) {
    if (!(lr > 0.0)) throw InvalidParameter("learning rate must be positive");
    if (g.outer.size() != p.outer.size() || g.inner.size() != p.inner.size() ||
        g.bias.size() != p.bias.size())
        throw ShapeError("gradient shape does not match parameters");

    auto check = [](const std::vector<double>& v, const char* block) {
        for (double x : v)
            if (!std::isfinite(x)) throw NonFiniteUpdate("non-finite gradient", block);
    };
    check(g.outer, "outer");
    check(g.inner, "inner");
    check(g.bias, "bias");

    MlpParams out = p;
    for (std::size_t i = 0; i < out.outer.size(); ++i) out.outer[i] -= lr * g.outer[i];
    for (std::size_t i = 0; i < out.inner.size(); ++i) out.inner[i] -= lr * g.inner[i];
    for (std::size_t i = 0; i < out.bias.size(); ++i) out.bias[i] -= lr * g.bias[i];
    return out;
}

} // namespace ldenet
