#include "ldenet/attention.hpp"

#include <cmath>
#include <cstddef>

#include "ldenet/errors.hpp"

namespace ldenet {

void AttentionBlock::validate() const {
    if (dim < 1) throw ShapeError("attention dimension must be positive");
    const std::size_t need = static_cast<std::size_t>(dim) * dim;
    if (wq.size() != need || wk.size() != need || wv.size() != need)
        throw ShapeError("attention projection sizes inconsistent with dim");
}

AttentionBlock make_attention(int dim, RngStream& rng) {
    if (dim < 1) throw InvalidParameter("attention dimension must be positive");
    AttentionBlock b;
    b.dim = dim;
    const std::size_t n = static_cast<std::size_t>(dim) * dim;
    b.wq.resize(n);
    b.wk.resize(n);
    b.wv.resize(n);
    const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
    for (auto& v : b.wq) v = sd * rng.gaussian();
    for (auto& v : b.wk) v = sd * rng.gaussian();
    // value projection starts at the identity so an untrained block passes
    // the window through unchanged on average
    for (std::size_t i = 0; i < n; ++i) b.wv[i] = 0.0;
    for (int i = 0; i < dim; ++i) b.wv[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return b;
}

namespace {

// out = mat(n x d) * w(d x d), row-major
void matmul(std::span<const double> mat, std::span<const double> w, int n, int d,
            std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(n) * d, 0.0);
    for (int r = 0; r < n; ++r) {
        const double* mrow = &mat[static_cast<std::size_t>(r) * d];
        double* orow = &out[static_cast<std::size_t>(r) * d];
        for (int k = 0; k < d; ++k) {
            const double m = mrow[k];
            if (m == 0.0) continue;
            const double* wrow = &w[static_cast<std::size_t>(k) * d];
            for (int c = 0; c < d; ++c) orow[c] += m * wrow[c];
        }
    }
}

struct AttentionTrace {
    std::vector<double> q, k, v;    // n x d
    std::vector<double> attn;       // n x n row-softmax weights
    std::vector<double> pooled;     // d
};

AttentionTrace attention_run(const AttentionBlock& block, std::span<const double> tokens,
                             int n_tokens) {
    block.validate();
    if (n_tokens < 1) throw ShapeError("attention window must be nonempty");
    if (tokens.size() != static_cast<std::size_t>(n_tokens) * block.dim)
        throw ShapeError("token matrix size inconsistent with n_tokens x dim");

    const int d = block.dim;
    AttentionTrace t;
    matmul(tokens, block.wq, n_tokens, d, t.q);
    matmul(tokens, block.wk, n_tokens, d, t.k);
    matmul(tokens, block.wv, n_tokens, d, t.v);

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    t.attn.assign(static_cast<std::size_t>(n_tokens) * n_tokens, 0.0);
    for (int r = 0; r < n_tokens; ++r) {
        double* arow = &t.attn[static_cast<std::size_t>(r) * n_tokens];
        double max_s = -1e300;
        for (int c = 0; c < n_tokens; ++c) {
            double s = 0.0;
            for (int i = 0; i < d; ++i)
                s += t.q[static_cast<std::size_t>(r) * d + i] * t.k[static_cast<std::size_t>(c) * d + i];
            arow[c] = s * scale;
            max_s = std::max(max_s, arow[c]);
        }
        double z = 0.0;
        for (int c = 0; c < n_tokens; ++c) {
            arow[c] = std::exp(arow[c] - max_s);
            z += arow[c];
        }
        for (int c = 0; c < n_tokens; ++c) arow[c] /= z;
    }

    t.pooled.assign(d, 0.0);
    for (int r = 0; r < n_tokens; ++r) {
        const double* arow = &t.attn[static_cast<std::size_t>(r) * n_tokens];
        for (int c = 0; c < n_tokens; ++c) {
            const double a = arow[c];
            for (int i = 0; i < d; ++i)
                t.pooled[i] += a * t.v[static_cast<std::size_t>(c) * d + i];
        }
    }
    const double inv_n = 1.0 / n_tokens;
    for (double& x : t.pooled) x *= inv_n;
    return t;
}

} // namespace

std::vector<double> attention_apply(const AttentionBlock& block, std::span<const double> tokens,
                                    int n_tokens) {
    return attention_run(block, tokens, n_tokens).pooled;
}

AttentionGrads AttentionGrads::zeros_like(const AttentionBlock& b) {
    AttentionGrads g;
    g.wq.assign(b.wq.size(), 0.0);
    g.wk.assign(b.wk.size(), 0.0);
    g.wv.assign(b.wv.size(), 0.0);
    return g;
}

void AttentionGrads::accumulate(const AttentionGrads& other, double s) {
    if (wq.size() != other.wq.size()) throw ShapeError("attention gradient shape mismatch");
    for (std::size_t i = 0; i < wq.size(); ++i) wq[i] += s * other.wq[i];
    for (std::size_t i = 0; i < wk.size(); ++i) wk[i] += s * other.wk[i];
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] += s * other.wv[i];
}

void AttentionGrads::scale(double s) {
    for (auto& v : wq) v *= s;
    for (auto& v : wk) v *= s;
    for (auto& v : wv) v *= s;
}

double AttentionGrads::squared_norm() const {
    double t = 0.0;
    for (double v : wq) t += v * v;
    for (double v : wk) t += v * v;
    for (double v : wv) t += v * v;
    return t;
}

AttentionBackward attention_backward(const AttentionBlock& block, std::span<const double> tokens,
                                     int n_tokens, std::span<const double> upstream) {
    const int d = block.dim;
    if (upstream.size() != static_cast<std::size_t>(d))
        throw ShapeError("attention upstream must have length dim");
    const AttentionTrace t = attention_run(block, tokens, n_tokens);

    const double inv_n = 1.0 / n_tokens;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    // dO[r, i] = upstream[i] / n for every row of the pre-pool output
    // dV = A^T dO; dA = dO V^T
    std::vector<double> dv(static_cast<std::size_t>(n_tokens) * d, 0.0);
    std::vector<double> da(static_cast<std::size_t>(n_tokens) * n_tokens, 0.0);
    for (int r = 0; r < n_tokens; ++r) {
        const double* arow = &t.attn[static_cast<std::size_t>(r) * n_tokens];
        for (int c = 0; c < n_tokens; ++c) {
            for (int i = 0; i < d; ++i)
                dv[static_cast<std::size_t>(c) * d + i] += arow[c] * upstream[i] * inv_n;
            double s = 0.0;
            for (int i = 0; i < d; ++i)
                s += upstream[i] * inv_n * t.v[static_cast<std::size_t>(c) * d + i];
            da[static_cast<std::size_t>(r) * n_tokens + c] = s;
        }
    }

    // softmax backward: dS[r,c] = A[r,c] * (dA[r,c] - sum_c' dA[r,c'] A[r,c'])
    std::vector<double> ds(static_cast<std::size_t>(n_tokens) * n_tokens, 0.0);
    for (int r = 0; r < n_tokens; ++r) {
        const double* arow = &t.attn[static_cast<std::size_t>(r) * n_tokens];
        const double* darow = &da[static_cast<std::size_t>(r) * n_tokens];
        double dot = 0.0;
        for (int c = 0; c < n_tokens; ++c) dot += darow[c] * arow[c];
        for (int c = 0; c < n_tokens; ++c)
            ds[static_cast<std::size_t>(r) * n_tokens + c] = arow[c] * (darow[c] - dot);
    }

    // dQ = dS K * scale; dK = dS^T Q * scale
    std::vector<double> dq(static_cast<std::size_t>(n_tokens) * d, 0.0);
    std::vector<double> dk(static_cast<std::size_t>(n_tokens) * d, 0.0);
    for (int r = 0; r < n_tokens; ++r) {
        for (int c = 0; c < n_tokens; ++c) {
            const double s = ds[static_cast<std::size_t>(r) * n_tokens + c] * scale;
            if (s == 0.0) continue;
            for (int i = 0; i < d; ++i) {
                dq[static_cast<std::size_t>(r) * d + i] += s * t.k[static_cast<std::size_t>(c) * d + i];
                dk[static_cast<std::size_t>(c) * d + i] += s * t.q[static_cast<std::size_t>(r) * d + i];
            }
        }
    }

    AttentionBackward out;
    out.grads = AttentionGrads::zeros_like(block);
    out.d_tokens.assign(static_cast<std::size_t>(n_tokens) * d, 0.0);

    // dW = T^T dX for each projection; dT += dX W^T
    auto fold = [&](const std::vector<double>& dx, const std::vector<double>& w,
                    std::vector<double>& dw) {
        for (int r = 0; r < n_tokens; ++r) {
            const double* trow = &tokens[static_cast<std::size_t>(r) * d];
            const double* dxrow = &dx[static_cast<std::size_t>(r) * d];
            double* dtrow = &out.d_tokens[static_cast<std::size_t>(r) * d];
            for (int i = 0; i < d; ++i) {
                const double ti = trow[i];
                double acc = 0.0;
                const double* wrow = &w[static_cast<std::size_t>(i) * d];
                double* dwrow = &dw[static_cast<std::size_t>(i) * d];
                for (int c = 0; c < d; ++c) {
                    dwrow[c] += ti * dxrow[c];
                    acc += dxrow[c] * wrow[c];
                }
                dtrow[i] += acc;
            }
        }
    };
    fold(dq, block.wq, out.grads.wq);
    fold(dk, block.wk, out.grads.wk);
    fold(dv, block.wv, out.grads.wv);
    return out;
}

} // namespace ldenet
