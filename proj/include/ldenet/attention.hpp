#ifndef LDENET_ATTENTION_HPP
#define LDENET_ATTENTION_HPP

#include <span>
#include <vector>

#include "ldenet/rng.hpp"

namespace ldenet {

/**
 * Single-head scaled-dot-product attention with square d x d projections
 * and scale 1/sqrt(d). Applied to a window of token vectors and mean-pooled
 * into one d-vector, it weights the coordinates of a multi-step input.
 */
struct AttentionBlock {
    int dim = 0;
    std::vector<double> wq, wk, wv; // each dim*dim, row-major [r*dim + c]

    void validate() const;
};

AttentionBlock make_attention(int dim, RngStream& rng);

/**
 * tokens is an n_tokens x dim row-major matrix. Returns the mean over rows
 * of softmax(Q K^T / sqrt(d)) V with Q = T Wq, K = T Wk, V = T Wv.
 */
std::vector<double> attention_apply(const AttentionBlock& block, std::span<const double> tokens,
                                    int n_tokens);

struct AttentionGrads {
    std::vector<double> wq, wk, wv;

    static AttentionGrads zeros_like(const AttentionBlock& b);
    void accumulate(const AttentionGrads& other, double scale = 1.0);
    void scale(double s);
    double squared_norm() const;
};

struct AttentionBackward {
    AttentionGrads grads;
    std::vector<double> d_tokens; // n_tokens x dim
};

/// Reverse-mode gradients of upstream . attention_apply w.r.t. the three
/// projections and the token matrix.
AttentionBackward attention_backward(const AttentionBlock& block, std::span<const double> tokens,
                                     int n_tokens, std::span<const double> upstream);

} // namespace ldenet

#endif
