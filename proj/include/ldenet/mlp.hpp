#ifndef LDENET_MLP_HPP
#define LDENET_MLP_HPP

#include <span>
#include <string>
#include <vector>

#include "ldenet/rng.hpp"

namespace ldenet {

enum class Activation { ReLU, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/**
 * Two-layer perceptron x -> sum_k a_k * act(b_k . x + c_k), one hidden layer
 * of `width` neurons shared across `out_dim` output coordinates.
 *
 * Storage: outer[j*width + k] is the weight from neuron k to output j,
 * inner[k*in_dim + i] the weight from input i to neuron k, bias[k] the
 * neuron offset.
 */
struct MlpParams {
    int in_dim = 0;
    int out_dim = 0;
    int width = 0;
    Activation act = Activation::ReLU;
    std::vector<double> outer;
    std::vector<double> inner;
    std::vector<double> bias;

    void validate() const;
    bool same_shape(const MlpParams& other) const;
};

/// Gradient of a scalar loss with respect to every MlpParams entry.
struct GradientBundle {
    std::vector<double> outer;
    std::vector<double> inner;
    std::vector<double> bias;

    static GradientBundle zeros_like(const MlpParams& p);
    void accumulate(const GradientBundle& other, double scale = 1.0);
    void scale(double s);
    double squared_norm() const;
};

/**
 * Fresh parameters: outer weights Gaussian with standard deviation 1/width
 * (mean-field scaling), inner weights uniform on [-1/sqrt(d), 1/sqrt(d)],
 * biases zero.
 */
MlpParams make_mlp(int in_dim, int out_dim, int width, Activation act, RngStream& rng);

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> x);

struct MlpBackward {
    GradientBundle grads;
    std::vector<double> dx;
};

/**
 * Exact reverse-mode gradients of upstream . forward(x) with respect to the
 * parameters and the input. At a ReLU kink (pre-activation exactly zero) the
 * subgradient 0 is used.
 */
MlpBackward mlp_backward(const MlpParams& p, std::span<const double> x,
                         std::span<const double> upstream);

/// Capacity diagnostic sum_k |a_k| (||b_k||_1 + |c_k|), outer weights
/// l1-aggregated over output coordinates.
double path_norm(const MlpParams& p);

/// params - lr * grads. Throws NonFiniteUpdate naming the offending block.
MlpParams sgd_step(const MlpParams& p, const GradientBundle& g, double lr);

} // namespace ldenet

#endif
