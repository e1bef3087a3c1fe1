#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stockcnn/feature_map.hpp"

namespace stockcnn {

struct Activation {
    enum class Kind { ReLU, LeakyReLU, Sigmoid, Identity };

    Kind kind = Kind::Identity;
    double slope = 0.0;  // LeakyReLU only

    static Activation relu() { return {Kind::ReLU, 0.0}; }
    static Activation leaky_relu(double slope = 0.001) { return {Kind::LeakyReLU, slope}; }
    static Activation sigmoid() { return {Kind::Sigmoid, 0.0}; }
    static Activation identity() { return {Kind::Identity, 0.0}; }

    void validate() const;
    std::string name() const;
    bool operator==(const Activation&) const = default;
};

double activate(double x, const Activation& act);
// Derivative with respect to the pre-activation x. At x == 0 ReLU and LeakyReLU
// take their negative-branch value (0 and slope).
double activation_grad(double x, const Activation& act);

enum class Mode { Train, Infer };

// weights laid out [out][in][k]. "same" zero padding of kernel_size / 2 on both sides.
struct ConvLayer {
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t kernel_size = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation;

    ConvLayer() = default;
    ConvLayer(std::size_t out, std::size_t in, std::size_t kernel, Activation act);

    double& weight(std::size_t o, std::size_t i, std::size_t k) {
        return weights[(o * in_channels + i) * kernel_size + k];
    }
    double weight(std::size_t o, std::size_t i, std::size_t k) const {
        return weights[(o * in_channels + i) * kernel_size + k];
    }
};

// weights laid out [out][in].
struct DenseLayer {
    std::size_t out_units = 0;
    std::size_t in_units = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation;

    DenseLayer() = default;
    DenseLayer(std::size_t out, std::size_t in, Activation act);

    double& weight(std::size_t o, std::size_t i) { return weights[o * in_units + i]; }
    double weight(std::size_t o, std::size_t i) const { return weights[o * in_units + i]; }
};

FeatureMap conv1d_linear(const FeatureMap& input, const ConvLayer& layer);
FeatureMap conv1d_forward(const FeatureMap& input, const ConvLayer& layer);

// Accumulates into grad_weights / grad_bias; overwrites *grad_input when non-null.
void conv1d_backward(const FeatureMap& input, const ConvLayer& layer, const FeatureMap& grad_pre,
                     std::span<double> grad_weights, std::span<double> grad_bias,
                     FeatureMap* grad_input);

struct PoolResult {
    FeatureMap output;
    std::vector<std::size_t> argmax;  // source position within the channel, per output element
};

// Non-overlapping windows with stride pool_size; a trailing partial window is dropped.
// Ties resolve to the earliest position.
PoolResult maxpool1d_forward(const FeatureMap& input, std::size_t pool_size = 2);
FeatureMap maxpool1d_backward(const FeatureMap& grad_output, std::span<const std::size_t> argmax,
                              std::size_t input_length);

std::vector<double> dense_linear(std::span<const double> input, const DenseLayer& layer);
std::vector<double> dense_forward(std::span<const double> input, const DenseLayer& layer);

// Accumulates into grad_weights / grad_bias; overwrites grad_input when non-empty.
void dense_backward(std::span<const double> input, const DenseLayer& layer, std::span<const double> grad_pre,
                    std::span<double> grad_weights, std::span<double> grad_bias,
                    std::span<double> grad_input);

struct DropoutResult {
    std::vector<double> values;
    std::vector<double> mask;  // 0 for dropped units, 1 / (1 - rate) for kept ones
};

// Inverted dropout: survivors are rescaled during training so inference is the identity.
DropoutResult dropout_forward(std::span<const double> input, double rate, Mode mode, std::mt19937_64& rng);

}  // namespace stockcnn
