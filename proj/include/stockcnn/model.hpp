#pragma once

// The fixed-topology 1-D CNN: a stack of "same" convolutions (each optionally
// followed by max-pooling), flatten, dense layers with optional dropout, and a
// single sigmoid output unit.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stockcnn/feature_map.hpp"
#include "stockcnn/layers.hpp"

namespace stockcnn {

struct ConvSpec {
    std::size_t filters = 0;
    std::size_t kernel_size = 3;
    Activation activation = Activation::leaky_relu();
    bool pool_after = false;

    bool operator==(const ConvSpec&) const = default;
};

struct DenseSpec {
    std::size_t units = 0;
    Activation activation = Activation::leaky_relu();
    double dropout = 0.0;  // applied to this layer's activated output

    bool operator==(const DenseSpec&) const = default;
};

struct ModelConfig {
    std::size_t input_channels = 4;
    std::size_t window_len = 32;
    std::size_t pool_size = 2;
    std::vector<ConvSpec> conv;
    std::vector<DenseSpec> dense;

    // conv 32 (ReLU) -> conv 64 (LeakyReLU) + pool -> conv 128 (LeakyReLU) + pool
    // -> dense 128 (LeakyReLU, dropout) -> dense 256 (LeakyReLU) -> 1 (sigmoid)
    static ModelConfig standard(std::size_t window_len = 32, double dropout = 0.5, double leaky_slope = 0.001);
    // Same topology at toy scale: 2 channels, L = 8, filters 2/2/2, dense 4/4, no dropout.
    static ModelConfig tiny();

    void validate() const;
    // Length of the last conv block's output (after pooling, when present).
    std::size_t final_length() const;
    std::size_t flatten_length() const;

    bool operator==(const ModelConfig&) const = default;
};

struct ParamView {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> values;
};

struct ConstParamView {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<const double> values;
};

class Model {
public:
    Model() = default;
    explicit Model(ModelConfig config);  // all parameters zero

    const ModelConfig& config() const noexcept { return config_; }

    std::vector<ConvLayer> conv;
    std::vector<DenseLayer> dense;
    DenseLayer output;

    // Flat parameter list: conv weights/bias, dense weights/bias, output weights/bias.
    std::vector<ParamView> parameters();
    std::vector<ConstParamView> parameters() const;
    std::size_t parameter_count() const;

    bool operator==(const Model&) const;

private:
    ModelConfig config_;
};

// One array per Model parameter array, in Model::parameters() order.
class GradientSet {
public:
    GradientSet() = default;
    static GradientSet zeros_like(const Model& model);

    std::vector<std::string> names;
    std::vector<std::vector<double>> blocks;

    void set_zero();
    void add(const GradientSet& other);
    void scale(double factor);
    std::vector<std::span<const double>> views() const;
    bool all_finite() const;
};

struct ForwardCache {
    bool valid = false;
    Mode mode = Mode::Infer;
    FeatureMap input;
    std::vector<FeatureMap> conv_pre;
    std::vector<FeatureMap> conv_act;
    std::vector<PoolResult> pools;                 // empty output when the block has no pooling
    std::vector<std::vector<double>> dense_in;     // dense_in[0] is the flattened conv output
    std::vector<std::vector<double>> dense_pre;
    std::vector<std::vector<double>> dense_out;    // after activation and dropout
    std::vector<std::vector<double>> dropout_mask;
    double output_pre = 0.0;
    double probability = 0.5;
};

struct ForwardResult {
    double probability;
    ForwardCache cache;
};

// Fills `cache` and returns the output probability. Train mode with any dropout
// rate > 0 needs `rng`.
double forward(const FeatureMap& sample, const Model& model, Mode mode, std::mt19937_64* rng,
               ForwardCache& cache);
ForwardResult model_forward(const FeatureMap& sample, const Model& model, Mode mode,
                            std::mt19937_64* rng = nullptr);
double predict(const FeatureMap& sample, const Model& model);

// Gradients of the per-sample binary cross-entropy.
GradientSet model_backward(const ForwardCache& cache, int label, const Model& model);

// Accumulates into `grads` given dJ/d(output pre-activation).
void backward_from_output(const ForwardCache& cache, double grad_output_pre, const Model& model,
                          GradientSet& grads);

// Uniform in +-sqrt(6 / fan_in) per layer, zero biases.
Model init_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace stockcnn
