#include "stockcnn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace stockcnn {

namespace {

// Fixed four-way split of the sum: vectorizes without reassociation flags and
// stays bit-reproducible.
inline double dot(const double* a, const double* b, std::ptrdiff_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::ptrdiff_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

void Activation::validate() const {
    if (kind == Kind::LeakyReLU && !(slope > 0.0 && slope < 1.0)) {
        throw Error("nn.bad_activation", "LeakyReLU slope must lie in (0, 1)");
    }
}

std::string Activation::name() const {
    switch (kind) {
        case Kind::ReLU: return "relu";
        case Kind::LeakyReLU: return "leaky_relu";
        case Kind::Sigmoid: return "sigmoid";
        case Kind::Identity: return "identity";
    }
    return "unknown";
}

double activate(double x, const Activation& act) {
    switch (act.kind) {
        case Activation::Kind::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Kind::LeakyReLU: return x > 0.0 ? x : act.slope * x;
        case Activation::Kind::Sigmoid:
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            else {
                double e = std::exp(x);
                return e / (1.0 + e);
            }
        case Activation::Kind::Identity: return x;
    }
    return x;
}

double activation_grad(double x, const Activation& act) {
    switch (act.kind) {
        case Activation::Kind::ReLU: return x > 0.0 ? 1.0 : 0.0;
        case Activation::Kind::LeakyReLU: return x > 0.0 ? 1.0 : act.slope;
        case Activation::Kind::Sigmoid: {
            double s = activate(x, act);
            return s * (1.0 - s);
        }
        case Activation::Kind::Identity: return 1.0;
    }
    return 1.0;
}

ConvLayer::ConvLayer(std::size_t out, std::size_t in, std::size_t kernel, Activation act)
    : out_channels(out), in_channels(in), kernel_size(kernel),
      weights(out * in * kernel, 0.0), bias(out, 0.0), activation(act) {
    if (out == 0 || in == 0 || kernel == 0) throw Error("nn.bad_shape", "conv layer dimensions must be positive");
    if (kernel % 2 == 0) throw Error("nn.bad_shape", "\"same\" padding needs an odd kernel size");
    act.validate();
}

DenseLayer::DenseLayer(std::size_t out, std::size_t in, Activation act)
    : out_units(out), in_units(in), weights(out * in, 0.0), bias(out, 0.0), activation(act) {
    if (out == 0 || in == 0) throw Error("nn.bad_shape", "dense layer dimensions must be positive");
    act.validate();
}

namespace {

// Channel-major copy of the input with kernel/2 zeros on each side.
std::vector<double> padded_copy(const FeatureMap& input, std::size_t pad) {
    const std::size_t len = input.length();
    const std::size_t plen = len + 2 * pad;
    std::vector<double> buf(input.channels() * plen, 0.0);
    for (std::size_t c = 0; c < input.channels(); ++c) {
        auto src = input.channel(c);
        std::copy(src.begin(), src.end(), buf.begin() + static_cast<std::ptrdiff_t>(c * plen + pad));
    }
    return buf;
}

}  // namespace

FeatureMap conv1d_linear(const FeatureMap& input, const ConvLayer& layer) {
    if (input.channels() != layer.in_channels) {
        throw Error("nn.shape_mismatch", "conv expects " + std::to_string(layer.in_channels) +
                                             " input channels, got " + std::to_string(input.channels()));
    }
    const std::size_t len = input.length();
    const std::size_t ks = layer.kernel_size;
    const std::size_t plen = len + 2 * (ks / 2);
    const std::vector<double> xpad = padded_copy(input, ks / 2);
    FeatureMap out(layer.out_channels, len);
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        double* dst = out.channel(o).data();
        std::fill_n(dst, len, layer.bias[o]);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const double* x = xpad.data() + i * plen;
            const double* w = layer.weights.data() + (o * layer.in_channels + i) * ks;
            if (ks == 3) {
                const double w0 = w[0], w1 = w[1], w2 = w[2];
                for (std::size_t t = 0; t < len; ++t) dst[t] += w0 * x[t] + w1 * x[t + 1] + w2 * x[t + 2];
            } else {
                for (std::size_t k = 0; k < ks; ++k) {
                    for (std::size_t t = 0; t < len; ++t) dst[t] += w[k] * x[t + k];
                }
            }
        }
    }
    return out;
}

FeatureMap conv1d_forward(const FeatureMap& input, const ConvLayer& layer) {
    FeatureMap out = conv1d_linear(input, layer);
    for (double& v : out.values()) v = activate(v, layer.activation);
    return out;
}

void conv1d_backward(const FeatureMap& input, const ConvLayer& layer, const FeatureMap& grad_pre,
                     std::span<double> grad_weights, std::span<double> grad_bias, FeatureMap* grad_input) {
    const std::size_t len = input.length();
    const std::size_t ks = layer.kernel_size;
    const std::size_t pad = ks / 2;
    const std::size_t plen = len + 2 * pad;
    const std::vector<double> xpad = padded_copy(input, pad);
    std::vector<double> gpad;
    if (grad_input != nullptr) gpad.assign(layer.in_channels * plen, 0.0);

    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        const double* g = grad_pre.channel(o).data();
        double bsum = 0.0;
        for (std::size_t t = 0; t < len; ++t) bsum += g[t];
        grad_bias[o] += bsum;
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const double* x = xpad.data() + i * plen;
            const double* w = layer.weights.data() + (o * layer.in_channels + i) * ks;
            double* gw = grad_weights.data() + (o * layer.in_channels + i) * ks;
            for (std::size_t k = 0; k < ks; ++k) gw[k] += dot(g, x + k, static_cast<std::ptrdiff_t>(len));
            if (grad_input == nullptr) continue;
            double* gx = gpad.data() + i * plen;
            if (ks == 3) {
                const double w0 = w[0], w1 = w[1], w2 = w[2];
                for (std::size_t t = 0; t < len; ++t) {
                    gx[t] += w0 * g[t];
                    gx[t + 1] += w1 * g[t];
                    gx[t + 2] += w2 * g[t];
                }
            } else {
                for (std::size_t k = 0; k < ks; ++k) {
                    for (std::size_t t = 0; t < len; ++t) gx[t + k] += w[k] * g[t];
                }
            }
        }
    }
    if (grad_input != nullptr) {
        *grad_input = FeatureMap(layer.in_channels, len);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            std::copy_n(gpad.begin() + static_cast<std::ptrdiff_t>(i * plen + pad), len,
                        grad_input->channel(i).begin());
        }
    }
}

PoolResult maxpool1d_forward(const FeatureMap& input, std::size_t pool_size) {
    if (pool_size == 0) throw Error("nn.bad_shape", "pool size must be positive");
    if (input.length() < pool_size) {
        throw Error("nn.shape_mismatch", "pool input length " + std::to_string(input.length()) +
                                             " is shorter than pool size " + std::to_string(pool_size));
    }
    const std::size_t out_len = input.length() / pool_size;
    PoolResult result{FeatureMap(input.channels(), out_len), std::vector<std::size_t>(input.channels() * out_len)};
    for (std::size_t c = 0; c < input.channels(); ++c) {
        auto src = input.channel(c);
        for (std::size_t j = 0; j < out_len; ++j) {
            std::size_t best = j * pool_size;
            for (std::size_t p = best + 1; p < (j + 1) * pool_size; ++p) {
                if (src[p] > src[best]) best = p;
            }
            result.output(c, j) = src[best];
            result.argmax[c * out_len + j] = best;
        }
    }
    return result;
}

FeatureMap maxpool1d_backward(const FeatureMap& grad_output, std::span<const std::size_t> argmax,
                              std::size_t input_length) {
    FeatureMap grad(grad_output.channels(), input_length);
    const std::size_t out_len = grad_output.length();
    for (std::size_t c = 0; c < grad_output.channels(); ++c) {
        for (std::size_t j = 0; j < out_len; ++j) {
            grad(c, argmax[c * out_len + j]) += grad_output(c, j);
        }
    }
    return grad;
}

std::vector<double> dense_linear(std::span<const double> input, const DenseLayer& layer) {
    if (input.size() != layer.in_units) {
        throw Error("nn.shape_mismatch", "dense layer expects " + std::to_string(layer.in_units) +
                                             " inputs, got " + std::to_string(input.size()));
    }
    std::vector<double> out(layer.out_units);
    for (std::size_t o = 0; o < layer.out_units; ++o) {
        const double* w = layer.weights.data() + o * layer.in_units;
        out[o] = layer.bias[o] + dot(w, input.data(), static_cast<std::ptrdiff_t>(layer.in_units));
    }
    return out;
}

std::vector<double> dense_forward(std::span<const double> input, const DenseLayer& layer) {
    auto out = dense_linear(input, layer);
    for (double& v : out) v = activate(v, layer.activation);
    return out;
}

void dense_backward(std::span<const double> input, const DenseLayer& layer, std::span<const double> grad_pre,
                    std::span<double> grad_weights, std::span<double> grad_bias, std::span<double> grad_input) {
    if (!grad_input.empty()) std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t o = 0; o < layer.out_units; ++o) {
        const double g = grad_pre[o];
        grad_bias[o] += g;
        if (g == 0.0) continue;
        double* gw = grad_weights.data() + o * layer.in_units;
        for (std::size_t j = 0; j < layer.in_units; ++j) gw[j] += g * input[j];
        if (!grad_input.empty()) {
            const double* w = layer.weights.data() + o * layer.in_units;
            for (std::size_t j = 0; j < layer.in_units; ++j) grad_input[j] += w[j] * g;
        }
    }
}

DropoutResult dropout_forward(std::span<const double> input, double rate, Mode mode, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error("nn.bad_dropout", "dropout rate must lie in [0, 1)");
    DropoutResult result{std::vector<double>(input.begin(), input.end()), std::vector<double>(input.size(), 1.0)};
    if (mode == Mode::Infer || rate == 0.0) return result;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::bernoulli_distribution drop(rate);
    for (std::size_t i = 0; i < input.size(); ++i) {
        result.mask[i] = drop(rng) ? 0.0 : keep_scale;
        result.values[i] *= result.mask[i];
    }
    return result;
}

}  // namespace stockcnn
