#include "stockcnn/model.hpp"

#include <algorithm>
#include <cmath>

namespace stockcnn {

namespace {

std::string conv_name(std::size_t i) { return "conv" + std::to_string(i + 1); }
std::string dense_name(std::size_t j) { return "dense" + std::to_string(j + 1); }

void check(bool ok, const std::string& layer, const std::string& what) {
    if (!ok) throw Error("nn.shape_mismatch", "layer " + layer + ": " + what);
}

}  // namespace

ModelConfig ModelConfig::standard(std::size_t window_len, double dropout, double leaky_slope) {
    ModelConfig c;
    c.input_channels = 4;
    c.window_len = window_len;
    c.pool_size = 2;
    c.conv = {
        {32, 3, Activation::relu(), false},
        {64, 3, Activation::leaky_relu(leaky_slope), true},
        {128, 3, Activation::leaky_relu(leaky_slope), true},
    };
    c.dense = {
        {128, Activation::leaky_relu(leaky_slope), dropout},
        {256, Activation::leaky_relu(leaky_slope), 0.0},
    };
    return c;
}

ModelConfig ModelConfig::tiny() {
    ModelConfig c = standard(8, 0.0);
    c.input_channels = 2;
    c.conv[0].filters = 2;
    c.conv[1].filters = 2;
    c.conv[2].filters = 2;
    c.dense[0].units = 4;
    c.dense[1].units = 4;
    return c;
}

void ModelConfig::validate() const {
    if (input_channels == 0) throw Error("config.invalid", "input_channels must be positive");
    if (window_len == 0) throw Error("config.invalid", "window_len must be positive");
    if (pool_size == 0) throw Error("config.invalid", "pool_size must be positive");
    if (conv.empty()) throw Error("config.invalid", "at least one convolution is required");
    std::size_t len = window_len;
    for (std::size_t i = 0; i < conv.size(); ++i) {
        const auto& spec = conv[i];
        if (spec.filters == 0 || spec.kernel_size == 0 || spec.kernel_size % 2 == 0) {
            throw Error("config.invalid", conv_name(i) + ": filters must be positive and kernel size odd");
        }
        spec.activation.validate();
        if (spec.pool_after) {
            if (len < pool_size) {
                throw Error("config.invalid", conv_name(i) + ": length " + std::to_string(len) +
                                                  " too short for pooling");
            }
            len /= pool_size;
        }
    }
    for (std::size_t j = 0; j < dense.size(); ++j) {
        if (dense[j].units == 0) throw Error("config.invalid", dense_name(j) + ": units must be positive");
        if (!(dense[j].dropout >= 0.0 && dense[j].dropout < 1.0)) {
            throw Error("config.invalid", dense_name(j) + ": dropout must lie in [0, 1)");
        }
        dense[j].activation.validate();
    }
}

std::size_t ModelConfig::final_length() const {
    std::size_t len = window_len;
    for (const auto& spec : conv) {
        if (spec.pool_after) len /= pool_size;
    }
    return len;
}

std::size_t ModelConfig::flatten_length() const { return conv.back().filters * final_length(); }

Model::Model(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    std::size_t channels = config_.input_channels;
    for (const auto& spec : config_.conv) {
        conv.emplace_back(spec.filters, channels, spec.kernel_size, spec.activation);
        channels = spec.filters;
    }
    std::size_t units = config_.flatten_length();
    for (const auto& spec : config_.dense) {
        dense.emplace_back(spec.units, units, spec.activation);
        units = spec.units;
    }
    output = DenseLayer(1, units, Activation::sigmoid());
}

std::vector<ParamView> Model::parameters() {
    std::vector<ParamView> views;
    for (std::size_t i = 0; i < conv.size(); ++i) {
        auto& l = conv[i];
        views.push_back({conv_name(i) + ".weight", {l.out_channels, l.in_channels, l.kernel_size}, l.weights});
        views.push_back({conv_name(i) + ".bias", {l.out_channels}, l.bias});
    }
    for (std::size_t j = 0; j < dense.size(); ++j) {
        auto& l = dense[j];
        views.push_back({dense_name(j) + ".weight", {l.out_units, l.in_units}, l.weights});
        views.push_back({dense_name(j) + ".bias", {l.out_units}, l.bias});
    }
    views.push_back({"output.weight", {output.out_units, output.in_units}, output.weights});
    views.push_back({"output.bias", {output.out_units}, output.bias});
    return views;
}

std::vector<ConstParamView> Model::parameters() const {
    std::vector<ConstParamView> out;
    for (auto& v : const_cast<Model*>(this)->parameters()) {
        out.push_back({std::move(v.name), std::move(v.shape), v.values});
    }
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& v : parameters()) n += v.values.size();
    return n;
}

bool Model::operator==(const Model& other) const {
    if (!(config_ == other.config_)) return false;
    auto a = parameters();
    auto b = other.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin(), b[i].values.end())) {
            return false;
        }
    }
    return true;
}

GradientSet GradientSet::zeros_like(const Model& model) {
    GradientSet g;
    for (const auto& v : model.parameters()) {
        g.names.push_back(v.name);
        g.blocks.emplace_back(v.values.size(), 0.0);
    }
    return g;
}

void GradientSet::set_zero() {
    for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
}

void GradientSet::add(const GradientSet& other) {
    if (other.blocks.size() != blocks.size()) throw Error("nn.shape_mismatch", "gradient sets differ in shape");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (other.blocks[b].size() != blocks[b].size()) {
            throw Error("nn.shape_mismatch", "gradient block " + names[b] + " differs in size");
        }
        for (std::size_t i = 0; i < blocks[b].size(); ++i) blocks[b][i] += other.blocks[b][i];
    }
}

void GradientSet::scale(double factor) {
    for (auto& b : blocks) {
        for (double& v : b) v *= factor;
    }
}

std::vector<std::span<const double>> GradientSet::views() const {
    std::vector<std::span<const double>> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) out.emplace_back(b);
    return out;
}

bool GradientSet::all_finite() const {
    for (const auto& b : blocks) {
        for (double v : b) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

double forward(const FeatureMap& sample, const Model& model, Mode mode, std::mt19937_64* rng,
               ForwardCache& cache) {
    const auto& cfg = model.config();
    cache.valid = false;
    cache.mode = mode;
    cache.input = sample;
    cache.conv_pre.resize(model.conv.size());
    cache.conv_act.resize(model.conv.size());
    cache.pools.resize(model.conv.size());

    const FeatureMap* current = &cache.input;
    for (std::size_t i = 0; i < model.conv.size(); ++i) {
        const auto& layer = model.conv[i];
        check(current->channels() == layer.in_channels, conv_name(i),
              "expects " + std::to_string(layer.in_channels) + " channels, got " +
                  std::to_string(current->channels()));
        cache.conv_pre[i] = conv1d_linear(*current, layer);
        FeatureMap act = cache.conv_pre[i];
        for (double& v : act.values()) v = activate(v, layer.activation);
        cache.conv_act[i] = std::move(act);
        if (cfg.conv[i].pool_after) {
            check(cache.conv_act[i].length() >= cfg.pool_size, conv_name(i) + " pool",
                  "length " + std::to_string(cache.conv_act[i].length()) + " shorter than pool size");
            cache.pools[i] = maxpool1d_forward(cache.conv_act[i], cfg.pool_size);
            current = &cache.pools[i].output;
        } else {
            cache.pools[i] = PoolResult{};
            current = &cache.conv_act[i];
        }
    }

    const std::size_t nd = model.dense.size();
    cache.dense_in.resize(nd + 1);
    cache.dense_pre.resize(nd);
    cache.dense_out.resize(nd);
    cache.dropout_mask.resize(nd);
    cache.dense_in[0].assign(current->values().begin(), current->values().end());

    for (std::size_t j = 0; j < nd; ++j) {
        const auto& layer = model.dense[j];
        check(cache.dense_in[j].size() == layer.in_units, dense_name(j),
              "expects " + std::to_string(layer.in_units) + " inputs, got " +
                  std::to_string(cache.dense_in[j].size()));
        cache.dense_pre[j] = dense_linear(cache.dense_in[j], layer);
        std::vector<double> act(cache.dense_pre[j].size());
        for (std::size_t u = 0; u < act.size(); ++u) act[u] = activate(cache.dense_pre[j][u], layer.activation);
        const double rate = j < cfg.dense.size() ? cfg.dense[j].dropout : 0.0;
        if (mode == Mode::Train && rate > 0.0) {
            if (rng == nullptr) throw Error("nn.missing_rng", "training-mode dropout needs a random generator");
            auto dropped = dropout_forward(act, rate, mode, *rng);
            cache.dense_out[j] = std::move(dropped.values);
            cache.dropout_mask[j] = std::move(dropped.mask);
        } else {
            cache.dense_out[j] = std::move(act);
            cache.dropout_mask[j].clear();
        }
        cache.dense_in[j + 1] = cache.dense_out[j];
    }

    check(cache.dense_in[nd].size() == model.output.in_units, "output",
          "expects " + std::to_string(model.output.in_units) + " inputs, got " +
              std::to_string(cache.dense_in[nd].size()));
    cache.output_pre = dense_linear(cache.dense_in[nd], model.output)[0];
    cache.probability = activate(cache.output_pre, model.output.activation);
    cache.valid = true;
    return cache.probability;
}

ForwardResult model_forward(const FeatureMap& sample, const Model& model, Mode mode, std::mt19937_64* rng) {
    ForwardResult result{0.0, {}};
    result.probability = forward(sample, model, mode, rng, result.cache);
    return result;
}

double predict(const FeatureMap& sample, const Model& model) {
    ForwardCache cache;
    return forward(sample, model, Mode::Infer, nullptr, cache);
}

void backward_from_output(const ForwardCache& cache, double grad_output_pre, const Model& model,
                          GradientSet& grads) {
    const std::size_t nc = model.conv.size();
    const std::size_t nd = model.dense.size();
    if (!cache.valid || cache.conv_pre.size() != nc || cache.dense_pre.size() != nd ||
        cache.dense_in.size() != nd + 1 || cache.dense_in[nd].size() != model.output.in_units) {
        throw Error("nn.stale_cache", "backward needs a forward cache produced by this model");
    }
    if (grads.blocks.size() != 2 * (nc + nd + 1)) {
        throw Error("nn.shape_mismatch", "gradient set does not mirror the model");
    }

    const std::size_t out_block = 2 * (nc + nd);
    std::vector<double> grad(model.output.in_units);
    const double g_out[1] = {grad_output_pre};
    dense_backward(cache.dense_in[nd], model.output, g_out, grads.blocks[out_block],
                   grads.blocks[out_block + 1], grad);

    for (std::size_t j = nd; j-- > 0;) {
        const auto& layer = model.dense[j];
        std::vector<double> grad_pre(layer.out_units);
        const auto& mask = cache.dropout_mask[j];
        for (std::size_t u = 0; u < layer.out_units; ++u) {
            double g = mask.empty() ? grad[u] : grad[u] * mask[u];
            grad_pre[u] = g * activation_grad(cache.dense_pre[j][u], layer.activation);
        }
        std::vector<double> grad_in(layer.in_units);
        const std::size_t b = 2 * (nc + j);
        dense_backward(cache.dense_in[j], layer, grad_pre, grads.blocks[b], grads.blocks[b + 1], grad_in);
        grad = std::move(grad_in);
    }

    // Unflatten into the shape of the last conv block output.
    const FeatureMap& last = cache.pools[nc - 1].output.empty() ? cache.conv_act[nc - 1]
                                                                : cache.pools[nc - 1].output;
    FeatureMap grad_map(last.channels(), last.length(), std::move(grad));

    for (std::size_t i = nc; i-- > 0;) {
        const auto& layer = model.conv[i];
        FeatureMap grad_act = cache.pools[i].output.empty()
                                  ? std::move(grad_map)
                                  : maxpool1d_backward(grad_map, cache.pools[i].argmax, cache.conv_act[i].length());
        const auto& pre = cache.conv_pre[i];
        auto ga = grad_act.values();
        auto pv = pre.values();
        for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= activation_grad(pv[k], layer.activation);

        const FeatureMap& input = i == 0 ? cache.input
                                         : (cache.pools[i - 1].output.empty() ? cache.conv_act[i - 1]
                                                                              : cache.pools[i - 1].output);
        FeatureMap grad_input;
        conv1d_backward(input, layer, grad_act, grads.blocks[2 * i], grads.blocks[2 * i + 1],
                        i == 0 ? nullptr : &grad_input);
        grad_map = std::move(grad_input);
    }
}

GradientSet model_backward(const ForwardCache& cache, int label, const Model& model) {
    GradientSet grads = GradientSet::zeros_like(model);
    // Sigmoid output with cross-entropy: dJ/dz = p - y.
    backward_from_output(cache, cache.probability - static_cast<double>(label), model, grads);
    return grads;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
    Model model(config);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::vector<double>& weights, std::size_t fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : weights) w = dist(rng);
    };
    for (auto& l : model.conv) fill(l.weights, l.in_channels * l.kernel_size);
    for (auto& l : model.dense) fill(l.weights, l.in_units);
    fill(model.output.weights, model.output.in_units);
    return model;
}

}  // namespace stockcnn
