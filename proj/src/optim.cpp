#include "stockcnn/optim.hpp"

#include <cmath>
#include <string>

#include "stockcnn/error.hpp"

namespace stockcnn {

namespace {

void check_shapes(ParamSpans params, GradSpans grads, const AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.s.size()) {
        throw Error("optim.shape_mismatch", "parameter, gradient and state lists differ in length");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        const auto n = params[b].size();
        if (grads[b].size() != n || state.m[b].size() != n || state.s[b].size() != n) {
            throw Error("optim.shape_mismatch", "block " + std::to_string(b) + " differs in size");
        }
    }
}

}  // namespace

void HyperParams::validate() const {
    if (!(learning_rate > 0.0)) throw Error("config.invalid", "learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error("config.invalid", "beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error("config.invalid", "beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw Error("config.invalid", "epsilon must be positive");
}

AdamState AdamState::zeros(std::span<const std::size_t> sizes) {
    AdamState state;
    for (auto n : sizes) {
        state.m.emplace_back(n, 0.0);
        state.s.emplace_back(n, 0.0);
    }
    return state;
}

void momentum_step(ParamSpans params, GradSpans grads, AdamState& state, const HyperParams& hp) {
    check_shapes(params, grads, state);
    const double b1 = hp.beta1;
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto w = params[b];
        auto g = grads[b];
        auto& m = state.m[b];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            w[i] -= hp.learning_rate * m[i];
        }
    }
    ++state.step;
}

void rmsprop_step(ParamSpans params, GradSpans grads, AdamState& state, const HyperParams& hp) {
    check_shapes(params, grads, state);
    const double b2 = hp.beta2;
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto w = params[b];
        auto g = grads[b];
        auto& s = state.s[b];
        for (std::size_t i = 0; i < w.size(); ++i) {
            s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= hp.learning_rate / (std::sqrt(s[i]) + hp.epsilon) * g[i];
        }
    }
    ++state.step;
}

void adam_step(ParamSpans params, GradSpans grads, AdamState& state, const HyperParams& hp) {
    check_shapes(params, grads, state);
    const double b1 = hp.beta1;
    const double b2 = hp.beta2;
    const auto t = static_cast<double>(state.step + 1);
    const double m_scale = hp.bias_correction ? 1.0 / (1.0 - std::pow(b1, t)) : 1.0;
    const double s_scale = hp.bias_correction ? 1.0 / (1.0 - std::pow(b2, t)) : 1.0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto w = params[b];
        auto g = grads[b];
        auto& m = state.m[b];
        auto& s = state.s[b];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= hp.learning_rate / (std::sqrt(s[i] * s_scale) + hp.epsilon) * (m[i] * m_scale);
        }
    }
    ++state.step;
}

}  // namespace stockcnn
