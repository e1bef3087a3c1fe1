#pragma once

// Element-wise update rules. Parameters and gradients are passed as lists of
// flat arrays (one per parameter tensor); the optimizer state mirrors them.
//
//   momentum:  m = b1*m + (1-b1)*g;           w -= lr * m
//   rmsprop:   s = b2*s + (1-b2)*g^2;         w -= lr / (sqrt(s) + eps) * g
//   adam:      both accumulators;             w -= lr / (sqrt(s) + eps) * m
//
// Adam is uncorrected by default; HyperParams::bias_correction switches on the
// 1/(1-b^t) rescaling of both moments.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stockcnn {

struct HyperParams {
    double learning_rate = 0.001;
    double beta1 = 0.9;    // first-moment (momentum) decay
    double beta2 = 0.999;  // second-moment (RMS) decay
    double epsilon = 1e-8;
    bool bias_correction = false;

    void validate() const;
    bool operator==(const HyperParams&) const = default;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> s;
    std::uint64_t step = 0;

    static AdamState zeros(std::span<const std::size_t> sizes);
    template <typename Views>
    static AdamState zeros_like(const Views& params) {
        std::vector<std::size_t> sizes;
        for (const auto& p : params) sizes.push_back(std::size(p));
        return zeros(sizes);
    }

    bool operator==(const AdamState&) const = default;
};

using ParamSpans = std::span<const std::span<double>>;
using GradSpans = std::span<const std::span<const double>>;

void momentum_step(ParamSpans params, GradSpans grads, AdamState& state, const HyperParams& hp);
void rmsprop_step(ParamSpans params, GradSpans grads, AdamState& state, const HyperParams& hp);
void adam_step(ParamSpans params, GradSpans grads, AdamState& state, const HyperParams& hp);

}  // namespace stockcnn
