#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// They are written for obviousness, not speed, and share no code with the library.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "stockcnn/data.hpp"
#include "stockcnn/layers.hpp"
#include "stockcnn/metrics.hpp"

namespace oracle {

inline double act(double x, const stockcnn::Activation& a) {
    using K = stockcnn::Activation::Kind;
    switch (a.kind) {
        case K::ReLU: return x <= 0.0 ? 0.0 : x;
        case K::LeakyReLU: return x <= 0.0 ? a.slope * x : x;
        case K::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case K::Identity: return x;
    }
    return x;
}

// out[o][t] = act(b[o] + sum_i sum_k w[o][i][k] * x[i][t + k - k/2]), zero outside the input.
inline std::vector<std::vector<double>> naive_conv(const std::vector<std::vector<double>>& x,
                                                   const stockcnn::ConvLayer& layer) {
    const long len = static_cast<long>(x.at(0).size());
    const long half = static_cast<long>(layer.kernel_size / 2);
    std::vector<std::vector<double>> out(layer.out_channels, std::vector<double>(len));
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        for (long t = 0; t < len; ++t) {
            double sum = layer.bias[o];
            for (std::size_t i = 0; i < layer.in_channels; ++i) {
                for (std::size_t k = 0; k < layer.kernel_size; ++k) {
                    long src = t + static_cast<long>(k) - half;
                    if (src < 0 || src >= len) continue;
                    sum += layer.weights[(o * layer.in_channels + i) * layer.kernel_size + k] * x[i][src];
                }
            }
            out[o][t] = act(sum, layer.activation);
        }
    }
    return out;
}

struct Pooled {
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::size_t>> argmax;
};

// Lists every complete window and takes the first position holding its maximum.
inline Pooled enumerate_pool(const std::vector<std::vector<double>>& x, std::size_t size) {
    Pooled p;
    for (const auto& row : x) {
        std::vector<double> vals;
        std::vector<std::size_t> idx;
        for (std::size_t start = 0; start + size <= row.size(); start += size) {
            std::size_t best = start;
            for (std::size_t q = start; q < start + size; ++q) {
                if (row[q] > row[best]) best = q;
            }
            vals.push_back(row[best]);
            idx.push_back(best);
        }
        p.values.push_back(vals);
        p.argmax.push_back(idx);
    }
    return p;
}

inline std::vector<std::uint8_t> brute_labels(const std::vector<double>& highs, std::size_t horizon) {
    std::vector<std::uint8_t> labels;
    for (std::size_t i = 0; i < highs.size(); ++i) {
        for (std::size_t j = 0; j < highs.size(); ++j) {
            if (j == i + horizon) labels.push_back(highs[j] > highs[i] ? 1 : 0);
        }
    }
    return labels;
}

struct Recount {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

inline Recount recount(const std::vector<double>& preds, const std::vector<std::uint8_t>& labels,
                       double threshold) {
    Recount r;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        bool positive = !(preds[i] < threshold);
        if (positive && labels[i] == 1) ++r.tp;
        if (positive && labels[i] == 0) ++r.fp;
        if (!positive && labels[i] == 0) ++r.tn;
        if (!positive && labels[i] == 1) ++r.fn;
    }
    long n = r.tp + r.fp + r.tn + r.fn;
    if (n > 0) r.accuracy = double(r.tp + r.tn) / double(n);
    if (r.tp + r.fp > 0) r.precision = double(r.tp) / double(r.tp + r.fp);
    if (r.tp + r.fn > 0) r.recall = double(r.tp) / double(r.tp + r.fn);
    if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

inline stockcnn::RawFrame random_frame(std::mt19937_64& rng, std::size_t rows) {
    std::uniform_int_distribution<int> tick(-3, 3);
    stockcnn::RawFrame f;
    double level = 100;
    for (std::size_t i = 0; i < rows; ++i) {
        level += tick(rng);
        stockcnn::RawRow r;
        // Coarse integer steps make equal highs (ties) common.
        r.bar = {level, level + tick(rng) / 2, level - 2, level + 1};
        r.date = "d" + std::to_string(i);
        f.rows.push_back(r);
    }
    return f;
}

}  // namespace oracle
