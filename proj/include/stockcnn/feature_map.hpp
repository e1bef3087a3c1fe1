#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stockcnn/error.hpp"

namespace stockcnn {

// Dense channels x length array of doubles, row-major by channel.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(std::size_t channels, std::size_t length, double fill = 0.0)
        : channels_(channels), length_(length), data_(channels * length, fill) {
        if (channels == 0 || length == 0) {
            throw Error("nn.bad_shape", "FeatureMap needs channels >= 1 and length >= 1");
        }
    }
    FeatureMap(std::size_t channels, std::size_t length, std::vector<double> values)
        : channels_(channels), length_(length), data_(std::move(values)) {
        if (channels == 0 || length == 0 || data_.size() != channels * length) {
            throw Error("nn.bad_shape", "FeatureMap values do not match channels x length");
        }
    }

    std::size_t channels() const noexcept { return channels_; }
    std::size_t length() const noexcept { return length_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t c, std::size_t t) noexcept { return data_[c * length_ + t]; }
    double operator()(std::size_t c, std::size_t t) const noexcept { return data_[c * length_ + t]; }

    std::span<double> channel(std::size_t c) noexcept { return {data_.data() + c * length_, length_}; }
    std::span<const double> channel(std::size_t c) const noexcept {
        return {data_.data() + c * length_, length_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool operator==(const FeatureMap&) const = default;

private:
    std::size_t channels_ = 0;
    std::size_t length_ = 0;
    std::vector<double> data_;
};

}  // namespace stockcnn
