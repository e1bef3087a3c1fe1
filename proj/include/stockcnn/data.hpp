#pragma once

// OHLC ingestion, look-ahead labeling, chronological split, min-max scaling and
// windowing into 4-channel samples.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stockcnn/feature_map.hpp"

namespace stockcnn {

inline constexpr std::size_t kFeatureCount = 4;  // open, high, low, close
inline constexpr std::size_t kDefaultHorizon = 15;
inline constexpr std::size_t kDefaultWindowLen = 32;

struct Bar {
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;

    std::array<double, kFeatureCount> features() const { return {open, high, low, close}; }
    bool operator==(const Bar&) const = default;
};

struct RawRow {
    Bar bar;
    std::string date;
    std::string time;
    std::string index;
};

struct RawFrame {
    std::vector<RawRow> rows;  // file order
    std::size_t dropped = 0;   // rows rejected for missing / non-numeric prices
};

// Rows are aligned with labels. The auxiliary columns (date/time/index and the
// look-ahead high) are carried from labeling until select_features() drops them.
struct LabeledFrame {
    std::vector<Bar> bars;
    std::vector<std::uint8_t> labels;
    std::size_t horizon = kDefaultHorizon;

    std::vector<std::string> dates;
    std::vector<std::string> times;
    std::vector<std::string> indices;
    std::vector<double> high_ahead;

    std::size_t size() const noexcept { return bars.size(); }
    bool has_auxiliary() const noexcept {
        return !dates.empty() || !times.empty() || !indices.empty() || !high_ahead.empty();
    }
};

struct NormStats {
    std::array<double, kFeatureCount> min{};
    std::array<double, kFeatureCount> max{};

    bool operator==(const NormStats&) const = default;
};

struct SampleSet {
    std::size_t channels = kFeatureCount;
    std::size_t window_len = 0;
    std::vector<FeatureMap> windows;
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return windows.size(); }
    bool empty() const noexcept { return windows.empty(); }

    // Chronological slice [begin, end).
    SampleSet slice(std::size_t begin, std::size_t end) const;
    double positive_fraction() const;
};

RawFrame parse_ohlc_csv(std::istream& in);
RawFrame load_ohlc_csv(const std::filesystem::path& path);

LabeledFrame label_high15(const RawFrame& frame, std::size_t horizon = kDefaultHorizon);
LabeledFrame select_features(LabeledFrame frame);

std::pair<LabeledFrame, LabeledFrame> split_train_test(const LabeledFrame& frame,
                                                       double train_fraction = 0.7);

NormStats fit_minmax(const LabeledFrame& train);
LabeledFrame apply_minmax(const LabeledFrame& frame, const NormStats& stats);

SampleSet make_windows(const LabeledFrame& frame, std::size_t window_len = kDefaultWindowLen);

// Prepared-sample cache: "STKCNNDS" magic, u32 version, then little-endian payload.
void save_samples(const std::filesystem::path& path, const SampleSet& samples);
SampleSet load_samples(const std::filesystem::path& path);
void write_samples(std::ostream& out, const SampleSet& samples);
SampleSet read_samples(std::istream& in);

void save_norm_stats(const std::filesystem::path& path, const NormStats& stats);
NormStats load_norm_stats(const std::filesystem::path& path);

}  // namespace stockcnn
