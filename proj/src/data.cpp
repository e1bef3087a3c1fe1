#include "stockcnn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include "io_util.hpp"

namespace stockcnn {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_price(std::string_view field, double& out) {
    return detail::parse_double(field, out) && std::isfinite(out);
}

LabeledFrame slice_frame(const LabeledFrame& frame, std::size_t begin, std::size_t end) {
    LabeledFrame out;
    out.horizon = frame.horizon;
    auto take = [&](const auto& src, auto& dst) {
        if (!src.empty()) dst.assign(src.begin() + begin, src.begin() + end);
    };
    take(frame.bars, out.bars);
    take(frame.labels, out.labels);
    take(frame.dates, out.dates);
    take(frame.times, out.times);
    take(frame.indices, out.indices);
    take(frame.high_ahead, out.high_ahead);
    return out;
}

constexpr std::string_view kSamplesMagic = "STKCNNDS";
constexpr std::uint32_t kSamplesVersion = 1;

}  // namespace

RawFrame parse_ohlc_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("data.missing_header", "input has no header row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::optional<std::size_t> col_open, col_high, col_low, col_close, col_date, col_time, col_index;
    auto header = split_fields(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto name = lower(header[i]);
        if (name == "open") col_open = i;
        else if (name == "high") col_high = i;
        else if (name == "low") col_low = i;
        else if (name == "close") col_close = i;
        else if (name == "date") col_date = i;
        else if (name == "time") col_time = i;
        else if (name == "index") col_index = i;
    }
    for (auto [col, name] : {std::pair{col_open, "Open"}, std::pair{col_high, "High"},
                             std::pair{col_low, "Low"}, std::pair{col_close, "Close"}}) {
        if (!col) throw Error("data.missing_column", std::string("header lacks required column ") + name);
    }

    RawFrame frame;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        auto field = [&](std::optional<std::size_t> col) -> std::string_view {
            if (!col || *col >= fields.size()) return {};
            return fields[*col];
        };

        RawRow row;
        if (!parse_price(field(col_open), row.bar.open) || !parse_price(field(col_high), row.bar.high) ||
            !parse_price(field(col_low), row.bar.low) || !parse_price(field(col_close), row.bar.close)) {
            ++frame.dropped;
            continue;
        }
        row.date = field(col_date);
        row.time = field(col_time);
        row.index = field(col_index);
        frame.rows.push_back(std::move(row));
    }
    if (frame.rows.empty()) {
        throw Error("data.no_rows", "no usable rows (" + std::to_string(frame.dropped) + " dropped)");
    }
    return frame;
}

RawFrame load_ohlc_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("data.unreadable", "cannot open " + path.string());
    return parse_ohlc_csv(in);
}

LabeledFrame label_high15(const RawFrame& frame, std::size_t horizon) {
    if (horizon == 0) throw Error("data.bad_horizon", "horizon must be positive");
    const std::size_t n = frame.rows.size();
    if (n <= horizon) {
        throw Error("data.too_few_rows", "too few rows: " + std::to_string(n) +
                                             " rows cannot be labeled with horizon " +
                                             std::to_string(horizon));
    }
    LabeledFrame out;
    out.horizon = horizon;
    const std::size_t kept = n - horizon;
    out.bars.reserve(kept);
    out.labels.reserve(kept);
    out.high_ahead.reserve(kept);
    for (std::size_t i = 0; i < kept; ++i) {
        const auto& row = frame.rows[i];
        double ahead = frame.rows[i + horizon].bar.high;
        out.bars.push_back(row.bar);
        out.high_ahead.push_back(ahead);
        out.labels.push_back(ahead > row.bar.high ? 1 : 0);
        out.dates.push_back(row.date);
        out.times.push_back(row.time);
        out.indices.push_back(row.index);
    }
    return out;
}

LabeledFrame select_features(LabeledFrame frame) {
    frame.dates.clear();
    frame.times.clear();
    frame.indices.clear();
    frame.high_ahead.clear();
    frame.dates.shrink_to_fit();
    frame.times.shrink_to_fit();
    frame.indices.shrink_to_fit();
    frame.high_ahead.shrink_to_fit();
    return frame;
}

std::pair<LabeledFrame, LabeledFrame> split_train_test(const LabeledFrame& frame, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("data.bad_fraction", "train fraction must lie in (0, 1)");
    }
    const std::size_t n = frame.size();
    // Decimal fractions are inexact in binary (90 * 0.7 == 62.99999999999999), so
    // products within a few ulps below an integer count as that integer.
    const double exact = static_cast<double>(n) * train_fraction;
    const auto n_train = static_cast<std::size_t>(std::floor(exact * (1.0 + 1e-12)));
    if (n_train == 0 || n_train == n) {
        throw Error("data.empty_partition", "split of " + std::to_string(n) + " rows leaves a partition empty");
    }
    return {slice_frame(frame, 0, n_train), slice_frame(frame, n_train, n)};
}

NormStats fit_minmax(const LabeledFrame& train) {
    if (train.bars.empty()) throw Error("data.empty_partition", "cannot fit normalization on zero rows");
    NormStats stats;
    stats.min = train.bars.front().features();
    stats.max = stats.min;
    for (const auto& bar : train.bars) {
        auto f = bar.features();
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            stats.min[k] = std::min(stats.min[k], f[k]);
            stats.max[k] = std::max(stats.max[k], f[k]);
        }
    }
    return stats;
}

LabeledFrame apply_minmax(const LabeledFrame& frame, const NormStats& stats) {
    auto scale = [&](double x, std::size_t k) {
        double range = stats.max[k] - stats.min[k];
        return range == 0.0 ? 0.0 : (x - stats.min[k]) / range;
    };
    LabeledFrame out = frame;
    for (auto& bar : out.bars) {
        bar.open = scale(bar.open, 0);
        bar.high = scale(bar.high, 1);
        bar.low = scale(bar.low, 2);
        bar.close = scale(bar.close, 3);
    }
    return out;
}

SampleSet make_windows(const LabeledFrame& frame, std::size_t window_len) {
    if (window_len == 0) throw Error("data.bad_window", "window length must be positive");
    const std::size_t n = frame.size();
    if (n < window_len) {
        throw Error("data.too_few_rows", "frame of " + std::to_string(n) +
                                             " rows is shorter than window length " +
                                             std::to_string(window_len));
    }
    SampleSet set;
    set.channels = kFeatureCount;
    set.window_len = window_len;
    set.windows.reserve(n - window_len + 1);
    set.labels.reserve(n - window_len + 1);
    for (std::size_t end = window_len - 1; end < n; ++end) {
        FeatureMap window(kFeatureCount, window_len);
        const std::size_t first = end + 1 - window_len;
        for (std::size_t t = 0; t < window_len; ++t) {
            auto f = frame.bars[first + t].features();
            for (std::size_t c = 0; c < kFeatureCount; ++c) window(c, t) = f[c];
        }
        set.windows.push_back(std::move(window));
        set.labels.push_back(frame.labels[end]);
    }
    return set;
}

SampleSet SampleSet::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw Error("data.bad_slice", "sample slice out of range");
    SampleSet out;
    out.channels = channels;
    out.window_len = window_len;
    out.windows.assign(windows.begin() + begin, windows.begin() + end);
    out.labels.assign(labels.begin() + begin, labels.begin() + end);
    return out;
}

double SampleSet::positive_fraction() const {
    if (labels.empty()) return 0.0;
    auto ones = std::count(labels.begin(), labels.end(), std::uint8_t{1});
    return static_cast<double>(ones) / static_cast<double>(labels.size());
}

void write_samples(std::ostream& out, const SampleSet& samples) {
    detail::BinaryWriter w(out);
    w.put_bytes(kSamplesMagic);
    w.put(kSamplesVersion);
    w.put(static_cast<std::uint64_t>(samples.channels));
    w.put(static_cast<std::uint64_t>(samples.window_len));
    w.put(static_cast<std::uint64_t>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& window = samples.windows[i];
        if (window.channels() != samples.channels || window.length() != samples.window_len) {
            throw Error("data.bad_shape", "sample " + std::to_string(i) + " does not match the set's shape");
        }
        w.put(samples.labels[i]);
        w.put_doubles(window.values());
    }
    w.finish("sample file");
}

SampleSet read_samples(std::istream& in) {
    detail::BinaryReader r(in, "sample file");
    r.expect_magic(kSamplesMagic, kSamplesVersion);
    SampleSet set;
    set.channels = r.get<std::uint64_t>();
    set.window_len = r.get<std::uint64_t>();
    auto count = r.get<std::uint64_t>();
    if (set.channels == 0 || set.window_len == 0 || set.channels * set.window_len > (1u << 24)) {
        throw Error("io.corrupt", "sample file: implausible sample shape");
    }
    set.windows.reserve(count);
    set.labels.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto label = r.get<std::uint8_t>();
        if (label > 1) throw Error("io.corrupt", "sample file: label is not binary");
        FeatureMap window(set.channels, set.window_len);
        r.get_doubles(window.values());
        set.labels.push_back(label);
        set.windows.push_back(std::move(window));
    }
    return set;
}

void save_samples(const std::filesystem::path& path, const SampleSet& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io.unwritable", "cannot open " + path.string() + " for writing");
    write_samples(out, samples);
}

SampleSet load_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io.unreadable", "cannot open " + path.string());
    return read_samples(in);
}

void save_norm_stats(const std::filesystem::path& path, const NormStats& stats) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("io.unwritable", "cannot open " + path.string() + " for writing");
    static constexpr std::array<const char*, kFeatureCount> names{"open", "high", "low", "close"};
    out << "feature,min,max\n";
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        out << names[k] << ',' << detail::format_double(stats.min[k]) << ','
            << detail::format_double(stats.max[k]) << '\n';
    }
    if (!out) throw Error("io.write_failed", "failed writing " + path.string());
}

NormStats load_norm_stats(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io.unreadable", "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    NormStats stats;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        if (!std::getline(in, line)) throw Error("io.truncated", path.string() + ": missing feature rows");
        auto fields = split_fields(line);
        if (fields.size() != 3 || !detail::parse_double(fields[1], stats.min[k]) ||
            !detail::parse_double(fields[2], stats.max[k])) {
            throw Error("io.corrupt", path.string() + ": malformed row '" + line + "'");
        }
    }
    return stats;
}

}  // namespace stockcnn
