#include "stockcnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "io_util.hpp"

namespace stockcnn {

RawFrame generate_ohlc(const SyntheticSpec& spec) {
    if (spec.rows == 0 || !(spec.persistence > 0.0 && spec.persistence < 1.0) || !(spec.period > 2.0)) {
        throw Error("config.invalid", "synthetic spec needs rows > 0, persistence in (0,1), period > 2");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double w = 2.0 * std::numbers::pi / spec.period;
    const double a1 = 2.0 * spec.persistence * std::cos(w);
    const double a2 = -spec.persistence * spec.persistence;

    RawFrame frame;
    frame.rows.reserve(spec.rows);
    double x1 = 0.0;
    double x2 = 0.0;
    double prev_close = spec.base;
    for (std::size_t t = 0; t < spec.rows; ++t) {
        const double x = a1 * x1 + a2 * x2 + spec.innovation * normal(rng);
        x2 = x1;
        x1 = x;
        const double close = spec.base + x + spec.noise * normal(rng);
        const double open = t == 0 ? close : prev_close;
        const double high = std::max(open, close) + spec.noise * std::abs(normal(rng));
        const double low = std::min(open, close) - spec.noise * std::abs(normal(rng));
        prev_close = close;

        RawRow row;
        row.bar = {open, high, low, close};
        const std::size_t day = t / 375;  // 375 one-minute bars per trading session
        const std::size_t minute = t % 375 + 555;
        row.date = "D" + std::to_string(day + 1);
        row.time = std::to_string(minute / 60) + ":" + (minute % 60 < 10 ? "0" : "") + std::to_string(minute % 60);
        row.index = "SYN";
        frame.rows.push_back(std::move(row));
    }
    return frame;
}

void write_ohlc_csv(std::ostream& out, const RawFrame& frame) {
    out << "Date,Time,Open,High,Low,Close,Index\n";
    for (const auto& row : frame.rows) {
        out << row.date << ',' << row.time << ',' << detail::format_double(row.bar.open) << ','
            << detail::format_double(row.bar.high) << ',' << detail::format_double(row.bar.low) << ','
            << detail::format_double(row.bar.close) << ',' << row.index << '\n';
    }
}

}  // namespace stockcnn
