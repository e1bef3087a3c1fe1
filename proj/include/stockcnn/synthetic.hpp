#pragma once

// Synthetic OHLC bars with a planted, partially predictable direction signal.
// The latent price follows a stationary AR(2) oscillator
//     x_t = 2 r cos(w) x_{t-1} - r^2 x_{t-2} + innovation * e_t
// so the recent slope carries information about the move `horizon` steps
// ahead; observation noise on the bars caps how much.

#include <cstddef>
#include <cstdint>
#include <iosfwd>

#include "stockcnn/data.hpp"

namespace stockcnn {

struct SyntheticSpec {
    std::size_t rows = 20000;
    double persistence = 0.98;  // r, AR(2) root modulus
    double period = 60.0;       // 2*pi / w, in bars
    double innovation = 0.1;
    double noise = 0.1;  // observation noise on open/high/low/close
    double base = 100.0;
    std::uint64_t seed = 1;
};

RawFrame generate_ohlc(const SyntheticSpec& spec);

// Columns: Date,Time,Open,High,Low,Close,Index
void write_ohlc_csv(std::ostream& out, const RawFrame& frame);

}  // namespace stockcnn
