#pragma once

#if defined(__SSE2__) || defined(_M_X64)
#include <xmmintrin.h>
#define STOCKCNN_HAVE_MXCSR 1
#endif

namespace stockcnn::detail {

// Flushes subnormal results and inputs to zero for the lifetime of the guard,
// on the calling thread only. Saturated sigmoid outputs push gradients deep into
// the subnormal range, where x86 arithmetic is many times slower.
class FlushDenormals {
public:
    FlushDenormals() {
#ifdef STOCKCNN_HAVE_MXCSR
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u);  // FTZ | DAZ
#endif
    }
    ~FlushDenormals() {
#ifdef STOCKCNN_HAVE_MXCSR
        _mm_setcsr(saved_);
#endif
    }
    FlushDenormals(const FlushDenormals&) = delete;
    FlushDenormals& operator=(const FlushDenormals&) = delete;

private:
    unsigned saved_ = 0;
};

}  // namespace stockcnn::detail
