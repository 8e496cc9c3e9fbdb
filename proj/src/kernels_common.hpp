#pragma once

#include <cmath>
#include <limits>

namespace tracknet::kernels::detail {

// Outward-rounded float stores for interval bounds: the double result is
// bracketed so the float interval still contains it.
inline float store_lo(double v) {
    float f = static_cast<float>(v);
    if (static_cast<double>(f) > v) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
    return f;
}

inline float store_hi(double v) {
    float f = static_cast<float>(v);
    if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
    return f;
}

}  // namespace tracknet::kernels::detail
