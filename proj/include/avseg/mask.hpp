#pragma once

#include <cstdint>
#include <vector>

#include "avseg/tensor.hpp"

namespace avseg {

/// Strictly binary H x W mask, 1 = foreground.
struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> v;  // values in {0,1}, row-major

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    int64_t count_fg() const {
        int64_t n = 0;
        for (uint8_t b : v) n += b;
        return n;
    }
    double fg_fraction() const { return v.empty() ? 0.0 : static_cast<double>(count_fg()) / v.size(); }
    bool same_shape(const BinaryMask& other) const { return h == other.h && w == other.w; }
    bool operator==(const BinaryMask& other) const = default;
};

/// Soft H x W mask with entries in [0,1] (post-sigmoid).
struct SoftMask {
    Tensor values;  // [H, W]

    int h() const { return values.dim(0); }
    int w() const { return values.dim(1); }
};

/// pixel 1 iff M(p) >= threshold; threshold must lie in (0,1)
BinaryMask binarize(const SoftMask& m, double threshold);

}  // namespace avseg
