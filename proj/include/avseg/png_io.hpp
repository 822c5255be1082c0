#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avseg/mask.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

/// 8-bit interleaved image, ch in {1, 3}.
struct ImageU8 {
    int h = 0, w = 0, ch = 0;
    std::vector<uint8_t> px;

    uint8_t at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * ch + c]; }
    uint8_t& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * ch + c]; }
};

/// Decodes to 8-bit gray or RGB; palette and 16-bit inputs are converted,
/// alpha is stripped, sub-byte gray depths are rescaled to full range.
ImageU8 read_png(const std::string& path);

void write_png_rgb8(const std::string& path, const ImageU8& img);
void write_png_gray8(const std::string& path, const ImageU8& img);
/// 1-bit grayscale; mask value 1 is written as white (displays as 255).
void write_png_gray1(const std::string& path, const BinaryMask& mask);

/// Grayscale read as a mask: foreground iff sample >= 128.
BinaryMask read_mask_png(const std::string& path);

// [3,H,W] in [0,1] <-> 8-bit RGB
ImageU8 tensor_to_rgb8(const Tensor& chw);
Tensor rgb8_to_tensor(const ImageU8& img);

ImageU8 softmask_to_gray8(const SoftMask& m);

}  // namespace avseg
