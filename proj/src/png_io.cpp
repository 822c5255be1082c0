#include "avseg/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace avseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_impl(const std::string& path, int h, int w, int color_type, int bit_depth,
                    const std::vector<std::vector<uint8_t>>& rows) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write png: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png encode failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& row : rows) png_write_row(png, const_cast<png_bytep>(row.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open png: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png decode failed: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int orig_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && orig_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (orig_depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    ImageU8 img;
    img.h = static_cast<int>(png_get_image_height(png, info));
    img.w = static_cast<int>(png_get_image_width(png, info));
    img.ch = static_cast<int>(png_get_channels(png, info));
    if (img.ch != 1 && img.ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png has unsupported channel count: " + path);
    }
    img.px.resize(static_cast<size_t>(img.h) * img.w * img.ch);
    for (int y = 0; y < img.h; ++y)
        png_read_row(png, img.px.data() + static_cast<size_t>(y) * img.w * img.ch, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    // expand_gray_1_2_4_to_8 widens storage but keeps sample values; rescale
    if (color_type == PNG_COLOR_TYPE_GRAY && orig_depth < 8) {
        const int factor = orig_depth == 1 ? 255 : orig_depth == 2 ? 85 : 17;
        for (auto& v : img.px) v = static_cast<uint8_t>(v * factor);
    }
    return img;
}

void write_png_rgb8(const std::string& path, const ImageU8& img) {
    if (img.ch != 3) throw ConfigError("write_png_rgb8: expects 3 channels");
    std::vector<std::vector<uint8_t>> rows(static_cast<size_t>(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[static_cast<size_t>(y)].assign(img.px.begin() + static_cast<size_t>(y) * img.w * 3,
                                            img.px.begin() + static_cast<size_t>(y + 1) * img.w * 3);
    write_png_impl(path, img.h, img.w, PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png_gray8(const std::string& path, const ImageU8& img) {
    if (img.ch != 1) throw ConfigError("write_png_gray8: expects 1 channel");
    std::vector<std::vector<uint8_t>> rows(static_cast<size_t>(img.h));
    for (int y = 0; y < img.h; ++y)
        rows[static_cast<size_t>(y)].assign(img.px.begin() + static_cast<size_t>(y) * img.w,
                                            img.px.begin() + static_cast<size_t>(y + 1) * img.w);
    write_png_impl(path, img.h, img.w, PNG_COLOR_TYPE_GRAY, 8, rows);
}

void write_png_gray1(const std::string& path, const BinaryMask& mask) {
    const int bytes_per_row = (mask.w + 7) / 8;
    std::vector<std::vector<uint8_t>> rows(static_cast<size_t>(mask.h),
                                           std::vector<uint8_t>(static_cast<size_t>(bytes_per_row), 0));
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x)
            if (mask.at(y, x)) rows[static_cast<size_t>(y)][static_cast<size_t>(x) / 8] |= 0x80 >> (x % 8);
    write_png_impl(path, mask.h, mask.w, PNG_COLOR_TYPE_GRAY, 1, rows);
}

BinaryMask read_mask_png(const std::string& path) {
    ImageU8 img = read_png(path);
    BinaryMask m(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            // for rgb inputs use the first channel
            m.at(y, x) = img.at(y, x, 0) >= 128 ? 1 : 0;
        }
    return m;
}

ImageU8 tensor_to_rgb8(const Tensor& chw) {
    if (chw.rank() != 3 || chw.dim(0) != 3) throw ConfigError("tensor_to_rgb8: expects [3,H,W]");
    ImageU8 img;
    img.h = chw.dim(1);
    img.w = chw.dim(2);
    img.ch = 3;
    img.px.resize(static_cast<size_t>(img.h) * img.w * 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::min(std::max(chw(c, y, x), 0.0), 1.0);
                img.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0));
            }
    return img;
}

Tensor rgb8_to_tensor(const ImageU8& img) {
    if (img.ch != 3) throw DataError("rgb8_to_tensor: expected rgb image");
    Tensor t(Shape{3, img.h, img.w});
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) t(c, y, x) = img.at(y, x, c) / 255.0;
    return t;
}

ImageU8 softmask_to_gray8(const SoftMask& m) {
    ImageU8 img;
    img.h = m.h();
    img.w = m.w();
    img.ch = 1;
    img.px.resize(static_cast<size_t>(img.h) * img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const double v = std::min(std::max(m.values(y, x), 0.0), 1.0);
            img.at(y, x, 0) = static_cast<uint8_t>(std::lround(v * 255.0));
        }
    return img;
}

}  // namespace avseg
