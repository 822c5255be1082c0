#include "avseg/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "avseg/png_io.hpp"

namespace avseg {

namespace {

struct Canvas {
    ImageU8 img;

    Canvas(int h, int w) {
        img.h = h;
        img.w = w;
        img.ch = 3;
        img.px.assign(static_cast<size_t>(h) * w * 3, 255);
    }
    void set(int y, int x, uint8_t r, uint8_t g, uint8_t b) {
        if (y < 0 || y >= img.h || x < 0 || x >= img.w) return;
        img.at(y, x, 0) = r;
        img.at(y, x, 1) = g;
        img.at(y, x, 2) = b;
    }
    void line(int y0, int x0, int y1, int x1, uint8_t r, uint8_t g, uint8_t b) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(y0, x0, r, g, b);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }
};

// 3x5 glyphs for numeric labels, rows top to bottom, 3 bits each
struct Glyph {
    char ch;
    uint8_t rows[5];
};
constexpr Glyph kGlyphs[] = {
    {'0', {0b111, 0b101, 0b101, 0b101, 0b111}}, {'1', {0b010, 0b110, 0b010, 0b010, 0b111}},
    {'2', {0b111, 0b001, 0b111, 0b100, 0b111}}, {'3', {0b111, 0b001, 0b111, 0b001, 0b111}},
    {'4', {0b101, 0b101, 0b111, 0b001, 0b001}}, {'5', {0b111, 0b100, 0b111, 0b001, 0b111}},
    {'6', {0b111, 0b100, 0b111, 0b101, 0b111}}, {'7', {0b111, 0b001, 0b001, 0b001, 0b001}},
    {'8', {0b111, 0b101, 0b111, 0b101, 0b111}}, {'9', {0b111, 0b101, 0b111, 0b001, 0b111}},
    {'.', {0b000, 0b000, 0b000, 0b000, 0b010}}, {'-', {0b000, 0b000, 0b111, 0b000, 0b000}},
    {'+', {0b000, 0b010, 0b111, 0b010, 0b000}}, {'e', {0b000, 0b111, 0b110, 0b100, 0b111}},
};

void draw_text(Canvas& c, int y, int x, const std::string& text) {
    constexpr int scale = 2;
    for (char ch : text) {
        for (const auto& g : kGlyphs) {
            if (g.ch != ch) continue;
            for (int r = 0; r < 5; ++r)
                for (int q = 0; q < 3; ++q)
                    if (g.rows[r] & (0b100 >> q))
                        for (int sy = 0; sy < scale; ++sy)
                            for (int sx = 0; sx < scale; ++sx)
                                c.set(y + r * scale + sy, x + q * scale + sx, 40, 40, 40);
            break;
        }
        x += 4 * scale;
    }
}

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

constexpr uint8_t kColors[][3] = {{214, 69, 65}, {31, 119, 180}, {44, 160, 44}, {148, 103, 189},
                                  {255, 127, 14}, {23, 190, 207}};

}  // namespace

void render_line_chart(const std::string& path, const std::string& title, const std::vector<Series>& series,
                       int width, int height) {
    (void)title;  // charts are labeled by filename; raster text covers numbers only
    Canvas canvas(height, width);
    const int ml = 64, mr = 16, mt = 20, mb = 36;
    const int x0 = ml, x1 = width - mr, y0 = mt, y1 = height - mb;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    auto px = [&](double x) { return x0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0))); };
    auto py = [&](double y) { return y1 - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (y1 - y0))); };

    // frame and gridlines
    for (int g = 0; g <= 4; ++g) {
        const int gy = y0 + (y1 - y0) * g / 4;
        const int gx = x0 + (x1 - x0) * g / 4;
        canvas.line(gy, x0, gy, x1, 225, 225, 225);
        canvas.line(y0, gx, y1, gx, 225, 225, 225);
    }
    canvas.line(y0, x0, y1, x0, 0, 0, 0);
    canvas.line(y1, x0, y1, x1, 0, 0, 0);
    canvas.line(y0, x1, y1, x1, 0, 0, 0);
    canvas.line(y0, x0, y0, x1, 0, 0, 0);

    draw_text(canvas, y1 + 6, x0 - 8, fmt_num(xmin));
    draw_text(canvas, y1 + 6, x1 - 24, fmt_num(xmax));
    draw_text(canvas, y1 - 10, 8, fmt_num(ymin));
    draw_text(canvas, y0, 8, fmt_num(ymax));

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const auto* c = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
        for (size_t i = 0; i + 1 < s.x.size(); ++i)
            canvas.line(py(s.y[i]), px(s.x[i]), py(s.y[i + 1]), px(s.x[i + 1]), c[0], c[1], c[2]);
        if (s.x.size() == 1) {  // single-point series: draw a visible dot
            const int cy = py(s.y[0]), cx = px(s.x[0]);
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx) canvas.set(cy + dy, cx + dx, c[0], c[1], c[2]);
        }
        // legend swatch, top-left
        const int ly = y0 + 6 + static_cast<int>(si) * 10;
        for (int dy = 0; dy < 6; ++dy)
            for (int dx = 0; dx < 14; ++dx) canvas.set(ly + dy, x0 + 6 + dx, c[0], c[1], c[2]);
    }

    write_png_rgb8(path, canvas.img);
}

}  // namespace avseg
