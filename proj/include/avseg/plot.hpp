#pragma once

#include <string>
#include <vector>

namespace avseg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

/// Minimal line-chart renderer (axis box, gridlines, numeric range labels,
/// legend swatches) written as an RGB PNG.
void render_line_chart(const std::string& path, const std::string& title, const std::vector<Series>& series,
                       int width = 720, int height = 440);

}  // namespace avseg
