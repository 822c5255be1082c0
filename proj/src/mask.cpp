#include "avseg/mask.hpp"

namespace avseg {

BinaryMask binarize(const SoftMask& m, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("binarize: threshold must be in (0,1)");
    BinaryMask out(m.h(), m.w());
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) out.at(y, x) = m.values(y, x) >= threshold ? 1 : 0;
    return out;
}

}  // namespace avseg
