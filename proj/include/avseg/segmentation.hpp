#pragma once

#include <vector>

#include "avseg/fusion.hpp"
#include "avseg/mask.hpp"
#include "avseg/nn.hpp"

namespace avseg {

struct DecoderConfig {
    int pyramid_channels = 24;

    std::string canonical_string() const {
        return "decoder{P=" + std::to_string(pyramid_channels) + "}";
    }
};

/// FPN-style top-down decoder: 1x1 laterals onto a common width, upsample the
/// deeper path and add the shallower lateral, 3x3 smoothing conv per merge,
/// then a 1-channel head, bilinear upsample to image resolution
/// (align_corners off) and sigmoid.
class FpnDecoder {
public:
    FpnDecoder(int dim_in, int stages, DecoderConfig cfg, Rng& rng);

    /// stages: shallow to deep, each [B,D,h,w]; returns [B,1,out_h,out_w].
    ad::Var forward(const std::vector<ad::Var>& stages, int out_h, int out_w) const;

    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }

private:
    int stages_ = 0;
    nn::ParamSet params_;
    std::vector<nn::Conv2d> laterals_;  // per stage, 1x1 D->P
    std::vector<nn::Conv2d> smooths_;   // per merge, 3x3 P->P
    nn::Conv2d head_;                   // 1x1 P->1
};

/// Single-sample decode of fused features to a soft mask.
SoftMask decode(const FusedFeatures& z, const FpnDecoder& decoder, int out_h, int out_w);

}  // namespace avseg
