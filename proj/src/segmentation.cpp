#include "avseg/segmentation.hpp"

namespace avseg {

FpnDecoder::FpnDecoder(int dim_in, int stages, DecoderConfig cfg, Rng& rng) : stages_(stages) {
    if (stages < 1) throw ConfigError("decoder: needs at least one stage");
    if (cfg.pyramid_channels < 1) throw ConfigError("decoder: pyramid_channels must be >= 1");
    for (int s = 0; s < stages; ++s)
        laterals_.emplace_back(params_, "decoder.lateral" + std::to_string(s + 1), dim_in, cfg.pyramid_channels,
                               1, 1, 0, rng);
    for (int s = 0; s + 1 < stages; ++s)
        smooths_.emplace_back(params_, "decoder.smooth" + std::to_string(s + 1), cfg.pyramid_channels,
                              cfg.pyramid_channels, 3, 1, 1, rng);
    // zero head => logits 0 => mask 0.5 everywhere on a fresh model
    head_ = nn::Conv2d(params_, "decoder.head", cfg.pyramid_channels, 1, 1, 1, 0, rng);
    head_.w->value.zero();
}

ad::Var FpnDecoder::forward(const std::vector<ad::Var>& stages, int out_h, int out_w) const {
    if (static_cast<int>(stages.size()) != stages_)
        throw ConfigError("decoder: expected " + std::to_string(stages_) + " stages, got " +
                          std::to_string(stages.size()));
    for (size_t s = 0; s + 1 < stages.size(); ++s) {
        const Tensor& a = stages[s]->value;
        const Tensor& b = stages[s + 1]->value;
        if (a.dim(2) < b.dim(2) || a.dim(3) < b.dim(3))
            throw ConfigError("decoder: stage " + std::to_string(s + 1) + " (" + a.shape_str() +
                              ") is not shallower than stage " + std::to_string(s + 2) + " (" + b.shape_str() +
                              ")");
    }
    // top-down pathway, deepest first
    ad::Var p = laterals_.back().forward(stages.back());
    for (int s = stages_ - 2; s >= 0; --s) {
        const Tensor& target = stages[static_cast<size_t>(s)]->value;
        ad::Var up = ad::upsample_bilinear(p, target.dim(2), target.dim(3));
        ad::Var merged = ad::add(laterals_[static_cast<size_t>(s)].forward(stages[static_cast<size_t>(s)]), up);
        p = ad::relu(smooths_[static_cast<size_t>(s)].forward(merged));
    }
    ad::Var logits = head_.forward(p);
    return ad::sigmoid(ad::upsample_bilinear(logits, out_h, out_w));
}

SoftMask decode(const FusedFeatures& z, const FpnDecoder& decoder, int out_h, int out_w) {
    if (z.stages.empty()) throw ConfigError("decode: no stages");
    std::vector<ad::Var> stages;
    for (const auto& s : z.stages) stages.push_back(ad::constant(s.reshaped({1, s.dim(0), s.dim(1), s.dim(2)})));
    Tensor m = decoder.forward(stages, out_h, out_w)->value;
    return SoftMask{m.reshaped({out_h, out_w})};
}

}  // namespace avseg
