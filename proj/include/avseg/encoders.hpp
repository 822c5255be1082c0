#pragma once

#include <utility>
#include <vector>

#include "avseg/audio.hpp"
#include "avseg/nn.hpp"

namespace avseg {

/// D-dimensional global audio embedding.
using GlobalAudioEmbedding = Tensor;  // [D]

/// Per-stage projected feature maps, shallow to deep, all with channel dim D
/// and strictly decreasing spatial size.
struct MultiScaleVisualFeatures {
    std::vector<Tensor> stages;  // stage s: [D, H^s, W^s]

    std::vector<std::pair<int, int>> stage_shapes() const {
        std::vector<std::pair<int, int>> out;
        for (const auto& t : stages) out.emplace_back(t.dim(1), t.dim(2));
        return out;
    }
};

struct EncoderConfig {
    int dim = 16;    // D, shared channel dim after projection heads
    int stages = 4;  // S, number of (deepest) pyramid stages exposed
    // toy backbone: stem conv /2 then one /2 block per entry; stage s output
    // lives at stride 2^(s+1)
    std::vector<int> visual_widths = {12, 16, 24, 32, 48};  // stem + blocks
    std::vector<int> audio_widths = {8, 16, 32};
    int image_h = 64, image_w = 64;
    int spec_bins = 64, spec_frames = 64;
    uint64_t init_seed = 1234;
    bool per_stage_heads = true;  // g_v is per-stage (not shared)

    int blocks() const { return static_cast<int>(visual_widths.size()) - 1; }
    int total_stride() const { return 2 << blocks(); }
    void validate() const;
    std::string canonical_string() const;
    uint64_t hash() const;
};

/// Toy strided conv backbone plus per-stage 1x1 projection heads. forward()
/// returns the deepest `stages` pyramid levels, shallow to deep.
class VisualEncoder {
public:
    VisualEncoder(const EncoderConfig& cfg, Rng& rng);

    std::vector<ad::Var> forward(const ad::Var& images) const;  // [B,3,H,W]
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }
    const EncoderConfig& config() const { return cfg_; }

private:
    EncoderConfig cfg_;
    nn::ParamSet params_;
    nn::Conv2d stem_;
    struct Block {
        nn::Conv2d down, keep;
    };
    std::vector<Block> blocks_;
    std::vector<nn::Conv2d> heads_;  // 1x1, one per exposed stage
};

/// Conv stack over the spectrogram, global average pool, linear head to D.
class AudioEncoder {
public:
    AudioEncoder(const EncoderConfig& cfg, Rng& rng);

    ad::Var forward(const ad::Var& specs) const;  // [B,1,F,T] -> [B,D]
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }

private:
    EncoderConfig cfg_;
    nn::ParamSet params_;
    std::vector<nn::Conv2d> convs_;
    nn::Linear head_;
};

// single-sample entry points (eval mode, deterministic)
GlobalAudioEmbedding encode_audio(const Spectrogram& s, const EncoderConfig& cfg, const AudioEncoder& enc);
MultiScaleVisualFeatures encode_visual(const Tensor& image_3hw, const EncoderConfig& cfg,
                                       const VisualEncoder& enc);

}  // namespace avseg
