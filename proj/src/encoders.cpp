#include "avseg/encoders.hpp"

#include <sstream>

#include "avseg/checkpoint.hpp"

namespace avseg {

void EncoderConfig::validate() const {
    if (dim < 2) throw ConfigError("encoder: D must be >= 2");
    if (stages < 1 || stages > 4) throw ConfigError("encoder: S must be in {1,2,3,4}");
    if (visual_widths.size() < 2 || visual_widths.size() > 5)
        throw ConfigError("encoder: visual_widths needs stem plus 1..4 block widths");
    if (stages > blocks()) throw ConfigError("encoder: S exceeds backbone depth");
    if (audio_widths.empty()) throw ConfigError("encoder: audio_widths empty");
    for (int w : visual_widths)
        if (w < 1) throw ConfigError("encoder: nonpositive width");
    for (int w : audio_widths)
        if (w < 1) throw ConfigError("encoder: nonpositive width");
    const int stride = total_stride();
    if (image_h % stride != 0 || image_w % stride != 0)
        throw ConfigError("encoder: image " + std::to_string(image_h) + "x" + std::to_string(image_w) +
                          " not divisible by backbone stride " + std::to_string(stride));
    if (image_h % (1 << stages) != 0 || image_w % (1 << stages) != 0)
        throw ConfigError("encoder: image size not divisible by 2^S");
    if (spec_bins < 8 || spec_frames < 8) throw ConfigError("encoder: spectrogram too small (min 8x8)");
}

std::string EncoderConfig::canonical_string() const {
    std::ostringstream os;
    os << "encoder{D=" << dim << ";S=" << stages << ";vw=";
    for (size_t i = 0; i < visual_widths.size(); ++i) os << (i ? "," : "") << visual_widths[i];
    os << ";aw=";
    for (size_t i = 0; i < audio_widths.size(); ++i) os << (i ? "," : "") << audio_widths[i];
    os << ";img=" << image_h << "x" << image_w << ";spec=" << spec_bins << "x" << spec_frames
       << ";seed=" << init_seed << ";per_stage_heads=" << (per_stage_heads ? 1 : 0) << "}";
    return os.str();
}

uint64_t EncoderConfig::hash() const { return fnv1a64(canonical_string()); }

VisualEncoder::VisualEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const auto& w = cfg_.visual_widths;
    stem_ = nn::Conv2d(params_, "visual.stem", 3, w[0], 3, 2, 1, rng);
    for (int b = 1; b <= cfg_.blocks(); ++b) {
        Block blk;
        blk.down = nn::Conv2d(params_, "visual.block" + std::to_string(b) + ".down", w[static_cast<size_t>(b) - 1],
                              w[static_cast<size_t>(b)], 3, 2, 1, rng);
        blk.keep = nn::Conv2d(params_, "visual.block" + std::to_string(b) + ".keep", w[static_cast<size_t>(b)],
                              w[static_cast<size_t>(b)], 3, 1, 1, rng);
        blocks_.push_back(blk);
    }
    // heads for the deepest S stages only; per-stage projections
    const int first = cfg_.blocks() - cfg_.stages + 1;
    for (int s = 0; s < cfg_.stages; ++s) {
        const int b = first + s;
        heads_.emplace_back(params_, "visual.head" + std::to_string(s + 1), w[static_cast<size_t>(b)], cfg_.dim, 1,
                            1, 0, rng);
    }
}

std::vector<ad::Var> VisualEncoder::forward(const ad::Var& images) const {
    const Tensor& v = images->value;
    if (v.rank() != 4 || v.dim(1) != 3 || v.dim(2) != cfg_.image_h || v.dim(3) != cfg_.image_w)
        throw ConfigError("visual encoder: expected [B,3," + std::to_string(cfg_.image_h) + "," +
                          std::to_string(cfg_.image_w) + "], got " + v.shape_str());
    ad::Var x = ad::relu(stem_.forward(images));
    std::vector<ad::Var> taps;
    for (const auto& blk : blocks_) {
        x = ad::relu(blk.down.forward(x));
        x = ad::relu(blk.keep.forward(x));
        taps.push_back(x);
    }
    std::vector<ad::Var> out;
    const int first = cfg_.blocks() - cfg_.stages;
    for (int s = 0; s < cfg_.stages; ++s) out.push_back(heads_[static_cast<size_t>(s)].forward(taps[static_cast<size_t>(first + s)]));
    return out;
}

AudioEncoder::AudioEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    int in_ch = 1;
    for (size_t i = 0; i < cfg_.audio_widths.size(); ++i) {
        convs_.emplace_back(params_, "audio.conv" + std::to_string(i + 1), in_ch, cfg_.audio_widths[i], 3, 2, 1,
                            rng);
        in_ch = cfg_.audio_widths[i];
    }
    head_ = nn::Linear(params_, "audio.head", in_ch, cfg_.dim, rng);
}

ad::Var AudioEncoder::forward(const ad::Var& specs) const {
    const Tensor& v = specs->value;
    if (v.rank() != 4 || v.dim(1) != 1 || v.dim(2) != cfg_.spec_bins || v.dim(3) != cfg_.spec_frames)
        throw ConfigError("audio encoder: expected [B,1," + std::to_string(cfg_.spec_bins) + "," +
                          std::to_string(cfg_.spec_frames) + "], got " + v.shape_str());
    ad::Var x = specs;
    for (const auto& c : convs_) x = ad::relu(c.forward(x));
    return head_.forward(ad::global_avg_pool(x));
}

GlobalAudioEmbedding encode_audio(const Spectrogram& s, const EncoderConfig& cfg, const AudioEncoder& enc) {
    if (s.freq_bins() != cfg.spec_bins || s.time_steps() != cfg.spec_frames)
        throw ConfigError("encode_audio: expected spectrogram " + std::to_string(cfg.spec_bins) + "x" +
                          std::to_string(cfg.spec_frames) + ", got " + std::to_string(s.freq_bins()) + "x" +
                          std::to_string(s.time_steps()));
    ad::Var in = ad::constant(s.values.reshaped({1, 1, s.freq_bins(), s.time_steps()}));
    Tensor out = enc.forward(in)->value;  // [1,D]
    return out.reshaped({out.dim(1)});
}

MultiScaleVisualFeatures encode_visual(const Tensor& image_3hw, const EncoderConfig& cfg,
                                       const VisualEncoder& enc) {
    if (image_3hw.rank() != 3 || image_3hw.dim(0) != 3)
        throw ConfigError("encode_visual: expected [3,H,W], got " + image_3hw.shape_str());
    if (image_3hw.dim(1) != cfg.image_h || image_3hw.dim(2) != cfg.image_w)
        throw ConfigError("encode_visual: expected " + std::to_string(cfg.image_h) + "x" +
                          std::to_string(cfg.image_w) + " image, got " + std::to_string(image_3hw.dim(1)) + "x" +
                          std::to_string(image_3hw.dim(2)));
    ad::Var in = ad::constant(image_3hw.reshaped({1, 3, cfg.image_h, cfg.image_w}));
    MultiScaleVisualFeatures out;
    for (const auto& stage : enc.forward(in)) {
        const Tensor& t = stage->value;  // [1,D,h,w]
        out.stages.push_back(t.reshaped({t.dim(1), t.dim(2), t.dim(3)}));
    }
    return out;
}

}  // namespace avseg
