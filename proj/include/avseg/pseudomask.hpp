#pragma once

#include <memory>
#include <string>
#include <vector>

#include "avseg/encoders.hpp"
#include "avseg/mask.hpp"
#include "avseg/optim.hpp"

namespace avseg {

/// Class-agnostic activation map, entries in [0,1].
struct ClassAgnosticMap {
    Tensor values;  // [D_A, H, W]

    int channels() const { return values.dim(0); }
    int h() const { return values.dim(1); }
    int w() const { return values.dim(2); }
};

/// Salient-region score map, entries in [0,1]. Under the literal labeling
/// rule this is the zero-labeled channel of the argmax fusion.
struct SaliencyMap {
    Tensor values;  // [1, H, W]
};

/// Labels for the concatenated [S;A] channels: zeros for the saliency
/// channel, ones for the class-agnostic channels (optionally inverted).
struct LabelTensor {
    int map_channels = 1;
    bool invert_saliency_label = false;

    uint8_t label_for_channel(int c) const {
        const bool saliency = c == 0;
        return static_cast<uint8_t>((saliency != invert_saliency_label) ? 0 : 1);
    }
};

struct CcamConfig {
    int map_channels = 1;        // D_A; single class-agnostic channel by default
    double fallback_eps = 1e-6;  // weight mass below this triggers mean pooling
    int out_h = 64, out_w = 64;  // activation maps are upsampled to image size
    bool invert_saliency_label = false;
    bool orient_fg_minority = true;  // flip A when it activates the majority region

    std::string canonical_string() const;
};

/// Learned 1x1 projection + sigmoid producing the activation map.
struct CcamHead {
    nn::ParamSet params;
    nn::Conv2d proj;

    CcamHead() = default;
    CcamHead(int in_channels, const CcamConfig& cfg, Rng& rng);
};

struct CcamStepResult {
    std::vector<ClassAgnosticMap> maps;  // image resolution, one per batch item
    double loss = 0.0;
    bool fg_fallback = false;  // some row pooled by unweighted mean
    bool bg_fallback = false;
};

/// Builds the fg/bg contrastive objective on a batch of deepest-stage visual
/// features [B,C,h,w]:
///   mean over pairs i<j of (1 - cos(fg_i, fg_j)) + (1 - cos(bg_i, bg_j))
///   + mean over all ordered pairs of max(0, cos(fg_i, bg_j))
/// where fg/bg are activation-/(1-activation)-weighted pooled features.
/// Returns (loss, feature-resolution activation). Gradients flow through
/// `features` to whatever produced them.
std::pair<ad::Var, ad::Var> ccam_objective(const ad::Var& features, const CcamHead& head,
                                           const CcamConfig& cfg, bool* fg_fallback = nullptr,
                                           bool* bg_fallback = nullptr);

/// One optimization step of the objective; mutates the parameters covered by
/// `opt` (head, and encoder too when its params are registered with opt).
CcamStepResult ccam_train_step(const ad::Var& features, const CcamHead& head, Adam& opt,
                               const CcamConfig& cfg);

/// Default detector-free saliency provider: normalized background activation
/// 1 - max_c A, min-max rescaled to [0,1]; constant maps yield uniform 0.5.
SaliencyMap derive_saliency(const ClassAgnosticMap& a);

/// Eq-style argmax fusion: concatenate [S;A], per-pixel channel argmax (ties
/// toward the lowest channel, i.e. toward saliency), label lookup.
BinaryMask refine_pseudo_mask(const SaliencyMap& s, const ClassAgnosticMap& a,
                              bool invert_saliency_label = false);

/// Trained CCAM phase artifacts: shallow encoder + head + orientation flag.
struct CcamModel {
    EncoderConfig encoder_cfg;
    CcamConfig ccam_cfg;
    std::unique_ptr<VisualEncoder> encoder;
    CcamHead head;
    bool flip_activation = false;

    CcamModel(EncoderConfig enc_cfg, CcamConfig cfg);

    /// Deepest-stage features for a [B,3,H,W] image batch.
    ad::Var deepest_features(const ad::Var& images) const;
    /// Image-resolution activation map for one [3,H,W] image (eval path,
    /// orientation flip applied).
    ClassAgnosticMap activation_for(const Tensor& image) const;
    BinaryMask pseudo_mask_for(const Tensor& image) const;
};

struct PseudoMaskManifestEntry {
    std::string id;
    std::string path;
    double fg_pixel_fraction = 0.0;
};

/// Writes one 1-bit mask PNG per sample plus manifest.jsonl; overwrites are
/// idempotent. Returns the manifest entries in input order.
std::vector<PseudoMaskManifestEntry> export_pseudo_masks(
    const std::vector<std::pair<std::string, const Tensor*>>& samples, const CcamModel& model,
    const std::string& out_dir);

}  // namespace avseg
