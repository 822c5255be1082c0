#pragma once

#include <vector>

#include "avseg/encoders.hpp"
#include "avseg/nn.hpp"

namespace avseg {

/// Audio-visual feature maps after the pixel-wise fusion update, same shapes
/// as the visual input stages.
struct FusedFeatures {
    std::vector<Tensor> stages;  // stage s: [D, H^s, W^s]
};

struct FusionConfig {
    bool use_bias = false;  // theta/phi/omega/mu are bias-free projections

    std::string canonical_string() const { return std::string("fusion{bias=") + (use_bias ? "1" : "0") + "}"; }
};

/// Per-stage 1x1 projections mu/theta/phi/omega (each D->D) and the residual
/// attention update
///   z = v + mu( (theta(v)^T phi(a_dup) / HW) omega(v) )
/// computed in its algebraically equivalent rank-1 form: the duplicated audio
/// makes every attention row equal, so row i collapses to
/// <theta(v_i), phi(a)>/HW times the spatial sum of omega(v).
/// mu starts at zero, so a fresh module is the identity map.
class FusionModule {
public:
    FusionModule(int dim, int stages, FusionConfig cfg, Rng& rng);

    ad::Var fuse_stage(const ad::Var& v, const ad::Var& a, int stage_index) const;
    std::vector<ad::Var> fuse_all(const std::vector<ad::Var>& stages, const ad::Var& a) const;

    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }
    int dim() const { return dim_; }
    int stages() const { return stages_; }

private:
    int dim_ = 0, stages_ = 0;
    FusionConfig cfg_;
    nn::ParamSet params_;
    struct StageParams {
        ad::Var mu_w, theta_w, omega_w;  // [D,D,1,1]
        ad::Var phi_w;                   // [D,D]
        ad::Var mu_b, theta_b, omega_b, phi_b;
    };
    std::vector<StageParams> stage_params_;
};

/// D x h x w map with every spatial location equal to `a`.
Tensor duplicate_audio(const Tensor& a, int h, int w);

/// Max over spatial locations of cos(a, v[:,p]). Visual norms are clamped at
/// eps so zero-norm locations contribute similarity 0; a (near-)zero-norm
/// audio vector is an error.
Scalar max_pooled_similarity(const Tensor& a, const Tensor& v, Scalar eps = 1e-8);

// single-sample wrappers over the module
FusedFeatures fuse_all(const MultiScaleVisualFeatures& v, const GlobalAudioEmbedding& a,
                       const FusionModule& fusion);

}  // namespace avseg
