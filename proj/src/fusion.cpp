#include "avseg/fusion.hpp"

#include <cmath>

namespace avseg {

FusionModule::FusionModule(int dim, int stages, FusionConfig cfg, Rng& rng)
    : dim_(dim), stages_(stages), cfg_(cfg) {
    if (dim < 1 || stages < 1) throw ConfigError("fusion: dim and stages must be >= 1");
    for (int s = 1; s <= stages; ++s) {
        const std::string p = "fusion.stage" + std::to_string(s);
        StageParams sp;
        // mu zeroed: the residual branch starts disabled
        sp.mu_w = params_.add(p + ".mu.w", Tensor(Shape{dim, dim, 1, 1}));
        sp.theta_w = params_.add(p + ".theta.w", nn::init_uniform_fan_in({dim, dim, 1, 1}, dim, rng));
        sp.omega_w = params_.add(p + ".omega.w", nn::init_uniform_fan_in({dim, dim, 1, 1}, dim, rng));
        sp.phi_w = params_.add(p + ".phi.w", nn::init_uniform_fan_in({dim, dim}, dim, rng));
        if (cfg_.use_bias) {
            sp.mu_b = params_.add(p + ".mu.b", Tensor(Shape{dim}));
            sp.theta_b = params_.add(p + ".theta.b", Tensor(Shape{dim}));
            sp.omega_b = params_.add(p + ".omega.b", Tensor(Shape{dim}));
            sp.phi_b = params_.add(p + ".phi.b", Tensor(Shape{dim}));
        }
        stage_params_.push_back(sp);
    }
}

ad::Var FusionModule::fuse_stage(const ad::Var& v, const ad::Var& a, int stage_index) const {
    if (stage_index < 0 || stage_index >= stages_) throw ConfigError("fuse_stage: stage index out of range");
    const Tensor& vv = v->value;
    if (vv.rank() != 4 || vv.dim(1) != dim_)
        throw ConfigError("fuse_stage: visual features " + vv.shape_str() + " do not match D=" + std::to_string(dim_));
    if (a->value.rank() != 2 || a->value.dim(1) != dim_ || a->value.dim(0) != vv.dim(0))
        throw ConfigError("fuse_stage: audio " + a->value.shape_str() + " does not match visual " + vv.shape_str());

    const auto& sp = stage_params_[static_cast<size_t>(stage_index)];
    const int hw = vv.dim(2) * vv.dim(3);
    ad::Var theta_v = ad::conv2d(v, sp.theta_w, sp.theta_b, 1, 0);
    ad::Var phi_a = ad::linear(a, sp.phi_w, sp.phi_b);
    ad::Var attn = ad::affine(ad::dot_map_vec(theta_v, phi_a), 1.0 / hw, 0.0);  // [B,1,h,w]
    ad::Var omega_sum = ad::spatial_sum(ad::conv2d(v, sp.omega_w, sp.omega_b, 1, 0));
    ad::Var mixed = ad::mul_map_vec(attn, omega_sum);  // [B,D,h,w]
    return ad::add(v, ad::conv2d(mixed, sp.mu_w, sp.mu_b, 1, 0));
}

std::vector<ad::Var> FusionModule::fuse_all(const std::vector<ad::Var>& stages, const ad::Var& a) const {
    if (static_cast<int>(stages.size()) != stages_)
        throw ConfigError("fuse_all: expected " + std::to_string(stages_) + " stages, got " +
                          std::to_string(stages.size()));
    std::vector<ad::Var> out;
    out.reserve(stages.size());
    for (size_t s = 0; s < stages.size(); ++s) out.push_back(fuse_stage(stages[s], a, static_cast<int>(s)));
    return out;
}

Tensor duplicate_audio(const Tensor& a, int h, int w) {
    if (a.rank() != 1) throw ConfigError("duplicate_audio: expects a rank-1 vector");
    if (h < 1 || w < 1) throw ConfigError("duplicate_audio: h,w must be >= 1");
    const int d = a.dim(0);
    Tensor out(Shape{d, h, w});
    for (int c = 0; c < d; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out(c, y, x) = a(c);
    return out;
}

Scalar max_pooled_similarity(const Tensor& a, const Tensor& v, Scalar eps) {
    if (a.rank() != 1 || v.rank() != 3 || v.dim(0) != a.dim(0))
        throw ConfigError("max_pooled_similarity: audio " + a.shape_str() + " vs visual " + v.shape_str());
    const int d = a.dim(0), hw = v.dim(1) * v.dim(2);
    Scalar na = 0.0;
    for (int i = 0; i < d; ++i) na += a(i) * a(i);
    na = std::sqrt(na);
    if (na < 1e-12) throw ConfigError("degenerate audio embedding (zero norm)");
    na = std::max(na, eps);
    Scalar best = -2.0;
    for (int p = 0; p < hw; ++p) {
        Scalar dot = 0.0, nsq = 0.0;
        for (int i = 0; i < d; ++i) {
            const Scalar vv = v.data()[static_cast<int64_t>(i) * hw + p];
            dot += a(i) * vv;
            nsq += vv * vv;
        }
        best = std::max(best, dot / (na * std::max(std::sqrt(nsq), eps)));
    }
    return best;
}

FusedFeatures fuse_all(const MultiScaleVisualFeatures& v, const GlobalAudioEmbedding& a,
                       const FusionModule& fusion) {
    ad::Var av = ad::constant(a.reshaped({1, a.dim(0)}));
    std::vector<ad::Var> stages;
    for (const auto& s : v.stages) stages.push_back(ad::constant(s.reshaped({1, s.dim(0), s.dim(1), s.dim(2)})));
    FusedFeatures out;
    for (const auto& z : fusion.fuse_all(stages, av)) {
        const Tensor& t = z->value;
        out.stages.push_back(t.reshaped({t.dim(1), t.dim(2), t.dim(3)}));
    }
    return out;
}

}  // namespace avseg
