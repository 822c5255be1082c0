#include "avseg/pseudomask.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "avseg/kernels.hpp"
#include "avseg/png_io.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace avseg {

std::string CcamConfig::canonical_string() const {
    std::ostringstream os;
    os << "ccam{DA=" << map_channels << ";out=" << out_h << "x" << out_w
       << ";invert=" << (invert_saliency_label ? 1 : 0) << ";orient=" << (orient_fg_minority ? 1 : 0) << "}";
    return os.str();
}

CcamHead::CcamHead(int in_channels, const CcamConfig& cfg, Rng& rng) {
    if (cfg.map_channels < 1) throw ConfigError("ccam: map_channels must be >= 1");
    proj = nn::Conv2d(params, "ccam.proj", in_channels, cfg.map_channels, 1, 1, 0, rng);
}

std::pair<ad::Var, ad::Var> ccam_objective(const ad::Var& features, const CcamHead& head,
                                           const CcamConfig& cfg, bool* fg_fallback, bool* bg_fallback) {
    const Tensor& f = features->value;
    if (f.rank() != 4) throw ConfigError("ccam: features must be [B,C,h,w]");
    const int b = f.dim(0);
    if (b < 2) throw ConfigError("ccam training needs a batch of >= 2");

    ad::Var act = ad::sigmoid(head.proj.forward(features));  // [B,DA,h,w]
    ad::Var weight = cfg.map_channels == 1 ? act : ad::channel_max(act);

    std::vector<bool> fb_rows;
    ad::Var fg = ad::weighted_pool(features, weight, cfg.fallback_eps, &fb_rows);
    bool any_fg = false;
    for (bool v : fb_rows) any_fg = any_fg || v;
    ad::Var bg = ad::weighted_pool(features, ad::affine(weight, -1.0, 1.0), cfg.fallback_eps, &fb_rows);
    bool any_bg = false;
    for (bool v : fb_rows) any_bg = any_bg || v;
    if (fg_fallback) *fg_fallback = any_fg;
    if (bg_fallback) *bg_fallback = any_bg;

    // positive pairs over i<j, negatives over all ordered pairs incl. i==j
    Tensor upper(Shape{b, b});
    for (int i = 0; i < b; ++i)
        for (int j = i + 1; j < b; ++j) upper(i, j) = 1.0;
    const double n_pos = b * (b - 1) / 2.0;
    ad::Var mask_upper = ad::constant(upper);

    auto pos_term = [&](const ad::Var& cosm) {
        return ad::affine(ad::sum(ad::mul(ad::affine(cosm, -1.0, 1.0), mask_upper)), 1.0 / n_pos, 0.0);
    };
    ad::Var loss = ad::add(pos_term(ad::cosine_matrix(fg, fg)), pos_term(ad::cosine_matrix(bg, bg)));
    ad::Var neg = ad::affine(ad::sum(ad::relu(ad::cosine_matrix(fg, bg))), 1.0 / (static_cast<double>(b) * b), 0.0);
    return {ad::add(loss, neg), act};
}

CcamStepResult ccam_train_step(const ad::Var& features, const CcamHead& head, Adam& opt,
                               const CcamConfig& cfg) {
    CcamStepResult res;
    auto [loss, act] = ccam_objective(features, head, cfg, &res.fg_fallback, &res.bg_fallback);
    ad::backward(loss);
    opt.step();
    opt.zero_grad();
    res.loss = loss->scalar();
    const Tensor up = kern::resize_bilinear(act->value, cfg.out_h, cfg.out_w);
    const int b = up.dim(0), da = up.dim(1);
    for (int i = 0; i < b; ++i) {
        Tensor m(Shape{da, cfg.out_h, cfg.out_w});
        for (int c = 0; c < da; ++c)
            for (int y = 0; y < cfg.out_h; ++y)
                for (int x = 0; x < cfg.out_w; ++x) m(c, y, x) = up(i, c, y, x);
        res.maps.push_back(ClassAgnosticMap{std::move(m)});
    }
    return res;
}

SaliencyMap derive_saliency(const ClassAgnosticMap& a) {
    const int h = a.h(), w = a.w();
    Tensor s(Shape{1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Scalar mx = a.values(0, y, x);
            for (int c = 1; c < a.channels(); ++c) mx = std::max(mx, a.values(c, y, x));
            s(0, y, x) = 1.0 - mx;
        }
    const Scalar lo = s.min(), hi = s.max();
    if (hi - lo < 1e-12) {
        s.fill(0.5);  // constant map: normalization guard
    } else {
        for (int64_t i = 0; i < s.size(); ++i) s[i] = (s[i] - lo) / (hi - lo);
    }
    return SaliencyMap{std::move(s)};
}

BinaryMask refine_pseudo_mask(const SaliencyMap& s, const ClassAgnosticMap& a, bool invert_saliency_label) {
    const int h = a.h(), w = a.w();
    if (s.values.dim(1) != h || s.values.dim(2) != w)
        throw ConfigError("refine_pseudo_mask: saliency " + s.values.shape_str() + " vs map " +
                          a.values.shape_str());
    LabelTensor labels{a.channels(), invert_saliency_label};
    BinaryMask out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // channel 0 is saliency; ties break toward the lowest index
            Scalar best = s.values(0, y, x);
            int best_c = 0;
            for (int c = 0; c < a.channels(); ++c) {
                const Scalar v = a.values(c, y, x);
                if (v > best) {
                    best = v;
                    best_c = c + 1;
                }
            }
            out.at(y, x) = labels.label_for_channel(best_c);
        }
    return out;
}

CcamModel::CcamModel(EncoderConfig enc_cfg, CcamConfig cfg) : encoder_cfg(enc_cfg), ccam_cfg(cfg) {
    Rng rng(enc_cfg.init_seed, 41);
    encoder = std::make_unique<VisualEncoder>(encoder_cfg, rng);
    head = CcamHead(encoder_cfg.dim, ccam_cfg, rng);
}

ad::Var CcamModel::deepest_features(const ad::Var& images) const { return encoder->forward(images).back(); }

ClassAgnosticMap CcamModel::activation_for(const Tensor& image) const {
    ad::Var in = ad::constant(image.reshaped({1, 3, image.dim(1), image.dim(2)}));
    ad::Var feat = deepest_features(in);
    Tensor logits = kern::conv2d_forward(feat->value, head.proj.w->value,
                                         head.proj.b ? &head.proj.b->value : nullptr, 1, 0);
    for (int64_t i = 0; i < logits.size(); ++i) logits[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    Tensor up = kern::resize_bilinear(logits, ccam_cfg.out_h, ccam_cfg.out_w);
    Tensor m = up.reshaped({up.dim(1), up.dim(2), up.dim(3)});
    if (flip_activation)
        for (int64_t i = 0; i < m.size(); ++i) m[i] = 1.0 - m[i];
    return ClassAgnosticMap{std::move(m)};
}

BinaryMask CcamModel::pseudo_mask_for(const Tensor& image) const {
    ClassAgnosticMap a = activation_for(image);
    return refine_pseudo_mask(derive_saliency(a), a, ccam_cfg.invert_saliency_label);
}

std::vector<PseudoMaskManifestEntry> export_pseudo_masks(
    const std::vector<std::pair<std::string, const Tensor*>>& samples, const CcamModel& model,
    const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create pseudo-mask directory " + out_dir + ": " + ec.message());

    std::vector<PseudoMaskManifestEntry> manifest;
    manifest.reserve(samples.size());
    for (const auto& [id, image] : samples) {
        BinaryMask mask = model.pseudo_mask_for(*image);
        const std::string path = (fs::path(out_dir) / (id + ".png")).string();
        write_png_gray1(path, mask);
        manifest.push_back({id, path, mask.fg_fraction()});
    }

    const std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + manifest_path);
    for (const auto& e : manifest) {
        nlohmann::json j{{"id", e.id}, {"path", e.path}, {"fg_pixel_fraction", e.fg_pixel_fraction}};
        out << j.dump() << "\n";
    }
    return manifest;
}

}  // namespace avseg
