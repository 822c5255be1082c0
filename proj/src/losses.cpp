#include "avseg/losses.hpp"

namespace avseg {

void BatchEmbeddings::validate() const {
    if (!audio || audio->value.rank() != 2) throw ConfigError("batch embeddings: audio must be [B,D]");
    if (batch_size() < 2) throw ConfigError("contrastive loss needs >=2 samples");
    if (temperature <= 0.0) throw ConfigError("temperature must be > 0");
    if (visual.empty()) throw ConfigError("batch embeddings: no visual stages");
    for (const auto& v : visual) {
        if (v->value.rank() != 4 || v->value.dim(0) != batch_size() || v->value.dim(1) != audio->value.dim(1))
            throw ConfigError("batch embeddings: stage " + v->value.shape_str() + " does not match audio " +
                              audio->value.shape_str());
    }
}

namespace {

ad::Var contrastive(const BatchEmbeddings& b, bool audio_anchors) {
    b.validate();
    const double inv_tau = 1.0 / b.temperature;
    ad::Var total;
    for (const auto& stage : b.visual) {
        // sim[i,m] = max-pooled cos(a_i, v_m); a->v denominates over visual
        // bags (rows), v->a over audio samples (columns)
        ad::Var sim = ad::affine(ad::max_cos_sim(b.audio, stage), inv_tau, 0.0);
        ad::Var term = ad::info_nce_diag(sim, /*over_rows=*/audio_anchors);
        total = total ? ad::add(total, term) : term;
    }
    return total;
}

}  // namespace

ad::Var loss_a2v(const BatchEmbeddings& b) { return contrastive(b, true); }

ad::Var loss_v2a(const BatchEmbeddings& b) { return contrastive(b, false); }

ad::Var loss_avf(const BatchEmbeddings& b) { return ad::add(loss_a2v(b), loss_v2a(b)); }

ad::Var loss_mask_bce(const ad::Var& mask, const Tensor& target) {
    return ad::bce_mean(mask, target, 1e-7);
}

std::pair<ad::Var, LossReport> loss_total(const BatchEmbeddings& b, const ad::Var& mask, const Tensor& pseudo,
                                          const LossWeights& w) {
    ad::Var a2v = loss_a2v(b);
    ad::Var v2a = loss_v2a(b);
    ad::Var avf = ad::add(a2v, v2a);
    ad::Var pmr = loss_mask_bce(mask, pseudo);
    ad::Var total = ad::add(ad::affine(avf, w.avf, 0.0), ad::affine(pmr, w.pmr, 0.0));
    LossReport r;
    r.l_a2v = a2v->scalar();
    r.l_v2a = v2a->scalar();
    r.l_avf = avf->scalar();
    r.l_pmr = pmr->scalar();
    r.total = total->scalar();
    return {total, r};
}

}  // namespace avseg
