#pragma once

#include <vector>

#include "avseg/autodiff.hpp"

namespace avseg {

/// One mini-batch of aligned audio/visual embeddings for the contrastive
/// objectives. visual holds one [B,D,H^s,W^s] map per stage.
struct BatchEmbeddings {
    ad::Var audio;                // [B,D]
    std::vector<ad::Var> visual;  // S entries
    double temperature = 0.07;

    int batch_size() const { return audio->value.dim(0); }
    void validate() const;
};

struct LossWeights {
    double avf = 1.0;  // Eq-8 style total has unit weights; knobs kept configurable
    double pmr = 1.0;
};

struct LossReport {
    double l_a2v = 0.0, l_v2a = 0.0, l_avf = 0.0, l_pmr = 0.0, total = 0.0;
};

/// InfoNCE over max-pooled audio->visual similarities, summed over stages,
/// averaged over the batch. Log-sum-exp stabilized.
ad::Var loss_a2v(const BatchEmbeddings& b);
/// Mirror of loss_a2v with the denominator ranging over audio samples.
ad::Var loss_v2a(const BatchEmbeddings& b);
ad::Var loss_avf(const BatchEmbeddings& b);

/// Mean pixel BCE; prediction clamped to [1e-7, 1-1e-7].
ad::Var loss_mask_bce(const ad::Var& mask, const Tensor& target);

std::pair<ad::Var, LossReport> loss_total(const BatchEmbeddings& b, const ad::Var& mask, const Tensor& pseudo,
                                          const LossWeights& w = {});

}  // namespace avseg
