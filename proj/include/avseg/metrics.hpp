#pragma once

#include <string>
#include <vector>

#include "avseg/mask.hpp"

namespace avseg {

struct MetricConfig {
    double beta_sq = 0.3;    // AVS-benchmark convention; the evaluated paper lineage never prints beta
    double threshold = 0.5;  // binarization knob for soft predictions
};

/// |pred AND gt| / |pred OR gt|; both-empty accounts as 1.0.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Arithmetic mean of per-pair IoU; empty input is an error.
double miou(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs);

/// (1+b2) P R / (b2 P + R). Conventions: TP == 0 with both masks empty -> 1.0,
/// TP == 0 otherwise -> 0.0.
double f_score(const BinaryMask& pred, const BinaryMask& gt, double beta_sq);

struct SampleMetrics {
    std::string id;
    double iou = 0.0;
    double fscore = 0.0;
};

struct MetricsReport {
    double miou = 0.0;
    double fscore = 0.0;
    double beta_sq = 0.3;
    double threshold = 0.5;
    int n_pairs = 0;
    std::vector<SampleMetrics> per_sample;

    std::string to_json() const;
    void save_json(const std::string& path) const;
};

}  // namespace avseg
