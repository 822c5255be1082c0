#include "avseg/metrics.hpp"

#include <fstream>

#include "json.hpp"

namespace avseg {

namespace {

struct Confusion {
    int64_t tp = 0, fp = 0, fn = 0;
};

Confusion count(const BinaryMask& pred, const BinaryMask& gt) {
    if (!pred.same_shape(gt))
        throw ConfigError("metrics: mask shapes differ (" + std::to_string(pred.h) + "x" + std::to_string(pred.w) +
                          " vs " + std::to_string(gt.h) + "x" + std::to_string(gt.w) + ")");
    Confusion c;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const bool p = pred.v[i] != 0, g = gt.v[i] != 0;
        c.tp += p && g;
        c.fp += p && !g;
        c.fn += !p && g;
    }
    return c;
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt) {
    const Confusion c = count(pred, gt);
    const int64_t uni = c.tp + c.fp + c.fn;
    if (uni == 0) return 1.0;  // both empty
    return static_cast<double>(c.tp) / static_cast<double>(uni);
}

double miou(const std::vector<std::pair<BinaryMask, BinaryMask>>& pairs) {
    if (pairs.empty()) throw DataError("no evaluation pairs");
    double total = 0.0;
    for (const auto& [p, g] : pairs) total += iou(p, g);
    return total / static_cast<double>(pairs.size());
}

double f_score(const BinaryMask& pred, const BinaryMask& gt, double beta_sq) {
    if (beta_sq <= 0.0) throw ConfigError("f_score: beta^2 must be > 0");
    const Confusion c = count(pred, gt);
    if (c.tp == 0) return (c.fp == 0 && c.fn == 0) ? 1.0 : 0.0;
    const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall);
}

std::string MetricsReport::to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : per_sample)
        per.push_back({{"id", s.id}, {"iou", s.iou}, {"fscore", s.fscore}});
    nlohmann::json j{{"miou", miou},       {"fscore", fscore}, {"beta_sq", beta_sq},
                     {"threshold", threshold}, {"n_pairs", n_pairs}, {"per_sample", per}};
    return j.dump(2);
}

void MetricsReport::save_json(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write metrics report: " + path);
    out << to_json() << "\n";
}

}  // namespace avseg
