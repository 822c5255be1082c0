#include "avseg/optim.hpp"

#include <cmath>

namespace avseg {

Adam::Adam(std::vector<ad::Var> params, OptimConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (cfg_.kind != "adam") throw ConfigError("optimizer kind '" + cfg_.kind + "' not supported");
    if (cfg_.lr <= 0.0) throw ConfigError("optimizer lr must be > 0");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
        auto& p = params_[k];
        if (p->grad.empty()) continue;  // parameter unused by this loss
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (int64_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p->value[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

}  // namespace avseg
