#pragma once

#include <cstdint>
#include <vector>

#include "avseg/autodiff.hpp"

namespace avseg {

struct OptimConfig {
    std::string kind = "adam";
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(std::vector<ad::Var> params, OptimConfig cfg);

    void step();
    void zero_grad();

    int64_t step_count() const { return t_; }
    const OptimConfig& config() const { return cfg_; }

    // moment buffers, exposed for checkpointing
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }
    void set_step_count(int64_t t) { t_ = t; }

private:
    std::vector<ad::Var> params_;
    std::vector<Tensor> m_, v_;
    OptimConfig cfg_;
    int64_t t_ = 0;
};

}  // namespace avseg
