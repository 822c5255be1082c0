#pragma once

#include <string>
#include <utility>
#include <vector>

#include "avseg/autodiff.hpp"
#include "avseg/rng.hpp"

namespace avseg::nn {

/// Named parameter registry; checkpointing walks it in insertion order.
struct ParamSet {
    std::vector<std::pair<std::string, ad::Var>> items;

    ad::Var add(const std::string& name, Tensor init) {
        auto v = ad::leaf(std::move(init), true);
        items.emplace_back(name, v);
        return v;
    }
    void extend(const std::string& prefix, const ParamSet& other) {
        for (const auto& [name, var] : other.items) items.emplace_back(prefix + "." + name, var);
    }
    std::vector<ad::Var> vars() const {
        std::vector<ad::Var> out;
        out.reserve(items.size());
        for (const auto& [name, var] : items) out.push_back(var);
        return out;
    }
    int64_t count() const {
        int64_t n = 0;
        for (const auto& [name, var] : items) n += var->value.size();
        return n;
    }
};

// uniform fan-in init, U(-1/sqrt(fan_in), 1/sqrt(fan_in))
inline Tensor init_uniform_fan_in(Shape shape, int fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return rand_uniform(std::move(shape), rng, -s, s);
}

struct Conv2d {
    ad::Var w, b;
    int stride = 1, pad = 0;

    Conv2d() = default;
    Conv2d(ParamSet& ps, const std::string& name, int in_ch, int out_ch, int kernel, int stride_, int pad_,
           Rng& rng, bool bias = true)
        : stride(stride_), pad(pad_) {
        w = ps.add(name + ".w", init_uniform_fan_in({out_ch, in_ch, kernel, kernel}, in_ch * kernel * kernel, rng));
        if (bias) b = ps.add(name + ".b", Tensor(Shape{out_ch}));
    }
    ad::Var forward(const ad::Var& x) const { return ad::conv2d(x, w, b, stride, pad); }
};

struct Linear {
    ad::Var w, b;

    Linear() = default;
    Linear(ParamSet& ps, const std::string& name, int in_dim, int out_dim, Rng& rng, bool bias = true) {
        w = ps.add(name + ".w", init_uniform_fan_in({out_dim, in_dim}, in_dim, rng));
        if (bias) b = ps.add(name + ".b", Tensor(Shape{out_dim}));
    }
    ad::Var forward(const ad::Var& x) const { return ad::linear(x, w, b); }
};

}  // namespace avseg::nn
