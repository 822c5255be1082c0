#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "avseg/nn.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

uint64_t fnv1a64(const std::string& s);

/// Versioned tensor container keyed by a config hash; loading into a model
/// with a different config hash is refused.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    uint64_t config_hash = 0;
    int64_t epoch = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void put(const std::string& name, const Tensor& t) { tensors.emplace_back(name, t); }
    const Tensor* find(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    /// Copies values into the param set; every parameter must be present with
    /// a matching shape.
    void restore_params(nn::ParamSet& params, const std::string& prefix) const;
    void store_params(const nn::ParamSet& params, const std::string& prefix);
};

}  // namespace avseg
