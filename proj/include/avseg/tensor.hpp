#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avseg/error.hpp"

namespace avseg {

using Scalar = double;
using Shape = std::vector<int>;

/// Dense row-major tensor of doubles. Rank 1..4 in practice; shape is
/// explicit, there are no views or strides.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, Scalar fill_value);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, Scalar v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(Scalar v);
    static Tensor from(Shape shape, std::vector<Scalar> data);

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::vector<Scalar>& vec() { return data_; }
    const std::vector<Scalar>& vec() const { return data_; }

    Scalar& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    Scalar operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    Scalar& operator()(int i) { return data_[static_cast<size_t>(i)]; }
    Scalar operator()(int i) const { return data_[static_cast<size_t>(i)]; }
    Scalar& operator()(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    Scalar operator()(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    Scalar& operator()(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    Scalar operator()(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    Scalar& operator()(int i, int j, int k, int l) {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    Scalar operator()(int i, int j, int k, int l) const {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    void fill(Scalar v);
    void zero() { fill(0.0); }

    /// Same data, new shape; element count must match.
    Tensor reshaped(Shape shape) const;

    Tensor& add_(const Tensor& other);           // this += other
    Tensor& axpy_(Scalar a, const Tensor& other); // this += a * other
    Tensor& scale_(Scalar a);

    Scalar sum() const;
    Scalar min() const;
    Scalar max() const;
    Scalar abs_max() const;
    bool all_finite() const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

private:
    Shape shape_;
    std::vector<Scalar> data_;
};

int64_t shape_numel(const Shape& s);

}  // namespace avseg
