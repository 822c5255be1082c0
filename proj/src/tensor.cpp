#include "avseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace avseg {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d < 0) throw ConfigError("negative tensor dimension");
        n *= d;
    }
    return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), 0.0) {}

Tensor::Tensor(Shape shape, Scalar fill_value)
    : shape_(std::move(shape)), data_(static_cast<size_t>(shape_numel(shape_)), fill_value) {}

Tensor Tensor::scalar(Scalar v) {
    Tensor t(Shape{1});
    t.data_[0] = v;
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<Scalar> data) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw ConfigError("Tensor::from: data length does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

void Tensor::fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != size())
        throw ConfigError("reshape: element count mismatch (" + shape_str() + ")");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
}

Tensor& Tensor::add_(const Tensor& other) {
    if (!same_shape(other)) throw ConfigError("add_: shape mismatch " + shape_str() + " vs " + other.shape_str());
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::axpy_(Scalar a, const Tensor& other) {
    if (!same_shape(other)) throw ConfigError("axpy_: shape mismatch");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += a * other.data_[i];
    return *this;
}

Tensor& Tensor::scale_(Scalar a) {
    for (auto& v : data_) v *= a;
    return *this;
}

Scalar Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Scalar Tensor::min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }

Scalar Tensor::max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }

Scalar Tensor::abs_max() const {
    Scalar m = 0.0;
    for (Scalar v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool Tensor::all_finite() const {
    for (Scalar v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << ']';
    return os.str();
}

}  // namespace avseg
