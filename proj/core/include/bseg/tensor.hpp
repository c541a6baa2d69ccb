#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bseg/error.hpp"

namespace bseg {

// Dense row-major n-d array. Storage is float in the training path; the same
// code instantiated with double is the 64-bit oracle mode used by the
// finite-difference and exactness tests.
template <typename T>
class BasicTensor {
public:
    BasicTensor() = default;

    explicit BasicTensor(std::vector<int> dims) : BasicTensor(std::move(dims), T(0)) {}

    BasicTensor(std::vector<int> dims, T fill)
        : dims_(std::move(dims)), data_(checked_size(dims_), fill) {}

    static BasicTensor from_data(std::vector<int> dims, std::vector<T> data) {
        BasicTensor t;
        t.dims_ = std::move(dims);
        if (checked_size(t.dims_) != static_cast<std::int64_t>(data.size())) {
            throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                             " does not match dims product " +
                             std::to_string(checked_size(t.dims_)));
        }
        t.data_ = std::move(data);
        return t;
    }

    int rank() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    int dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Rank-4 accessor (N,C,H,W); hot loops index raw pointers instead.
    T& at4(int n, int c, int h, int w) {
        return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
    }
    const T& at4(int n, int c, int h, int w) const {
        return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
    }

    bool same_dims(const BasicTensor& other) const { return dims_ == other.dims_; }

    bool all_finite() const {
        for (const T& v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return BasicTensor<U>::from_data(dims_, std::move(out));
    }

    bool operator==(const BasicTensor& other) const {
        return dims_ == other.dims_ && data_ == other.data_;
    }

private:
    static std::int64_t checked_size(const std::vector<int>& dims) {
        std::int64_t n = 1;
        for (int d : dims) {
            if (d <= 0) throw ShapeError("tensor: non-positive extent " + std::to_string(d));
            n *= d;
        }
        return n;
    }

    std::vector<int> dims_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using DTensor = BasicTensor<double>;

inline std::string dims_str(const std::vector<int>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

template <typename T>
void require_dims(const BasicTensor<T>& t, const std::vector<int>& dims, const char* what) {
    if (t.dims() != dims) {
        throw ShapeError(std::string(what) + ": expected dims " + dims_str(dims) + ", got " +
                         dims_str(t.dims()));
    }
}

template <typename T>
void require_rank(const BasicTensor<T>& t, int rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got " + dims_str(t.dims()));
    }
}

}  // namespace bseg
