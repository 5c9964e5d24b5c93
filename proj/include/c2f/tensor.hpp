#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "c2f/errors.hpp"

namespace c2f {

// Dense n-d array, row-major. Images are (H, W, C) channel-last, so the
// channel index is the fastest-moving one.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
        data.assign(element_count(shape), T(0));
    }

    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (element_count(shape) != data.size())
            fail("tensor: shape " + shape_string(shape) + " wants " +
                 std::to_string(element_count(shape)) + " elements, got " +
                 std::to_string(data.size()));
    }

    static size_t element_count(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d <= 0) fail("tensor: non-positive dimension in shape " + shape_string(s));
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    T& operator[](size_t i) { return data[i]; }
    const T& operator[](size_t i) const { return data[i]; }

    // (H, W, C) accessors.
    T& at3(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }
    const T& at3(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    void fill(T v) { data.assign(data.size(), v); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    static std::string shape_string(const std::vector<int>& s) {
        std::string r = "(";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) r += ",";
            r += std::to_string(s[i]);
        }
        return r + ")";
    }
    std::string shape_string() const { return shape_string(shape); }
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

template <typename T>
void require_shape(const TensorT<T>& t, const std::vector<int>& want, const char* what) {
    if (t.shape != want)
        fail(std::string(what) + ": shape mismatch: expected " +
             TensorT<T>::shape_string(want) + ", got " + t.shape_string());
}

} // namespace c2f
