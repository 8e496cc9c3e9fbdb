#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tracknet {

// Dense row-major array of 32-bit reals, rank 1..4.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);
    Tensor(std::vector<int> s, std::vector<float> d);

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, float v);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    float& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    // 2-D access (row-major); valid only for rank-2 tensors
    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
    void fill(float v);
};

std::int64_t shape_product(const std::vector<int>& s);
std::string shape_str(const std::vector<int>& s);

// Elementwise lower/upper bound pair over congruent shapes (lower <= upper).
struct IntervalTensor {
    Tensor lower;
    Tensor upper;

    IntervalTensor() = default;
    IntervalTensor(Tensor lo, Tensor hi);

    static IntervalTensor point(const Tensor& t) { return IntervalTensor(t, t); }

    std::int64_t size() const { return lower.size(); }
    bool valid() const;  // shapes congruent, lower <= upper, all finite
    bool contains(const Tensor& t) const;
};

}  // namespace tracknet
