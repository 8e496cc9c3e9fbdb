#include "tracknet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tracknet {

std::int64_t shape_product(const std::vector<int>& s) {
    std::int64_t p = 1;
    for (int e : s) p *= e;
    return p;
}

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

namespace {
void check_shape(const std::vector<int>& s) {
    if (s.empty() || s.size() > 4) throw std::invalid_argument("tensor: rank must be 1..4, got " + shape_str(s));
    for (int e : s)
        if (e <= 0) throw std::invalid_argument("tensor: non-positive extent in " + shape_str(s));
}
}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    check_shape(shape);
    data.assign(static_cast<std::size_t>(shape_product(shape)), 0.0f);
}

Tensor::Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    check_shape(shape);
    if (shape_product(shape) != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
}

Tensor Tensor::full(std::vector<int> s, float v) {
    Tensor t(std::move(s));
    t.fill(v);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(float v) {
    for (float& x : data) x = v;
}

IntervalTensor::IntervalTensor(Tensor lo, Tensor hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (!lower.same_shape(upper))
        throw std::invalid_argument("interval: bound shapes differ " + shape_str(lower.shape) +
                                    " vs " + shape_str(upper.shape));
}

bool IntervalTensor::valid() const {
    if (!lower.same_shape(upper)) return false;
    for (std::int64_t i = 0; i < size(); ++i) {
        if (!(lower[i] <= upper[i])) return false;
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) return false;
    }
    return true;
}

bool IntervalTensor::contains(const Tensor& t) const {
    if (!t.same_shape(lower)) return false;
    for (std::int64_t i = 0; i < size(); ++i)
        if (t[i] < lower[i] || t[i] > upper[i]) return false;
    return true;
}

}  // namespace tracknet
