#include "tracknet/kernels.hpp"

#include <atomic>

namespace tracknet::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::Parallel};
}

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() { return g_backend.load(std::memory_order_relaxed); }

#define TRACKNET_DISPATCH(fn, ...)                      \
    if (backend() == Backend::Parallel) {               \
        par::fn(__VA_ARGS__);                           \
    } else {                                            \
        serial::fn(__VA_ARGS__);                        \
    }

void conv2d_forward(const float* in, int in_h, int in_w, const float* kernel, int ksz,
                    int stride, int pad, float bias, float* out, int out_h, int out_w) {
    TRACKNET_DISPATCH(conv2d_forward, in, in_h, in_w, kernel, ksz, stride, pad, bias, out, out_h, out_w)
}

void conv2d_backward_input(const float* gout, int out_h, int out_w, const float* kernel,
                           int ksz, int stride, int pad, float* gin, int in_h, int in_w) {
    TRACKNET_DISPATCH(conv2d_backward_input, gout, out_h, out_w, kernel, ksz, stride, pad, gin, in_h, in_w)
}

void conv2d_backward_params(const float* gout, int out_h, int out_w, const float* in,
                            int in_h, int in_w, int ksz, int stride, int pad,
                            float* gkernel, float* gbias) {
    TRACKNET_DISPATCH(conv2d_backward_params, gout, out_h, out_w, in, in_h, in_w, ksz, stride, pad, gkernel, gbias)
}

void linear_forward(const float* in, const float* weights, const float* bias, float* out,
                    int in_dim, int out_dim) {
    TRACKNET_DISPATCH(linear_forward, in, weights, bias, out, in_dim, out_dim)
}

void linear_backward_input(const float* gout, const float* weights, float* gin, int in_dim,
                           int out_dim) {
    TRACKNET_DISPATCH(linear_backward_input, gout, weights, gin, in_dim, out_dim)
}

void linear_backward_params(const float* gout, const float* in, float* gweights, float* gbias,
                            int in_dim, int out_dim) {
    TRACKNET_DISPATCH(linear_backward_params, gout, in, gweights, gbias, in_dim, out_dim)
}

void maxpool_forward(const float* in, int in_h, int in_w, int window, int stride, float* out,
                     int out_h, int out_w) {
    TRACKNET_DISPATCH(maxpool_forward, in, in_h, in_w, window, stride, out, out_h, out_w)
}

void maxpool_backward(const float* in, int in_h, int in_w, int window, int stride,
                      const float* gout, int out_h, int out_w, float* gin) {
    TRACKNET_DISPATCH(maxpool_backward, in, in_h, in_w, window, stride, gout, out_h, out_w, gin)
}

void relu_forward(const float* in, float* out, std::int64_t n) {
    TRACKNET_DISPATCH(relu_forward, in, out, n)
}

void relu_backward(const float* in, const float* gout, float* gin, std::int64_t n) {
    TRACKNET_DISPATCH(relu_backward, in, gout, gin, n)
}

void tanh_forward(const float* in, float* out, std::int64_t n) {
    TRACKNET_DISPATCH(tanh_forward, in, out, n)
}

void tanh_backward(const float* y, const float* gout, float* gin, std::int64_t n) {
    TRACKNET_DISPATCH(tanh_backward, y, gout, gin, n)
}

void interval_linear(const float* lo, const float* hi, const float* weights, const float* bias,
                     float* out_lo, float* out_hi, int in_dim, int out_dim) {
    TRACKNET_DISPATCH(interval_linear, lo, hi, weights, bias, out_lo, out_hi, in_dim, out_dim)
}

void interval_conv2d(const float* lo, const float* hi, int in_h, int in_w, const float* kernel,
                     int ksz, int stride, int pad, float bias, float* out_lo, float* out_hi,
                     int out_h, int out_w) {
    TRACKNET_DISPATCH(interval_conv2d, lo, hi, in_h, in_w, kernel, ksz, stride, pad, bias, out_lo, out_hi, out_h, out_w)
}

void interval_maxpool(const float* lo, const float* hi, int in_h, int in_w, int window,
                      int stride, float* out_lo, float* out_hi, int out_h, int out_w) {
    TRACKNET_DISPATCH(interval_maxpool, lo, hi, in_h, in_w, window, stride, out_lo, out_hi, out_h, out_w)
}

void interval_relu(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n) {
    TRACKNET_DISPATCH(interval_relu, lo, hi, out_lo, out_hi, n)
}

void interval_tanh(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n) {
    TRACKNET_DISPATCH(interval_tanh, lo, hi, out_lo, out_hi, n)
}

#undef TRACKNET_DISPATCH

}  // namespace tracknet::kernels
