#pragma once

// Data-parallel compute kernels behind the layer operations.
//
// Every kernel exists twice: a plain serial reference in kernels::serial and
// an OpenMP version in kernels::par. The two are bitwise-identical by
// construction: parallel loops only ever split over independent output
// elements (or fixed-size partial buffers reduced in a fixed order), so the
// floating-point accumulation order never depends on the thread count.
// Dispatch goes through a process-wide backend switch; tests pin one side,
// tools/bench_kernels compares their throughput.

#include <cstdint>

namespace tracknet::kernels {

enum class Backend { Serial, Parallel };

void set_backend(Backend b);
Backend backend();

// Single-channel 2-D convolution, square kernel, zero padding.
// out[oy][ox] = bias + sum_{ky,kx} k[ky][kx] * in[oy*stride-pad+ky][ox*stride-pad+kx]
void conv2d_forward(const float* in, int in_h, int in_w, const float* kernel, int ksz,
                    int stride, int pad, float bias, float* out, int out_h, int out_w);
void conv2d_backward_input(const float* gout, int out_h, int out_w, const float* kernel,
                           int ksz, int stride, int pad, float* gin, int in_h, int in_w);
void conv2d_backward_params(const float* gout, int out_h, int out_w, const float* in,
                            int in_h, int in_w, int ksz, int stride, int pad,
                            float* gkernel, float* gbias);

// Fully connected layer; weights row-major [out_dim][in_dim].
void linear_forward(const float* in, const float* weights, const float* bias, float* out,
                    int in_dim, int out_dim);
void linear_backward_input(const float* gout, const float* weights, float* gin, int in_dim,
                           int out_dim);
void linear_backward_params(const float* gout, const float* in, float* gweights, float* gbias,
                            int in_dim, int out_dim);

// Max pooling, square window. Backward routes to the first maximal element
// per window in row-major order.
void maxpool_forward(const float* in, int in_h, int in_w, int window, int stride, float* out,
                     int out_h, int out_w);
void maxpool_backward(const float* in, int in_h, int in_w, int window, int stride,
                      const float* gout, int out_h, int out_w, float* gin);

void relu_forward(const float* in, float* out, std::int64_t n);
void relu_backward(const float* in, const float* gout, float* gin, std::int64_t n);
void tanh_forward(const float* in, float* out, std::int64_t n);
// gin = gout * (1 - y^2) with y the forward output
void tanh_backward(const float* y, const float* gout, float* gin, std::int64_t n);

// Interval transfer functions (sound elementwise / center-radius bounds).
// Stores round outward by one ulp so double-precision accumulation never
// under-approximates in the float result.
void interval_linear(const float* lo, const float* hi, const float* weights, const float* bias,
                     float* out_lo, float* out_hi, int in_dim, int out_dim);
void interval_conv2d(const float* lo, const float* hi, int in_h, int in_w, const float* kernel,
                     int ksz, int stride, int pad, float bias, float* out_lo, float* out_hi,
                     int out_h, int out_w);
void interval_maxpool(const float* lo, const float* hi, int in_h, int in_w, int window,
                      int stride, float* out_lo, float* out_hi, int out_h, int out_w);
void interval_relu(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n);
void interval_tanh(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n);

namespace serial {
void conv2d_forward(const float* in, int in_h, int in_w, const float* kernel, int ksz,
                    int stride, int pad, float bias, float* out, int out_h, int out_w);
void conv2d_backward_input(const float* gout, int out_h, int out_w, const float* kernel,
                           int ksz, int stride, int pad, float* gin, int in_h, int in_w);
void conv2d_backward_params(const float* gout, int out_h, int out_w, const float* in,
                            int in_h, int in_w, int ksz, int stride, int pad,
                            float* gkernel, float* gbias);
void linear_forward(const float* in, const float* weights, const float* bias, float* out,
                    int in_dim, int out_dim);
void linear_backward_input(const float* gout, const float* weights, float* gin, int in_dim,
                           int out_dim);
void linear_backward_params(const float* gout, const float* in, float* gweights, float* gbias,
                            int in_dim, int out_dim);
void maxpool_forward(const float* in, int in_h, int in_w, int window, int stride, float* out,
                     int out_h, int out_w);
void maxpool_backward(const float* in, int in_h, int in_w, int window, int stride,
                      const float* gout, int out_h, int out_w, float* gin);
void relu_forward(const float* in, float* out, std::int64_t n);
void relu_backward(const float* in, const float* gout, float* gin, std::int64_t n);
void tanh_forward(const float* in, float* out, std::int64_t n);
void tanh_backward(const float* y, const float* gout, float* gin, std::int64_t n);
void interval_linear(const float* lo, const float* hi, const float* weights, const float* bias,
                     float* out_lo, float* out_hi, int in_dim, int out_dim);
void interval_conv2d(const float* lo, const float* hi, int in_h, int in_w, const float* kernel,
                     int ksz, int stride, int pad, float bias, float* out_lo, float* out_hi,
                     int out_h, int out_w);
void interval_maxpool(const float* lo, const float* hi, int in_h, int in_w, int window,
                      int stride, float* out_lo, float* out_hi, int out_h, int out_w);
void interval_relu(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n);
void interval_tanh(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n);
}  // namespace serial

namespace par {
void conv2d_forward(const float* in, int in_h, int in_w, const float* kernel, int ksz,
                    int stride, int pad, float bias, float* out, int out_h, int out_w);
void conv2d_backward_input(const float* gout, int out_h, int out_w, const float* kernel,
                           int ksz, int stride, int pad, float* gin, int in_h, int in_w);
void conv2d_backward_params(const float* gout, int out_h, int out_w, const float* in,
                            int in_h, int in_w, int ksz, int stride, int pad,
                            float* gkernel, float* gbias);
void linear_forward(const float* in, const float* weights, const float* bias, float* out,
                    int in_dim, int out_dim);
void linear_backward_input(const float* gout, const float* weights, float* gin, int in_dim,
                           int out_dim);
void linear_backward_params(const float* gout, const float* in, float* gweights, float* gbias,
                            int in_dim, int out_dim);
void maxpool_forward(const float* in, int in_h, int in_w, int window, int stride, float* out,
                     int out_h, int out_w);
void maxpool_backward(const float* in, int in_h, int in_w, int window, int stride,
                      const float* gout, int out_h, int out_w, float* gin);
void relu_forward(const float* in, float* out, std::int64_t n);
void relu_backward(const float* in, const float* gout, float* gin, std::int64_t n);
void tanh_forward(const float* in, float* out, std::int64_t n);
void tanh_backward(const float* y, const float* gout, float* gin, std::int64_t n);
void interval_linear(const float* lo, const float* hi, const float* weights, const float* bias,
                     float* out_lo, float* out_hi, int in_dim, int out_dim);
void interval_conv2d(const float* lo, const float* hi, int in_h, int in_w, const float* kernel,
                     int ksz, int stride, int pad, float bias, float* out_lo, float* out_hi,
                     int out_h, int out_w);
void interval_maxpool(const float* lo, const float* hi, int in_h, int in_w, int window,
                      int stride, float* out_lo, float* out_hi, int out_h, int out_w);
void interval_relu(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n);
void interval_tanh(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n);
}  // namespace par

}  // namespace tracknet::kernels
