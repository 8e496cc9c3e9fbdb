// Serial reference kernels. These are the semantics the OpenMP versions are
// tested against; keep them as plain loops.
//
// Dot products accumulate in double and store float. Interval stores round
// outward by one ulp (see store_lo/store_hi in kernels_common.hpp).

#include "tracknet/kernels.hpp"

#include "kernels_common.hpp"

#include <algorithm>
#include <cmath>

namespace tracknet::kernels::serial {

void conv2d_forward(const float* in, int in_h, int in_w, const float* kernel, int ksz,
                    int stride, int pad, float bias, float* out, int out_h, int out_w) {
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            double acc = bias;
            for (int ky = 0; ky < ksz; ++ky) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= in_h) continue;
                for (int kx = 0; kx < ksz; ++kx) {
                    const int ix = ox * stride - pad + kx;
                    if (ix < 0 || ix >= in_w) continue;
                    acc += static_cast<double>(kernel[ky * ksz + kx]) * in[iy * in_w + ix];
                }
            }
            out[oy * out_w + ox] = static_cast<float>(acc);
        }
    }
}

void conv2d_backward_input(const float* gout, int out_h, int out_w, const float* kernel,
                           int ksz, int stride, int pad, float* gin, int in_h, int in_w) {
    for (int iy = 0; iy < in_h; ++iy) {
        for (int ix = 0; ix < in_w; ++ix) {
            double acc = 0.0;
            // every output position whose window covers (iy, ix)
            for (int ky = 0; ky < ksz; ++ky) {
                const int oy_num = iy + pad - ky;
                if (oy_num < 0 || oy_num % stride != 0) continue;
                const int oy = oy_num / stride;
                if (oy >= out_h) continue;
                for (int kx = 0; kx < ksz; ++kx) {
                    const int ox_num = ix + pad - kx;
                    if (ox_num < 0 || ox_num % stride != 0) continue;
                    const int ox = ox_num / stride;
                    if (ox >= out_w) continue;
                    acc += static_cast<double>(gout[oy * out_w + ox]) * kernel[ky * ksz + kx];
                }
            }
            gin[iy * in_w + ix] = static_cast<float>(acc);
        }
    }
}

void conv2d_backward_params(const float* gout, int out_h, int out_w, const float* in,
                            int in_h, int in_w, int ksz, int stride, int pad,
                            float* gkernel, float* gbias) {
    const int nparams = ksz * ksz + 1;  // kernel taps plus bias
    for (int p = 0; p < nparams; ++p) {
        double acc = 0.0;
        if (p == ksz * ksz) {
            for (int o = 0; o < out_h * out_w; ++o) acc += gout[o];
            *gbias = static_cast<float>(acc);
            continue;
        }
        const int ky = p / ksz;
        const int kx = p % ksz;
        for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= in_h) continue;
            for (int ox = 0; ox < out_w; ++ox) {
                const int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= in_w) continue;
                acc += static_cast<double>(gout[oy * out_w + ox]) * in[iy * in_w + ix];
            }
        }
        gkernel[p] = static_cast<float>(acc);
    }
}

void linear_forward(const float* in, const float* weights, const float* bias, float* out,
                    int in_dim, int out_dim) {
    for (int i = 0; i < out_dim; ++i) {
        double acc = bias[i];
        const float* row = weights + static_cast<std::size_t>(i) * in_dim;
        for (int j = 0; j < in_dim; ++j) acc += static_cast<double>(row[j]) * in[j];
        out[i] = static_cast<float>(acc);
    }
}

void linear_backward_input(const float* gout, const float* weights, float* gin, int in_dim,
                           int out_dim) {
    for (int j = 0; j < in_dim; ++j) {
        double acc = 0.0;
        for (int i = 0; i < out_dim; ++i)
            acc += static_cast<double>(gout[i]) * weights[static_cast<std::size_t>(i) * in_dim + j];
        gin[j] = static_cast<float>(acc);
    }
}

void linear_backward_params(const float* gout, const float* in, float* gweights, float* gbias,
                            int in_dim, int out_dim) {
    for (int i = 0; i < out_dim; ++i) {
        float* row = gweights + static_cast<std::size_t>(i) * in_dim;
        for (int j = 0; j < in_dim; ++j) row[j] = gout[i] * in[j];
        gbias[i] = gout[i];
    }
}

void maxpool_forward(const float* in, int in_h, int in_w, int window, int stride, float* out,
                     int out_h, int out_w) {
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            float best = in[(oy * stride) * in_w + ox * stride];
            for (int wy = 0; wy < window; ++wy) {
                const int iy = oy * stride + wy;
                if (iy >= in_h) continue;
                for (int wx = 0; wx < window; ++wx) {
                    const int ix = ox * stride + wx;
                    if (ix >= in_w) continue;
                    best = std::max(best, in[iy * in_w + ix]);
                }
            }
            out[oy * out_w + ox] = best;
        }
    }
}

void maxpool_backward(const float* in, int in_h, int in_w, int window, int stride,
                      const float* gout, int out_h, int out_w, float* gin) {
    std::fill(gin, gin + static_cast<std::size_t>(in_h) * in_w, 0.0f);
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            // first maximal element in row-major window order receives the gradient
            int best_iy = oy * stride;
            int best_ix = ox * stride;
            float best = in[best_iy * in_w + best_ix];
            for (int wy = 0; wy < window; ++wy) {
                const int iy = oy * stride + wy;
                if (iy >= in_h) continue;
                for (int wx = 0; wx < window; ++wx) {
                    const int ix = ox * stride + wx;
                    if (ix >= in_w) continue;
                    const float v = in[iy * in_w + ix];
                    if (v > best) {
                        best = v;
                        best_iy = iy;
                        best_ix = ix;
                    }
                }
            }
            gin[best_iy * in_w + best_ix] += gout[oy * out_w + ox];
        }
    }
}

void relu_forward(const float* in, float* out, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void relu_backward(const float* in, const float* gout, float* gin, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) gin[i] = in[i] > 0.0f ? gout[i] : 0.0f;
}

void tanh_forward(const float* in, float* out, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
}

void tanh_backward(const float* y, const float* gout, float* gin, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) gin[i] = gout[i] * (1.0f - y[i] * y[i]);
}

void interval_linear(const float* lo, const float* hi, const float* weights, const float* bias,
                     float* out_lo, float* out_hi, int in_dim, int out_dim) {
    for (int i = 0; i < out_dim; ++i) {
        const float* row = weights + static_cast<std::size_t>(i) * in_dim;
        double mu = bias[i];
        double rad = 0.0;
        for (int j = 0; j < in_dim; ++j) {
            const double c = 0.5 * (static_cast<double>(lo[j]) + hi[j]);
            const double r = 0.5 * (static_cast<double>(hi[j]) - lo[j]);
            mu += row[j] * c;
            rad += std::abs(static_cast<double>(row[j])) * r;
        }
        out_lo[i] = detail::store_lo(mu - rad);
        out_hi[i] = detail::store_hi(mu + rad);
    }
}

void interval_conv2d(const float* lo, const float* hi, int in_h, int in_w, const float* kernel,
                     int ksz, int stride, int pad, float bias, float* out_lo, float* out_hi,
                     int out_h, int out_w) {
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            double mu = bias;
            double rad = 0.0;
            for (int ky = 0; ky < ksz; ++ky) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= in_h) continue;
                for (int kx = 0; kx < ksz; ++kx) {
                    const int ix = ox * stride - pad + kx;
                    if (ix < 0 || ix >= in_w) continue;
                    const double w = kernel[ky * ksz + kx];
                    const double c = 0.5 * (static_cast<double>(lo[iy * in_w + ix]) + hi[iy * in_w + ix]);
                    const double r = 0.5 * (static_cast<double>(hi[iy * in_w + ix]) - lo[iy * in_w + ix]);
                    mu += w * c;
                    rad += std::abs(w) * r;
                }
            }
            out_lo[oy * out_w + ox] = detail::store_lo(mu - rad);
            out_hi[oy * out_w + ox] = detail::store_hi(mu + rad);
        }
    }
}

void interval_maxpool(const float* lo, const float* hi, int in_h, int in_w, int window,
                      int stride, float* out_lo, float* out_hi, int out_h, int out_w) {
    maxpool_forward(lo, in_h, in_w, window, stride, out_lo, out_h, out_w);
    maxpool_forward(hi, in_h, in_w, window, stride, out_hi, out_h, out_w);
}

void interval_relu(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        out_lo[i] = lo[i] > 0.0f ? lo[i] : 0.0f;
        out_hi[i] = hi[i] > 0.0f ? hi[i] : 0.0f;
    }
}

void interval_tanh(const float* lo, const float* hi, float* out_lo, float* out_hi,
                   std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) {
        out_lo[i] = detail::store_lo(std::tanh(static_cast<double>(lo[i])));
        out_hi[i] = detail::store_hi(std::tanh(static_cast<double>(hi[i])));
    }
}

}  // namespace tracknet::kernels::serial
