#include "avseg/kernels.hpp"

#include <atomic>
#include <cmath>

namespace avseg::kern {

namespace {
std::atomic<bool> g_parallel{true};

inline int64_t idx4(const Shape& s, int a, int b, int c, int d) {
    return ((static_cast<int64_t>(a) * s[1] + b) * s[2] + c) * s[3] + d;
}
}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

int conv_out_dim(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

// ---- matmul -----------------------------------------------------------------

namespace serial {
void matmul(const Scalar* a, const Scalar* b, Scalar* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        Scalar* crow = c + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const Scalar av = a[static_cast<int64_t>(i) * k + p];
            const Scalar* brow = b + static_cast<int64_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace serial

namespace omp {
void matmul(const Scalar* a, const Scalar* b, Scalar* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        Scalar* crow = c + static_cast<int64_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const Scalar av = a[static_cast<int64_t>(i) * k + p];
            const Scalar* brow = b + static_cast<int64_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}
}  // namespace omp

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ConfigError("matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
    Tensor c(Shape{a.dim(0), b.dim(1)});
    if (parallel_enabled())
        omp::matmul(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
    else
        serial::matmul(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw ConfigError("transpose2d: rank != 2");
    Tensor t(Shape{a.dim(1), a.dim(0)});
    for (int i = 0; i < a.dim(0); ++i)
        for (int j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
    return t;
}

// ---- conv2d -----------------------------------------------------------------

namespace {

inline void conv2d_forward_one(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad,
                               Tensor& y, int b, int co) {
    const int ci_n = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int kh = w.dim(2), kw = w.dim(3);
    const int ho = y.dim(2), wo = y.dim(3);
    for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
            Scalar acc = bias ? (*bias)(co) : 0.0;
            const int ih0 = oh * stride - pad, iw0 = ow * stride - pad;
            for (int ci = 0; ci < ci_n; ++ci) {
                for (int r = 0; r < kh; ++r) {
                    const int ih = ih0 + r;
                    if (ih < 0 || ih >= h) continue;
                    for (int cidx = 0; cidx < kw; ++cidx) {
                        const int iw = iw0 + cidx;
                        if (iw < 0 || iw >= wd) continue;
                        acc += x(b, ci, ih, iw) * w(co, ci, r, cidx);
                    }
                }
            }
            y(b, co, oh, ow) = acc;
        }
    }
}

// accumulates dx for one (b, ci) plane
inline void conv2d_grad_input_one(const Tensor& dy, const Tensor& w, int stride, int pad, Tensor& dx, int b,
                                  int ci) {
    const int co_n = dy.dim(1), ho = dy.dim(2), wo = dy.dim(3);
    const int kh = w.dim(2), kw = w.dim(3);
    const int h = dx.dim(2), wd = dx.dim(3);
    for (int co = 0; co < co_n; ++co) {
        for (int oh = 0; oh < ho; ++oh) {
            for (int ow = 0; ow < wo; ++ow) {
                const Scalar g = dy(b, co, oh, ow);
                if (g == 0.0) continue;
                const int ih0 = oh * stride - pad, iw0 = ow * stride - pad;
                for (int r = 0; r < kh; ++r) {
                    const int ih = ih0 + r;
                    if (ih < 0 || ih >= h) continue;
                    for (int cidx = 0; cidx < kw; ++cidx) {
                        const int iw = iw0 + cidx;
                        if (iw < 0 || iw >= wd) continue;
                        dx(b, ci, ih, iw) += g * w(co, ci, r, cidx);
                    }
                }
            }
        }
    }
}

// one dw element: dw[co,ci,r,c] = sum over b,oh,ow of dy * x
inline Scalar conv2d_grad_weight_one(const Tensor& dy, const Tensor& x, int stride, int pad, int co, int ci,
                                     int r, int cidx) {
    const int bn = x.dim(0), h = x.dim(2), wd = x.dim(3);
    const int ho = dy.dim(2), wo = dy.dim(3);
    Scalar acc = 0.0;
    for (int b = 0; b < bn; ++b) {
        for (int oh = 0; oh < ho; ++oh) {
            const int ih = oh * stride - pad + r;
            if (ih < 0 || ih >= h) continue;
            for (int ow = 0; ow < wo; ++ow) {
                const int iw = ow * stride - pad + cidx;
                if (iw < 0 || iw >= wd) continue;
                acc += dy(b, co, oh, ow) * x(b, ci, ih, iw);
            }
        }
    }
    return acc;
}

}  // namespace

namespace serial {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad, Tensor& y) {
    for (int b = 0; b < x.dim(0); ++b)
        for (int co = 0; co < w.dim(0); ++co) conv2d_forward_one(x, w, bias, stride, pad, y, b, co);
}

void conv2d_grad_input(const Tensor& dy, const Tensor& w, int stride, int pad, Tensor& dx) {
    for (int b = 0; b < dx.dim(0); ++b)
        for (int ci = 0; ci < dx.dim(1); ++ci) conv2d_grad_input_one(dy, w, stride, pad, dx, b, ci);
}

void conv2d_grad_params(const Tensor& dy, const Tensor& x, int stride, int pad, Tensor& dw, Tensor& db) {
    const int co_n = dw.dim(0), ci_n = dw.dim(1), kh = dw.dim(2), kw = dw.dim(3);
    for (int co = 0; co < co_n; ++co)
        for (int ci = 0; ci < ci_n; ++ci)
            for (int r = 0; r < kh; ++r)
                for (int c = 0; c < kw; ++c) dw(co, ci, r, c) = conv2d_grad_weight_one(dy, x, stride, pad, co, ci, r, c);
    for (int co = 0; co < co_n; ++co) {
        Scalar acc = 0.0;
        for (int b = 0; b < dy.dim(0); ++b)
            for (int oh = 0; oh < dy.dim(2); ++oh)
                for (int ow = 0; ow < dy.dim(3); ++ow) acc += dy(b, co, oh, ow);
        db(co) = acc;
    }
}

}  // namespace serial

namespace omp {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad, Tensor& y) {
    const int bn = x.dim(0), co_n = w.dim(0);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < bn; ++b)
        for (int co = 0; co < co_n; ++co) conv2d_forward_one(x, w, bias, stride, pad, y, b, co);
}

void conv2d_grad_input(const Tensor& dy, const Tensor& w, int stride, int pad, Tensor& dx) {
    const int bn = dx.dim(0), ci_n = dx.dim(1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < bn; ++b)
        for (int ci = 0; ci < ci_n; ++ci) conv2d_grad_input_one(dy, w, stride, pad, dx, b, ci);
}

void conv2d_grad_params(const Tensor& dy, const Tensor& x, int stride, int pad, Tensor& dw, Tensor& db) {
    const int co_n = dw.dim(0), ci_n = dw.dim(1), kh = dw.dim(2), kw = dw.dim(3);
    const int64_t total = static_cast<int64_t>(co_n) * ci_n * kh * kw;
#pragma omp parallel for schedule(static)
    for (int64_t e = 0; e < total; ++e) {
        const int c = static_cast<int>(e % kw);
        const int r = static_cast<int>((e / kw) % kh);
        const int ci = static_cast<int>((e / (kw * kh)) % ci_n);
        const int co = static_cast<int>(e / (static_cast<int64_t>(kw) * kh * ci_n));
        dw(co, ci, r, c) = conv2d_grad_weight_one(dy, x, stride, pad, co, ci, r, c);
    }
#pragma omp parallel for schedule(static)
    for (int co = 0; co < co_n; ++co) {
        Scalar acc = 0.0;
        for (int b = 0; b < dy.dim(0); ++b)
            for (int oh = 0; oh < dy.dim(2); ++oh)
                for (int ow = 0; ow < dy.dim(3); ++ow) acc += dy(b, co, oh, ow);
        db(co) = acc;
    }
}

}  // namespace omp

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad) {
    if (x.rank() != 4 || w.rank() != 4) throw ConfigError("conv2d: expects 4-D input and weight");
    if (x.dim(1) != w.dim(1))
        throw ConfigError("conv2d: channel mismatch, input " + x.shape_str() + " weight " + w.shape_str());
    if (bias && bias->size() != w.dim(0)) throw ConfigError("conv2d: bias length mismatch");
    const int ho = conv_out_dim(x.dim(2), w.dim(2), stride, pad);
    const int wo = conv_out_dim(x.dim(3), w.dim(3), stride, pad);
    if (ho <= 0 || wo <= 0) throw ConfigError("conv2d: output would be empty for input " + x.shape_str());
    Tensor y(Shape{x.dim(0), w.dim(0), ho, wo});
    if (parallel_enabled())
        omp::conv2d_forward(x, w, bias, stride, pad, y);
    else
        serial::conv2d_forward(x, w, bias, stride, pad, y);
    return y;
}

Tensor conv2d_grad_input(const Tensor& dy, const Tensor& w, int stride, int pad, int in_h, int in_w) {
    Tensor dx(Shape{dy.dim(0), w.dim(1), in_h, in_w});
    if (parallel_enabled())
        omp::conv2d_grad_input(dy, w, stride, pad, dx);
    else
        serial::conv2d_grad_input(dy, w, stride, pad, dx);
    return dx;
}

void conv2d_grad_params(const Tensor& dy, const Tensor& x, int stride, int pad, Tensor& dw, Tensor& db) {
    if (parallel_enabled())
        omp::conv2d_grad_params(dy, x, stride, pad, dw, db);
    else
        serial::conv2d_grad_params(dy, x, stride, pad, dw, db);
}

// ---- bilinear resize (align_corners = false) ---------------------------------

namespace {

struct Lerp {
    int i0, i1;
    Scalar w0, w1;
};

inline Lerp lerp_coeff(int out_i, int in_n, int out_n) {
    const Scalar scale = static_cast<Scalar>(in_n) / out_n;
    Scalar src = (out_i + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    const int i0 = std::min(static_cast<int>(src), in_n - 1);
    const int i1 = std::min(i0 + 1, in_n - 1);
    const Scalar f = src - i0;
    return {i0, i1, 1.0 - f, f};
}

inline void resize_plane(const Tensor& x, Tensor& y, int b, int c) {
    const int ih = x.dim(2), iw = x.dim(3), oh = y.dim(2), ow = y.dim(3);
    for (int r = 0; r < oh; ++r) {
        const Lerp lr = lerp_coeff(r, ih, oh);
        for (int q = 0; q < ow; ++q) {
            const Lerp lc = lerp_coeff(q, iw, ow);
            y(b, c, r, q) = lr.w0 * (lc.w0 * x(b, c, lr.i0, lc.i0) + lc.w1 * x(b, c, lr.i0, lc.i1)) +
                            lr.w1 * (lc.w0 * x(b, c, lr.i1, lc.i0) + lc.w1 * x(b, c, lr.i1, lc.i1));
        }
    }
}

inline void resize_grad_plane(const Tensor& dy, Tensor& dx, int b, int c) {
    const int ih = dx.dim(2), iw = dx.dim(3), oh = dy.dim(2), ow = dy.dim(3);
    for (int r = 0; r < oh; ++r) {
        const Lerp lr = lerp_coeff(r, ih, oh);
        for (int q = 0; q < ow; ++q) {
            const Lerp lc = lerp_coeff(q, iw, ow);
            const Scalar g = dy(b, c, r, q);
            dx(b, c, lr.i0, lc.i0) += g * lr.w0 * lc.w0;
            dx(b, c, lr.i0, lc.i1) += g * lr.w0 * lc.w1;
            dx(b, c, lr.i1, lc.i0) += g * lr.w1 * lc.w0;
            dx(b, c, lr.i1, lc.i1) += g * lr.w1 * lc.w1;
        }
    }
}

}  // namespace

namespace serial {
void resize_bilinear(const Tensor& x, Tensor& y) {
    for (int b = 0; b < x.dim(0); ++b)
        for (int c = 0; c < x.dim(1); ++c) resize_plane(x, y, b, c);
}
void resize_bilinear_grad(const Tensor& dy, Tensor& dx) {
    for (int b = 0; b < dx.dim(0); ++b)
        for (int c = 0; c < dx.dim(1); ++c) resize_grad_plane(dy, dx, b, c);
}
}  // namespace serial

namespace omp {
void resize_bilinear(const Tensor& x, Tensor& y) {
    const int bn = x.dim(0), cn = x.dim(1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < bn; ++b)
        for (int c = 0; c < cn; ++c) resize_plane(x, y, b, c);
}
void resize_bilinear_grad(const Tensor& dy, Tensor& dx) {
    const int bn = dx.dim(0), cn = dx.dim(1);
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < bn; ++b)
        for (int c = 0; c < cn; ++c) resize_grad_plane(dy, dx, b, c);
}
}  // namespace omp

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
    if (x.rank() != 4) throw ConfigError("resize_bilinear: expects 4-D [B,C,H,W]");
    if (out_h < 1 || out_w < 1) throw ConfigError("resize_bilinear: bad target size");
    Tensor y(Shape{x.dim(0), x.dim(1), out_h, out_w});
    if (parallel_enabled())
        omp::resize_bilinear(x, y);
    else
        serial::resize_bilinear(x, y);
    return y;
}

Tensor resize_bilinear_grad(const Tensor& dy, int in_h, int in_w) {
    Tensor dx(Shape{dy.dim(0), dy.dim(1), in_h, in_w});
    if (parallel_enabled())
        omp::resize_bilinear_grad(dy, dx);
    else
        serial::resize_bilinear_grad(dy, dx);
    return dx;
}

// ---- DFT / STFT --------------------------------------------------------------

void dft(std::vector<std::complex<Scalar>>& a) {
    const size_t n = a.size();
    if (n == 0) return;
    if ((n & (n - 1)) == 0) {
        // iterative radix-2
        for (size_t i = 1, j = 0; i < n; ++i) {
            size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
        for (size_t len = 2; len <= n; len <<= 1) {
            const Scalar ang = -2.0 * M_PI / static_cast<Scalar>(len);
            const std::complex<Scalar> wl(std::cos(ang), std::sin(ang));
            for (size_t i = 0; i < n; i += len) {
                std::complex<Scalar> w(1.0, 0.0);
                for (size_t j = 0; j < len / 2; ++j) {
                    const auto u = a[i + j];
                    const auto v = a[i + j + len / 2] * w;
                    a[i + j] = u + v;
                    a[i + j + len / 2] = u - v;
                    w *= wl;
                }
            }
        }
        return;
    }
    // naive fallback for non-power-of-two sizes
    std::vector<std::complex<Scalar>> out(n);
    for (size_t k = 0; k < n; ++k) {
        std::complex<Scalar> acc(0.0, 0.0);
        for (size_t t = 0; t < n; ++t) {
            const Scalar ang = -2.0 * M_PI * static_cast<Scalar>(k) * static_cast<Scalar>(t) / static_cast<Scalar>(n);
            acc += a[t] * std::complex<Scalar>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    a = std::move(out);
}

namespace {

inline void stft_frame(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop,
                       int fft_size, Tensor& out, int frame) {
    const int win = static_cast<int>(window.size());
    const int bins = fft_size / 2 + 1;
    std::vector<std::complex<Scalar>> buf(static_cast<size_t>(fft_size), {0.0, 0.0});
    const int64_t start = static_cast<int64_t>(frame) * hop;
    // windowed frame, folded into fft_size buckets when win > fft_size
    for (int t = 0; t < win; ++t) {
        const Scalar v = samples[static_cast<size_t>(start + t)] * window[static_cast<size_t>(t)];
        buf[static_cast<size_t>(t % fft_size)] += v;
    }
    dft(buf);
    for (int k = 0; k < bins; ++k) out(k, frame) = std::abs(buf[static_cast<size_t>(k)]);
}

}  // namespace

namespace serial {
void stft_mag(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop, int fft_size,
              Tensor& out) {
    for (int f = 0; f < out.dim(1); ++f) stft_frame(samples, window, hop, fft_size, out, f);
}
}  // namespace serial

namespace omp {
void stft_mag(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop, int fft_size,
              Tensor& out) {
    const int frames = out.dim(1);
#pragma omp parallel for schedule(static)
    for (int f = 0; f < frames; ++f) stft_frame(samples, window, hop, fft_size, out, f);
}
}  // namespace omp

Tensor stft_mag(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop, int fft_size) {
    const int win = static_cast<int>(window.size());
    if (win < 1 || hop < 1 || fft_size < 2) throw ConfigError("stft: bad framing parameters");
    if (static_cast<int>(samples.size()) < win) throw DataError("audio too short");
    const int frames = static_cast<int>((samples.size() - static_cast<size_t>(win)) / static_cast<size_t>(hop)) + 1;
    Tensor out(Shape{fft_size / 2 + 1, frames});
    if (parallel_enabled())
        omp::stft_mag(samples, window, hop, fft_size, out);
    else
        serial::stft_mag(samples, window, hop, fft_size, out);
    return out;
}

}  // namespace avseg::kern
