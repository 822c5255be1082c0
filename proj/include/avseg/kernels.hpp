#pragma once

#include <complex>
#include <vector>

#include "avseg/tensor.hpp"

// Hot numeric kernels. Every kernel exists twice: kern::serial is the plain
// reference implementation kept for testing, kern::omp is the OpenMP variant
// used in production. The unprefixed entry points dispatch on set_parallel().
// Parallel loops assign each output element to exactly one thread, so results
// are bit-identical to the serial versions regardless of thread count.
namespace avseg::kern {

bool parallel_enabled();
void set_parallel(bool on);

namespace serial {

// C[m,n] = A[m,k] * B[k,n]
void matmul(const Scalar* a, const Scalar* b, Scalar* c, int m, int k, int n);

// x:[B,Ci,H,W] w:[Co,Ci,kh,kw] b:[Co] or null, y:[B,Co,Ho,Wo]
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad, Tensor& y);
void conv2d_grad_input(const Tensor& dy, const Tensor& w, int stride, int pad, Tensor& dx);
void conv2d_grad_params(const Tensor& dy, const Tensor& x, int stride, int pad, Tensor& dw, Tensor& db);

// bilinear resize, align_corners = false; x,y: [B,C,H,W]
void resize_bilinear(const Tensor& x, Tensor& y);
void resize_bilinear_grad(const Tensor& dy, Tensor& dx);

// magnitudes of a framed DFT; see stft() below for the framing contract
void stft_mag(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop, int fft_size,
              Tensor& out);

}  // namespace serial

namespace omp {

void matmul(const Scalar* a, const Scalar* b, Scalar* c, int m, int k, int n);
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad, Tensor& y);
void conv2d_grad_input(const Tensor& dy, const Tensor& w, int stride, int pad, Tensor& dx);
void conv2d_grad_params(const Tensor& dy, const Tensor& x, int stride, int pad, Tensor& dw, Tensor& db);
void resize_bilinear(const Tensor& x, Tensor& y);
void resize_bilinear_grad(const Tensor& dy, Tensor& dx);
void stft_mag(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop, int fft_size,
              Tensor& out);

}  // namespace omp

// ---- dispatching wrappers --------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);

int conv_out_dim(int in, int kernel, int stride, int pad);
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad);
Tensor conv2d_grad_input(const Tensor& dy, const Tensor& w, int stride, int pad, int in_h, int in_w);
void conv2d_grad_params(const Tensor& dy, const Tensor& x, int stride, int pad, Tensor& dw, Tensor& db);

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);
Tensor resize_bilinear_grad(const Tensor& dy, int in_h, int in_w);

/// Log-free magnitude STFT. Frames of window.size() samples at the given hop,
/// each multiplied by `window`; frames longer than fft_size are folded
/// (time-aliased) so the DFT samples the frame's spectrum on the fft_size
/// grid, shorter frames are zero-padded. Output is [fft_size/2+1, n_frames].
Tensor stft_mag(const std::vector<Scalar>& samples, const std::vector<Scalar>& window, int hop, int fft_size);

/// In-place DFT of `a`. Radix-2 when the length is a power of two, naive
/// O(n^2) otherwise (toy profiles use non-power-of-two sizes).
void dft(std::vector<std::complex<Scalar>>& a);

}  // namespace avseg::kern
