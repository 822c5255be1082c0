#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "avseg/tensor.hpp"

// Reverse-mode tape over Tensor. Graphs are built per forward pass; leaves
// (parameters, inputs) persist across passes and accumulate into .grad on
// backward(). Ops run on the kernels layer, so the serial/OpenMP switch
// applies to autodiff too.
namespace avseg::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;  // reads this->grad, accumulates into parents
    const char* op = "leaf";

    const Shape& shape() const { return value.shape(); }
    Scalar scalar() const { return value[0]; }
    void accumulate(const Tensor& g);
    void zero_grad() { if (!grad.empty()) grad.zero(); }
};

/// Leaf that participates in gradients (model parameters, checked inputs).
Var leaf(Tensor value, bool requires_grad);
/// Leaf excluded from gradients (targets, fixed data).
Var constant(Tensor value);

/// Reverse pass from a scalar root. Accumulates into every reachable
/// requires_grad leaf; intermediate grads are discarded with the graph.
void backward(const Var& root);

// ---- primitive ops ----------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);          // elementwise, same shape
Var affine(const Var& a, Scalar k, Scalar c); // k*a + c elementwise
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var matmul(const Var& a, const Var& b);
Var reshape(const Var& a, Shape shape);
Var sum(const Var& a);   // -> scalar
Var mean(const Var& a);  // -> scalar

/// y[B,out] = x[B,in] * W[out,in]^T + b[out]; b may be null.
Var linear(const Var& x, const Var& w, const Var& b);

/// x:[B,Ci,H,W] w:[Co,Ci,kh,kw] bias:[Co] or null.
Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad);

Var global_avg_pool(const Var& x);     // [B,C,H,W] -> [B,C]
Var spatial_sum(const Var& x);         // [B,C,H,W] -> [B,C]
Var upsample_bilinear(const Var& x, int out_h, int out_w);

/// y[b,0,h,w] = max_c x[b,c,h,w]; gradient routed to the argmax channel.
Var channel_max(const Var& x);

/// y[b,0,h,w] = sum_d map[b,d,h,w] * vec[b,d]
Var dot_map_vec(const Var& map, const Var& vec);
/// y[b,d,h,w] = alpha[b,0,h,w] * vec[b,d]
Var mul_map_vec(const Var& alpha, const Var& vec);

/// sim[i,m] = max over spatial locations p of cos(a_i, v_m[:,p]).
/// Norms are clamped at eps, so zero-norm locations contribute similarity 0.
/// Throws if any audio row has (near-)zero norm.
Var max_cos_sim(const Var& audio, const Var& visual, Scalar eps = 1e-8);

/// cos(x_i, y_j) for all pairs; x:[B,D] y:[C,D] -> [B,C]; norms clamped at eps.
Var cosine_matrix(const Var& x, const Var& y, Scalar eps = 1e-8);

/// mean_i [ logsumexp_m S[i,m] - S[i,i] ] when over_rows, else
/// mean_i [ logsumexp_m S[m,i] - S[i,i] ]. S must be square.
Var info_nce_diag(const Var& s, bool over_rows);

/// Mean binary cross entropy; prediction clamped to [eps, 1-eps].
Var bce_mean(const Var& pred, const Tensor& target, Scalar eps = 1e-7);

/// out[b,:] = sum_p w[b,p] f[b,:,p] / sum_p w[b,p]; rows whose weight mass is
/// below fallback_eps use the unweighted mean instead (flag reported per row).
Var weighted_pool(const Var& features, const Var& weights, Scalar fallback_eps,
                  std::vector<bool>* fallback_rows = nullptr);

/// Gradient check helper: relative error between analytic gradient of
/// loss_fn(inputs) w.r.t. each entry of inputs[check] and central differences.
Scalar gradcheck_max_rel_error(const std::function<Var(const std::vector<Var>&)>& loss_fn,
                               std::vector<Var> inputs, size_t check, Scalar h = 1e-5,
                               int max_coords = 64, uint64_t coord_seed = 0);

}  // namespace avseg::ad
