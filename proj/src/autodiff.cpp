#include "avseg/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "avseg/kernels.hpp"
#include "avseg/rng.hpp"

namespace avseg::ad {

void Node::accumulate(const Tensor& g) {
    if (!requires_grad) return;
    if (grad.empty()) grad = Tensor(value.shape());
    if (!grad.same_shape(g)) throw ConfigError("grad shape mismatch on op " + std::string(op));
    grad.add_(g);
}

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

namespace {

Var make_op(const char* name, Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = name;
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    n->requires_grad = rg;
    if (rg) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(fn);
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* opname) {
    if (!a->value.same_shape(b->value))
        throw ConfigError(std::string(opname) + ": shape mismatch " + a->value.shape_str() + " vs " +
                          b->value.shape_str());
}

}  // namespace

void backward(const Var& root) {
    if (root->value.size() != 1) throw ConfigError("backward: root must be scalar");
    // iterative topological sort over parents
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->grad = Tensor::full(root->value.shape(), 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

// ---- elementwise ------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor y = a->value;
    y.add_(b->value);
    return make_op("add", std::move(y), {a, b}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        n.parents[1]->accumulate(n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor y = a->value;
    y.axpy_(-1.0, b->value);
    return make_op("sub", std::move(y), {a, b}, [](Node& n) {
        n.parents[0]->accumulate(n.grad);
        Tensor g = n.grad;
        g.scale_(-1.0);
        n.parents[1]->accumulate(g);
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor y(a->value.shape());
    for (int64_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * b->value[i];
    return make_op("mul", std::move(y), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        Tensor ga(av.shape()), gb(bv.shape());
        for (int64_t i = 0; i < ga.size(); ++i) {
            ga[i] = n.grad[i] * bv[i];
            gb[i] = n.grad[i] * av[i];
        }
        n.parents[0]->accumulate(ga);
        n.parents[1]->accumulate(gb);
    });
}

Var affine(const Var& a, Scalar k, Scalar c) {
    Tensor y = a->value;
    for (int64_t i = 0; i < y.size(); ++i) y[i] = k * y[i] + c;
    return make_op("affine", std::move(y), {a}, [k](Node& n) {
        Tensor g = n.grad;
        g.scale_(k);
        n.parents[0]->accumulate(g);
    });
}

Var relu(const Var& a) {
    Tensor y = a->value;
    for (int64_t i = 0; i < y.size(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
    return make_op("relu", std::move(y), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor g(x.shape());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0 ? n.grad[i] : 0.0;
        n.parents[0]->accumulate(g);
    });
}

Var sigmoid(const Var& a) {
    Tensor y(a->value.shape());
    for (int64_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-a->value[i]));
    Tensor ycopy = y;
    return make_op("sigmoid", std::move(y), {a}, [ycopy](Node& n) {
        Tensor g(ycopy.shape());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * ycopy[i] * (1.0 - ycopy[i]);
        n.parents[0]->accumulate(g);
    });
}

Var reshape(const Var& a, Shape shape) {
    Tensor y = a->value.reshaped(shape);
    return make_op("reshape", std::move(y), {a}, [](Node& n) {
        n.parents[0]->accumulate(n.grad.reshaped(n.parents[0]->value.shape()));
    });
}

Var sum(const Var& a) {
    Tensor y = Tensor::scalar(a->value.sum());
    return make_op("sum", std::move(y), {a}, [](Node& n) {
        n.parents[0]->accumulate(Tensor::full(n.parents[0]->value.shape(), n.grad[0]));
    });
}

Var mean(const Var& a) {
    const Scalar inv = 1.0 / static_cast<Scalar>(a->value.size());
    Tensor y = Tensor::scalar(a->value.sum() * inv);
    return make_op("mean", std::move(y), {a}, [inv](Node& n) {
        n.parents[0]->accumulate(Tensor::full(n.parents[0]->value.shape(), n.grad[0] * inv));
    });
}

// ---- linear / matmul ----------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    Tensor y = kern::matmul(a->value, b->value);
    return make_op("matmul", std::move(y), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        n.parents[0]->accumulate(kern::matmul(n.grad, kern::transpose2d(bv)));
        n.parents[1]->accumulate(kern::matmul(kern::transpose2d(av), n.grad));
    });
}

Var linear(const Var& x, const Var& w, const Var& b) {
    if (x->value.rank() != 2 || w->value.rank() != 2 || x->value.dim(1) != w->value.dim(1))
        throw ConfigError("linear: shapes " + x->value.shape_str() + " and " + w->value.shape_str());
    Tensor y = kern::matmul(x->value, kern::transpose2d(w->value));
    if (b) {
        for (int i = 0; i < y.dim(0); ++i)
            for (int j = 0; j < y.dim(1); ++j) y(i, j) += b->value(j);
    }
    std::vector<Var> parents = {x, w};
    if (b) parents.push_back(b);
    return make_op("linear", std::move(y), std::move(parents), [](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& wv = n.parents[1]->value;
        n.parents[0]->accumulate(kern::matmul(n.grad, wv));
        n.parents[1]->accumulate(kern::matmul(kern::transpose2d(n.grad), xv));
        if (n.parents.size() > 2) {
            Tensor db(Shape{n.grad.dim(1)});
            for (int i = 0; i < n.grad.dim(0); ++i)
                for (int j = 0; j < n.grad.dim(1); ++j) db(j) += n.grad(i, j);
            n.parents[2]->accumulate(db);
        }
    });
}

Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad) {
    Tensor y = kern::conv2d_forward(x->value, w->value, bias ? &bias->value : nullptr, stride, pad);
    std::vector<Var> parents = {x, w};
    if (bias) parents.push_back(bias);
    return make_op("conv2d", std::move(y), std::move(parents), [stride, pad](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& wv = n.parents[1]->value;
        if (n.parents[0]->requires_grad)
            n.parents[0]->accumulate(kern::conv2d_grad_input(n.grad, wv, stride, pad, xv.dim(2), xv.dim(3)));
        if (n.parents[1]->requires_grad || (n.parents.size() > 2 && n.parents[2]->requires_grad)) {
            Tensor dw(wv.shape()), db(Shape{wv.dim(0)});
            kern::conv2d_grad_params(n.grad, xv, stride, pad, dw, db);
            n.parents[1]->accumulate(dw);
            if (n.parents.size() > 2) n.parents[2]->accumulate(db);
        }
    });
}

// ---- pooling / resize ----------------------------------------------------------

Var global_avg_pool(const Var& x) {
    const Tensor& v = x->value;
    if (v.rank() != 4) throw ConfigError("global_avg_pool: expects [B,C,H,W]");
    const int bn = v.dim(0), cn = v.dim(1), hw = v.dim(2) * v.dim(3);
    Tensor y(Shape{bn, cn});
    for (int b = 0; b < bn; ++b)
        for (int c = 0; c < cn; ++c) {
            Scalar acc = 0.0;
            const Scalar* p = v.data() + (static_cast<int64_t>(b) * cn + c) * hw;
            for (int i = 0; i < hw; ++i) acc += p[i];
            y(b, c) = acc / hw;
        }
    return make_op("gap", std::move(y), {x}, [](Node& n) {
        const Tensor& v = n.parents[0]->value;
        const int bn = v.dim(0), cn = v.dim(1), hw = v.dim(2) * v.dim(3);
        Tensor g(v.shape());
        for (int b = 0; b < bn; ++b)
            for (int c = 0; c < cn; ++c) {
                const Scalar gv = n.grad(b, c) / hw;
                Scalar* p = g.data() + (static_cast<int64_t>(b) * cn + c) * hw;
                for (int i = 0; i < hw; ++i) p[i] = gv;
            }
        n.parents[0]->accumulate(g);
    });
}

Var spatial_sum(const Var& x) {
    const Tensor& v = x->value;
    if (v.rank() != 4) throw ConfigError("spatial_sum: expects [B,C,H,W]");
    const int bn = v.dim(0), cn = v.dim(1), hw = v.dim(2) * v.dim(3);
    Tensor y(Shape{bn, cn});
    for (int b = 0; b < bn; ++b)
        for (int c = 0; c < cn; ++c) {
            Scalar acc = 0.0;
            const Scalar* p = v.data() + (static_cast<int64_t>(b) * cn + c) * hw;
            for (int i = 0; i < hw; ++i) acc += p[i];
            y(b, c) = acc;
        }
    return make_op("spatial_sum", std::move(y), {x}, [](Node& n) {
        const Tensor& v = n.parents[0]->value;
        const int bn = v.dim(0), cn = v.dim(1), hw = v.dim(2) * v.dim(3);
        Tensor g(v.shape());
        for (int b = 0; b < bn; ++b)
            for (int c = 0; c < cn; ++c) {
                const Scalar gv = n.grad(b, c);
                Scalar* p = g.data() + (static_cast<int64_t>(b) * cn + c) * hw;
                for (int i = 0; i < hw; ++i) p[i] = gv;
            }
        n.parents[0]->accumulate(g);
    });
}

Var upsample_bilinear(const Var& x, int out_h, int out_w) {
    Tensor y = kern::resize_bilinear(x->value, out_h, out_w);
    return make_op("upsample", std::move(y), {x}, [](Node& n) {
        const Tensor& v = n.parents[0]->value;
        n.parents[0]->accumulate(kern::resize_bilinear_grad(n.grad, v.dim(2), v.dim(3)));
    });
}

Var channel_max(const Var& x) {
    const Tensor& v = x->value;
    if (v.rank() != 4) throw ConfigError("channel_max: expects [B,C,H,W]");
    const int bn = v.dim(0), cn = v.dim(1), hw = v.dim(2) * v.dim(3);
    Tensor y(Shape{bn, 1, v.dim(2), v.dim(3)});
    std::vector<int> arg(static_cast<size_t>(bn) * hw);
    for (int b = 0; b < bn; ++b)
        for (int p = 0; p < hw; ++p) {
            Scalar best = v.data()[(static_cast<int64_t>(b) * cn) * hw + p];
            int bc = 0;
            for (int c = 1; c < cn; ++c) {
                const Scalar val = v.data()[(static_cast<int64_t>(b) * cn + c) * hw + p];
                if (val > best) {
                    best = val;
                    bc = c;
                }
            }
            y.data()[static_cast<int64_t>(b) * hw + p] = best;
            arg[static_cast<size_t>(b) * hw + p] = bc;
        }
    return make_op("channel_max", std::move(y), {x}, [arg = std::move(arg)](Node& n) {
        const Tensor& v = n.parents[0]->value;
        const int bn = v.dim(0), cn = v.dim(1), hw = v.dim(2) * v.dim(3);
        Tensor g(v.shape());
        for (int b = 0; b < bn; ++b)
            for (int p = 0; p < hw; ++p) {
                const int c = arg[static_cast<size_t>(b) * hw + p];
                g.data()[(static_cast<int64_t>(b) * cn + c) * hw + p] =
                    n.grad.data()[static_cast<int64_t>(b) * hw + p];
            }
        n.parents[0]->accumulate(g);
    });
}

// ---- broadcast helpers for the fusion update -----------------------------------

Var dot_map_vec(const Var& map, const Var& vec) {
    const Tensor& m = map->value;
    const Tensor& v = vec->value;
    if (m.rank() != 4 || v.rank() != 2 || m.dim(0) != v.dim(0) || m.dim(1) != v.dim(1))
        throw ConfigError("dot_map_vec: shapes " + m.shape_str() + " and " + v.shape_str());
    const int bn = m.dim(0), dn = m.dim(1), hw = m.dim(2) * m.dim(3);
    Tensor y(Shape{bn, 1, m.dim(2), m.dim(3)});
    for (int b = 0; b < bn; ++b)
        for (int p = 0; p < hw; ++p) {
            Scalar acc = 0.0;
            for (int d = 0; d < dn; ++d) acc += m.data()[(static_cast<int64_t>(b) * dn + d) * hw + p] * v(b, d);
            y.data()[static_cast<int64_t>(b) * hw + p] = acc;
        }
    return make_op("dot_map_vec", std::move(y), {map, vec}, [](Node& n) {
        const Tensor& m = n.parents[0]->value;
        const Tensor& v = n.parents[1]->value;
        const int bn = m.dim(0), dn = m.dim(1), hw = m.dim(2) * m.dim(3);
        Tensor gm(m.shape()), gv(v.shape());
        for (int b = 0; b < bn; ++b)
            for (int d = 0; d < dn; ++d)
                for (int p = 0; p < hw; ++p) {
                    const Scalar g = n.grad.data()[static_cast<int64_t>(b) * hw + p];
                    gm.data()[(static_cast<int64_t>(b) * dn + d) * hw + p] = g * v(b, d);
                    gv(b, d) += g * m.data()[(static_cast<int64_t>(b) * dn + d) * hw + p];
                }
        n.parents[0]->accumulate(gm);
        n.parents[1]->accumulate(gv);
    });
}

Var mul_map_vec(const Var& alpha, const Var& vec) {
    const Tensor& a = alpha->value;
    const Tensor& v = vec->value;
    if (a.rank() != 4 || a.dim(1) != 1 || v.rank() != 2 || a.dim(0) != v.dim(0))
        throw ConfigError("mul_map_vec: shapes " + a.shape_str() + " and " + v.shape_str());
    const int bn = a.dim(0), dn = v.dim(1), hw = a.dim(2) * a.dim(3);
    Tensor y(Shape{bn, dn, a.dim(2), a.dim(3)});
    for (int b = 0; b < bn; ++b)
        for (int d = 0; d < dn; ++d)
            for (int p = 0; p < hw; ++p)
                y.data()[(static_cast<int64_t>(b) * dn + d) * hw + p] =
                    a.data()[static_cast<int64_t>(b) * hw + p] * v(b, d);
    return make_op("mul_map_vec", std::move(y), {alpha, vec}, [](Node& n) {
        const Tensor& a = n.parents[0]->value;
        const Tensor& v = n.parents[1]->value;
        const int bn = a.dim(0), dn = v.dim(1), hw = a.dim(2) * a.dim(3);
        Tensor ga(a.shape()), gv(v.shape());
        for (int b = 0; b < bn; ++b)
            for (int d = 0; d < dn; ++d)
                for (int p = 0; p < hw; ++p) {
                    const Scalar g = n.grad.data()[(static_cast<int64_t>(b) * dn + d) * hw + p];
                    ga.data()[static_cast<int64_t>(b) * hw + p] += g * v(b, d);
                    gv(b, d) += g * a.data()[static_cast<int64_t>(b) * hw + p];
                }
        n.parents[0]->accumulate(ga);
        n.parents[1]->accumulate(gv);
    });
}

// ---- similarity ops -------------------------------------------------------------

namespace {
Scalar row_norm(const Scalar* p, int d) {
    Scalar acc = 0.0;
    for (int i = 0; i < d; ++i) acc += p[i] * p[i];
    return std::sqrt(acc);
}
}  // namespace

Var max_cos_sim(const Var& audio, const Var& visual, Scalar eps) {
    const Tensor& a = audio->value;
    const Tensor& v = visual->value;
    if (a.rank() != 2 || v.rank() != 4 || a.dim(1) != v.dim(1))
        throw ConfigError("max_cos_sim: audio " + a.shape_str() + " vs visual " + v.shape_str());
    const int bn = a.dim(0), mn = v.dim(0), dn = a.dim(1), hw = v.dim(2) * v.dim(3);

    std::vector<Scalar> na(static_cast<size_t>(bn));
    std::vector<bool> abig(static_cast<size_t>(bn));
    for (int i = 0; i < bn; ++i) {
        const Scalar norm = row_norm(a.data() + static_cast<int64_t>(i) * dn, dn);
        if (norm < 1e-12) throw ConfigError("degenerate audio embedding (zero norm)");
        na[static_cast<size_t>(i)] = std::max(norm, eps);
        abig[static_cast<size_t>(i)] = norm > eps;
    }

    Tensor y(Shape{bn, mn});
    std::vector<int> argmax(static_cast<size_t>(bn) * mn);
#pragma omp parallel for collapse(2) schedule(static) if (kern::parallel_enabled())
    for (int i = 0; i < bn; ++i) {
        for (int m = 0; m < mn; ++m) {
            const Scalar* arow = a.data() + static_cast<int64_t>(i) * dn;
            Scalar best = -2.0;
            int best_p = 0;
            for (int p = 0; p < hw; ++p) {
                Scalar dot = 0.0, nsq = 0.0;
                const Scalar* vbase = v.data() + (static_cast<int64_t>(m) * dn) * hw + p;
                for (int d = 0; d < dn; ++d) {
                    const Scalar vv = vbase[static_cast<int64_t>(d) * hw];
                    dot += arow[d] * vv;
                    nsq += vv * vv;
                }
                const Scalar nu = std::max(std::sqrt(nsq), eps);
                const Scalar c = dot / (na[static_cast<size_t>(i)] * nu);
                if (c > best) {
                    best = c;
                    best_p = p;
                }
            }
            y(i, m) = best;
            argmax[static_cast<size_t>(i) * mn + m] = best_p;
        }
    }
    Tensor sim = y;
    return make_op("max_cos_sim", std::move(y), {audio, visual},
                   [argmax = std::move(argmax), na = std::move(na), abig = std::move(abig), sim, eps](Node& n) {
        const Tensor& a = n.parents[0]->value;
        const Tensor& v = n.parents[1]->value;
        const int bn = a.dim(0), mn = v.dim(0), dn = a.dim(1), hw = v.dim(2) * v.dim(3);
        Tensor ga(a.shape()), gv(v.shape());
        for (int i = 0; i < bn; ++i) {
            for (int m = 0; m < mn; ++m) {
                const Scalar g = n.grad(i, m);
                if (g == 0.0) continue;
                const int p = argmax[static_cast<size_t>(i) * mn + m];
                const Scalar* arow = a.data() + static_cast<int64_t>(i) * dn;
                const Scalar* vloc = v.data() + (static_cast<int64_t>(m) * dn) * hw + p;
                Scalar nsq = 0.0;
                for (int d = 0; d < dn; ++d) {
                    const Scalar vv = vloc[static_cast<int64_t>(d) * hw];
                    nsq += vv * vv;
                }
                const Scalar unorm = std::sqrt(nsq);
                const Scalar nu = std::max(unorm, eps);
                const Scalar nai = na[static_cast<size_t>(i)];
                const Scalar c = sim(i, m);
                for (int d = 0; d < dn; ++d) {
                    const Scalar vv = vloc[static_cast<int64_t>(d) * hw];
                    Scalar da = vv / (nai * nu);
                    if (abig[static_cast<size_t>(i)]) da -= c * arow[d] / (nai * nai);
                    ga(i, d) += g * da;
                    Scalar dv = arow[d] / (nai * nu);
                    if (unorm > eps) dv -= c * vv / (nu * nu);
                    gv.data()[(static_cast<int64_t>(m) * dn + d) * hw + p] += g * dv;
                }
            }
        }
        n.parents[0]->accumulate(ga);
        n.parents[1]->accumulate(gv);
    });
}

Var cosine_matrix(const Var& x, const Var& y, Scalar eps) {
    const Tensor& xv = x->value;
    const Tensor& yv = y->value;
    if (xv.rank() != 2 || yv.rank() != 2 || xv.dim(1) != yv.dim(1))
        throw ConfigError("cosine_matrix: shapes " + xv.shape_str() + " and " + yv.shape_str());
    const int bn = xv.dim(0), cn = yv.dim(0), dn = xv.dim(1);
    std::vector<Scalar> nx(static_cast<size_t>(bn)), ny(static_cast<size_t>(cn));
    std::vector<bool> xbig(static_cast<size_t>(bn)), ybig(static_cast<size_t>(cn));
    for (int i = 0; i < bn; ++i) {
        const Scalar norm = row_norm(xv.data() + static_cast<int64_t>(i) * dn, dn);
        nx[static_cast<size_t>(i)] = std::max(norm, eps);
        xbig[static_cast<size_t>(i)] = norm > eps;
    }
    for (int j = 0; j < cn; ++j) {
        const Scalar norm = row_norm(yv.data() + static_cast<int64_t>(j) * dn, dn);
        ny[static_cast<size_t>(j)] = std::max(norm, eps);
        ybig[static_cast<size_t>(j)] = norm > eps;
    }
    Tensor c(Shape{bn, cn});
    for (int i = 0; i < bn; ++i)
        for (int j = 0; j < cn; ++j) {
            Scalar dot = 0.0;
            for (int d = 0; d < dn; ++d) dot += xv(i, d) * yv(j, d);
            c(i, j) = dot / (nx[static_cast<size_t>(i)] * ny[static_cast<size_t>(j)]);
        }
    Tensor cval = c;
    return make_op("cosine_matrix", std::move(c), {x, y},
                   [nx = std::move(nx), ny = std::move(ny), xbig = std::move(xbig), ybig = std::move(ybig),
                    cval](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& yv = n.parents[1]->value;
        const int bn = xv.dim(0), cn = yv.dim(0), dn = xv.dim(1);
        Tensor gx(xv.shape()), gy(yv.shape());
        for (int i = 0; i < bn; ++i)
            for (int j = 0; j < cn; ++j) {
                const Scalar g = n.grad(i, j);
                if (g == 0.0) continue;
                const Scalar denom = nx[static_cast<size_t>(i)] * ny[static_cast<size_t>(j)];
                for (int d = 0; d < dn; ++d) {
                    Scalar dxi = yv(j, d) / denom;
                    if (xbig[static_cast<size_t>(i)])
                        dxi -= cval(i, j) * xv(i, d) / (nx[static_cast<size_t>(i)] * nx[static_cast<size_t>(i)]);
                    Scalar dyj = xv(i, d) / denom;
                    if (ybig[static_cast<size_t>(j)])
                        dyj -= cval(i, j) * yv(j, d) / (ny[static_cast<size_t>(j)] * ny[static_cast<size_t>(j)]);
                    gx(i, d) += g * dxi;
                    gy(j, d) += g * dyj;
                }
            }
        n.parents[0]->accumulate(gx);
        n.parents[1]->accumulate(gy);
    });
}

// ---- losses ---------------------------------------------------------------------

Var info_nce_diag(const Var& s, bool over_rows) {
    const Tensor& sv = s->value;
    if (sv.rank() != 2 || sv.dim(0) != sv.dim(1)) throw ConfigError("info_nce_diag: expects square matrix");
    const int b = sv.dim(0);
    Scalar total = 0.0;
    // softmax over the denominator axis, cached for backward
    Tensor soft(sv.shape());
    for (int i = 0; i < b; ++i) {
        Scalar mx = -1e300;
        for (int m = 0; m < b; ++m) mx = std::max(mx, over_rows ? sv(i, m) : sv(m, i));
        Scalar z = 0.0;
        for (int m = 0; m < b; ++m) z += std::exp((over_rows ? sv(i, m) : sv(m, i)) - mx);
        const Scalar lse = mx + std::log(z);
        total += lse - sv(i, i);
        for (int m = 0; m < b; ++m) {
            const Scalar p = std::exp((over_rows ? sv(i, m) : sv(m, i)) - lse);
            if (over_rows)
                soft(i, m) = p;
            else
                soft(m, i) = p;
        }
    }
    Tensor y = Tensor::scalar(total / b);
    return make_op("info_nce", std::move(y), {s}, [soft, over_rows, b](Node& n) {
        Tensor g(soft.shape());
        const Scalar go = n.grad[0] / b;
        for (int i = 0; i < b; ++i)
            for (int m = 0; m < b; ++m) {
                const Scalar p = over_rows ? soft(i, m) : soft(m, i);
                Scalar val = p;
                if (i == m) val -= 1.0;
                if (over_rows)
                    g(i, m) += go * val;
                else
                    g(m, i) += go * val;
            }
        n.parents[0]->accumulate(g);
    });
}

Var bce_mean(const Var& pred, const Tensor& target, Scalar eps) {
    const Tensor& p = pred->value;
    if (!p.same_shape(target))
        throw ConfigError("bce_mean: shape mismatch " + p.shape_str() + " vs target " + target.shape_str());
    const int64_t n = p.size();
    Scalar total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const Scalar m = std::min(std::max(p[i], eps), 1.0 - eps);
        const Scalar y = target[i];
        total -= y * std::log(m) + (1.0 - y) * std::log(1.0 - m);
    }
    Tensor out = Tensor::scalar(total / static_cast<Scalar>(n));
    return make_op("bce_mean", std::move(out), {pred}, [target, eps, n](Node& nd) {
        const Tensor& p = nd.parents[0]->value;
        Tensor g(p.shape());
        const Scalar go = nd.grad[0] / static_cast<Scalar>(n);
        for (int64_t i = 0; i < n; ++i) {
            if (p[i] <= eps || p[i] >= 1.0 - eps) continue;  // clamped: flat
            g[i] = go * (-target[i] / p[i] + (1.0 - target[i]) / (1.0 - p[i]));
        }
        nd.parents[0]->accumulate(g);
    });
}

Var weighted_pool(const Var& features, const Var& weights, Scalar fallback_eps,
                  std::vector<bool>* fallback_rows) {
    const Tensor& f = features->value;
    const Tensor& w = weights->value;
    if (f.rank() != 4 || w.rank() != 4 || w.dim(1) != 1 || f.dim(0) != w.dim(0) || f.dim(2) != w.dim(2) ||
        f.dim(3) != w.dim(3))
        throw ConfigError("weighted_pool: shapes " + f.shape_str() + " and " + w.shape_str());
    const int bn = f.dim(0), dn = f.dim(1), hw = f.dim(2) * f.dim(3);
    std::vector<Scalar> mass(static_cast<size_t>(bn));
    std::vector<bool> fb(static_cast<size_t>(bn));
    Tensor y(Shape{bn, dn});
    for (int b = 0; b < bn; ++b) {
        Scalar s = 0.0;
        const Scalar* wrow = w.data() + static_cast<int64_t>(b) * hw;
        for (int p = 0; p < hw; ++p) s += wrow[p];
        mass[static_cast<size_t>(b)] = s;
        const bool fallback = s < fallback_eps;
        fb[static_cast<size_t>(b)] = fallback;
        for (int d = 0; d < dn; ++d) {
            const Scalar* frow = f.data() + (static_cast<int64_t>(b) * dn + d) * hw;
            Scalar acc = 0.0;
            if (fallback) {
                for (int p = 0; p < hw; ++p) acc += frow[p];
                y(b, d) = acc / hw;
            } else {
                for (int p = 0; p < hw; ++p) acc += frow[p] * wrow[p];
                y(b, d) = acc / s;
            }
        }
    }
    if (fallback_rows) *fallback_rows = fb;
    Tensor pooled = y;
    return make_op("weighted_pool", std::move(y), {features, weights},
                   [mass = std::move(mass), fb = std::move(fb), pooled](Node& n) {
        const Tensor& f = n.parents[0]->value;
        const Tensor& w = n.parents[1]->value;
        const int bn = f.dim(0), dn = f.dim(1), hw = f.dim(2) * f.dim(3);
        Tensor gf(f.shape()), gw(w.shape());
        for (int b = 0; b < bn; ++b) {
            const Scalar* wrow = w.data() + static_cast<int64_t>(b) * hw;
            Scalar* gwrow = gw.data() + static_cast<int64_t>(b) * hw;
            for (int d = 0; d < dn; ++d) {
                const Scalar g = n.grad(b, d);
                if (g == 0.0) continue;
                const Scalar* frow = f.data() + (static_cast<int64_t>(b) * dn + d) * hw;
                Scalar* gfrow = gf.data() + (static_cast<int64_t>(b) * dn + d) * hw;
                if (fb[static_cast<size_t>(b)]) {
                    for (int p = 0; p < hw; ++p) gfrow[p] += g / hw;
                } else {
                    const Scalar s = mass[static_cast<size_t>(b)];
                    for (int p = 0; p < hw; ++p) {
                        gfrow[p] += g * wrow[p] / s;
                        gwrow[p] += g * (frow[p] - pooled(b, d)) / s;
                    }
                }
            }
        }
        n.parents[0]->accumulate(gf);
        n.parents[1]->accumulate(gw);
    });
}

// ---- finite differences -----------------------------------------------------------

Scalar gradcheck_max_rel_error(const std::function<Var(const std::vector<Var>&)>& loss_fn,
                               std::vector<Var> inputs, size_t check, Scalar h, int max_coords,
                               uint64_t coord_seed) {
    for (auto& v : inputs) v->grad = Tensor();
    Var root = loss_fn(inputs);
    backward(root);
    Tensor analytic = inputs[check]->grad.empty() ? Tensor(inputs[check]->value.shape()) : inputs[check]->grad;

    Tensor& x = inputs[check]->value;
    const int64_t n = x.size();
    std::vector<int64_t> coords;
    if (n <= max_coords) {
        for (int64_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
        Rng rng(coord_seed, 77);
        for (int i = 0; i < max_coords; ++i) coords.push_back(rng.uniform_int(0, static_cast<int>(n - 1)));
    }
    Scalar worst = 0.0;
    for (int64_t i : coords) {
        const Scalar orig = x[i];
        x[i] = orig + h;
        const Scalar fp = loss_fn(inputs)->scalar();
        x[i] = orig - h;
        const Scalar fm = loss_fn(inputs)->scalar();
        x[i] = orig;
        const Scalar numeric = (fp - fm) / (2 * h);
        const Scalar a = analytic[i];
        const Scalar rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace avseg::ad
