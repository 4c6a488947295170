#include "avemo/graph.hpp"

#include "avemo/error.hpp"

#include <algorithm>
#include <cmath>

namespace avemo {

namespace {

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* op) {
    if (!x.defined() || x.rank() != rank) {
        throw ConfigError(std::string(op) + ": expected rank " + std::to_string(rank) + " input, got " +
                          (x.defined() ? shape_str(x.shape()) : std::string("undefined")));
    }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
    }
}

// Row-major split of `shape` around `axis`: outer * shape[axis] * inner.
std::pair<std::size_t, std::size_t> outer_inner(const Shape& shape, std::size_t axis) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    return {outer, inner};
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

template <typename T>
Tensor<T> Graph<T>::record(std::string op, std::vector<TensorT> inputs, Shape shape, std::vector<T> values,
                           BackwardFn backward) {
    if (shape_size(shape) != values.size()) {
        throw ConfigError(op + ": value count does not match shape " + shape_str(shape));
    }
    if (options_.check_finite) {
        for (const T v : values) {
            if (!std::isfinite(v)) {
                throw NumericError("op '" + op + "' produced a non-finite value");
            }
        }
    }
    bool needs_grad = false;
    for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();

    auto impl = std::make_shared<typename TensorT::Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = needs_grad;
    impl->is_leaf = false;

    if (needs_grad) {
        TapeNode node;
        node.op = std::move(op);
        node.inputs.reserve(inputs.size());
        for (const auto& in : inputs) node.inputs.push_back(in.impl());
        node.output = impl;
        node.backward = std::move(backward);
        tape_.push_back(std::move(node));
    }
    return TensorT::from_impl(std::move(impl));
}

template <typename T>
void Graph<T>::backward(const TensorT& root) {
    if (!root.defined() || root.size() != 1) {
        throw ConfigError("backward: root must be a scalar, got shape " +
                          (root.defined() ? shape_str(root.shape()) : std::string("undefined")));
    }
    const auto& root_impl = root.impl();
    if (!root_impl->requires_grad) {
        throw ConfigError("backward: root does not depend on any tensor requiring a gradient");
    }
    if (root_impl->is_leaf) {
        root_impl->grad.resize(1, T(0));
        root_impl->grad[0] += T(1);
        return;
    }

    std::size_t end = tape_.size();
    while (end > 0 && tape_[end - 1].output != root_impl) --end;
    if (end == 0) {
        throw ConfigError("backward: root was not produced on this graph's tape");
    }
    for (std::size_t i = 0; i < end; ++i) {
        auto& out = *tape_[i].output;
        out.grad.assign(out.data.size(), T(0));
    }
    root_impl->grad[0] = T(1);

    for (std::size_t i = end; i-- > 0;) {
        auto& node = tape_[i];
        BackwardArgs args;
        args.out = node.output->data;
        args.grad_out = node.output->grad;
        args.grad_in.reserve(node.inputs.size());
        for (auto& in : node.inputs) {
            if (in->requires_grad) {
                if (in->grad.size() != in->data.size()) in->grad.assign(in->data.size(), T(0));
                args.grad_in.emplace_back(in->grad);
            } else {
                args.grad_in.emplace_back();
            }
        }
        node.backward(args);
    }
}

template <typename T>
std::vector<std::string> Graph<T>::recorded_ops() const {
    std::vector<std::string> ops;
    ops.reserve(tape_.size());
    for (const auto& n : tape_) ops.push_back(n.op);
    return ops;
}

// ---------------------------------------------------------------- dense

template <typename T>
Tensor<T> Graph<T>::matmul(const TensorT& x, const TensorT& w) {
    require_rank(x, 2, "matmul");
    require_rank(w, 2, "matmul");
    const std::size_t B = x.dim(0), I = x.dim(1), O = w.dim(1);
    if (w.dim(0) != I) {
        throw ConfigError("matmul: inner dimensions disagree, " + shape_str(x.shape()) + " x " +
                          shape_str(w.shape()));
    }
    std::vector<T> y(B * O, T(0));
    const T* xd = x.data().data();
    const T* wd = w.data().data();
    for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t i = 0; i < I; ++i) {
            axpy(xd[n * I + i], wd + i * O, y.data() + n * O, O);
        }
    }
    auto xi = x.impl();
    auto wi = w.impl();
    return record("matmul", {x, w}, {B, O}, std::move(y), [xi, wi, B, I, O](const BackwardArgs& a) {
        const T* g = a.grad_out.data();
        if (!a.grad_in[0].empty()) {
            T* dx = a.grad_in[0].data();
            for (std::size_t n = 0; n < B; ++n)
                for (std::size_t i = 0; i < I; ++i) dx[n * I + i] += dot(g + n * O, wi->data.data() + i * O, O);
        }
        if (!a.grad_in[1].empty()) {
            T* dw = a.grad_in[1].data();
            for (std::size_t n = 0; n < B; ++n)
                for (std::size_t i = 0; i < I; ++i) axpy(xi->data[n * I + i], g + n * O, dw + i * O, O);
        }
    });
}

template <typename T>
Tensor<T> Graph<T>::linear(const TensorT& x, const TensorT& w, const TensorT& b) {
    require_rank(x, 2, "linear");
    require_rank(w, 2, "linear");
    require_rank(b, 1, "linear");
    const std::size_t B = x.dim(0), I = x.dim(1), O = w.dim(1);
    if (w.dim(0) != I || b.dim(0) != O) {
        throw ConfigError("linear: shape mismatch x" + shape_str(x.shape()) + " w" + shape_str(w.shape()) +
                          " b" + shape_str(b.shape()));
    }
    std::vector<T> y(B * O);
    const T* xd = x.data().data();
    const T* wd = w.data().data();
    for (std::size_t n = 0; n < B; ++n) {
        std::copy(b.data().begin(), b.data().end(), y.begin() + static_cast<std::ptrdiff_t>(n * O));
        for (std::size_t i = 0; i < I; ++i) {
            axpy(xd[n * I + i], wd + i * O, y.data() + n * O, O);
        }
    }
    auto xi = x.impl();
    auto wi = w.impl();
    return record("linear", {x, w, b}, {B, O}, std::move(y), [xi, wi, B, I, O](const BackwardArgs& a) {
        const T* g = a.grad_out.data();
        if (!a.grad_in[0].empty()) {
            T* dx = a.grad_in[0].data();
            for (std::size_t n = 0; n < B; ++n)
                for (std::size_t i = 0; i < I; ++i) dx[n * I + i] += dot(g + n * O, wi->data.data() + i * O, O);
        }
        if (!a.grad_in[1].empty()) {
            T* dw = a.grad_in[1].data();
            for (std::size_t n = 0; n < B; ++n)
                for (std::size_t i = 0; i < I; ++i) axpy(xi->data[n * I + i], g + n * O, dw + i * O, O);
        }
        if (!a.grad_in[2].empty()) {
            T* db = a.grad_in[2].data();
            for (std::size_t n = 0; n < B; ++n) axpy(T(1), g + n * O, db, O);
        }
    });
}

// ---------------------------------------------------------------- spatial

template <typename T>
Tensor<T> Graph<T>::conv2d(const TensorT& x, const TensorT& k, const TensorT& b, Conv2dSpec spec) {
    require_rank(x, 4, "conv2d");
    require_rank(k, 4, "conv2d");
    require_rank(b, 1, "conv2d");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t F = k.dim(0), Kh = k.dim(2), Kw = k.dim(3);
    const std::size_t s = spec.stride, p = spec.pad;
    if (k.dim(1) != C) {
        throw ConfigError("conv2d: channel mismatch, input has " + std::to_string(C) + ", kernel expects " +
                          std::to_string(k.dim(1)));
    }
    if (b.dim(0) != F) {
        throw ConfigError("conv2d: bias length must equal filter count");
    }
    if (s == 0 || H + 2 * p < Kh || W + 2 * p < Kw || (H + 2 * p - Kh) % s != 0 || (W + 2 * p - Kw) % s != 0) {
        throw ConfigError("conv2d: non-integral output size for input " + shape_str(x.shape()) + ", kernel " +
                          shape_str(k.shape()) + ", stride " + std::to_string(s) + ", pad " + std::to_string(p));
    }
    const std::size_t Ho = (H + 2 * p - Kh) / s + 1;
    const std::size_t Wo = (W + 2 * p - Kw) / s + 1;
    const std::size_t K = C * Kh * Kw;
    const std::size_t P = Ho * Wo;
    const std::size_t in_plane = C * H * W;

    // Unrolls one sample into col[K][P] (transposed=false) or col[P][K].
    auto im2col = [=](const T* src, T* col, bool transposed) {
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < Kh; ++ky)
                for (std::size_t kx = 0; kx < Kw; ++kx) {
                    const std::size_t row = (c * Kh + ky) * Kw + kx;
                    for (std::size_t oy = 0; oy < Ho; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(p);
                        for (std::size_t ox = 0; ox < Wo; ++ox) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
                            T v = 0;
                            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(H) && ix < static_cast<std::ptrdiff_t>(W)) {
                                v = src[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)];
                            }
                            const std::size_t q = oy * Wo + ox;
                            if (transposed) col[q * K + row] = v;
                            else col[row * P + q] = v;
                        }
                    }
                }
    };

    std::vector<T> y(B * F * P);
    std::vector<T> col(K * P);
    const T* kd = k.data().data();
    const T* bd = b.data().data();
    for (std::size_t n = 0; n < B; ++n) {
        im2col(x.data().data() + n * in_plane, col.data(), false);
        T* out = y.data() + n * F * P;
        for (std::size_t f = 0; f < F; ++f) {
            T* row_out = out + f * P;
            std::fill(row_out, row_out + P, bd[f]);
            for (std::size_t kk = 0; kk < K; ++kk) axpy(kd[f * K + kk], col.data() + kk * P, row_out, P);
        }
    }

    auto xi = x.impl();
    auto ki = k.impl();
    return record("conv2d", {x, k, b}, {B, F, Ho, Wo}, std::move(y),
                  [=](const BackwardArgs& a) {
                      const bool need_x = !a.grad_in[0].empty();
                      const bool need_k = !a.grad_in[1].empty();
                      std::vector<T> colT(need_k ? P * K : 0);
                      std::vector<T> dcolT(need_x ? P * K : 0);
                      const T* kdata = ki->data.data();
                      for (std::size_t n = 0; n < B; ++n) {
                          const T* g = a.grad_out.data() + n * F * P;
                          if (!a.grad_in[2].empty()) {
                              T* db = a.grad_in[2].data();
                              for (std::size_t f = 0; f < F; ++f) {
                                  T acc = 0;
                                  for (std::size_t q = 0; q < P; ++q) acc += g[f * P + q];
                                  db[f] += acc;
                              }
                          }
                          if (need_k) {
                              im2col(xi->data.data() + n * in_plane, colT.data(), true);
                              T* dk = a.grad_in[1].data();
                              for (std::size_t f = 0; f < F; ++f)
                                  for (std::size_t q = 0; q < P; ++q) {
                                      const T gv = g[f * P + q];
                                      if (gv != T(0)) axpy(gv, colT.data() + q * K, dk + f * K, K);
                                  }
                          }
                          if (need_x) {
                              std::fill(dcolT.begin(), dcolT.end(), T(0));
                              for (std::size_t q = 0; q < P; ++q)
                                  for (std::size_t f = 0; f < F; ++f) {
                                      const T gv = g[f * P + q];
                                      if (gv != T(0)) axpy(gv, kdata + f * K, dcolT.data() + q * K, K);
                                  }
                              T* dx = a.grad_in[0].data() + n * in_plane;
                              for (std::size_t c = 0; c < C; ++c)
                                  for (std::size_t ky = 0; ky < Kh; ++ky)
                                      for (std::size_t kx = 0; kx < Kw; ++kx) {
                                          const std::size_t row = (c * Kh + ky) * Kw + kx;
                                          for (std::size_t oy = 0; oy < Ho; ++oy) {
                                              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(p);
                                              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                                              for (std::size_t ox = 0; ox < Wo; ++ox) {
                                                  const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(p);
                                                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                                                  dx[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)] +=
                                                      dcolT[(oy * Wo + ox) * K + row];
                                              }
                                          }
                                      }
                          }
                      }
                  });
}

template <typename T>
Tensor<T> Graph<T>::maxpool2d(const TensorT& x) {
    require_rank(x, 4, "maxpool2d");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Ho = H / 2, Wo = W / 2;
    if (Ho == 0 || Wo == 0) {
        throw ConfigError("maxpool2d: spatial dims " + shape_str(x.shape()) + " too small for a 2x2 window");
    }
    std::vector<T> y(B * C * Ho * Wo);
    std::vector<std::size_t> argmax(y.size());
    const T* xd = x.data().data();
    for (std::size_t plane = 0; plane < B * C; ++plane) {
        const T* src = xd + plane * H * W;
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                std::size_t best = (2 * oy) * W + 2 * ox;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = (2 * oy + dy) * W + 2 * ox + dx;
                        if (src[idx] > src[best]) best = idx;
                    }
                const std::size_t o = (plane * Ho + oy) * Wo + ox;
                y[o] = src[best];
                argmax[o] = plane * H * W + best;
            }
    }
    return record("maxpool2d", {x}, {B, C, Ho, Wo}, std::move(y),
                  [argmax = std::move(argmax)](const BackwardArgs& a) {
                      T* dx = a.grad_in[0].data();
                      for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += a.grad_out[o];
                  });
}

template <typename T>
Tensor<T> Graph<T>::avgpool2d(const TensorT& x, std::size_t factor) {
    require_rank(x, 4, "avgpool2d");
    if (factor == 0) throw ConfigError("avgpool2d: factor must be >= 1");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Ho = H / factor, Wo = W / factor;
    if (Ho == 0 || Wo == 0) {
        throw ConfigError("avgpool2d: input " + shape_str(x.shape()) + " smaller than the pooling factor");
    }
    const T scale = T(1) / static_cast<T>(factor * factor);
    std::vector<T> y(B * C * Ho * Wo);
    const T* xd = x.data().data();
    for (std::size_t plane = 0; plane < B * C; ++plane)
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                T acc = 0;
                for (std::size_t dy = 0; dy < factor; ++dy)
                    for (std::size_t dx = 0; dx < factor; ++dx)
                        acc += xd[(plane * H + oy * factor + dy) * W + ox * factor + dx];
                y[(plane * Ho + oy) * Wo + ox] = acc * scale;
            }
    return record("avgpool2d", {x}, {B, C, Ho, Wo}, std::move(y), [=](const BackwardArgs& a) {
        T* dxd = a.grad_in[0].data();
        for (std::size_t plane = 0; plane < B * C; ++plane)
            for (std::size_t oy = 0; oy < Ho; ++oy)
                for (std::size_t ox = 0; ox < Wo; ++ox) {
                    const T g = a.grad_out[(plane * Ho + oy) * Wo + ox] * scale;
                    for (std::size_t dy = 0; dy < factor; ++dy)
                        for (std::size_t dx = 0; dx < factor; ++dx)
                            dxd[(plane * H + oy * factor + dy) * W + ox * factor + dx] += g;
                }
    });
}

// ---------------------------------------------------------------- elementwise

template <typename T>
Tensor<T> Graph<T>::tanh(const TensorT& x) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x[i]);
    return record("tanh", {x}, x.shape(), std::move(y), [](const BackwardArgs& a) {
        for (std::size_t i = 0; i < a.out.size(); ++i) a.grad_in[0][i] += a.grad_out[i] * (T(1) - a.out[i] * a.out[i]);
    });
}

template <typename T>
Tensor<T> Graph<T>::sigmoid(const TensorT& x) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const T v = x[i];
        if (v >= T(0)) {
            y[i] = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            y[i] = e / (T(1) + e);
        }
    }
    return record("sigmoid", {x}, x.shape(), std::move(y), [](const BackwardArgs& a) {
        for (std::size_t i = 0; i < a.out.size(); ++i) a.grad_in[0][i] += a.grad_out[i] * a.out[i] * (T(1) - a.out[i]);
    });
}

template <typename T>
Tensor<T> Graph<T>::relu(const TensorT& x) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    return record("relu", {x}, x.shape(), std::move(y), [](const BackwardArgs& a) {
        for (std::size_t i = 0; i < a.out.size(); ++i)
            if (a.out[i] > T(0)) a.grad_in[0][i] += a.grad_out[i];
    });
}

template <typename T>
Tensor<T> Graph<T>::dropout(const TensorT& x, double p, Rng* rng) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw ConfigError("dropout: p must be in [0, 1)");
    }
    if (rng == nullptr || p == 0.0) {
        return x;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    std::vector<T> mask(x.size());
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        mask[i] = rng->uniform() < p ? T(0) : keep_scale;
        y[i] = x[i] * mask[i];
    }
    return record("dropout", {x}, x.shape(), std::move(y), [mask = std::move(mask)](const BackwardArgs& a) {
        for (std::size_t i = 0; i < mask.size(); ++i) a.grad_in[0][i] += a.grad_out[i] * mask[i];
    });
}

template <typename T>
Tensor<T> Graph<T>::add(const TensorT& a, const TensorT& b) {
    require_same_shape(a, b, "add");
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
    return record("add", {a, b}, a.shape(), std::move(y), [](const BackwardArgs& g) {
        for (std::size_t k = 0; k < 2; ++k)
            if (!g.grad_in[k].empty())
                for (std::size_t i = 0; i < g.grad_out.size(); ++i) g.grad_in[k][i] += g.grad_out[i];
    });
}

template <typename T>
Tensor<T> Graph<T>::sub(const TensorT& a, const TensorT& b) {
    require_same_shape(a, b, "sub");
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
    return record("sub", {a, b}, a.shape(), std::move(y), [](const BackwardArgs& g) {
        if (!g.grad_in[0].empty())
            for (std::size_t i = 0; i < g.grad_out.size(); ++i) g.grad_in[0][i] += g.grad_out[i];
        if (!g.grad_in[1].empty())
            for (std::size_t i = 0; i < g.grad_out.size(); ++i) g.grad_in[1][i] -= g.grad_out[i];
    });
}

template <typename T>
Tensor<T> Graph<T>::mul(const TensorT& a, const TensorT& b) {
    require_same_shape(a, b, "mul");
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
    auto ai = a.impl();
    auto bi = b.impl();
    return record("mul", {a, b}, a.shape(), std::move(y), [ai, bi](const BackwardArgs& g) {
        if (!g.grad_in[0].empty())
            for (std::size_t i = 0; i < g.grad_out.size(); ++i) g.grad_in[0][i] += g.grad_out[i] * bi->data[i];
        if (!g.grad_in[1].empty())
            for (std::size_t i = 0; i < g.grad_out.size(); ++i) g.grad_in[1][i] += g.grad_out[i] * ai->data[i];
    });
}

template <typename T>
Tensor<T> Graph<T>::div_or_zero(const TensorT& a, const TensorT& b) {
    require_same_shape(a, b, "div_or_zero");
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = b[i] == T(0) ? T(0) : a[i] / b[i];
    auto bi = b.impl();
    return record("div_or_zero", {a, b}, a.shape(), std::move(y), [bi](const BackwardArgs& g) {
        for (std::size_t i = 0; i < g.grad_out.size(); ++i) {
            const T den = bi->data[i];
            if (den == T(0)) continue;
            if (!g.grad_in[0].empty()) g.grad_in[0][i] += g.grad_out[i] / den;
            if (!g.grad_in[1].empty()) g.grad_in[1][i] -= g.grad_out[i] * g.out[i] / den;
        }
    });
}

template <typename T>
Tensor<T> Graph<T>::affine(const TensorT& x, T scale, T shift) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = scale * x[i] + shift;
    return record("affine", {x}, x.shape(), std::move(y), [scale](const BackwardArgs& a) {
        for (std::size_t i = 0; i < a.grad_out.size(); ++i) a.grad_in[0][i] += scale * a.grad_out[i];
    });
}

// ---------------------------------------------------------------- reductions

template <typename T>
Tensor<T> Graph<T>::sum(const TensorT& x) {
    T acc = 0;
    for (const T v : x.data()) acc += v;
    return record("sum", {x}, {}, {acc}, [](const BackwardArgs& a) {
        for (auto& g : a.grad_in[0]) g += a.grad_out[0];
    });
}

template <typename T>
Tensor<T> Graph<T>::mean(const TensorT& x) {
    if (x.size() == 0) throw ConfigError("mean: empty tensor");
    T acc = 0;
    for (const T v : x.data()) acc += v;
    const T n = static_cast<T>(x.size());
    return record("mean", {x}, {}, {acc / n}, [n](const BackwardArgs& a) {
        for (auto& g : a.grad_in[0]) g += a.grad_out[0] / n;
    });
}

template <typename T>
Tensor<T> Graph<T>::mean_axis(const TensorT& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw ConfigError("mean_axis: axis " + std::to_string(axis) + " invalid for shape " + shape_str(x.shape()));
    }
    const std::size_t n = x.dim(axis);
    if (n == 0) throw ConfigError("mean_axis: empty axis");
    auto [outer, inner] = outer_inner(x.shape(), axis);
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    std::vector<T> y(outer * inner);
    std::vector<T> scratch(n);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) {
            for (std::size_t k = 0; k < n; ++k) scratch[k] = x[(o * n + k) * inner + i];
            std::sort(scratch.begin(), scratch.end());
            // Offsets from the smallest value, so equal inputs average to themselves exactly.
            const T base = scratch[0];
            T acc = 0;
            for (const T v : scratch) acc += v - base;
            y[o * inner + i] = base + acc / static_cast<T>(n);
        }
    return record("mean_axis", {x}, std::move(out_shape), std::move(y), [=](const BackwardArgs& a) {
        const T scale = T(1) / static_cast<T>(n);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < inner; ++i)
                    a.grad_in[0][(o * n + k) * inner + i] += a.grad_out[o * inner + i] * scale;
    });
}

template <typename T>
Tensor<T> Graph<T>::broadcast(const TensorT& x, const Shape& shape) {
    if (x.size() != 1) throw ConfigError("broadcast: source must hold one element");
    std::vector<T> y(shape_size(shape), x[0]);
    return record("broadcast", {x}, shape, std::move(y), [](const BackwardArgs& a) {
        T acc = 0;
        for (const T g : a.grad_out) acc += g;
        a.grad_in[0][0] += acc;
    });
}

// ---------------------------------------------------------------- layout

template <typename T>
Tensor<T> Graph<T>::reshape(const TensorT& x, const Shape& shape) {
    if (shape_size(shape) != x.size()) {
        throw ConfigError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    std::vector<T> y(x.data().begin(), x.data().end());
    return record("reshape", {x}, shape, std::move(y), [](const BackwardArgs& a) {
        for (std::size_t i = 0; i < a.grad_out.size(); ++i) a.grad_in[0][i] += a.grad_out[i];
    });
}

template <typename T>
Tensor<T> Graph<T>::concat(const std::vector<TensorT>& xs, std::size_t axis) {
    if (xs.empty()) throw ConfigError("concat: no inputs");
    const Shape& ref = xs[0].shape();
    if (axis >= ref.size()) throw ConfigError("concat: axis out of range");
    Shape out_shape = ref;
    out_shape[axis] = 0;
    std::vector<std::size_t> widths;
    for (const auto& t : xs) {
        if (t.rank() != ref.size()) throw ConfigError("concat: rank mismatch");
        for (std::size_t d = 0; d < ref.size(); ++d) {
            if (d != axis && t.dim(d) != ref[d]) {
                throw ConfigError("concat: dim mismatch " + shape_str(t.shape()) + " vs " + shape_str(ref));
            }
        }
        out_shape[axis] += t.dim(axis);
    }
    auto [outer, inner] = outer_inner(ref, axis);
    for (const auto& t : xs) widths.push_back(t.dim(axis) * inner);
    const std::size_t row = out_shape[axis] * inner;
    std::vector<T> y(outer * row);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(xs[k].data().data() + o * widths[k], widths[k], y.data() + o * row + offset);
        }
        offset += widths[k];
    }
    return record("concat", xs, std::move(out_shape), std::move(y), [=](const BackwardArgs& a) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
            if (!a.grad_in[k].empty()) {
                for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t i = 0; i < widths[k]; ++i) a.grad_in[k][o * widths[k] + i] += a.grad_out[o * row + off + i];
            }
            off += widths[k];
        }
    });
}

template <typename T>
Tensor<T> Graph<T>::stack(const std::vector<TensorT>& xs, std::size_t axis) {
    if (xs.empty()) throw ConfigError("stack: no inputs");
    if (axis > xs[0].rank()) throw ConfigError("stack: axis out of range");
    std::vector<TensorT> expanded;
    expanded.reserve(xs.size());
    for (const auto& t : xs) {
        Shape s = t.shape();
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(axis), 1);
        expanded.push_back(reshape(t, s));
    }
    return concat(expanded, axis);
}

template <typename T>
Tensor<T> Graph<T>::slice(const TensorT& x, std::size_t axis, std::size_t begin, std::size_t end) {
    if (axis >= x.rank() || begin >= end || end > x.dim(axis)) {
        throw ConfigError("slice: invalid range [" + std::to_string(begin) + "," + std::to_string(end) +
                          ") on axis " + std::to_string(axis) + " of " + shape_str(x.shape()));
    }
    auto [outer, inner] = outer_inner(x.shape(), axis);
    const std::size_t n = x.dim(axis);
    const std::size_t width = (end - begin) * inner;
    Shape out_shape = x.shape();
    out_shape[axis] = end - begin;
    std::vector<T> y(outer * width);
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(x.data().data() + (o * n + begin) * inner, width, y.data() + o * width);
    }
    return record("slice", {x}, std::move(out_shape), std::move(y), [=](const BackwardArgs& a) {
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < width; ++i) a.grad_in[0][(o * n + begin) * inner + i] += a.grad_out[o * width + i];
    });
}

template <typename T>
Tensor<T> Graph<T>::select(const TensorT& x, std::size_t axis, std::size_t index) {
    auto s = slice(x, axis, index, index + 1);
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    return reshape(s, out_shape);
}

template class Graph<float>;
template class Graph<double>;

}  // namespace avemo
