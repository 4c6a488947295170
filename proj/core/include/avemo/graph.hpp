#pragma once

#include "avemo/rng.hpp"
#include "avemo/tensor.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace avemo {

struct Conv2dSpec {
    std::size_t stride = 1;
    std::size_t pad = 0;
};

struct GraphOptions {
    // Scan every op output for NaN/Inf and fail with the op name.
    bool check_finite = false;
};

// Reverse-mode autodiff over an explicit tape.
//
// Each op computes its forward value eagerly and, when any input requires a
// gradient, appends one node to the tape. backward() walks the tape once in
// reverse from the root. Leaf gradients accumulate across backward calls;
// intermediate gradients are re-zeroed at the start of each call.
//
// A Graph is used by one thread at a time; rebuild it (or reset()) per step.
template <typename T>
class Graph {
public:
    using TensorT = Tensor<T>;

    struct BackwardArgs {
        std::span<const T> out;
        std::span<const T> grad_out;
        // One entry per input; empty when that input does not require a gradient.
        std::vector<std::span<T>> grad_in;
    };
    using BackwardFn = std::function<void(const BackwardArgs&)>;

    explicit Graph(GraphOptions options = {}) : options_(options) {}

    // y[n,o] = sum_i x[n,i] w[i,o]
    TensorT matmul(const TensorT& x, const TensorT& w);
    // y[n,o] = sum_i x[n,i] w[i,o] + b[o]
    TensorT linear(const TensorT& x, const TensorT& w, const TensorT& b);
    // Cross-correlation of x[B,C,H,W] with k[F,C,Kh,Kw] over a zero-padded input, plus b[F].
    TensorT conv2d(const TensorT& x, const TensorT& k, const TensorT& b, Conv2dSpec spec = {});
    // 2x2 window, stride 2 over x[B,C,H,W]; a trailing odd row/column is dropped.
    // Ties route the gradient to the first maximum in row-major order.
    TensorT maxpool2d(const TensorT& x);
    // Non-overlapping factor x factor mean over x[B,C,H,W], floor output size.
    TensorT avgpool2d(const TensorT& x, std::size_t factor);

    TensorT tanh(const TensorT& x);
    TensorT sigmoid(const TensorT& x);
    TensorT relu(const TensorT& x);
    // Inverted dropout. `rng == nullptr` (eval) or p == 0 returns x unchanged.
    TensorT dropout(const TensorT& x, double p, Rng* rng);

    TensorT add(const TensorT& a, const TensorT& b);
    TensorT sub(const TensorT& a, const TensorT& b);
    TensorT mul(const TensorT& a, const TensorT& b);
    // a / b elementwise, defined as 0 (with zero gradient) where b == 0.
    TensorT div_or_zero(const TensorT& a, const TensorT& b);
    // scale * x + shift
    TensorT affine(const TensorT& x, T scale, T shift);

    TensorT sum(const TensorT& x);
    TensorT mean(const TensorT& x);
    // Arithmetic mean over one axis, which is removed. Values are summed in
    // sorted order so the result does not depend on their arrangement; n equal
    // values average to that value exactly.
    TensorT mean_axis(const TensorT& x, std::size_t axis);
    // Repeats a single-element tensor to `shape`.
    TensorT broadcast(const TensorT& x, const Shape& shape);

    TensorT reshape(const TensorT& x, const Shape& shape);
    TensorT concat(const std::vector<TensorT>& xs, std::size_t axis);
    // New axis inserted at `axis`.
    TensorT stack(const std::vector<TensorT>& xs, std::size_t axis);
    // Keeps rank; [begin, end) along axis.
    TensorT slice(const TensorT& x, std::size_t axis, std::size_t begin, std::size_t end);
    // Removes the axis.
    TensorT select(const TensorT& x, std::size_t axis, std::size_t index);

    // Records a user-defined op. `values` is the forward result of `shape`.
    TensorT record(std::string op, std::vector<TensorT> inputs, Shape shape, std::vector<T> values,
                   BackwardFn backward);

    // Root must hold exactly one element.
    void backward(const TensorT& root);

    void reset() { tape_.clear(); }
    std::size_t tape_size() const { return tape_.size(); }
    std::vector<std::string> recorded_ops() const;
    const GraphOptions& options() const { return options_; }

private:
    struct TapeNode {
        std::string op;
        std::vector<std::shared_ptr<typename TensorT::Impl>> inputs;
        std::shared_ptr<typename TensorT::Impl> output;
        BackwardFn backward;
    };

    GraphOptions options_;
    std::vector<TapeNode> tape_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace avemo
