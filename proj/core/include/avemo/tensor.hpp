#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace avemo {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major tensor with an optional gradient accumulator. Copies share
// storage (like a handle); use clone() for a deep copy.
template <typename T>
class Tensor {
public:
    struct Impl {
        Shape shape;
        std::vector<T> data;
        std::vector<T> grad;  // empty until a backward pass reaches this tensor
        bool requires_grad = false;
        bool is_leaf = true;
    };

    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return impl_->data.size(); }

    std::span<T> data() { return impl_->data; }
    std::span<const T> data() const { return impl_->data; }
    T& operator[](std::size_t i) { return impl_->data[i]; }
    T operator[](std::size_t i) const { return impl_->data[i]; }
    T item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    // Turning gradients off releases the accumulator.
    void set_requires_grad(bool on);
    bool is_leaf() const { return impl_->is_leaf; }
    bool has_grad() const { return !impl_->grad.empty(); }
    // Empty span when no gradient has been accumulated yet.
    std::span<T> grad() { return impl_->grad; }
    std::span<const T> grad() const { return impl_->grad; }
    void zero_grad();

    // Deep copy of shape and values as a fresh leaf.
    Tensor clone() const;
    void copy_from(std::span<const T> values);

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
    const std::shared_ptr<Impl>& impl() const { return impl_; }
    static Tensor from_impl(std::shared_ptr<Impl> impl) {
        Tensor t;
        t.impl_ = std::move(impl);
        return t;
    }

private:
    std::shared_ptr<Impl> impl_;
};

template <typename To, typename From>
Tensor<To> convert(const Tensor<From>& src, bool requires_grad = false) {
    std::vector<To> values(src.data().begin(), src.data().end());
    return Tensor<To>(src.shape(), std::move(values), requires_grad);
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace avemo
