#include "avemo/tensor.hpp"

#include "avemo/error.hpp"

#include <algorithm>

namespace avemo {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) {
    impl_ = std::make_shared<Impl>();
    impl_->data.assign(shape_size(shape), T(0));
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) {
        throw ConfigError("Tensor: " + std::to_string(values.size()) + " values do not fit shape " +
                          shape_str(shape));
    }
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    const auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw ConfigError("Tensor::dim: axis " + std::to_string(axis) + " out of range for shape " +
                          shape_str(shape()));
    }
    return impl_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
    if (size() != 1) {
        throw ConfigError("Tensor::item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    }
    return impl_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (!on) {
        impl_->grad.clear();
        impl_->grad.shrink_to_fit();
    }
}

template <typename T>
void Tensor<T>::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
    return Tensor(impl_->shape, impl_->data, impl_->requires_grad);
}

template <typename T>
void Tensor<T>::copy_from(std::span<const T> values) {
    if (values.size() != size()) {
        throw ConfigError("Tensor::copy_from: size mismatch");
    }
    std::copy(values.begin(), values.end(), impl_->data.begin());
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace avemo
