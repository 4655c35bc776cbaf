#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gmge/errors.hpp"

namespace gmge {

// Layout convention for 5-D tensors: [N, C, D, H, W], row-major
// (W fastest). The scalar type is a template parameter: float for
// training, double for gradient checking.

inline std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

template <typename T>
struct TensorImpl {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;          // empty until first backward touches it
    bool requires_grad = false;   // caller asked for a gradient
    bool tracked = false;         // participates in the current graph
};

template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape, bool requires_grad = false) {
        impl_ = std::make_shared<TensorImpl<T>>();
        impl_->shape = std::move(shape);
        impl_->data.assign(check_shape(impl_->shape), T(0));
        impl_->requires_grad = requires_grad;
        impl_->tracked = requires_grad;
    }

    Tensor(std::vector<int> shape, std::initializer_list<T> values, bool requires_grad = false)
        : Tensor(std::move(shape), std::vector<T>(values), requires_grad) {}

    Tensor(std::vector<int> shape, std::vector<T> values, bool requires_grad = false) {
        impl_ = std::make_shared<TensorImpl<T>>();
        impl_->shape = std::move(shape);
        std::size_t n = check_shape(impl_->shape);
        if (values.size() != n)
            throw DimError("tensor data length " + std::to_string(values.size()) +
                           " does not match shape " + shape_str(impl_->shape));
        impl_->data = std::move(values);
        impl_->requires_grad = requires_grad;
        impl_->tracked = requires_grad;
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, T value) {
        Tensor t(std::move(shape));
        for (auto& v : t.impl_->data) v = value;
        return t;
    }

    bool defined() const { return static_cast<bool>(impl_); }

    const std::vector<int>& shape() const { return impl_->shape; }
    int ndim() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
    std::size_t numel() const { return impl_->data.size(); }

    T* data() { return impl_->data.data(); }
    const T* data() const { return impl_->data.data(); }
    std::vector<T>& vec() { return impl_->data; }
    const std::vector<T>& vec() const { return impl_->data; }

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool b) {
        impl_->requires_grad = b;
        if (b) impl_->tracked = true;
        return *this;
    }
    bool tracked() const { return impl_->tracked; }
    void set_tracked(bool b) { impl_->tracked = b; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::vector<T>& grad_vec() {
        if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
        return impl_->grad;
    }
    const std::vector<T>& grad_vec() const { return impl_->grad; }
    void zero_grad() {
        for (auto& g : impl_->grad) g = T(0);
    }

    T item() const {
        if (numel() != 1)
            throw ValueError("item() on tensor with " + std::to_string(numel()) + " elements");
        return impl_->data[0];
    }

    TensorImpl<T>* impl() const { return impl_.get(); }
    const std::shared_ptr<TensorImpl<T>>& impl_ptr() const { return impl_; }

    // Deep copy; the copy is a detached leaf.
    Tensor clone() const {
        Tensor t;
        t.impl_ = std::make_shared<TensorImpl<T>>();
        t.impl_->shape = impl_->shape;
        t.impl_->data = impl_->data;
        t.impl_->requires_grad = impl_->requires_grad;
        t.impl_->tracked = impl_->requires_grad;
        return t;
    }

private:
    static std::size_t check_shape(const std::vector<int>& shape) {
        if (shape.empty()) throw DimError("tensor shape must have at least one extent");
        std::size_t n = 1;
        for (int e : shape) {
            if (e <= 0)
                throw DimError("tensor extents must be strictly positive, got " + shape_str(shape));
            n *= static_cast<std::size_t>(e);
        }
        return n;
    }

    std::shared_ptr<TensorImpl<T>> impl_;
};

}  // namespace gmge
