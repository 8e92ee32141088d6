#pragma once

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle onto a shared node holding the values, an
// optional gradient buffer and, for op results, the parents plus the
// closure that pushes the node's gradient back into them. Copies of a
// Tensor alias the same node, as with most autograd engines.

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "s2s/error.hpp"

namespace s2s {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape);

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // empty until the first gradient arrives
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Reads node.grad and accumulates into the parents' gradients.
    std::function<void(TensorNode& node)> backward_fn;

    // Zero-filled on first use.
    std::vector<T>& grad_buffer()
    {
        if (grad.empty()) grad.assign(data.size(), T(0));
        return grad;
    }
};

// While alive on a thread, op results created on that thread record no graph.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    static bool active();

private:
    bool previous_;
};

template <typename T>
class Tensor {
public:
    using Node = TensorNode<T>;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0));
    Tensor(Shape shape, std::vector<T> values);

    static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t numel() const { return node_->data.size(); }

    std::span<T> data() { return node_->data; }
    std::span<const T> data() const { return node_->data; }
    T item() const;

    bool requires_grad() const { return node_->requires_grad; }
    Tensor& set_requires_grad(bool on = true);
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> grad_mut() { return node_->grad_buffer(); }
    void zero_grad() { node_->grad.clear(); }

    // Is this tensor the output of a recorded op?
    bool has_graph() const { return static_cast<bool>(node_->backward_fn); }

    // Same values, no history, no gradient requirement.
    Tensor detach() const;

    // Deep copy of values into an independent leaf.
    Tensor clone() const;

    // Reverse pass from a one-element tensor. Gradients accumulate into
    // every reachable tensor that requires grad.
    void backward() const;

    const std::shared_ptr<Node>& node() const { return node_; }

    // Build an op result. Graph linkage is recorded only if some parent
    // requires grad and no NoGradGuard is active.
    static Tensor from_op(Shape shape, std::vector<T> values,
                          std::vector<std::shared_ptr<Node>> parents,
                          std::function<void(Node&)> backward_fn);

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    std::shared_ptr<Node> node_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace s2s
