#include "s2s/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace s2s {

namespace {
thread_local bool no_grad_active = false;
}

std::string shape_to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

NoGradGuard::NoGradGuard() : previous_(no_grad_active) { no_grad_active = true; }
NoGradGuard::~NoGradGuard() { no_grad_active = previous_; }
bool NoGradGuard::active() { return no_grad_active; }

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : node_(std::make_shared<Node>())
{
    for (auto extent : shape)
        if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
    node_->data.assign(shape_numel(shape), fill);
    node_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<Node>())
{
    for (auto extent : shape)
        if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
    if (shape_numel(shape) != values.size())
        throw DimensionError("shape " + shape_to_string(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    node_->shape = std::move(shape);
    node_->data = std::move(values);
}

template <typename T>
T Tensor<T>::item() const
{
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_to_string(shape()));
    return node_->data[0];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on)
{
    node_->requires_grad = on;
    return *this;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const
{
    auto node = std::make_shared<Node>();
    node->shape = node_->shape;
    node->data = node_->data;
    return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const
{
    Tensor copy = detach();
    copy.node_->requires_grad = node_->requires_grad;
    return copy;
}

template <typename T>
Tensor<T> Tensor<T>::from_op(Shape shape, std::vector<T> values,
                             std::vector<std::shared_ptr<Node>> parents,
                             std::function<void(Node&)> backward_fn)
{
    Tensor out(std::move(shape), std::move(values));
    if (NoGradGuard::active()) return out;
    bool any = false;
    for (const auto& p : parents) any = any || p->requires_grad;
    if (!any) return out;
    out.node_->requires_grad = true;
    out.node_->parents = std::move(parents);
    out.node_->backward_fn = std::move(backward_fn);
    return out;
}

template <typename T>
void Tensor<T>::backward() const
{
    if (numel() != 1)
        throw ContractError("backward() requires a scalar loss, got shape " + shape_to_string(shape()));
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
    }
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace s2s
