#include "s2s/adam.hpp"

#include <cmath>

namespace s2s {

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamConfig config) : params_(std::move(params))
{
    state_.config = config;
    state_.first_moment.reserve(params_.size());
    state_.second_moment.reserve(params_.size());
    for (const auto& p : params_) {
        state_.first_moment.emplace_back(p.numel(), T(0));
        state_.second_moment.emplace_back(p.numel(), T(0));
    }
}

template <typename T>
void Adam<T>::step()
{
    const auto& c = state_.config;
    ++state_.step_count;
    const double t = double(state_.step_count);
    const T correction1 = T(1.0 - std::pow(c.beta1, t));
    const T correction2 = T(1.0 - std::pow(c.beta2, t));
    const T b1 = T(c.beta1), b2 = T(c.beta2), lr = T(c.lr), eps = T(c.epsilon);

    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = params_[k];
        auto values = p.data();
        const bool has_grad = p.has_grad();
        auto grad = p.grad();
        auto& m = state_.first_moment[k];
        auto& v = state_.second_moment[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const T g = has_grad ? grad[i] : T(0);
            m[i] = b1 * m[i] + (T(1) - b1) * g;
            v[i] = b2 * v[i] + (T(1) - b2) * g * g;
            const T m_hat = m[i] / correction1;
            const T v_hat = v[i] / correction2;
            values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template <typename T>
void Adam<T>::zero_grad()
{
    for (auto& p : params_) p.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

} // namespace s2s
