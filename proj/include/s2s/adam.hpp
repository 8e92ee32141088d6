#pragma once

#include <cstdint>
#include <vector>

#include "s2s/tensor.hpp"

namespace s2s {

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> first_moment;
    std::vector<std::vector<T>> second_moment;
    std::uint64_t step_count = 0;
    AdamConfig config;
};

// Adam with bias correction over a fixed parameter list. Parameters without
// a gradient are treated as having a zero gradient.
template <typename T>
class Adam {
public:
    Adam(std::vector<Tensor<T>> params, AdamConfig config = {});

    void step();
    void zero_grad();

    const AdamState<T>& state() const { return state_; }
    const std::vector<Tensor<T>>& params() const { return params_; }

private:
    std::vector<Tensor<T>> params_;
    AdamState<T> state_;
};

extern template class Adam<float>;
extern template class Adam<double>;

} // namespace s2s
