#pragma once

// Differentiable operations over Tensor<T>. Images use the
// batch-channel-height-width layout, row-major.

#include <optional>

#include "s2s/tensor.hpp"

namespace s2s {

struct Conv2dGeometry {
    std::size_t stride = 1;
    std::size_t pad = 0;
};

// Output extent of a strided cross-correlation along one axis.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t pad);
// Output extent of the matching transposed convolution.
std::size_t conv_transpose_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                                         std::size_t pad);

// input [B,Cin,H,W], weight [Cout,Cin,kH,kW], bias [Cout] (or undefined).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dGeometry geometry);

// input [B,Cin,H,W], weight [Cin,Cout,kH,kW], bias [Cout] (or undefined).
// The linear adjoint of conv2d with the same stride and padding.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           Conv2dGeometry geometry);

struct Activation {
    enum class Kind { relu, leaky_relu, tanh, sigmoid };
    Kind kind = Kind::relu;
    double alpha = 0.2;

    static Activation relu() { return {Kind::relu, 0.0}; }
    static Activation leaky_relu(double alpha = 0.2) { return {Kind::leaky_relu, alpha}; }
    static Activation tanh() { return {Kind::tanh, 0.0}; }
    static Activation sigmoid() { return {Kind::sigmoid, 0.0}; }
};

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Activation activation);

template <typename T>
struct BatchNormStats {
    Tensor<T> running_mean;
    Tensor<T> running_var;
    double momentum = 0.1;

    explicit BatchNormStats(std::size_t channels)
        : running_mean(Shape{channels}, T(0)), running_var(Shape{channels}, T(1)) {}
};

enum class NormMode { train, eval };

// Per-channel normalization over (B,H,W). Train mode uses batch statistics
// (population variance) and folds them into `stats`; eval mode reads them.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, NormMode mode, double eps = 1e-5);

// Mean of the elementwise binary cross-entropy between sigmoid(logits) and
// target, evaluated as max(z,0) - z*t + log1p(exp(-|z|)).
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target);

// Same, against a constant label broadcast over every element.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, T label);

// Mean absolute difference; the subgradient at ties is 0.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T>
Tensor<T> log(const Tensor<T>& a);
template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

// Concatenate two [B,C,H,W] tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// Numerically stable logistic function.
template <typename T>
T sigmoid_scalar(T z);

} // namespace s2s
