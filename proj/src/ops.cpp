#include "s2s/ops.hpp"

#include <algorithm>
#include <cmath>

#include <cblas.h>

namespace s2s {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

void require_same_shape(const Shape& a, const Shape& b, const char* op)
{
    if (a != b)
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a) + " vs " +
                             shape_to_string(b));
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what)
{
    if (s.size() != rank)
        throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                             ", got " + shape_to_string(s));
}

// Geometry of one strided cross-correlation between an input plane set
// [Cin,H,W] and an output plane set [Cout,OH,OW].
struct CorrPlan {
    long cin, cout, h, w, oh, ow, kh, kw, stride, pad;

    // Output index range [lo, hi) whose tap at kernel offset k lands inside [0, extent).
    std::pair<long, long> valid(long k, long extent, long out_extent) const
    {
        long lo = 0;
        if (pad - k > 0) lo = (pad - k + stride - 1) / stride;
        long hi_num = extent - 1 + pad - k;
        long hi = hi_num < 0 ? 0 : hi_num / stride + 1;
        return {lo, std::min(hi, out_extent)};
    }
};

void gemm(bool ta, bool tb, long m, long n, long k, const float* a, const float* b, float beta, float* c)
{
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, int(m), int(n),
                int(k), 1.0f, a, int(ta ? m : k), b, int(tb ? k : n), beta, c, int(n));
}

void gemm(bool ta, bool tb, long m, long n, long k, const double* a, const double* b, double beta, double* c)
{
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, int(m), int(n),
                int(k), 1.0, a, int(ta ? m : k), b, int(tb ? k : n), beta, c, int(n));
}

// Unfolds [Cin,H,W] into a [Cin*KH*KW, OH*OW] patch matrix; padding reads 0.
template <typename T>
void im2col(const CorrPlan& p, const T* in, T* cols)
{
    const long plane = p.oh * p.ow;
    for (long ci = 0; ci < p.cin; ++ci)
        for (long ky = 0; ky < p.kh; ++ky)
            for (long kx = 0; kx < p.kw; ++kx) {
                T* row = cols + ((ci * p.kh + ky) * p.kw + kx) * plane;
                std::fill_n(row, plane, T(0));
                auto [y0, y1] = p.valid(ky, p.h, p.oh);
                auto [x0, x1] = p.valid(kx, p.w, p.ow);
                const T* in_plane = in + ci * p.h * p.w;
                for (long oy = y0; oy < y1; ++oy) {
                    const T* in_row = in_plane + (oy * p.stride + ky - p.pad) * p.w + kx - p.pad;
                    for (long ox = x0; ox < x1; ++ox) row[oy * p.ow + ox] = in_row[ox * p.stride];
                }
            }
}

// Adjoint of im2col: scatters patch rows back onto [Cin,H,W].
template <typename T>
void col2im(const CorrPlan& p, const T* cols, T* in)
{
    const long plane = p.oh * p.ow;
    for (long ci = 0; ci < p.cin; ++ci)
        for (long ky = 0; ky < p.kh; ++ky)
            for (long kx = 0; kx < p.kw; ++kx) {
                const T* row = cols + ((ci * p.kh + ky) * p.kw + kx) * plane;
                auto [y0, y1] = p.valid(ky, p.h, p.oh);
                auto [x0, x1] = p.valid(kx, p.w, p.ow);
                T* in_plane = in + ci * p.h * p.w;
                for (long oy = y0; oy < y1; ++oy) {
                    T* in_row = in_plane + (oy * p.stride + ky - p.pad) * p.w + kx - p.pad;
                    for (long ox = x0; ox < x1; ++ox) in_row[ox * p.stride] += row[oy * p.ow + ox];
                }
            }
}

template <typename T>
std::vector<T>& scratch()
{
    thread_local std::vector<T> buffer;
    return buffer;
}

template <typename T>
T* patch_buffer(const CorrPlan& p)
{
    auto& buf = scratch<T>();
    buf.resize(std::size_t(p.cin * p.kh * p.kw * p.oh * p.ow));
    return buf.data();
}

// out[co] += sum_ci w[co,ci] (*) in[ci]
template <typename T>
void corr_forward(const CorrPlan& p, const T* in, const T* weight, T* out)
{
    T* cols = patch_buffer<T>(p);
    im2col(p, in, cols);
    gemm(false, false, p.cout, p.oh * p.ow, p.cin * p.kh * p.kw, weight, cols, T(1), out);
}

// in_grad[ci] += sum_co w[co,ci] scattered from out_grad[co]
template <typename T>
void corr_backward_input(const CorrPlan& p, const T* out_grad, const T* weight, T* in_grad)
{
    T* cols = patch_buffer<T>(p);
    gemm(true, false, p.cin * p.kh * p.kw, p.oh * p.ow, p.cout, weight, out_grad, T(0), cols);
    col2im(p, cols, in_grad);
}

// w_grad[co,ci] += out_grad[co] (*) in[ci]
template <typename T>
void corr_backward_weight(const CorrPlan& p, const T* out_grad, const T* in, T* weight_grad)
{
    T* cols = patch_buffer<T>(p);
    im2col(p, in, cols);
    gemm(false, true, p.cout, p.cin * p.kh * p.kw, p.oh * p.ow, out_grad, cols, T(1), weight_grad);
}

template <typename T>
void add_bias(T* out, const T* bias, long channels, long plane)
{
    for (long c = 0; c < channels; ++c) std::fill_n(out + c * plane, plane, bias[c]);
}

template <typename T>
void accumulate_bias_grad(const T* out_grad, T* bias_grad, long batch, long channels, long plane)
{
    for (long c = 0; c < channels; ++c) {
        T acc = 0;
        for (long b = 0; b < batch; ++b) {
            const T* g = out_grad + (b * channels + c) * plane;
            for (long i = 0; i < plane; ++i) acc += g[i];
        }
        bias_grad[c] += acc;
    }
}

template <typename T>
T softplus(T z)
{
    return std::max(z, T(0)) + std::log1p(std::exp(-std::abs(z)));
}

} // namespace

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t pad)
{
    if (stride == 0 || kernel == 0) throw ContractError("conv: kernel and stride must be positive");
    if (input + 2 * pad < kernel)
        throw DimensionError("conv: padded input extent " + std::to_string(input + 2 * pad) +
                             " is smaller than kernel " + std::to_string(kernel));
    return (input + 2 * pad - kernel) / stride + 1;
}

std::size_t conv_transpose_output_extent(std::size_t input, std::size_t kernel, std::size_t stride,
                                         std::size_t pad)
{
    if (stride == 0 || kernel == 0) throw ContractError("conv_transpose: kernel and stride must be positive");
    const std::size_t full = (input - 1) * stride + kernel;
    if (full <= 2 * pad) throw DimensionError("conv_transpose: padding consumes the whole output");
    return full - 2 * pad;
}

template <typename T>
T sigmoid_scalar(T z)
{
    if (z >= 0) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dGeometry geometry)
{
    require_rank(input.shape(), 4, "conv2d", "input");
    require_rank(weight.shape(), 4, "conv2d", "weight");
    const auto& is = input.shape();
    const auto& ws = weight.shape();
    if (is[1] != ws[1])
        throw DimensionError("conv2d: input has " + std::to_string(is[1]) + " channels, weight expects " +
                             std::to_string(ws[1]));
    if (bias.defined() && bias.shape() != Shape{ws[0]})
        throw DimensionError("conv2d: bias shape " + shape_to_string(bias.shape()) + " != [" +
                             std::to_string(ws[0]) + "]");

    const std::size_t oh = conv_output_extent(is[2], ws[2], geometry.stride, geometry.pad);
    const std::size_t ow = conv_output_extent(is[3], ws[3], geometry.stride, geometry.pad);
    const CorrPlan plan{long(is[1]), long(ws[0]), long(is[2]), long(is[3]), long(oh), long(ow),
                        long(ws[2]), long(ws[3]), long(geometry.stride), long(geometry.pad)};
    const long batch = long(is[0]);
    const long in_size = plan.cin * plan.h * plan.w;
    const long out_size = plan.cout * plan.oh * plan.ow;

    std::vector<T> out(std::size_t(batch * out_size), T(0));
    for (long b = 0; b < batch; ++b) {
        if (bias.defined()) add_bias(out.data() + b * out_size, bias.data().data(), plan.cout, plan.oh * plan.ow);
        corr_forward(plan, input.data().data() + b * in_size, weight.data().data(), out.data() + b * out_size);
    }

    std::vector<NodePtr<T>> parents{input.node(), weight.node()};
    if (bias.defined()) parents.push_back(bias.node());
    return Tensor<T>::from_op(
        Shape{is[0], ws[0], oh, ow}, std::move(out), std::move(parents),
        [plan, batch, in_size, out_size](TensorNode<T>& node) {
            const T* g = node.grad.data();
            auto& in = *node.parents[0];
            auto& w = *node.parents[1];
            if (in.requires_grad) {
                T* gi = in.grad_buffer().data();
                for (long b = 0; b < batch; ++b)
                    corr_backward_input(plan, g + b * out_size, w.data.data(), gi + b * in_size);
            }
            if (w.requires_grad) {
                T* gw = w.grad_buffer().data();
                for (long b = 0; b < batch; ++b)
                    corr_backward_weight(plan, g + b * out_size, in.data.data() + b * in_size, gw);
            }
            if (node.parents.size() > 2 && node.parents[2]->requires_grad)
                accumulate_bias_grad(g, node.parents[2]->grad_buffer().data(), batch, plan.cout, plan.oh * plan.ow);
        });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                           Conv2dGeometry geometry)
{
    require_rank(input.shape(), 4, "conv_transpose2d", "input");
    require_rank(weight.shape(), 4, "conv_transpose2d", "weight");
    const auto& is = input.shape();
    const auto& ws = weight.shape();
    if (is[1] != ws[0])
        throw DimensionError("conv_transpose2d: input has " + std::to_string(is[1]) +
                             " channels, weight expects " + std::to_string(ws[0]));
    if (bias.defined() && bias.shape() != Shape{ws[1]})
        throw DimensionError("conv_transpose2d: bias shape " + shape_to_string(bias.shape()) + " != [" +
                             std::to_string(ws[1]) + "]");

    const std::size_t oh = conv_transpose_output_extent(is[2], ws[2], geometry.stride, geometry.pad);
    const std::size_t ow = conv_transpose_output_extent(is[3], ws[3], geometry.stride, geometry.pad);
    // The transposed conv is the input-gradient of a correlation whose
    // "input" is our output and whose "output" is our input.
    const CorrPlan plan{long(ws[1]), long(ws[0]), long(oh), long(ow), long(is[2]), long(is[3]),
                        long(ws[2]), long(ws[3]), long(geometry.stride), long(geometry.pad)};
    if (conv_output_extent(oh, ws[2], geometry.stride, geometry.pad) != is[2] ||
        conv_output_extent(ow, ws[3], geometry.stride, geometry.pad) != is[3])
        throw DimensionError("conv_transpose2d: geometry is not invertible for input " + shape_to_string(is));
    const long batch = long(is[0]);
    const long in_size = plan.cout * plan.oh * plan.ow;  // our input
    const long out_size = plan.cin * plan.h * plan.w;    // our output

    std::vector<T> out(std::size_t(batch * out_size), T(0));
    for (long b = 0; b < batch; ++b) {
        if (bias.defined()) add_bias(out.data() + b * out_size, bias.data().data(), plan.cin, plan.h * plan.w);
        corr_backward_input(plan, input.data().data() + b * in_size, weight.data().data(), out.data() + b * out_size);
    }

    std::vector<NodePtr<T>> parents{input.node(), weight.node()};
    if (bias.defined()) parents.push_back(bias.node());
    return Tensor<T>::from_op(
        Shape{is[0], ws[1], oh, ow}, std::move(out), std::move(parents),
        [plan, batch, in_size, out_size](TensorNode<T>& node) {
            const T* g = node.grad.data();
            auto& in = *node.parents[0];
            auto& w = *node.parents[1];
            if (in.requires_grad) {
                T* gi = in.grad_buffer().data();
                for (long b = 0; b < batch; ++b)
                    corr_forward(plan, g + b * out_size, w.data.data(), gi + b * in_size);
            }
            if (w.requires_grad) {
                T* gw = w.grad_buffer().data();
                for (long b = 0; b < batch; ++b)
                    corr_backward_weight(plan, in.data.data() + b * in_size, g + b * out_size, gw);
            }
            if (node.parents.size() > 2 && node.parents[2]->requires_grad)
                accumulate_bias_grad(g, node.parents[2]->grad_buffer().data(), batch, plan.cin, plan.h * plan.w);
        });
}

template <typename T>
Tensor<T> activate(const Tensor<T>& x, Activation activation)
{
    const auto in = x.data();
    std::vector<T> out(in.size());
    const T alpha = T(activation.alpha);
    switch (activation.kind) {
    case Activation::Kind::relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0 ? in[i] : T(0);
        break;
    case Activation::Kind::leaky_relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0 ? in[i] : alpha * in[i];
        break;
    case Activation::Kind::tanh:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
        break;
    case Activation::Kind::sigmoid:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid_scalar(in[i]);
        break;
    }

    return Tensor<T>::from_op(x.shape(), std::move(out), {x.node()}, [activation, alpha](TensorNode<T>& node) {
        auto& parent = *node.parents[0];
        if (!parent.requires_grad) return;
        auto& gi = parent.grad_buffer();
        const auto& g = node.grad;
        const auto& xin = parent.data;
        const auto& y = node.data;
        switch (activation.kind) {
        case Activation::Kind::relu:
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += xin[i] > 0 ? g[i] : T(0);
            break;
        case Activation::Kind::leaky_relu:
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += xin[i] > 0 ? g[i] : alpha * g[i];
            break;
        case Activation::Kind::tanh:
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * (T(1) - y[i] * y[i]);
            break;
        case Activation::Kind::sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * y[i] * (T(1) - y[i]);
            break;
        }
    });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, NormMode mode, double eps)
{
    require_rank(x.shape(), 4, "batch_norm", "input");
    const auto& s = x.shape();
    const long batch = long(s[0]), channels = long(s[1]), plane = long(s[2] * s[3]);
    if (gamma.shape() != Shape{s[1]} || beta.shape() != Shape{s[1]})
        throw DimensionError("batch_norm: gamma/beta must be [" + std::to_string(channels) + "]");
    if (stats.running_mean.shape() != Shape{s[1]})
        throw DimensionError("batch_norm: running stats sized for a different channel count");

    const long count = batch * plane;
    const auto in = x.data();
    std::vector<T> out(in.size());
    std::vector<T> xhat(in.size());
    std::vector<T> inv_std(static_cast<std::size_t>(channels));

    for (long c = 0; c < channels; ++c) {
        T mu, var;
        if (mode == NormMode::train) {
            T acc = 0;
            for (long b = 0; b < batch; ++b)
                for (long i = 0; i < plane; ++i) acc += in[std::size_t((b * channels + c) * plane + i)];
            mu = acc / T(count);
            T sq = 0;
            for (long b = 0; b < batch; ++b)
                for (long i = 0; i < plane; ++i) {
                    const T d = in[std::size_t((b * channels + c) * plane + i)] - mu;
                    sq += d * d;
                }
            var = sq / T(count);
            const T m = T(stats.momentum);
            const T unbiased = count > 1 ? sq / T(count - 1) : var;
            auto rm = stats.running_mean.data();
            auto rv = stats.running_var.data();
            rm[std::size_t(c)] = (T(1) - m) * rm[std::size_t(c)] + m * mu;
            rv[std::size_t(c)] = (T(1) - m) * rv[std::size_t(c)] + m * unbiased;
        } else {
            mu = stats.running_mean.data()[std::size_t(c)];
            var = stats.running_var.data()[std::size_t(c)];
        }
        const T istd = T(1) / std::sqrt(var + T(eps));
        inv_std[std::size_t(c)] = istd;
        const T g = gamma.data()[std::size_t(c)];
        const T bt = beta.data()[std::size_t(c)];
        for (long b = 0; b < batch; ++b)
            for (long i = 0; i < plane; ++i) {
                const std::size_t k = std::size_t((b * channels + c) * plane + i);
                xhat[k] = (in[k] - mu) * istd;
                out[k] = g * xhat[k] + bt;
            }
    }

    return Tensor<T>::from_op(
        s, std::move(out), {x.node(), gamma.node(), beta.node()},
        [xhat = std::move(xhat), inv_std = std::move(inv_std), batch, channels, plane, count,
         mode](TensorNode<T>& node) {
            const auto& g = node.grad;
            auto& xin = *node.parents[0];
            auto& gam = *node.parents[1];
            auto& bet = *node.parents[2];
            for (long c = 0; c < channels; ++c) {
                T sum_g = 0, sum_gx = 0;
                for (long b = 0; b < batch; ++b)
                    for (long i = 0; i < plane; ++i) {
                        const std::size_t k = std::size_t((b * channels + c) * plane + i);
                        sum_g += g[k];
                        sum_gx += g[k] * xhat[k];
                    }
                if (gam.requires_grad) gam.grad_buffer()[std::size_t(c)] += sum_gx;
                if (bet.requires_grad) bet.grad_buffer()[std::size_t(c)] += sum_g;
                if (!xin.requires_grad) continue;
                auto& gi = xin.grad_buffer();
                const T gm = gam.data[std::size_t(c)];
                const T istd = inv_std[std::size_t(c)];
                if (mode == NormMode::train) {
                    const T n = T(count);
                    const T mean_g = sum_g / n, mean_gx = sum_gx / n;
                    for (long b = 0; b < batch; ++b)
                        for (long i = 0; i < plane; ++i) {
                            const std::size_t k = std::size_t((b * channels + c) * plane + i);
                            gi[k] += gm * istd * (g[k] - mean_g - xhat[k] * mean_gx);
                        }
                } else {
                    for (long b = 0; b < batch; ++b)
                        for (long i = 0; i < plane; ++i) {
                            const std::size_t k = std::size_t((b * channels + c) * plane + i);
                            gi[k] += gm * istd * g[k];
                        }
                }
            }
        });
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& target)
{
    require_same_shape(logits.shape(), target.shape(), "bce_with_logits");
    const auto z = logits.data();
    const auto t = target.data();
    T acc = 0;
    for (std::size_t i = 0; i < z.size(); ++i) acc += softplus(z[i]) - z[i] * t[i];
    const T n = T(z.size());
    return Tensor<T>::from_op(Shape{1}, {acc / n}, {logits.node(), target.node()}, [n](TensorNode<T>& node) {
        const T g = node.grad[0] / n;
        auto& zl = *node.parents[0];
        auto& tl = *node.parents[1];
        if (zl.requires_grad) {
            auto& gz = zl.grad_buffer();
            for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += g * (sigmoid_scalar(zl.data[i]) - tl.data[i]);
        }
        if (tl.requires_grad) {
            auto& gt = tl.grad_buffer();
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= g * zl.data[i];
        }
    });
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, T label)
{
    return bce_with_logits(logits, Tensor<T>(logits.shape(), label));
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b)
{
    require_same_shape(a.shape(), b.shape(), "l1_loss");
    const auto x = a.data();
    const auto y = b.data();
    T acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
    const T n = T(x.size());
    return Tensor<T>::from_op(Shape{1}, {acc / n}, {a.node(), b.node()}, [n](TensorNode<T>& node) {
        const T g = node.grad[0] / n;
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        for (std::size_t i = 0; i < pa.data.size(); ++i) {
            const T d = pa.data[i] - pb.data[i];
            const T sgn = d > 0 ? T(1) : (d < 0 ? T(-1) : T(0));
            if (pa.requires_grad) pa.grad_buffer()[i] += g * sgn;
            if (pb.requires_grad) pb.grad_buffer()[i] -= g * sgn;
        }
    });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b)
{
    require_same_shape(a.shape(), b.shape(), "add");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return Tensor<T>::from_op(a.shape(), std::move(out), {a.node(), b.node()}, [](TensorNode<T>& node) {
        for (auto& p : node.parents) {
            if (!p->requires_grad) continue;
            auto& gp = p->grad_buffer();
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += node.grad[i];
        }
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b)
{
    return add(a, scale(b, T(-1)));
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b)
{
    require_same_shape(a.shape(), b.shape(), "mul");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return Tensor<T>::from_op(a.shape(), std::move(out), {a.node(), b.node()}, [](TensorNode<T>& node) {
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        // Read both inputs before writing: a and b may be the same node.
        for (std::size_t i = 0; i < node.grad.size(); ++i) {
            const T ga = node.grad[i] * pb.data[i];
            const T gb = node.grad[i] * pa.data[i];
            if (pa.requires_grad) pa.grad_buffer()[i] += ga;
            if (pb.requires_grad) pb.grad_buffer()[i] += gb;
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor)
{
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
    return Tensor<T>::from_op(a.shape(), std::move(out), {a.node()}, [factor](TensorNode<T>& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        auto& gp = p.grad_buffer();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += factor * node.grad[i];
    });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a)
{
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.data()[i]);
    return Tensor<T>::from_op(a.shape(), std::move(out), {a.node()}, [](TensorNode<T>& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        auto& gp = p.grad_buffer();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += node.grad[i] / p.data[i];
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a)
{
    T acc = 0;
    for (T v : a.data()) acc += v;
    return Tensor<T>::from_op(Shape{1}, {acc}, {a.node()}, [](TensorNode<T>& node) {
        auto& p = *node.parents[0];
        if (!p.requires_grad) return;
        auto& gp = p.grad_buffer();
        for (auto& g : gp) g += node.grad[0];
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a)
{
    return scale(sum(a), T(1) / T(a.numel()));
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b)
{
    require_rank(a.shape(), 4, "concat_channels", "first input");
    require_rank(b.shape(), 4, "concat_channels", "second input");
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3])
        throw DimensionError("concat_channels: incompatible shapes " + shape_to_string(sa) + " and " +
                             shape_to_string(sb));
    const std::size_t batch = sa[0];
    const std::size_t block_a = sa[1] * sa[2] * sa[3];
    const std::size_t block_b = sb[1] * sb[2] * sb[3];
    std::vector<T> out;
    out.reserve(batch * (block_a + block_b));
    for (std::size_t n = 0; n < batch; ++n) {
        out.insert(out.end(), a.data().begin() + long(n * block_a), a.data().begin() + long((n + 1) * block_a));
        out.insert(out.end(), b.data().begin() + long(n * block_b), b.data().begin() + long((n + 1) * block_b));
    }
    return Tensor<T>::from_op(
        Shape{batch, sa[1] + sb[1], sa[2], sa[3]}, std::move(out), {a.node(), b.node()},
        [batch, block_a, block_b](TensorNode<T>& node) {
            auto& pa = *node.parents[0];
            auto& pb = *node.parents[1];
            for (std::size_t n = 0; n < batch; ++n) {
                const T* g = node.grad.data() + n * (block_a + block_b);
                if (pa.requires_grad) {
                    T* ga = pa.grad_buffer().data() + n * block_a;
                    for (std::size_t i = 0; i < block_a; ++i) ga[i] += g[i];
                }
                if (pb.requires_grad) {
                    T* gb = pb.grad_buffer().data() + n * block_b;
                    for (std::size_t i = 0; i < block_b; ++i) gb[i] += g[block_a + i];
                }
            }
        });
}

#define S2S_INSTANTIATE_OPS(T)                                                                                  \
    template T sigmoid_scalar<T>(T);                                                                            \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Conv2dGeometry);         \
    template Tensor<T> conv_transpose2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                           Conv2dGeometry);                                                     \
    template Tensor<T> activate<T>(const Tensor<T>&, Activation);                                               \
    template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, BatchNormStats<T>&,  \
                                     NormMode, double);                                                         \
    template Tensor<T> bce_with_logits<T>(const Tensor<T>&, const Tensor<T>&);                                  \
    template Tensor<T> bce_with_logits<T>(const Tensor<T>&, T);                                                 \
    template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&);                                          \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                              \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                              \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                              \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                                           \
    template Tensor<T> log<T>(const Tensor<T>&);                                                                \
    template Tensor<T> sum<T>(const Tensor<T>&);                                                                \
    template Tensor<T> mean<T>(const Tensor<T>&);                                                               \
    template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);

S2S_INSTANTIATE_OPS(float)
S2S_INSTANTIATE_OPS(double)

#undef S2S_INSTANTIATE_OPS

} // namespace s2s
