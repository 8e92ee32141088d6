#pragma once

// Central finite-difference checks for double-precision graphs.

#include <cmath>
#include <functional>
#include <vector>

#include "s2s/ops.hpp"
#include "s2s/random.hpp"

namespace s2s::testing {

struct GradCheckResult {
    double relative_error = 0.0;
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
};

inline TensorD random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool grad = true)
{
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    TensorD t(std::move(shape), std::move(v));
    t.set_requires_grad(grad);
    return t;
}

// Reduces any output to a scalar through a fixed random projection, so
// every output element contributes a distinct weight.
inline TensorD project(const TensorD& y, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> w(y.numel());
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    return sum(mul(y, TensorD(y.shape(), std::move(w))));
}

// `loss` rebuilds the graph from the current values of `inputs` and returns
// a scalar. Checks at most `max_coords` coordinates per input (all if 0).
inline GradCheckResult check_gradients(const std::function<TensorD()>& loss, std::vector<TensorD> inputs,
                                       double h = 1e-5, std::size_t max_coords = 0, std::uint64_t seed = 1)
{
    for (auto& t : inputs) t.zero_grad();
    loss().backward();

    Rng pick(seed);
    double diff2 = 0, a2 = 0, n2 = 0;
    for (auto& t : inputs) {
        std::vector<double> analytic(t.numel(), 0.0);
        if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
        std::vector<std::size_t> coords;
        if (max_coords == 0 || max_coords >= t.numel()) {
            for (std::size_t i = 0; i < t.numel(); ++i) coords.push_back(i);
        } else {
            for (std::size_t k = 0; k < max_coords; ++k) coords.push_back(std::size_t(pick.below(t.numel())));
        }
        for (auto i : coords) {
            auto data = t.data();
            const double saved = data[i];
            data[i] = saved + h;
            const double plus = loss().item();
            data[i] = saved - h;
            const double minus = loss().item();
            data[i] = saved;
            const double numeric = (plus - minus) / (2 * h);
            diff2 += (numeric - analytic[i]) * (numeric - analytic[i]);
            a2 += analytic[i] * analytic[i];
            n2 += numeric * numeric;
        }
    }
    GradCheckResult r;
    r.analytic_norm = std::sqrt(a2);
    r.numeric_norm = std::sqrt(n2);
    const double denom = std::max({r.analytic_norm, r.numeric_norm, 1e-12});
    r.relative_error = std::sqrt(diff2) / denom;
    return r;
}

} // namespace s2s::testing
