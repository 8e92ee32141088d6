#pragma once

// Reference SSIM straight from the definition: for every window position,
// weighted means, variances and covariance are summed over the full 2D
// Gaussian window. Slow, and shares no code with the library.

#include <cmath>
#include <vector>

namespace s2s::testing {

inline double ssim_direct(const std::vector<double>& a, const std::vector<double>& b, std::size_t w, std::size_t h,
                          std::size_t n = 11, double sigma = 1.5)
{
    std::vector<double> win(n * n);
    double total = 0;
    const double c = (double(n) - 1) / 2;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double r2 = (double(i) - c) * (double(i) - c) + (double(j) - c) * (double(j) - c);
            win[i * n + j] = std::exp(-r2 / (2 * sigma * sigma));
            total += win[i * n + j];
        }
    for (auto& v : win) v /= total;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0;
    std::size_t count = 0;
    for (std::size_t y = 0; y + n <= h; ++y)
        for (std::size_t x = 0; x + n <= w; ++x) {
            double ma = 0, mb = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = win[i * n + j];
                    ma += g * a[(y + i) * w + x + j];
                    mb += g * b[(y + i) * w + x + j];
                }
            double va = 0, vb = 0, cov = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = win[i * n + j];
                    const double da = a[(y + i) * w + x + j] - ma, db = b[(y + i) * w + x + j] - mb;
                    va += g * da * da;
                    vb += g * db * db;
                    cov += g * da * db;
                }
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return acc / double(count);
}

} // namespace s2s::testing
