#pragma once

// PSNR and SSIM for images with dynamic range L = 1.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/volume.hpp"

namespace s2s {

// Reported for identical inputs instead of +infinity.
inline constexpr double kPsnrCap = 99.0;

double psnr(std::span<const double> a, std::span<const double> b);
double psnr(const Image& a, const Image& b);

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

// Gaussian-weighted SSIM averaged over every fully contained window
// position. Both sides must be at least `window` pixels.
double ssim(std::span<const double> a, std::span<const double> b, std::size_t width, std::size_t height,
            const SsimOptions& options = {});
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

struct ItemMetrics {
    double psnr = 0;
    double ssim = 0;
    bool capped = false; // identical item, PSNR holds the cap
};

struct MetricReport {
    std::vector<ItemMetrics> items;
    double mean_psnr = 0; // over non-capped items; kPsnrCap if all capped
    double mean_ssim = 0;
    std::size_t capped_count = 0;

    std::size_t count() const { return items.size(); }
};

MetricReport summarize(std::vector<ItemMetrics> items);

// Per-plane metrics along z, then means.
MetricReport evaluate_volume(const VolumeGrid& pred, const VolumeGrid& truth);

// Per-pair metrics over image lists of equal length.
MetricReport evaluate_images(const std::vector<Image>& pred, const std::vector<Image>& truth);

// One line per item: {"item":k,"psnr":..,"ssim":..,"capped":..}, then a
// summary line.
std::string format_metric_records(const MetricReport& report);

// Metric rows x configuration columns, aligned text.
std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& columns);

} // namespace s2s
