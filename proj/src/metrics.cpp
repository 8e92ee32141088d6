#include "s2s/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "s2s/error.hpp"

namespace s2s {

namespace {

std::vector<double> widen(const Image& img)
{
    return std::vector<double>(img.pixels.begin(), img.pixels.end());
}

std::vector<double> gaussian_kernel(std::size_t size, double sigma)
{
    std::vector<double> k(size);
    const double c = (double(size) - 1.0) / 2.0;
    double total = 0;
    for (std::size_t i = 0; i < size; ++i) {
        const double d = double(i) - c;
        k[i] = std::exp(-d * d / (2 * sigma * sigma));
        total += k[i];
    }
    for (auto& v : k) v /= total;
    return k;
}

// Separable "valid" filtering: output is (w-n+1) x (h-n+1).
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t w, std::size_t h,
                                 const std::vector<double>& k)
{
    const std::size_t n = k.size(), ow = w - n + 1, oh = h - n + 1;
    std::vector<double> rows(h * ow);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) acc += k[i] * src[y * w + x + i];
            rows[y * ow + x] = acc;
        }
    std::vector<double> out(oh * ow);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0;
            for (std::size_t i = 0; i < n; ++i) acc += k[i] * rows[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

void require_same_size(const Image& a, const Image& b, const char* what)
{
    if (a.width != b.width || a.height != b.height)
        throw DimensionError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                             std::to_string(b.height) + ")");
}

} // namespace

double psnr(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw DimensionError("psnr: inputs differ in size");
    if (a.empty()) throw DimensionError("psnr: empty input");
    double se = 0;
    for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
    const double mse = se / double(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double psnr(const Image& a, const Image& b)
{
    require_same_size(a, b, "psnr");
    return psnr(widen(a), widen(b));
}

double ssim(std::span<const double> a, std::span<const double> b, std::size_t width, std::size_t height,
            const SsimOptions& options)
{
    if (a.size() != width * height || b.size() != width * height)
        throw DimensionError("ssim: data does not match the stated size");
    if (width < options.window || height < options.window)
        throw ContractError("ssim: image " + std::to_string(width) + "x" + std::to_string(height) +
                            " is smaller than the " + std::to_string(options.window) + "-pixel window");
    const auto k = gaussian_kernel(options.window, options.sigma);
    std::vector<double> va(a.begin(), a.end()), vb(b.begin(), b.end());
    std::vector<double> aa(va.size()), bb(va.size()), ab(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) {
        aa[i] = va[i] * va[i];
        bb[i] = vb[i] * vb[i];
        ab[i] = va[i] * vb[i];
    }
    const auto mu_a = filter_valid(va, width, height, k);
    const auto mu_b = filter_valid(vb, width, height, k);
    const auto e_aa = filter_valid(aa, width, height, k);
    const auto e_bb = filter_valid(bb, width, height, k);
    const auto e_ab = filter_valid(ab, width, height, k);

    const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
    const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
    double total = 0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double var_a = e_aa[i] - ma * ma;
        const double var_b = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
    return total / double(mu_a.size());
}

double ssim(const Image& a, const Image& b, const SsimOptions& options)
{
    require_same_size(a, b, "ssim");
    return ssim(widen(a), widen(b), a.width, a.height, options);
}

MetricReport summarize(std::vector<ItemMetrics> items)
{
    MetricReport r;
    r.items = std::move(items);
    double psnr_sum = 0, ssim_sum = 0;
    std::size_t psnr_n = 0;
    for (const auto& m : r.items) {
        ssim_sum += m.ssim;
        if (m.capped) {
            ++r.capped_count;
        } else {
            psnr_sum += m.psnr;
            ++psnr_n;
        }
    }
    r.mean_psnr = psnr_n ? psnr_sum / double(psnr_n) : kPsnrCap;
    r.mean_ssim = r.items.empty() ? 0.0 : ssim_sum / double(r.items.size());
    return r;
}

namespace {

ItemMetrics measure(const Image& pred, const Image& truth)
{
    ItemMetrics m;
    m.psnr = psnr(pred, truth);
    m.capped = pred.pixels == truth.pixels;
    m.ssim = ssim(pred, truth);
    return m;
}

} // namespace

MetricReport evaluate_volume(const VolumeGrid& pred, const VolumeGrid& truth)
{
    if (pred.nx != truth.nx || pred.ny != truth.ny || pred.nz != truth.nz)
        throw DimensionError("evaluate_volume: dims (" + std::to_string(pred.nx) + "," + std::to_string(pred.ny) +
                             "," + std::to_string(pred.nz) + ") vs (" + std::to_string(truth.nx) + "," +
                             std::to_string(truth.ny) + "," + std::to_string(truth.nz) + ")");
    std::vector<ItemMetrics> items;
    items.reserve(pred.nz);
    for (std::size_t z = 0; z < pred.nz; ++z) items.push_back(measure(pred.plane(z), truth.plane(z)));
    return summarize(std::move(items));
}

MetricReport evaluate_images(const std::vector<Image>& pred, const std::vector<Image>& truth)
{
    if (pred.size() != truth.size())
        throw DimensionError("evaluate_images: " + std::to_string(pred.size()) + " predictions for " +
                             std::to_string(truth.size()) + " references");
    std::vector<ItemMetrics> items;
    items.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) items.push_back(measure(pred[i], truth[i]));
    return summarize(std::move(items));
}

std::string format_metric_records(const MetricReport& report)
{
    std::ostringstream os;
    char buf[256];
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        const auto& m = report.items[i];
        std::snprintf(buf, sizeof buf, "{\"item\":%zu,\"psnr\":%.6f,\"ssim\":%.6f,\"capped\":%s}\n", i, m.psnr,
                      m.ssim, m.capped ? "true" : "false");
        os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "{\"summary\":true,\"count\":%zu,\"mean_psnr\":%.6f,\"mean_ssim\":%.6f,\"capped\":%zu,"
                  "\"psnr_mode\":\"per_item_mean\"}\n",
                  report.count(), report.mean_psnr, report.mean_ssim, report.capped_count);
    os << buf;
    return os.str();
}

std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& columns)
{
    std::size_t width = 8;
    for (const auto& [name, _] : columns) width = std::max(width, name.size() + 2);
    auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    std::ostringstream os;
    os << pad("Metric", 8);
    for (const auto& [name, _] : columns) os << pad(name, width);
    os << "\n";
    char buf[64];
    os << pad("PSNR", 8);
    for (const auto& [_, r] : columns) {
        std::snprintf(buf, sizeof buf, "%.2f", r.mean_psnr);
        os << pad(buf, width);
    }
    os << "\n" << pad("SSIM", 8);
    for (const auto& [_, r] : columns) {
        std::snprintf(buf, sizeof buf, "%.3f", r.mean_ssim);
        os << pad(buf, width);
    }
    os << "\n";
    return os.str();
}

} // namespace s2s
