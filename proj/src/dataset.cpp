#include "s2s/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "s2s/error.hpp"
#include "s2s/random.hpp"

namespace s2s {

namespace {

struct BodyShape {
    double cx, cy, a, b, rotation;
    double amp[3];
    double phase[3];

    // Position in the body frame: angle and radius normalized so that the
    // boundary sits at 1.
    std::pair<double, double> polar(double u, double v) const
    {
        const double du = u - cx, dv = v - cy;
        const double c = std::cos(rotation), s = std::sin(rotation);
        const double p = (du * c + dv * s) / a;
        const double q = (-du * s + dv * c) / b;
        const double theta = std::atan2(q, p);
        double boundary = 1.0;
        for (int k = 0; k < 3; ++k) boundary += amp[k] * std::cos((k + 2) * theta + phase[k]);
        return {theta, std::hypot(p, q) / boundary};
    }
};

struct Moments {
    double mx = 0, my = 0;
    double major[2] = {1, 0}, minor[2] = {0, 1};
    double sigma_major = 0, sigma_minor = 0;
};

Moments silhouette_moments(const Image& mask)
{
    const double res = double(mask.width);
    double n = 0, sx = 0, sy = 0;
    for (std::size_t y = 0; y < mask.height; ++y)
        for (std::size_t x = 0; x < mask.width; ++x)
            if (mask.at(x, y) > 0.5f) {
                n += 1;
                sx += (x + 0.5) / res;
                sy += (y + 0.5) / res;
            }
    Moments m;
    if (n == 0) return m;
    m.mx = sx / n;
    m.my = sy / n;
    double cxx = 0, cyy = 0, cxy = 0;
    for (std::size_t y = 0; y < mask.height; ++y)
        for (std::size_t x = 0; x < mask.width; ++x)
            if (mask.at(x, y) > 0.5f) {
                const double dx = (x + 0.5) / res - m.mx, dy = (y + 0.5) / res - m.my;
                cxx += dx * dx;
                cyy += dy * dy;
                cxy += dx * dy;
            }
    cxx /= n;
    cyy /= n;
    cxy /= n;
    // Eigen-decomposition of the 2x2 covariance.
    const double tr = cxx + cyy, det = cxx * cyy - cxy * cxy;
    const double disc = std::sqrt(std::max(tr * tr / 4 - det, 0.0));
    const double l1 = tr / 2 + disc, l2 = std::max(tr / 2 - disc, 0.0);
    const double angle = 0.5 * std::atan2(2 * cxy, cxx - cyy);
    m.major[0] = std::cos(angle);
    m.major[1] = std::sin(angle);
    m.minor[0] = -m.major[1];
    m.minor[1] = m.major[0];
    if (m.minor[1] < 0) {
        m.minor[0] = -m.minor[0];
        m.minor[1] = -m.minor[1];
    }
    m.sigma_major = std::sqrt(l1);
    m.sigma_minor = std::sqrt(l2);
    return m;
}

bool inside_ellipse(double u, double v, double cx, double cy, const double axis[2], double ra, double rb)
{
    const double du = u - cx, dv = v - cy;
    const double p = du * axis[0] + dv * axis[1];
    const double q = -du * axis[1] + dv * axis[0];
    return (p * p) / (ra * ra) + (q * q) / (rb * rb) <= 1.0;
}

} // namespace

PhantomPair generate_phantom_pair(std::uint64_t seed, std::uint64_t index, std::size_t resolution)
{
    if (resolution != 32 && resolution != 64 && resolution != 128 && resolution != 256)
        throw ContractError("phantom resolution must be one of {32, 64, 128, 256}, got " +
                            std::to_string(resolution));
    Rng rng(mix_seed(seed, index));
    BodyShape body{};
    body.cx = 0.5 + rng.uniform(-0.04, 0.04);
    body.cy = 0.5 + rng.uniform(-0.04, 0.04);
    body.a = rng.uniform(0.28, 0.38);
    body.b = rng.uniform(0.25, 0.34);
    body.rotation = rng.uniform(-0.3, 0.3);
    for (int k = 0; k < 3; ++k) {
        body.amp[k] = rng.uniform(0.0, 0.04);
        body.phase[k] = rng.uniform(0.0, 2 * std::numbers::pi);
    }
    const double organ_a_value = 0.45 + rng.uniform(-0.04, 0.04);
    const double organ_b_value = 0.62 + rng.uniform(-0.04, 0.04);
    const double jitter_x = rng.uniform(-0.01, 0.01);
    const double jitter_y = rng.uniform(-0.01, 0.01);

    const double res = double(resolution);
    PhantomPair pair;
    pair.seed = seed;
    pair.index = index;
    pair.contour = Image(resolution, resolution);
    pair.structure = Image(resolution, resolution);

    for (std::size_t y = 0; y < resolution; ++y)
        for (std::size_t x = 0; x < resolution; ++x) {
            const auto [theta, radius] = body.polar((x + 0.5) / res, (y + 0.5) / res);
            if (radius <= 1.0) pair.contour.at(x, y) = 1.0f;
        }

    // Structure placement is driven by the silhouette's own moments.
    const Moments m = silhouette_moments(pair.contour);
    const double spine_x = m.mx + 0.55 * m.sigma_minor * m.minor[0];
    const double spine_y = m.my + 0.55 * m.sigma_minor * m.minor[1];
    const double spine_r = 0.35 * m.sigma_minor;
    const double organ_off = 0.6 * m.sigma_major;
    const double organ_shift = -0.25 * m.sigma_minor;
    const double organ_ra = 0.35 * m.sigma_major, organ_rb = 0.45 * m.sigma_minor;
    const double ax = m.mx + organ_off * m.major[0] + organ_shift * m.minor[0] + jitter_x;
    const double ay = m.my + organ_off * m.major[1] + organ_shift * m.minor[1] + jitter_y;
    const double bx = m.mx - organ_off * m.major[0] + organ_shift * m.minor[0] + jitter_x;
    const double by = m.my - organ_off * m.major[1] + organ_shift * m.minor[1] + jitter_y;
    const float organ_a = quantize_8bit(float(organ_a_value));
    const float organ_b = quantize_8bit(float(organ_b_value));

    for (std::size_t y = 0; y < resolution; ++y)
        for (std::size_t x = 0; x < resolution; ++x) {
            if (pair.contour.at(x, y) == 0.0f) continue;
            const double u = (x + 0.5) / res, v = (y + 0.5) / res;
            const auto [theta, radius] = body.polar(u, v);
            float value = 0.0f;
            if (inside_ellipse(u, v, ax, ay, m.major, organ_ra, organ_rb)) value = organ_a;
            if (inside_ellipse(u, v, bx, by, m.major, organ_ra, organ_rb)) value = organ_b;
            const bool rib = radius >= 0.80 && radius <= 0.88 && std::cos(7.0 * theta) > 0.2;
            const bool spine = std::hypot(u - spine_x, v - spine_y) <= spine_r;
            if (rib || spine) value = kBoneValue;
            pair.structure.at(x, y) = value;
        }
    return pair;
}

DatasetSplit split_dataset(std::size_t count, double test_fraction, std::uint64_t seed)
{
    if (count < 5) throw ContractError("split_dataset needs at least 5 items, got " + std::to_string(count));
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ContractError("test fraction must be in (0,1)");
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0x5b117ULL));
    rng.shuffle(order);
    const auto n_test = std::size_t(std::llround(test_fraction * double(count)));
    DatasetSplit split;
    split.test.assign(order.begin(), order.begin() + long(n_test));
    split.train.assign(order.begin() + long(n_test), order.end());
    return split;
}

PairDataset::PairDataset(DatasetManifest manifest, std::vector<PhantomPair> pairs)
    : manifest_(manifest), pairs_(std::move(pairs))
{
    manifest_.count = pairs_.size();
}

PairDataset PairDataset::generate(std::size_t count, std::uint64_t seed, std::size_t resolution)
{
    std::vector<PhantomPair> pairs;
    pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pairs.push_back(generate_phantom_pair(seed, i, resolution));
    return PairDataset(DatasetManifest{count, seed, resolution}, std::move(pairs));
}

std::string pair_file_stem(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return buf;
}

void PairDataset::save(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        write_pgm(dir / (pair_file_stem(i) + "_y.pgm"), pairs_[i].contour);
        write_pgm(dir / (pair_file_stem(i) + "_x.pgm"), pairs_[i].structure);
    }
    std::ofstream f(dir / "manifest.txt", std::ios::trunc);
    f << "s2s-phantoms v1\n"
      << "count " << manifest_.count << "\n"
      << "seed " << manifest_.seed << "\n"
      << "resolution " << manifest_.resolution << "\n";
    if (!f) throw Error("cannot write manifest in " + dir.string());
}

PairDataset PairDataset::load(const std::filesystem::path& dir)
{
    std::ifstream f(dir / "manifest.txt");
    if (!f) throw ConfigError("no manifest.txt in " + dir.string());
    std::string line;
    if (!std::getline(f, line) || line != "s2s-phantoms v1")
        throw FormatError("manifest.txt: unexpected header '" + line + "'");
    DatasetManifest m;
    bool has_count = false, has_seed = false, has_res = false;
    long line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string key;
        unsigned long long value = 0;
        if (!(is >> key >> value)) throw ParseError("manifest.txt: malformed line " + std::to_string(line_no), line_no);
        if (key == "count") m.count = value, has_count = true;
        else if (key == "seed") m.seed = value, has_seed = true;
        else if (key == "resolution") m.resolution = value, has_res = true;
        else throw ParseError("manifest.txt: unknown key '" + key + "'", line_no);
    }
    if (!has_count || !has_seed || !has_res) throw FormatError("manifest.txt: missing count, seed or resolution");
    if (m.count == 0) throw ConfigError("dataset in " + dir.string() + " is empty");

    std::vector<PhantomPair> pairs;
    pairs.reserve(m.count);
    for (std::size_t i = 0; i < m.count; ++i) {
        PhantomPair p;
        p.seed = m.seed;
        p.index = i;
        p.contour = read_pgm(dir / (pair_file_stem(i) + "_y.pgm"));
        p.structure = read_pgm(dir / (pair_file_stem(i) + "_x.pgm"));
        for (const Image* img : {&p.contour, &p.structure})
            if (img->width != m.resolution || img->height != m.resolution)
                throw DimensionError("pair " + std::to_string(i) + " is not " + std::to_string(m.resolution) + "^2");
        pairs.push_back(std::move(p));
    }
    return PairDataset(m, std::move(pairs));
}

TensorF images_to_tensor(const std::vector<const Image*>& images)
{
    if (images.empty()) throw ContractError("images_to_tensor: empty batch");
    const std::size_t w = images[0]->width, h = images[0]->height;
    std::vector<float> values;
    values.reserve(images.size() * w * h);
    for (const Image* img : images) {
        if (img->width != w || img->height != h) throw DimensionError("images_to_tensor: mixed image sizes");
        for (float v : img->pixels) values.push_back(to_network_range(v));
    }
    return TensorF(Shape{images.size(), 1, h, w}, std::move(values));
}

std::vector<Image> tensor_to_images(const TensorF& t)
{
    if (t.rank() != 4 || t.dim(1) != 1) throw DimensionError("tensor_to_images expects [B,1,H,W]");
    const std::size_t b = t.dim(0), h = t.dim(2), w = t.dim(3);
    std::vector<Image> out;
    out.reserve(b);
    for (std::size_t n = 0; n < b; ++n) {
        Image img(w, h);
        for (std::size_t i = 0; i < w * h; ++i) img.pixels[i] = to_unit_range(t.data()[n * w * h + i]);
        out.push_back(std::move(img));
    }
    return out;
}

BatchLoader::BatchLoader(const PairDataset& data, std::vector<std::size_t> indices, std::size_t batch_size,
                         std::uint64_t epoch_seed)
    : data_(data), order_(std::move(indices)), batch_size_(batch_size)
{
    if (order_.empty()) throw ContractError("BatchLoader: no indices");
    if (batch_size_ == 0) throw ContractError("BatchLoader: batch size must be positive");
    Rng rng(mix_seed(epoch_seed, 0xba7c4ULL));
    rng.shuffle(order_);
}

std::optional<Batch> BatchLoader::next()
{
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
    Batch batch;
    std::vector<const Image*> ys, xs;
    for (std::size_t i = cursor_; i < end; ++i) {
        const auto& pair = data_[order_[i]];
        batch.indices.push_back(order_[i]);
        ys.push_back(&pair.contour);
        xs.push_back(&pair.structure);
    }
    cursor_ = end;
    batch.contours = images_to_tensor(ys);
    batch.structures = images_to_tensor(xs);
    return batch;
}

} // namespace s2s
