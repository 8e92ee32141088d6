#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "s2s/error.hpp"
#include "s2s/networks.hpp"
#include "support/gradcheck.hpp"

using namespace s2s;
using s2s::testing::check_gradients;
using s2s::testing::project;
using s2s::testing::random_tensor;

namespace {

// Receptive field by brute force: mark which input pixels can influence the
// center output logit by walking kernel footprints backwards.
std::size_t footprint_width(const std::vector<LayerDesc>& layers)
{
    long lo = 0, hi = 0; // inclusive index range at the current layer's output
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        lo = lo * long(it->stride);
        hi = hi * long(it->stride) + long(it->kernel) - 1;
    }
    return std::size_t(hi - lo + 1);
}

TensorF zeros(std::size_t b, std::size_t c, std::size_t r) { return TensorF(Shape{b, c, r, r}, 0.0f); }

} // namespace

TEST(ReceptiveField, HeadOnly) { EXPECT_EQ(compute_receptive_field(std::vector<LayerDesc>{{2, 1}}), 2u); }

TEST(ReceptiveField, ThreeLayers)
{
    EXPECT_EQ(compute_receptive_field(std::vector<LayerDesc>{{4, 2}, {4, 2}, {2, 1}}), 14u);
}

TEST(ReceptiveField, SixLayers)
{
    std::vector<LayerDesc> l(5, LayerDesc{4, 2});
    l.push_back({2, 1});
    EXPECT_EQ(compute_receptive_field(l), 126u);
}

TEST(ReceptiveField, FamilyMatchesClosedFormAndFootprint)
{
    for (std::size_t n = 1; n <= 6; ++n) {
        const auto layers = discriminator_layers(n);
        ASSERT_EQ(layers.size(), n);
        const std::size_t expected = (std::size_t{1} << (n + 1)) - 2;
        EXPECT_EQ(compute_receptive_field(layers), expected) << "n=" << n;
        EXPECT_EQ(footprint_width(layers), expected) << "n=" << n;
        EXPECT_EQ(kPatchSizes[n - 1], expected);
        EXPECT_EQ(discriminator_layer_count(expected), n);
    }
}

TEST(ReceptiveField, RejectsBadLayers)
{
    EXPECT_THROW(compute_receptive_field(std::vector<LayerDesc>{}), ContractError);
    EXPECT_THROW(compute_receptive_field(std::vector<LayerDesc>{{0, 1}}), ContractError);
    EXPECT_THROW(compute_receptive_field(std::vector<LayerDesc>{{2, 0}}), ContractError);
}

TEST(Discriminator, PatchSixLayout)
{
    auto d = build_discriminator<float>({6, 1.0, true}, 2);
    const auto descs = d.layer_descs();
    ASSERT_EQ(descs.size(), 2u);
    EXPECT_EQ(descs[0].kernel, 4u);
    EXPECT_EQ(descs[0].stride, 2u);
    EXPECT_EQ(descs[1].kernel, 2u);
    EXPECT_EQ(descs[1].stride, 1u);
    EXPECT_EQ(d.receptive_field(), 6u);
}

TEST(Discriminator, UnsupportedPatchNamesValidSet)
{
    try {
        build_discriminator<float>({7, 1.0, true}, 2);
        FAIL() << "expected UnsupportedPatchSize";
    } catch (const UnsupportedPatchSize& e) {
        const std::string msg = e.what();
        for (auto p : kPatchSizes) EXPECT_NE(msg.find(std::to_string(p)), std::string::npos) << msg;
    }
}

TEST(Discriminator, LogitMapShapesAt64)
{
    auto d6 = build_discriminator<float>({6, 1.0, true}, 2, 64);
    auto out6 = d6.forward(zeros(1, 1, 64), zeros(1, 1, 64));
    EXPECT_EQ(out6.shape(), (Shape{1, 1, 31, 31}));

    auto d126 = build_discriminator<float>({126, 1.0, true}, 2, 64);
    auto out126 = d126.forward(zeros(1, 1, 64), zeros(1, 1, 64));
    EXPECT_EQ(out126.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_EQ(d126.receptive_field(), 126u);
}

TEST(Discriminator, DepthClampKeepsMapAtLeastOnePixel)
{
    auto d = build_discriminator<float>({126, 1.0, false}, 1, 32);
    EXPECT_EQ(d.requested_layers(), 6u);
    EXPECT_EQ(d.layer_count(), 5u);
    EXPECT_EQ(d.receptive_field(), 62u);
    auto out = d.forward(zeros(2, 1, 32), std::nullopt);
    EXPECT_EQ(out.shape(), (Shape{2, 1, 1, 1}));
}

TEST(Discriminator, MapExtentStrictlyDecreasesWithDepth)
{
    for (std::size_t res : {16u, 32u, 64u}) {
        std::size_t prev = res + 1;
        for (auto p : kPatchSizes) {
            if (discriminator_layer_count(p) > max_discriminator_layers(res)) break;
            auto d = build_discriminator<float>({p, 1.0, false}, 1, res);
            const std::size_t extent = d.forward(zeros(1, 1, res), std::nullopt).dim(2);
            EXPECT_LT(extent, prev) << "res " << res << " patch " << p;
            prev = extent;
        }
    }
}

TEST(Discriminator, ConditionalRequiresCondition)
{
    auto d = build_discriminator<float>({6, 1.0, true}, 2);
    EXPECT_THROW(d.forward(zeros(1, 1, 16), std::nullopt), ContractError);
    EXPECT_THROW(d.forward(zeros(1, 1, 16), zeros(1, 1, 8)), ContractError);
}

TEST(Discriminator, ZeroHeadGivesHalfScore)
{
    auto d = build_discriminator<float>({14, 1.0, true}, 2, 32, {}, 3);
    for (auto& v : d.head().weight.data()) v = 0.0f;
    for (auto& v : d.head().bias.data()) v = 0.0f;
    Rng rng(5);
    std::vector<float> a(2 * 32 * 32), b(2 * 32 * 32);
    for (auto& v : a) v = float(rng.uniform(-1, 1));
    for (auto& v : b) v = float(rng.uniform(-1, 1));
    auto logits = d.forward(TensorF({2, 1, 32, 32}, a), TensorF({2, 1, 32, 32}, b));
    for (float z : logits.data()) {
        EXPECT_EQ(z, 0.0f);
        EXPECT_EQ(sigmoid_scalar(z), 0.5f);
    }
}

TEST(Generator, ArchitectureAt64)
{
    const auto arch = generator_arch(64);
    EXPECT_EQ(arch.depth(), 6u);
    EXPECT_EQ(arch.resolution(), 64u);
    EXPECT_THROW(generator_arch(48), ContractError);
    EXPECT_THROW(generator_arch(8), ContractError);
    EXPECT_THROW(generator_arch(512), ContractError);
}

TEST(Generator, ZeroInputGivesBoundedSameSizeOutput)
{
    for (std::size_t res : {16u, 64u}) {
        auto g = build_generator<float>(res, {8, 32}, 11);
        auto y = g.forward(zeros(2, 1, res));
        EXPECT_EQ(y.shape(), (Shape{2, 1, res, res}));
        for (float v : y.data()) {
            EXPECT_TRUE(std::isfinite(v));
            EXPECT_LT(std::abs(v), 1.0f);
        }
    }
}

TEST(Generator, BottleneckIsOnePixel)
{
    auto g = build_generator<float>(64, {4, 8}, 1);
    const auto named = g.named_tensors("g");
    std::size_t enc = 0;
    for (const auto& [name, t] : named)
        if (name.find(".weight") != std::string::npos && name.rfind("g.enc", 0) == 0) ++enc;
    EXPECT_EQ(enc, 6u);
}

TEST(Generator, SeedDeterminesInitialization)
{
    auto a = build_generator<float>(16, {4, 8}, 3).named_tensors("g");
    auto b = build_generator<float>(16, {4, 8}, 3).named_tensors("g");
    auto c = build_generator<float>(16, {4, 8}, 4).named_tensors("g");
    ASSERT_EQ(a.size(), b.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].first, b[i].first);
        EXPECT_TRUE(std::equal(a[i].second.data().begin(), a[i].second.data().end(), b[i].second.data().begin()));
        if (!std::equal(a[i].second.data().begin(), a[i].second.data().end(), c[i].second.data().begin()))
            any_diff = true;
    }
    EXPECT_TRUE(any_diff);
}

TEST(Generator, NamesAreUnique)
{
    auto g = build_generator<float>(32, {4, 16}, 1);
    std::set<std::string> names;
    for (const auto& [n, _] : g.named_tensors("g")) EXPECT_TRUE(names.insert(n).second) << n;
}

TEST(Generator, RebuildFromTensorsReproducesOutput)
{
    auto g = build_generator<float>(32, {4, 16}, 9);
    auto x = zeros(1, 1, 32);
    for (std::size_t i = 0; i < x.numel(); ++i) x.data()[i] = float(std::sin(double(i)));
    auto copy = GeneratorNet<float>::from_tensors(g.named_tensors("g"));
    EXPECT_EQ(copy.arch().encoder_channels, g.arch().encoder_channels);
    auto a = g.forward(x, NormMode::eval);
    auto b = copy.forward(x, NormMode::eval);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(Generator, LoadRejectsShapeMismatch)
{
    auto a = build_generator<float>(16, {4, 8}, 1);
    auto b = build_generator<float>(16, {8, 8}, 1);
    EXPECT_THROW(load_named_tensors(a.named_tensors("g"), b.named_tensors("g")), FormatError);
}

TEST(GradientCheck, GeneratorAt16)
{
    auto g = build_generator<double>(16, {2, 4}, 21);
    Rng rng(2);
    auto x = random_tensor({2, 1, 16, 16}, rng);
    std::vector<TensorD> inputs = g.parameters();
    inputs.push_back(x);
    // A small step keeps ReLU kinks out of the difference interval.
    auto r = check_gradients([&] { return project(g.forward(x), 77); }, inputs, 1e-7, 8);
    EXPECT_LT(r.relative_error, 1e-4) << r.analytic_norm << " vs " << r.numeric_norm;
}

TEST(GradientCheck, PatchSixDiscriminator)
{
    auto d = build_discriminator<double>({6, 1.0, true}, 2, 16, {4, 8}, 5);
    Rng rng(3);
    auto x = random_tensor({2, 1, 16, 16}, rng);
    auto y = random_tensor({2, 1, 16, 16}, rng);
    std::vector<TensorD> inputs = d.parameters();
    inputs.push_back(x);
    inputs.push_back(y);
    auto r = check_gradients([&] { return project(d.forward(x, y), 78); }, inputs, 1e-7, 0);
    EXPECT_LT(r.relative_error, 1e-4) << r.analytic_norm << " vs " << r.numeric_norm;
}
