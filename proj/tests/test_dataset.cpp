#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "s2s/dataset.hpp"
#include "s2s/error.hpp"
#include "s2s/image.hpp"
#include "s2s/volume.hpp"

using namespace s2s;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("s2s_test_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(Phantom, RegenerationIsBitIdentical)
{
    for (std::uint64_t i = 0; i < 5; ++i) {
        auto a = generate_phantom_pair(42, i, 64);
        auto b = generate_phantom_pair(42, i, 64);
        EXPECT_EQ(a.contour, b.contour);
        EXPECT_EQ(a.structure, b.structure);
    }
    EXPECT_NE(generate_phantom_pair(42, 0, 64).contour, generate_phantom_pair(42, 1, 64).contour);
}

TEST(Phantom, StructureStaysInsideBody)
{
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const auto p = generate_phantom_pair(9, i, 32);
        for (std::size_t k = 0; k < p.structure.size(); ++k)
            if (p.structure.pixels[k] > 0.0f) ASSERT_GT(p.contour.pixels[k], 0.0f) << "pair " << i << " pixel " << k;
    }
}

TEST(Phantom, FillFractionKeepsBodyInFrame)
{
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto p = generate_phantom_pair(3, i, 64);
        double filled = 0;
        for (float v : p.contour.pixels) {
            EXPECT_TRUE(v == 0.0f || v == 1.0f);
            filled += v;
        }
        const double frac = filled / double(p.contour.size());
        EXPECT_GE(frac, 0.2) << i;
        EXPECT_LE(frac, 0.7) << i;
    }
}

TEST(Phantom, ValueBands)
{
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto p = generate_phantom_pair(1, i, 64);
        bool bone = false, organ = false;
        for (float v : p.structure.pixels) {
            EXPECT_TRUE(v == 0.0f || v == kBoneValue || (v >= 0.4f && v <= 0.7f)) << v;
            bone |= v == kBoneValue;
            organ |= v >= 0.4f && v <= 0.7f;
        }
        EXPECT_TRUE(bone);
        EXPECT_TRUE(organ);
        // Values are exact PGM levels so a disk round trip is lossless.
        for (float v : p.structure.pixels) EXPECT_EQ(quantize_8bit(v), v);
    }
}

TEST(Phantom, RejectsUnsupportedResolution)
{
    EXPECT_THROW(generate_phantom_pair(0, 0, 48), ContractError);
    EXPECT_THROW(generate_phantom_pair(0, 0, 16), ContractError);
}

TEST(Split, PaperSizedCorpus)
{
    auto s = split_dataset(512, 0.2, 7);
    EXPECT_EQ(s.train.size(), 410u);
    EXPECT_EQ(s.test.size(), 102u);
    auto t = split_dataset(5, 0.2, 7);
    EXPECT_EQ(t.train.size(), 4u);
    EXPECT_EQ(t.test.size(), 1u);
    EXPECT_THROW(split_dataset(4, 0.2, 7), ContractError);
}

TEST(Split, DisjointExhaustiveDeterministic)
{
    for (std::size_t count : {5u, 17u, 100u, 512u})
        for (std::uint64_t seed : {0u, 1u, 99u}) {
            auto s = split_dataset(count, 0.2, seed);
            std::vector<std::size_t> all = s.train;
            all.insert(all.end(), s.test.begin(), s.test.end());
            std::sort(all.begin(), all.end());
            ASSERT_EQ(all.size(), count);
            for (std::size_t i = 0; i < count; ++i) EXPECT_EQ(all[i], i);
            auto again = split_dataset(count, 0.2, seed);
            EXPECT_EQ(again.train, s.train);
            EXPECT_EQ(again.test, s.test);
        }
}

TEST(Loader, BatchSizesAndCoverage)
{
    auto data = PairDataset::generate(12, 5, 32);
    std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    BatchLoader loader(data, idx, 4, 123);
    std::vector<std::size_t> sizes, seen;
    while (auto b = loader.next()) {
        sizes.push_back(b->indices.size());
        EXPECT_EQ(b->contours.shape(), (Shape{b->indices.size(), 1, 32, 32}));
        for (float v : b->contours.data()) EXPECT_TRUE(v == -1.0f || v == 1.0f);
        for (float v : b->structures.data()) EXPECT_TRUE(v >= -1.0f && v <= 1.0f);
        seen.insert(seen.end(), b->indices.begin(), b->indices.end());
    }
    EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 4, 2}));
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(seen, idx);
}

TEST(Loader, EpochSeedChangesOrderOnly)
{
    auto data = PairDataset::generate(20, 5, 32);
    std::vector<std::size_t> idx(20);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    BatchLoader a(data, idx, 3, 1), b(data, idx, 3, 2), c(data, idx, 3, 1);
    EXPECT_NE(a.order(), b.order());
    EXPECT_EQ(a.order(), c.order());
    auto sa = a.order(), sb = b.order();
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    EXPECT_EQ(sa, sb);
}

TEST(DatasetFiles, SaveLoadRoundTrip)
{
    const auto dir = scratch_dir("dataset");
    auto data = PairDataset::generate(6, 11, 32);
    data.save(dir);
    EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
    EXPECT_TRUE(fs::exists(dir / "000003_y.pgm"));
    EXPECT_TRUE(fs::exists(dir / "000003_x.pgm"));
    auto back = PairDataset::load(dir);
    ASSERT_EQ(back.size(), data.size());
    EXPECT_EQ(back.manifest().seed, 11u);
    EXPECT_EQ(back.resolution(), 32u);
    for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_EQ(back[i].contour, data[i].contour);
        EXPECT_EQ(back[i].structure, data[i].structure);
    }
    fs::remove_all(dir);
}

TEST(DatasetFiles, MissingPairIsReported)
{
    const auto dir = scratch_dir("dataset_missing");
    PairDataset::generate(5, 1, 32).save(dir);
    fs::remove(dir / "000002_x.pgm");
    EXPECT_THROW(PairDataset::load(dir), Error);
    fs::remove_all(dir);
}

TEST(Pgm, RoundTripAndQuantization)
{
    Image img(5, 3);
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = float(i) / 14.0f;
    auto back = decode_pgm(encode_pgm(img));
    ASSERT_EQ(back.width, 5u);
    ASSERT_EQ(back.height, 3u);
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_NEAR(back.pixels[i], img.pixels[i], 0.5 / 255 + 1e-7);
        EXPECT_EQ(back.pixels[i], quantize_8bit(img.pixels[i]));
    }
    EXPECT_EQ(decode_pgm(encode_pgm(back)), back);
}

TEST(Pgm, RejectsMalformed)
{
    const std::string bad_magic = "P2\n2 2\n255\n1 2 3 4";
    EXPECT_THROW(decode_pgm(std::vector<std::uint8_t>(bad_magic.begin(), bad_magic.end())), Error);
    std::string short_payload = "P5\n4 4\n255\n";
    short_payload += std::string(10, '\x7f');
    EXPECT_THROW(decode_pgm(std::vector<std::uint8_t>(short_payload.begin(), short_payload.end())), Error);
}

TEST(Volume, AssembleKeepsPlaneOrder)
{
    std::vector<Image> slices;
    for (int k = 0; k < 4; ++k) slices.emplace_back(3, 2, float(k) / 4.0f);
    VolumeLayout layout{{1, 2, 3}, {0.5, 0.5, 0.25}};
    auto vol = assemble_volume(slices, layout);
    EXPECT_EQ(vol.nz, 4u);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(vol.plane(std::size_t(k)), slices[std::size_t(k)]);
    EXPECT_EQ(vol.origin, layout.origin);
    EXPECT_EQ(vol.spacing, layout.spacing);
}

TEST(Volume, MismatchedSliceIsNamed)
{
    std::vector<Image> slices{Image(4, 4), Image(4, 4), Image(4, 5)};
    try {
        assemble_volume(slices, {});
        FAIL();
    } catch (const DimensionError& e) {
        EXPECT_NE(std::string(e.what()).find("slice 2"), std::string::npos) << e.what();
    }
}

TEST(Volume, GeneratorRangeMapsToUnit)
{
    Image s(2, 1);
    s.pixels = {-1.0f, 1.0f};
    auto vol = assemble_generator_volume({s}, {});
    EXPECT_EQ(vol.values[0], 0.0f);
    EXPECT_EQ(vol.values[1], 1.0f);
}

TEST(Volume, EncodeDecodeIsBitExact)
{
    VolumeGrid v(3, 4, 5);
    for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = float(i) * 0.013f;
    v.origin = {-0.1, 1.0 / 3.0, 2.5};
    v.spacing = {0.1, 0.2, 1.0 / 7.0};
    auto bytes = encode_volume(v);
    EXPECT_EQ(decode_volume(bytes), v);
    bytes.pop_back();
    EXPECT_THROW(decode_volume(bytes), FormatError);
}
