#include <gtest/gtest.h>

#include "s2s/error.hpp"
#include "s2s/pipeline.hpp"

using namespace s2s;

TEST(Pipeline, ContourImagesIgnoreModelUnits)
{
    const auto unit = make_icosphere(1.0, 2);
    auto scaled = unit;
    for (auto& v : scaled.vertices) v = {v[0] * 37.0 + 5.0, v[1] * 37.0 - 2.0, v[2] * 37.0 + 100.0};
    PipelineOptions opt;
    opt.resolution = 32;
    const auto a = contour_stack(unit, opt), b = contour_stack(scaled, opt);
    ASSERT_EQ(a.images.size(), b.images.size());
    for (std::size_t k = 0; k < a.images.size(); ++k) EXPECT_EQ(a.images[k], b.images[k]) << k;
    EXPECT_NEAR(b.layout.spacing[0], 37.0 * a.layout.spacing[0], 1e-9);
}

TEST(Pipeline, SilhouetteVolumeMapsBackToModelAxes)
{
    const Vec3d lo{10, 0, 5}, hi{14, 2, 6};
    const auto box = make_box(lo, hi);
    for (Axis axis : {Axis::x, Axis::y, Axis::z}) {
        PipelineOptions opt;
        opt.axis = axis;
        opt.resolution = 32;
        const auto stack = contour_stack(box, opt);
        const auto region = extract_region(assemble_volume(stack.images, stack.layout), 0.5, axis);
        EXPECT_TRUE(edge_report(region.mesh).watertight());
        EXPECT_GT(signed_volume(region.mesh), 0.0);
        const auto b = bounding_box(region.mesh);
        for (int k = 0; k < 3; ++k) {
            const double tol = 0.1 * (hi[k] - lo[k]) + 0.15;
            EXPECT_NEAR(b.lo[k], lo[k], tol) << "axis " << int(axis) << " dim " << k;
            EXPECT_NEAR(b.hi[k], hi[k], tol) << "axis " << int(axis) << " dim " << k;
        }
    }
}

TEST(Pipeline, CountsVoxelsAboveThreshold)
{
    VolumeGrid v(4, 4, 4);
    v.at(1, 1, 1) = 0.9f;
    v.at(2, 1, 1) = 0.6f;
    v.at(2, 2, 1) = 0.5f;
    EXPECT_EQ(extract_region(v, 0.5, Axis::z).voxels_above, 2u);
    EXPECT_EQ(extract_region(v, 0.7, Axis::z).voxels_above, 1u);
}

TEST(Pipeline, EstimateReportsProgressAndShape)
{
    auto g = build_generator<float>(16, {4, 8}, 2);
    PipelineOptions opt;
    opt.resolution = 16;
    opt.batch_size = 5;
    std::vector<std::size_t> seen;
    const auto result =
        estimate_volume(make_icosphere(1.0, 2), g, opt, [&](std::size_t done, std::size_t total) {
            EXPECT_EQ(total, 16u);
            seen.push_back(done);
        });
    EXPECT_EQ(seen, (std::vector<std::size_t>{5, 10, 15, 16}));
    EXPECT_EQ(result.volume.nx, 16u);
    EXPECT_EQ(result.volume.nz, 16u);
    for (float v : result.volume.values) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Pipeline, SliceCountOverride)
{
    auto g = build_generator<float>(16, {4, 8}, 2);
    PipelineOptions opt;
    opt.resolution = 16;
    opt.slices = 7;
    EXPECT_EQ(estimate_volume(make_box({0, 0, 0}, {1, 1, 1}), g, opt).volume.nz, 7u);
}

TEST(Pipeline, RejectsResolutionMismatch)
{
    auto g = build_generator<float>(16, {4, 8}, 2);
    PipelineOptions opt;
    opt.resolution = 32;
    EXPECT_THROW(estimate_volume(make_icosphere(1.0, 1), g, opt), ConfigError);
    EXPECT_THROW(contour_stack(MeshSurface{}, opt), ContractError);
}
