#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "s2s/error.hpp"
#include "s2s/geometry.hpp"
#include "s2s/random.hpp"

using namespace s2s;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

const char* kCubeObj = R"(# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
)";

double filled_fraction(const Image& img)
{
    double s = 0;
    for (float v : img.pixels) s += v;
    return s / double(img.size());
}

Polyline square(double lo, double hi)
{
    return {{{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}}, true};
}

Polyline circle(double cx, double cy, double r, int n)
{
    Polyline p;
    for (int k = 0; k < n; ++k) {
        const double t = 2 * std::numbers::pi * k / n;
        p.points.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
    }
    return p;
}

double polygon_area(const Polyline& p)
{
    double a = 0;
    for (std::size_t i = 0; i < p.points.size(); ++i) {
        const auto& u = p.points[i];
        const auto& v = p.points[(i + 1) % p.points.size()];
        a += u[0] * v[1] - v[0] * u[1];
    }
    return std::abs(a) / 2;
}

VolumeGrid sphere_field(std::size_t n, double radius)
{
    VolumeGrid v(n, n, n);
    const double c = 0.5 * double(n - 1);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                const double d = std::sqrt((x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c));
                v.at(x, y, z) = float(std::clamp(0.5 + 0.5 * (radius - d), 0.0, 1.0));
            }
    return v;
}

} // namespace

TEST(MeshParse, ObjTriangle)
{
    auto m = parse_mesh(bytes_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"));
    EXPECT_EQ(m.vertices.size(), 3u);
    ASSERT_EQ(m.triangles.size(), 1u);
    EXPECT_NEAR(surface_area(m), 0.5, 1e-15);
}

TEST(MeshParse, ObjQuadsAreFanned)
{
    auto m = parse_mesh(bytes_of(kCubeObj), MeshFormat::obj);
    EXPECT_EQ(m.triangles.size(), 12u);
    EXPECT_NEAR(signed_volume(m), 1.0, 1e-12);
    EXPECT_TRUE(edge_report(m).watertight());
}

TEST(MeshParse, BinaryStlCubeWeldsToEightVertices)
{
    auto stl = export_mesh(make_box({0, 0, 0}, {1, 1, 1}), MeshFormat::stl_binary);
    EXPECT_EQ(stl.size(), 84u + 50u * 12u);
    auto m = parse_mesh(stl);
    EXPECT_EQ(m.triangles.size(), 12u);
    EXPECT_EQ(m.vertices.size(), 8u);
    EXPECT_EQ(edge_report(m).misoriented_edges, 0u);
}

TEST(MeshParse, AsciiStl)
{
    const std::string text = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\n"
                             "vertex 0 1 0\nendloop\nendfacet\nendsolid t\n";
    auto m = parse_mesh(bytes_of(text));
    EXPECT_EQ(m.triangles.size(), 1u);
}

TEST(MeshParse, EmptyInputIsParseError)
{
    EXPECT_THROW(parse_mesh(bytes_of("")), ParseError);
    EXPECT_THROW(parse_mesh(bytes_of("  \n\n")), ParseError);
}

TEST(MeshParse, GarbageIsFormatError)
{
    EXPECT_THROW(parse_mesh(bytes_of("\x01\x02 hello there, not a mesh\n")), FormatError);
}

TEST(MeshParse, BadFaceIndexReportsLine)
{
    try {
        parse_mesh(bytes_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.location(), 4);
    }
}

TEST(MeshParse, TruncatedBinaryStl)
{
    auto stl = export_mesh(make_box({0, 0, 0}, {1, 1, 1}), MeshFormat::stl_binary);
    stl.resize(stl.size() - 10);
    EXPECT_THROW(parse_mesh(stl, MeshFormat::stl_binary), ParseError);
}

TEST(MeshExport, StlLengths)
{
    MeshSurface tri{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};
    EXPECT_EQ(export_mesh(tri, MeshFormat::stl_binary).size(), 134u);
    EXPECT_EQ(export_mesh(MeshSurface{}, MeshFormat::stl_binary).size(), 84u);
}

TEST(MeshExport, ObjRoundTripIsExact)
{
    auto s = make_icosphere(0.7, 2, {0.1, -0.2, 0.3});
    auto back = parse_mesh(export_mesh(s, MeshFormat::obj), MeshFormat::obj);
    EXPECT_EQ(back.vertices, s.vertices);
    EXPECT_EQ(back.triangles, s.triangles);
}

TEST(MeshExport, StlRoundTripWithinFloatPrecision)
{
    auto s = make_icosphere(1.0, 2);
    auto back = parse_mesh(export_mesh(s, MeshFormat::stl_binary));
    EXPECT_EQ(back.triangles.size(), s.triangles.size());
    EXPECT_LT(hausdorff_distance(s, back), 1e-6);
}

TEST(MeshTransform, UnitCubeRoundTrip)
{
    auto s = make_box({-3, 2, 5}, {1, 4, 6});
    UnitCubeTransform t;
    auto n = normalize_to_unit_cube(s, &t);
    const auto box = bounding_box(n);
    EXPECT_NEAR(box.max_extent(), 1.0, 1e-12);
    for (int k = 0; k < 3; ++k) {
        EXPECT_GE(box.lo[k], -1e-12);
        EXPECT_LE(box.hi[k], 1 + 1e-12);
        EXPECT_NEAR(box.lo[k] + box.hi[k], 1.0, 1e-12);
    }
    auto back = apply_transform(n, t);
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(back.vertices[i][k], s.vertices[i][k], 1e-12);
}

TEST(Slicing, CubePerimeterIsFour)
{
    auto cube = make_box({0, 0, 0}, {1, 1, 1});
    for (Axis a : {Axis::x, Axis::y, Axis::z}) {
        auto c = slice_at(cube, a, 0.5);
        ASSERT_EQ(c.polylines.size(), 1u);
        EXPECT_TRUE(c.polylines[0].closed);
        EXPECT_NEAR(c.polylines[0].length(), 4.0, 1e-9);
        EXPECT_TRUE(c.warnings.empty());
    }
}

TEST(Slicing, PlaneOnAFaceIsNudgedOff)
{
    auto cube = make_box({0, 0, 0}, {1, 1, 1});
    EXPECT_TRUE(slice_at(cube, Axis::z, 0.0).empty());
    EXPECT_TRUE(slice_at(cube, Axis::z, 1.0 - 1e-12).polylines.size() == 1u);
}

TEST(Slicing, PlaneThroughVerticesStillCloses)
{
    auto tilted = make_icosphere(1.0, 1);
    std::size_t on_plane = 0;
    for (const auto& v : tilted.vertices) on_plane += v[2] == 0.0;
    ASSERT_GT(on_plane, 0u);
    auto e = slice_at(tilted, Axis::z, 0.0);
    ASSERT_EQ(e.polylines.size(), 1u);
    EXPECT_TRUE(e.polylines[0].closed);
    EXPECT_TRUE(e.warnings.empty());
}

TEST(Slicing, PlaneOutsideIsEmpty)
{
    auto cube = make_box({0, 0, 0}, {1, 1, 1});
    EXPECT_TRUE(slice_at(cube, Axis::z, 1.5).empty());
    EXPECT_TRUE(slice_at(cube, Axis::y, -0.1).empty());
}

TEST(Slicing, SphereEquatorLength)
{
    auto s = make_icosphere(1.0, 3);
    auto c = slice_at(s, Axis::z, 0.0);
    ASSERT_EQ(c.polylines.size(), 1u);
    EXPECT_NEAR(c.polylines[0].length(), 2 * std::numbers::pi, 0.01 * 2 * std::numbers::pi);
}

TEST(Slicing, DisjointBoxesGiveTwoLoops)
{
    auto a = make_box({0, 0, 0}, {1, 1, 1});
    auto b = make_box({2, 0, 0}, {3, 1, 1});
    MeshSurface both = a;
    for (auto t : b.triangles) both.triangles.push_back({t[0] + 8, t[1] + 8, t[2] + 8});
    both.vertices.insert(both.vertices.end(), b.vertices.begin(), b.vertices.end());
    EXPECT_EQ(slice_at(both, Axis::z, 0.5).polylines.size(), 2u);
}

TEST(Slicing, OpenMeshWarns)
{
    auto cube = make_box({0, 0, 0}, {1, 1, 1});
    cube.triangles.pop_back();
    cube.triangles.pop_back();
    bool warned = false;
    for (auto& c : slice_mesh(cube, Axis::z, 8)) warned = warned || !c.warnings.empty();
    EXPECT_TRUE(warned);
}

TEST(Slicing, PositionsAreVoxelCentres)
{
    auto cube = make_box({0, 0, 2}, {1, 1, 6});
    auto p = slice_positions(cube, Axis::z, 4);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_DOUBLE_EQ(p[0], 2.5);
    EXPECT_DOUBLE_EQ(p[3], 5.5);
}

TEST(Raster, HalfSquareFraction)
{
    ContourSet c;
    c.polylines.push_back(square(0.5 - std::sqrt(0.125), 0.5 + std::sqrt(0.125)));
    auto img = rasterize_contours(c, {0, 0, 1}, 64);
    EXPECT_NEAR(filled_fraction(img), 0.5, 0.02);
}

TEST(Raster, NestedSquareMakesHole)
{
    ContourSet c;
    c.polylines.push_back(square(0.1, 0.9));
    c.polylines.push_back(square(0.3, 0.7));
    auto img = rasterize_contours(c, {0, 0, 1}, 100);
    EXPECT_EQ(img.at(50, 50), 0.0f);
    EXPECT_EQ(img.at(20, 50), 1.0f);
    EXPECT_NEAR(filled_fraction(img), 0.64 - 0.16, 1e-9);
}

TEST(Raster, EmptyContoursGiveZeroImage)
{
    auto img = rasterize_contours(ContourSet{}, {0, 0, 1}, 32);
    EXPECT_EQ(img.size(), 32u * 32u);
    EXPECT_EQ(filled_fraction(img), 0.0);
}

TEST(Raster, OpenChainsAddNoArea)
{
    ContourSet c;
    auto p = square(0.1, 0.9);
    p.closed = false;
    c.polylines.push_back(p);
    EXPECT_EQ(filled_fraction(rasterize_contours(c, {0, 0, 1}, 32)), 0.0);
    EXPECT_GT(filled_fraction(rasterize_contours(c, {0, 0, 1}, 32, RasterMode::outline)), 0.0);
}

TEST(Raster, OutlineTracesBoundary)
{
    ContourSet c;
    c.polylines.push_back(square(0.25, 0.75));
    auto img = rasterize_contours(c, {0, 0, 1}, 64, RasterMode::outline);
    EXPECT_EQ(img.at(16, 40), 1.0f);
    EXPECT_EQ(img.at(32, 32), 0.0f);
}

TEST(Raster, SilhouetteAreaConvergesWithResolution)
{
    ContourSet c;
    c.polylines.push_back(circle(0.5, 0.5, 0.37, 720));
    const double exact = polygon_area(c.polylines[0]);
    double prev = 1.0;
    for (std::size_t res : {64u, 256u, 1024u}) {
        const double err = std::abs(filled_fraction(rasterize_contours(c, {0, 0, 1}, res)) - exact);
        EXPECT_LT(err, prev) << res;
        prev = err;
    }
}

TEST(Raster, RejectsTinyResolution) { EXPECT_THROW(rasterize_contours({}, {0, 0, 1}, 4), ContractError); }

TEST(Frame, SquareAndCentered)
{
    auto box = make_box({0, 0, 0}, {2, 1, 3});
    auto f = shared_frame(box, Axis::z);
    EXPECT_DOUBLE_EQ(f.size, 2.0);
    EXPECT_DOUBLE_EQ(f.u0, 0.0);
    EXPECT_DOUBLE_EQ(f.v0, -0.5);
    auto layout = slice_volume_layout(box, Axis::z, 8, 6);
    EXPECT_DOUBLE_EQ(layout.spacing[0], 0.25);
    EXPECT_DOUBLE_EQ(layout.spacing[2], 0.5);
    EXPECT_DOUBLE_EQ(layout.origin[2], 0.25);
}

TEST(Frame, AxisPermutationRoundTrip)
{
    const Vec3d p{1, 2, 3};
    EXPECT_EQ(to_slice_frame(p, Axis::x), (Vec3d{2, 3, 1}));
    EXPECT_EQ(to_slice_frame(p, Axis::y), (Vec3d{3, 1, 2}));
    for (Axis a : {Axis::x, Axis::y, Axis::z}) EXPECT_EQ(from_slice_frame(to_slice_frame(p, a), a), p);
    EXPECT_THROW(parse_axis("w"), ConfigError);
}

TEST(MarchingCubes, EmptyVolumeGivesEmptyMesh)
{
    EXPECT_TRUE(marching_cubes(VolumeGrid(8, 8, 8), 0.5).empty());
}

TEST(MarchingCubes, SingleVoxelIsClosedSphereTopology)
{
    VolumeGrid v(3, 3, 3);
    v.at(1, 1, 1) = 1.0f;
    auto m = marching_cubes(v, 0.5);
    EXPECT_TRUE(edge_report(m).watertight());
    EXPECT_EQ(euler_characteristic(m), 2);
    EXPECT_GT(signed_volume(m), 0.0);
}

TEST(MarchingCubes, BorderTouchingRegionIsClosed)
{
    VolumeGrid v(4, 4, 4, 1.0f);
    auto m = marching_cubes(v, 0.5);
    EXPECT_TRUE(edge_report(m).watertight());
    EXPECT_EQ(euler_characteristic(m), 2);
}

TEST(MarchingCubes, SphereAreaWithinFivePercent)
{
    auto m = marching_cubes(sphere_field(64, 20.0), 0.5);
    const double expected = 4 * std::numbers::pi * 400.0;
    EXPECT_NEAR(surface_area(m), expected, 0.05 * expected);
    EXPECT_GT(signed_volume(m), 0.0);
}

TEST(MarchingCubes, RandomVolumesAreWatertightAndOriented)
{
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        VolumeGrid v(9, 7, 8);
        for (auto& x : v.values) x = float(rng.uniform(0, 1));
        auto m = marching_cubes(v, 0.5);
        auto r = edge_report(m);
        EXPECT_TRUE(r.watertight()) << trial;
        EXPECT_EQ(r.misoriented_edges, 0u) << trial;
        m.validate();
    }
}

TEST(MarchingCubes, ExactIsoValuesDoNotBreakTopology)
{
    VolumeGrid v(5, 5, 5, 0.5f);
    v.at(2, 2, 2) = 1.0f;
    auto m = marching_cubes(v, 0.5);
    EXPECT_TRUE(edge_report(m).watertight());
}

TEST(MarchingCubes, UsesVolumePlacement)
{
    VolumeGrid v(3, 3, 3);
    v.at(1, 1, 1) = 1.0f;
    v.origin = {10, 20, 30};
    v.spacing = {2, 2, 2};
    const auto box = bounding_box(marching_cubes(v, 0.5));
    EXPECT_NEAR(box.lo[0], 11.0, 1e-12);
    EXPECT_NEAR(box.hi[2], 33.0, 1e-12);
}

TEST(MarchingCubes, RejectsBadIsovalue)
{
    EXPECT_THROW(marching_cubes(VolumeGrid(4, 4, 4), 0.0), ContractError);
    EXPECT_THROW(marching_cubes(VolumeGrid(4, 4, 4), 1.0), ContractError);
}

TEST(RoundTrip, SphereThroughSilhouettes)
{
    auto s = make_icosphere(1.0, 3);
    const std::size_t res = 32;
    auto frame = shared_frame(s, Axis::z);
    std::vector<Image> slices;
    for (const auto& c : slice_mesh(s, Axis::z, res)) slices.push_back(rasterize_contours(c, frame, res));
    auto m = marching_cubes(assemble_volume(slices, slice_volume_layout(s, Axis::z, res, res)), 0.5);
    EXPECT_TRUE(edge_report(m).watertight());
    const double diag = std::sqrt(3.0) * 2.0 / double(res);
    EXPECT_LE(hausdorff_distance(s, m), 2 * diag);
}
