#pragma once

// Triangle meshes: parsing (OBJ, ASCII/binary STL), export (OBJ, binary
// STL), unit-cube normalization and a few measurements used in tests.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2s/volume.hpp"

namespace s2s {

using Triangle = std::array<std::uint32_t, 3>;

struct MeshSurface {
    std::vector<Vec3d> vertices;
    std::vector<Triangle> triangles;

    bool empty() const { return triangles.empty(); }

    // Throws ContractError on an out-of-range index or a triangle that
    // repeats a vertex.
    void validate() const;
};

enum class MeshFormat { obj, stl_ascii, stl_binary, automatic };

// "obj", "stl", "stl_binary", "stl_ascii", "auto".
MeshFormat parse_mesh_format(const std::string& name);
const char* mesh_format_name(MeshFormat format);

inline constexpr double kWeldTolerance = 1e-6;

// Vertices closer than kWeldTolerance are merged and triangles that
// collapse are dropped. Polygonal OBJ faces are fan-triangulated.
// Empty input or input without triangles throws ParseError("no geometry");
// content that no reader recognizes under `automatic` throws FormatError.
MeshSurface parse_mesh(std::span<const std::uint8_t> bytes, MeshFormat format = MeshFormat::automatic);

// obj or stl_binary. Binary STL is exactly 84 + 50 * triangle_count bytes.
std::vector<std::uint8_t> export_mesh(const MeshSurface& mesh, MeshFormat format);

// Merges vertices within `tolerance`, remaps triangles, drops degenerate ones.
MeshSurface weld_vertices(const MeshSurface& mesh, double tolerance = kWeldTolerance);

struct BoundingBox {
    Vec3d lo{0, 0, 0};
    Vec3d hi{0, 0, 0};

    Vec3d extent() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
    double max_extent() const;
};

BoundingBox bounding_box(const MeshSurface& mesh);

// model = normalized * scale + offset
struct UnitCubeTransform {
    Vec3d offset{0, 0, 0};
    double scale = 1.0;

    Vec3d to_model(const Vec3d& p) const;
    Vec3d to_unit(const Vec3d& p) const;
};

// Uniform scale and translation so the bounding box fits [0,1]^3, centered.
MeshSurface normalize_to_unit_cube(const MeshSurface& mesh, UnitCubeTransform* transform = nullptr);
MeshSurface apply_transform(const MeshSurface& mesh, const UnitCubeTransform& transform);

// Subdivided icosahedron projected onto the sphere.
MeshSurface make_icosphere(double radius, int subdivisions, const Vec3d& center = {0, 0, 0});
// Axis-aligned box, 8 vertices and 12 outward-facing triangles.
MeshSurface make_box(const Vec3d& lo, const Vec3d& hi);

double surface_area(const MeshSurface& mesh);
// Positive for a closed mesh with outward-facing triangles.
double signed_volume(const MeshSurface& mesh);

struct EdgeReport {
    std::size_t edges = 0;
    std::size_t boundary_edges = 0;    // used by one triangle
    std::size_t nonmanifold_edges = 0; // used by three or more
    std::size_t misoriented_edges = 0; // two uses in the same direction

    bool watertight() const { return edges > 0 && boundary_edges == 0 && nonmanifold_edges == 0; }
};

EdgeReport edge_report(const MeshSurface& mesh);
long euler_characteristic(const MeshSurface& mesh);

double point_triangle_distance(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c);

// Symmetric Hausdorff distance estimated from vertices, edge midpoints and
// face centroids of each mesh against the other's triangles.
double hausdorff_distance(const MeshSurface& a, const MeshSurface& b);

} // namespace s2s
