#pragma once

// Mesh -> contour slices -> images, and volume -> isosurface mesh.

#include <array>
#include <string>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/mesh.hpp"
#include "s2s/volume.hpp"

namespace s2s {

enum class Axis { x, y, z };

Axis parse_axis(const std::string& name);

// In-plane coordinates (u, v) and the slicing coordinate w, chosen as a
// cyclic permutation of (x, y, z) so handedness is preserved:
// z -> (x, y, z), x -> (y, z, x), y -> (z, x, y).
std::array<std::size_t, 3> axis_frame(Axis axis);
Vec3d to_slice_frame(const Vec3d& p, Axis axis);
Vec3d from_slice_frame(const Vec3d& uvw, Axis axis);

using Vec2d = std::array<double, 2>;

struct Polyline {
    std::vector<Vec2d> points; // closure is implicit: last connects to first
    bool closed = true;

    double length() const;
};

struct ContourSet {
    double plane = 0;
    std::vector<Polyline> polylines;
    std::vector<std::string> warnings; // open chains and the like

    bool empty() const { return polylines.empty(); }
};

// Intersection of the mesh with the plane w = coordinate. Vertices lying
// exactly on the plane are moved by +1e-9 times the bounding-box extent
// along the axis first. Crossing points are matched by mesh edge, so welded
// meshes chain exactly.
ContourSet slice_at(const MeshSurface& mesh, Axis axis, double coordinate);

// Voxel-center planes across the bounding box: lo + (k + 0.5) * extent / n.
std::vector<double> slice_positions(const MeshSurface& mesh, Axis axis, std::size_t n_slices);
std::vector<ContourSet> slice_mesh(const MeshSurface& mesh, Axis axis, std::size_t n_slices);

// Square in-plane frame shared by every slice of a volume.
struct SliceFrame {
    double u0 = 0, v0 = 0, size = 1;
};

// Largest (u, v) bounding square of the mesh, centered on its box.
SliceFrame shared_frame(const MeshSurface& mesh, Axis axis);

enum class RasterMode { silhouette, outline };

RasterMode parse_raster_mode(const std::string& name);

// Silhouette: even-odd fill sampled at pixel centers (open chains add no
// area). Outline: pixels that a contour segment passes through.
// Pixel (i, j) is centered at (u0 + (i + 0.5) s, v0 + (j + 0.5) s), s = size / resolution.
Image rasterize_contours(const ContourSet& contours, const SliceFrame& frame, std::size_t resolution,
                         RasterMode mode = RasterMode::silhouette);

// Volume placement of a stack made by slice_mesh + rasterize_contours,
// in slice-frame coordinates (u, v, w).
VolumeLayout slice_volume_layout(const MeshSurface& mesh, Axis axis, std::size_t resolution, std::size_t n_slices);

// Isosurface at `isovalue` in (0,1) using the standard 256-case table.
// Samples outside the grid count as 0, so surfaces touching the border are
// closed. Samples exactly at the isovalue are raised by 1e-7. Triangles face
// away from the region above the isovalue; vertices are placed with the
// volume's origin and spacing.
MeshSurface marching_cubes(const VolumeGrid& volume, double isovalue);

} // namespace s2s
