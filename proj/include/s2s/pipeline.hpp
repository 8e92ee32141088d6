#pragma once

// Mesh -> contour stack -> generator -> volume, and volume -> model-space mesh.

#include <functional>
#include <string>
#include <vector>

#include "s2s/geometry.hpp"
#include "s2s/networks.hpp"

namespace s2s {

struct PipelineOptions {
    Axis axis = Axis::z;
    std::size_t resolution = 64;
    std::size_t slices = 0; // 0 means one slice per pixel row
    RasterMode mode = RasterMode::silhouette;
    std::size_t batch_size = 16;

    std::size_t slice_count() const { return slices ? slices : resolution; }
};

struct ContourStack {
    std::vector<Image> images; // [0,1] silhouettes, one per slice
    VolumeLayout layout;       // slice frame (u, v, w), model units
    std::vector<std::string> warnings;
};

// Slices and rasterizes `mesh`. The mesh is first scaled into the unit cube
// so the contour images do not depend on model units; the returned layout
// maps voxels back to the original coordinates (in slice-frame order).
ContourStack contour_stack(const MeshSurface& mesh, const PipelineOptions& options);

// (slices done, total)
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

struct EstimatedVolume {
    VolumeGrid volume; // [0,1], planes along the slicing axis
    std::vector<std::string> warnings;
};

// Runs the generator over every slice in eval mode and stacks the outputs.
EstimatedVolume estimate_volume(const MeshSurface& mesh, GeneratorNet<float>& generator,
                                const PipelineOptions& options, const ProgressFn& progress = {});

struct ExtractedRegion {
    MeshSurface mesh;          // model coordinates
    std::size_t voxels_above = 0;
};

// Marching cubes at `threshold`, then slice-frame -> model axes.
ExtractedRegion extract_region(const VolumeGrid& volume, double threshold, Axis axis);

} // namespace s2s
