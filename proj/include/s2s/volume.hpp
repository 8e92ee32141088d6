#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "s2s/image.hpp"

namespace s2s {

using Vec3d = std::array<double, 3>;

// Scalar grid in [0,1]; x fastest, then y, then z (one plane per slice).
// origin is the model-space position of sample (0,0,0).
struct VolumeGrid {
    std::size_t nx = 0, ny = 0, nz = 0;
    Vec3d origin{0, 0, 0};
    Vec3d spacing{1, 1, 1};
    std::vector<float> values;

    VolumeGrid() = default;
    VolumeGrid(std::size_t x, std::size_t y, std::size_t z, float fill = 0.0f)
        : nx(x), ny(y), nz(z), values(x * y * z, fill) {}

    float& at(std::size_t x, std::size_t y, std::size_t z) { return values[(z * ny + y) * nx + x]; }
    float at(std::size_t x, std::size_t y, std::size_t z) const { return values[(z * ny + y) * nx + x]; }

    Image plane(std::size_t z) const;

    friend bool operator==(const VolumeGrid&, const VolumeGrid&) = default;
};

struct VolumeLayout {
    Vec3d origin{0, 0, 0};
    Vec3d spacing{1, 1, 1};
};

// Stack equally sized slices as z-planes. Throws DimensionError naming the
// first slice whose size differs from slice 0.
VolumeGrid assemble_volume(const std::vector<Image>& slices, const VolumeLayout& layout);

// Maps generator outputs in (-1,1) to [0,1] before stacking.
VolumeGrid assemble_generator_volume(const std::vector<Image>& network_range_slices, const VolumeLayout& layout);

// Sidecar format: text header line
//   S2SVOL v1 nx ny nz ox oy oz sx sy sz
// followed by nx*ny*nz little-endian f32 values.
std::vector<std::uint8_t> encode_volume(const VolumeGrid& volume);
VolumeGrid decode_volume(const std::vector<std::uint8_t>& bytes);
void write_volume(const std::filesystem::path& path, const VolumeGrid& volume);
VolumeGrid read_volume(const std::filesystem::path& path);

} // namespace s2s
