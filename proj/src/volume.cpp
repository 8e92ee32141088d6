#include "s2s/volume.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "s2s/checkpoint.hpp"
#include "s2s/error.hpp"

namespace s2s {

Image VolumeGrid::plane(std::size_t z) const
{
    if (z >= nz) throw DimensionError("plane " + std::to_string(z) + " out of range [0, " + std::to_string(nz) + ")");
    Image img(nx, ny);
    std::copy_n(values.begin() + long(z * nx * ny), nx * ny, img.pixels.begin());
    return img;
}

VolumeGrid assemble_volume(const std::vector<Image>& slices, const VolumeLayout& layout)
{
    if (slices.empty()) throw DimensionError("assemble_volume: no slices");
    const std::size_t w = slices[0].width, h = slices[0].height;
    for (std::size_t k = 1; k < slices.size(); ++k)
        if (slices[k].width != w || slices[k].height != h)
            throw DimensionError("assemble_volume: slice " + std::to_string(k) + " is " +
                                 std::to_string(slices[k].width) + "x" + std::to_string(slices[k].height) +
                                 ", expected " + std::to_string(w) + "x" + std::to_string(h));
    VolumeGrid vol(w, h, slices.size());
    vol.origin = layout.origin;
    vol.spacing = layout.spacing;
    for (std::size_t k = 0; k < slices.size(); ++k)
        std::copy(slices[k].pixels.begin(), slices[k].pixels.end(), vol.values.begin() + long(k * w * h));
    return vol;
}

VolumeGrid assemble_generator_volume(const std::vector<Image>& network_range_slices, const VolumeLayout& layout)
{
    VolumeGrid vol = assemble_volume(network_range_slices, layout);
    for (auto& v : vol.values) v = std::clamp(0.5f * (v + 1.0f), 0.0f, 1.0f);
    return vol;
}

std::vector<std::uint8_t> encode_volume(const VolumeGrid& volume)
{
    char header[512];
    std::snprintf(header, sizeof header, "S2SVOL v1 %zu %zu %zu %.17g %.17g %.17g %.17g %.17g %.17g\n", volume.nx,
                  volume.ny, volume.nz, volume.origin[0], volume.origin[1], volume.origin[2], volume.spacing[0],
                  volume.spacing[1], volume.spacing[2]);
    std::vector<std::uint8_t> out(header, header + std::strlen(header));
    const auto* raw = reinterpret_cast<const std::uint8_t*>(volume.values.data());
    out.insert(out.end(), raw, raw + volume.values.size() * sizeof(float));
    return out;
}

VolumeGrid decode_volume(const std::vector<std::uint8_t>& bytes)
{
    const auto newline = std::find(bytes.begin(), bytes.end(), std::uint8_t('\n'));
    if (newline == bytes.end()) throw FormatError("volume file has no header line");
    std::istringstream is(std::string(bytes.begin(), newline));
    std::string magic, version;
    VolumeGrid vol;
    is >> magic >> version >> vol.nx >> vol.ny >> vol.nz >> vol.origin[0] >> vol.origin[1] >> vol.origin[2] >>
        vol.spacing[0] >> vol.spacing[1] >> vol.spacing[2];
    if (magic != "S2SVOL") throw FormatError("not an S2SVOL volume");
    if (version != "v1") throw FormatError("unsupported volume version '" + version + "'");
    if (!is) throw ParseError("malformed volume header", 1);
    const std::size_t n = vol.nx * vol.ny * vol.nz;
    const std::size_t payload = std::size_t(bytes.end() - newline - 1);
    if (n == 0) throw FormatError("volume has a zero dimension");
    if (payload != n * sizeof(float))
        throw FormatError("volume payload is " + std::to_string(payload) + " bytes, header declares " +
                          std::to_string(n * sizeof(float)));
    vol.values.resize(n);
    std::memcpy(vol.values.data(), &*(newline + 1), payload);
    return vol;
}

void write_volume(const std::filesystem::path& path, const VolumeGrid& volume)
{
    write_file_bytes(path, encode_volume(volume));
}

VolumeGrid read_volume(const std::filesystem::path& path)
{
    return decode_volume(read_file_bytes(path));
}

} // namespace s2s
