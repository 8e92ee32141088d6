#include "s2s/pipeline.hpp"

#include "s2s/error.hpp"
#include "s2s/training.hpp"

namespace s2s {

ContourStack contour_stack(const MeshSurface& mesh, const PipelineOptions& options)
{
    if (mesh.empty()) throw ContractError("cannot slice an empty mesh");
    UnitCubeTransform transform;
    const auto unit = normalize_to_unit_cube(mesh, &transform);
    const std::size_t n = options.slice_count();

    ContourStack stack;
    const auto frame = shared_frame(unit, options.axis);
    for (auto& contours : slice_mesh(unit, options.axis, n)) {
        stack.images.push_back(rasterize_contours(contours, frame, options.resolution, options.mode));
        for (auto& w : contours.warnings) stack.warnings.push_back(std::move(w));
    }

    const auto unit_layout = slice_volume_layout(unit, options.axis, options.resolution, n);
    const auto offset = to_slice_frame(transform.offset, options.axis);
    for (std::size_t k = 0; k < 3; ++k) {
        stack.layout.origin[k] = unit_layout.origin[k] * transform.scale + offset[k];
        stack.layout.spacing[k] = unit_layout.spacing[k] * transform.scale;
    }
    return stack;
}

EstimatedVolume estimate_volume(const MeshSurface& mesh, GeneratorNet<float>& generator,
                                const PipelineOptions& options, const ProgressFn& progress)
{
    if (options.resolution != generator.resolution())
        throw ConfigError("requested resolution " + std::to_string(options.resolution) +
                          " does not match the generator's " + std::to_string(generator.resolution()));
    if (options.batch_size == 0) throw ContractError("batch size must be positive");
    auto stack = contour_stack(mesh, options);
    const std::size_t total = stack.images.size();

    std::vector<Image> planes;
    planes.reserve(total);
    for (std::size_t start = 0; start < total; start += options.batch_size) {
        const std::size_t end = std::min(total, start + options.batch_size);
        std::vector<Image> batch(stack.images.begin() + long(start), stack.images.begin() + long(end));
        for (auto& img : translate_images(generator, batch, options.batch_size)) planes.push_back(std::move(img));
        if (progress) progress(end, total);
    }
    return {assemble_volume(planes, stack.layout), std::move(stack.warnings)};
}

ExtractedRegion extract_region(const VolumeGrid& volume, double threshold, Axis axis)
{
    ExtractedRegion out;
    out.mesh = marching_cubes(volume, threshold);
    for (auto& v : out.mesh.vertices) v = from_slice_frame(v, axis);
    for (float v : volume.values) out.voxels_above += double(v) > threshold;
    return out;
}

} // namespace s2s
