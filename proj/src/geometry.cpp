#include "s2s/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "s2s/error.hpp"

namespace s2s {

namespace {

#include "mc_table.inc"

using EdgeKey = std::pair<std::uint32_t, std::uint32_t>;

} // namespace

Axis parse_axis(const std::string& name)
{
    if (name == "x") return Axis::x;
    if (name == "y") return Axis::y;
    if (name == "z") return Axis::z;
    throw ConfigError("unknown axis '" + name + "' (expected x, y or z)");
}

std::array<std::size_t, 3> axis_frame(Axis axis)
{
    switch (axis) {
    case Axis::x: return {1, 2, 0};
    case Axis::y: return {2, 0, 1};
    case Axis::z: break;
    }
    return {0, 1, 2};
}

Vec3d to_slice_frame(const Vec3d& p, Axis axis)
{
    const auto f = axis_frame(axis);
    return {p[f[0]], p[f[1]], p[f[2]]};
}

Vec3d from_slice_frame(const Vec3d& uvw, Axis axis)
{
    const auto f = axis_frame(axis);
    Vec3d p{};
    for (std::size_t k = 0; k < 3; ++k) p[f[k]] = uvw[k];
    return p;
}

double Polyline::length() const
{
    double total = 0;
    const std::size_t n = points.size();
    const std::size_t segments = closed ? n : (n ? n - 1 : 0);
    for (std::size_t i = 0; i < segments; ++i) {
        const auto& a = points[i];
        const auto& b = points[(i + 1) % n];
        total += std::hypot(b[0] - a[0], b[1] - a[1]);
    }
    return total;
}

ContourSet slice_at(const MeshSurface& mesh, Axis axis, double coordinate)
{
    ContourSet out;
    out.plane = coordinate;
    if (mesh.empty()) return out;
    const auto f = axis_frame(axis);
    const auto box = bounding_box(mesh);
    double extent = box.extent()[f[2]];
    if (!(extent > 0)) extent = std::max(box.max_extent(), 1.0);
    const double nudge = 1e-9 * extent;

    std::vector<double> d(mesh.vertices.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = mesh.vertices[i][f[2]] - coordinate;
        if (d[i] == 0.0) d[i] = nudge;
    }

    std::map<EdgeKey, Vec2d> crossing;
    auto cross_point = [&](std::uint32_t a, std::uint32_t b) {
        const EdgeKey key = std::minmax(a, b);
        auto it = crossing.find(key);
        if (it == crossing.end()) {
            // Always interpolate from the lower index so both triangles
            // sharing the edge agree bit for bit.
            const auto& p = mesh.vertices[key.first];
            const auto& q = mesh.vertices[key.second];
            const double t = d[key.first] / (d[key.first] - d[key.second]);
            it = crossing.emplace(key, Vec2d{p[f[0]] + t * (q[f[0]] - p[f[0]]), p[f[1]] + t * (q[f[1]] - p[f[1]])})
                     .first;
        }
        return key;
    };

    std::vector<std::pair<EdgeKey, EdgeKey>> segments;
    for (const auto& t : mesh.triangles) {
        std::vector<EdgeKey> ends;
        for (int k = 0; k < 3; ++k) {
            const auto a = t[std::size_t(k)], b = t[std::size_t((k + 1) % 3)];
            if ((d[a] > 0) != (d[b] > 0)) ends.push_back(cross_point(a, b));
        }
        if (ends.size() == 2) segments.emplace_back(ends[0], ends[1]);
    }
    if (segments.empty()) return out;

    std::map<EdgeKey, std::vector<std::size_t>> at;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        at[segments[s].first].push_back(s);
        at[segments[s].second].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    auto walk = [&](EdgeKey start, std::size_t first_segment) {
        Polyline line;
        line.points.push_back(crossing[start]);
        EdgeKey cur = start;
        std::size_t seg = first_segment;
        while (true) {
            used[seg] = true;
            cur = segments[seg].first == cur ? segments[seg].second : segments[seg].first;
            if (cur == start) break;
            line.points.push_back(crossing[cur]);
            std::size_t next = segments.size();
            for (auto s : at[cur])
                if (!used[s]) {
                    next = s;
                    break;
                }
            if (next == segments.size()) {
                line.closed = false;
                break;
            }
            seg = next;
        }
        return line;
    };

    std::size_t open_chains = 0;
    for (const auto& [key, segs] : at)
        if (segs.size() == 1 && !used[segs[0]]) {
            auto line = walk(key, segs[0]);
            line.closed = false;
            ++open_chains;
            out.polylines.push_back(std::move(line));
        }
    for (std::size_t s = 0; s < segments.size(); ++s)
        if (!used[s]) {
            auto line = walk(segments[s].first, s);
            if (line.closed && line.points.size() < 3) {
                out.warnings.push_back("dropped a degenerate loop with " + std::to_string(line.points.size()) +
                                       " points");
                continue;
            }
            if (!line.closed) ++open_chains;
            out.polylines.push_back(std::move(line));
        }
    if (open_chains)
        out.warnings.push_back(std::to_string(open_chains) + " open contour chain(s) at plane " +
                               std::to_string(coordinate) + "; the mesh is not watertight here");
    return out;
}

std::vector<double> slice_positions(const MeshSurface& mesh, Axis axis, std::size_t n_slices)
{
    if (n_slices == 0) throw ContractError("need at least one slice");
    const auto box = bounding_box(mesh);
    const std::size_t w = axis_frame(axis)[2];
    const double lo = box.lo[w], step = (box.hi[w] - lo) / double(n_slices);
    std::vector<double> out(n_slices);
    for (std::size_t k = 0; k < n_slices; ++k) out[k] = lo + (double(k) + 0.5) * step;
    return out;
}

std::vector<ContourSet> slice_mesh(const MeshSurface& mesh, Axis axis, std::size_t n_slices)
{
    if (mesh.empty()) throw ContractError("cannot slice an empty mesh");
    std::vector<ContourSet> out;
    for (double w : slice_positions(mesh, axis, n_slices)) out.push_back(slice_at(mesh, axis, w));
    return out;
}

SliceFrame shared_frame(const MeshSurface& mesh, Axis axis)
{
    const auto box = bounding_box(mesh);
    const auto f = axis_frame(axis);
    const double eu = box.extent()[f[0]], ev = box.extent()[f[1]];
    SliceFrame frame;
    frame.size = std::max(eu, ev);
    if (!(frame.size > 0)) frame.size = 1.0;
    frame.u0 = 0.5 * (box.lo[f[0]] + box.hi[f[0]]) - 0.5 * frame.size;
    frame.v0 = 0.5 * (box.lo[f[1]] + box.hi[f[1]]) - 0.5 * frame.size;
    return frame;
}

RasterMode parse_raster_mode(const std::string& name)
{
    if (name == "silhouette") return RasterMode::silhouette;
    if (name == "outline") return RasterMode::outline;
    throw ConfigError("unknown raster mode '" + name + "' (expected silhouette or outline)");
}

Image rasterize_contours(const ContourSet& contours, const SliceFrame& frame, std::size_t resolution, RasterMode mode)
{
    if (resolution < 8) throw ContractError("raster resolution must be at least 8");
    Image img(resolution, resolution);
    const double s = frame.size / double(resolution);
    const long res = long(resolution);

    if (mode == RasterMode::silhouette) {
        std::vector<double> xs;
        for (long j = 0; j < res; ++j) {
            const double vc = frame.v0 + (double(j) + 0.5) * s;
            xs.clear();
            for (const auto& line : contours.polylines) {
                if (!line.closed) continue;
                const std::size_t n = line.points.size();
                for (std::size_t k = 0; k < n; ++k) {
                    const auto& a = line.points[k];
                    const auto& b = line.points[(k + 1) % n];
                    if ((a[1] > vc) != (b[1] > vc)) xs.push_back(a[0] + (vc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
                }
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                const long i0 = std::max(0L, long(std::ceil((xs[k] - frame.u0) / s - 0.5)));
                const long i1 = std::min(res, long(std::ceil((xs[k + 1] - frame.u0) / s - 0.5)));
                for (long i = i0; i < i1; ++i) img.at(std::size_t(i), std::size_t(j)) = 1.0f;
            }
        }
        return img;
    }

    for (const auto& line : contours.polylines) {
        const std::size_t n = line.points.size();
        const std::size_t segments = line.closed ? n : (n ? n - 1 : 0);
        for (std::size_t k = 0; k < segments; ++k) {
            const auto& a = line.points[k];
            const auto& b = line.points[(k + 1) % n];
            const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
            const std::size_t steps = std::size_t(std::ceil(4.0 * len / s)) + 1;
            for (std::size_t t = 0; t <= steps; ++t) {
                const double r = double(t) / double(steps);
                const long i = long(std::floor((a[0] + r * (b[0] - a[0]) - frame.u0) / s));
                const long j = long(std::floor((a[1] + r * (b[1] - a[1]) - frame.v0) / s));
                if (i >= 0 && j >= 0 && i < res && j < res) img.at(std::size_t(i), std::size_t(j)) = 1.0f;
            }
        }
    }
    return img;
}

VolumeLayout slice_volume_layout(const MeshSurface& mesh, Axis axis, std::size_t resolution, std::size_t n_slices)
{
    if (resolution == 0 || n_slices == 0) throw ContractError("volume needs a positive resolution and slice count");
    const auto frame = shared_frame(mesh, axis);
    const auto box = bounding_box(mesh);
    const std::size_t w = axis_frame(axis)[2];
    const double ds = frame.size / double(resolution);
    const double dz = (box.hi[w] - box.lo[w]) / double(n_slices);
    if (!(dz > 0)) throw ContractError("mesh is flat along the slicing axis");
    VolumeLayout layout;
    layout.origin = {frame.u0 + 0.5 * ds, frame.v0 + 0.5 * ds, box.lo[w] + 0.5 * dz};
    layout.spacing = {ds, ds, dz};
    return layout;
}

MeshSurface marching_cubes(const VolumeGrid& volume, double isovalue)
{
    if (!(isovalue > 0.0 && isovalue < 1.0))
        throw ContractError("isovalue must lie in (0,1), got " + std::to_string(isovalue));
    if (volume.nx < 2 || volume.ny < 2 || volume.nz < 2)
        throw ContractError("marching cubes needs at least 2 samples along each axis");
    if (volume.values.size() != volume.nx * volume.ny * volume.nz)
        throw DimensionError("volume holds " + std::to_string(volume.values.size()) + " values for " +
                             std::to_string(volume.nx) + "x" + std::to_string(volume.ny) + "x" +
                             std::to_string(volume.nz));

    const long nx = long(volume.nx), ny = long(volume.ny), nz = long(volume.nz);
    // Padded lattice: indices -1..n along each axis, outside samples are 0.
    const long px = nx + 2, py = ny + 2;
    auto sample = [&](long x, long y, long z) -> double {
        if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) return 0.0;
        const double v = volume.values[std::size_t((z * ny + y) * nx + x)];
        return v == isovalue ? v + 1e-7 : v;
    };
    auto point = [&](long x, long y, long z) {
        return Vec3d{volume.origin[0] + double(x) * volume.spacing[0], volume.origin[1] + double(y) * volume.spacing[1],
                     volume.origin[2] + double(z) * volume.spacing[2]};
    };
    auto lattice_id = [&](long x, long y, long z) {
        return std::uint64_t(((z + 1) * py + (y + 1)) * px + (x + 1));
    };

    static constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                          {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    static constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                         {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

    MeshSurface mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    for (long z = -1; z < nz; ++z)
        for (long y = -1; y < ny; ++y)
            for (long x = -1; x < nx; ++x) {
                double val[8];
                int index = 0;
                for (int c = 0; c < 8; ++c) {
                    val[c] = sample(x + kCorner[c][0], y + kCorner[c][1], z + kCorner[c][2]);
                    if (val[c] < isovalue) index |= 1 << c;
                }
                if (index == 0 || index == 255) continue;

                std::uint32_t ids[12];
                for (int e = 0; e < 12; ++e) {
                    const int c0 = kEdge[e][0], c1 = kEdge[e][1];
                    if ((val[c0] < isovalue) == (val[c1] < isovalue)) continue;
                    long a[3] = {x + kCorner[c0][0], y + kCorner[c0][1], z + kCorner[c0][2]};
                    long b[3] = {x + kCorner[c1][0], y + kCorner[c1][1], z + kCorner[c1][2]};
                    double va = val[c0], vb = val[c1];
                    // Canonical direction: from the lower lattice point.
                    if (lattice_id(a[0], a[1], a[2]) > lattice_id(b[0], b[1], b[2])) {
                        std::swap(a, b);
                        std::swap(va, vb);
                    }
                    const int dir = a[0] != b[0] ? 0 : (a[1] != b[1] ? 1 : 2);
                    const std::uint64_t key = lattice_id(a[0], a[1], a[2]) * 3 + std::uint64_t(dir);
                    auto it = edge_vertex.find(key);
                    if (it == edge_vertex.end()) {
                        const double t = (isovalue - va) / (vb - va);
                        const Vec3d pa = point(a[0], a[1], a[2]), pb = point(b[0], b[1], b[2]);
                        mesh.vertices.push_back(
                            {pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]), pa[2] + t * (pb[2] - pa[2])});
                        it = edge_vertex.emplace(key, std::uint32_t(mesh.vertices.size() - 1)).first;
                    }
                    ids[e] = it->second;
                }
                for (int k = 0; kTriTable[index][k] != -1; k += 3)
                    mesh.triangles.push_back({ids[kTriTable[index][k]], ids[kTriTable[index][k + 1]],
                                              ids[kTriTable[index][k + 2]]});
            }
    return mesh;
}

} // namespace s2s
