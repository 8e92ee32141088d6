#include "s2s/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "s2s/error.hpp"

namespace s2s {

namespace {

Vec3d sub(const Vec3d& a, const Vec3d& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3d add(const Vec3d& a, const Vec3d& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3d mul(const Vec3d& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3d& a, const Vec3d& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3d cross(const Vec3d& a, const Vec3d& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3d& a) { return std::sqrt(dot(a, a)); }

std::uint32_t read_u32(const std::uint8_t* p)
{
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

float read_f32(const std::uint8_t* p)
{
    const std::uint32_t bits = read_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f)
{
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

// Triangle soup collected by the readers before welding.
struct Soup {
    std::vector<Vec3d> vertices;
    std::vector<Triangle> triangles;
};

MeshSurface finish(Soup soup)
{
    if (soup.triangles.empty()) throw ParseError("no geometry");
    MeshSurface raw{std::move(soup.vertices), std::move(soup.triangles)};
    MeshSurface welded = weld_vertices(raw);
    if (welded.triangles.empty()) throw ParseError("no geometry: every triangle is degenerate");
    return welded;
}

bool is_binary_stl(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 84) return false;
    const std::uint64_t count = read_u32(bytes.data() + 80);
    return 84 + 50 * count == bytes.size();
}

bool looks_like_ascii_stl(std::span<const std::uint8_t> bytes)
{
    std::size_t i = 0;
    while (i < bytes.size() && std::isspace(bytes[i])) ++i;
    static const char kSolid[] = "solid";
    if (bytes.size() - i < 5 || std::memcmp(bytes.data() + i, kSolid, 5) != 0) return false;
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return text.find("facet") != std::string_view::npos || text.find("endsolid") != std::string_view::npos;
}

Soup read_binary_stl(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 84) throw ParseError("binary STL shorter than its 84-byte header", long(bytes.size()));
    const std::uint64_t count = read_u32(bytes.data() + 80);
    if (84 + 50 * count != bytes.size())
        throw ParseError("binary STL declares " + std::to_string(count) + " facets (" +
                             std::to_string(84 + 50 * count) + " bytes) but has " + std::to_string(bytes.size()),
                         long(std::min<std::uint64_t>(bytes.size(), 84 + 50 * count)));
    Soup soup;
    for (std::uint64_t t = 0; t < count; ++t) {
        const std::uint8_t* rec = bytes.data() + 84 + 50 * t;
        Triangle tri;
        for (int v = 0; v < 3; ++v) {
            Vec3d p;
            for (int k = 0; k < 3; ++k) {
                p[std::size_t(k)] = read_f32(rec + 12 + 12 * v + 4 * k);
                if (!std::isfinite(p[std::size_t(k)]))
                    throw ParseError("binary STL facet " + std::to_string(t) + " has a non-finite coordinate",
                                     long(84 + 50 * t));
            }
            tri[std::size_t(v)] = std::uint32_t(soup.vertices.size());
            soup.vertices.push_back(p);
        }
        soup.triangles.push_back(tri);
    }
    return soup;
}

std::vector<std::string> tokenize(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_number(const std::string& tok, long line, const char* what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used == tok.size() && std::isfinite(v)) return v;
    } catch (const std::logic_error&) {
    }
    throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + tok + "'", line);
}

template <typename F>
void for_each_line(std::span<const std::uint8_t> bytes, F&& fn)
{
    long line_no = 0;
    std::size_t start = 0;
    while (start < bytes.size()) {
        std::size_t end = start;
        while (end < bytes.size() && bytes[end] != '\n') ++end;
        std::string line(reinterpret_cast<const char*>(bytes.data()) + start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        fn(++line_no, line);
        start = end + 1;
    }
}

Soup read_ascii_stl(std::span<const std::uint8_t> bytes)
{
    Soup soup;
    std::vector<Vec3d> facet;
    bool in_facet = false;
    for_each_line(bytes, [&](long n, const std::string& line) {
        const auto tok = tokenize(line);
        if (tok.empty()) return;
        const std::string& key = tok[0];
        if (key == "facet") {
            if (in_facet) throw ParseError("line " + std::to_string(n) + ": facet inside facet", n);
            in_facet = true;
            facet.clear();
        } else if (key == "vertex") {
            if (!in_facet) throw ParseError("line " + std::to_string(n) + ": vertex outside a facet", n);
            if (tok.size() != 4) throw ParseError("line " + std::to_string(n) + ": vertex needs 3 coordinates", n);
            facet.push_back({parse_number(tok[1], n, "coordinate"), parse_number(tok[2], n, "coordinate"),
                             parse_number(tok[3], n, "coordinate")});
        } else if (key == "endfacet") {
            if (!in_facet) throw ParseError("line " + std::to_string(n) + ": endfacet without facet", n);
            if (facet.size() < 3)
                throw ParseError("line " + std::to_string(n) + ": facet has " + std::to_string(facet.size()) +
                                     " vertices",
                                 n);
            const auto base = std::uint32_t(soup.vertices.size());
            soup.vertices.insert(soup.vertices.end(), facet.begin(), facet.end());
            for (std::uint32_t k = 1; k + 1 < facet.size(); ++k) soup.triangles.push_back({base, base + k, base + k + 1});
            in_facet = false;
        } else if (key == "solid" || key == "endsolid" || key == "outer" || key == "endloop") {
        } else {
            throw ParseError("line " + std::to_string(n) + ": unexpected '" + key + "' in ASCII STL", n);
        }
    });
    if (in_facet) throw ParseError("ASCII STL ends inside a facet");
    return soup;
}

Soup read_obj(std::span<const std::uint8_t> bytes, bool* recognized)
{
    Soup soup;
    bool any = false;
    for_each_line(bytes, [&](long n, const std::string& line) {
        const auto hash = line.find('#');
        const auto tok = tokenize(hash == std::string::npos ? line : line.substr(0, hash));
        if (tok.empty()) return;
        if (tok[0] == "v") {
            any = true;
            if (tok.size() < 4 || tok.size() > 5)
                throw ParseError("line " + std::to_string(n) + ": vertex needs 3 coordinates", n);
            soup.vertices.push_back({parse_number(tok[1], n, "coordinate"), parse_number(tok[2], n, "coordinate"),
                                     parse_number(tok[3], n, "coordinate")});
        } else if (tok[0] == "f") {
            any = true;
            if (tok.size() < 4) throw ParseError("line " + std::to_string(n) + ": face needs at least 3 vertices", n);
            std::vector<std::uint32_t> idx;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string head = tok[k].substr(0, tok[k].find('/'));
                long v = 0;
                try {
                    std::size_t used = 0;
                    v = std::stol(head, &used);
                    if (used != head.size()) throw std::invalid_argument(head);
                } catch (const std::logic_error&) {
                    throw ParseError("line " + std::to_string(n) + ": bad face index '" + tok[k] + "'", n);
                }
                const long count = long(soup.vertices.size());
                const long resolved = v < 0 ? count + v : v - 1;
                if (v == 0 || resolved < 0 || resolved >= count)
                    throw ParseError("line " + std::to_string(n) + ": face index " + std::to_string(v) +
                                         " out of range (" + std::to_string(count) + " vertices so far)",
                                     n);
                idx.push_back(std::uint32_t(resolved));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) soup.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        } else if (tok[0] == "vn" || tok[0] == "vt" || tok[0] == "vp" || tok[0] == "o" || tok[0] == "g" ||
                   tok[0] == "s" || tok[0] == "usemtl" || tok[0] == "mtllib" || tok[0] == "l") {
            any = true;
        }
    });
    if (recognized) *recognized = any;
    return soup;
}

} // namespace

void MeshSurface::validate() const
{
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (auto i : tri)
            if (i >= vertices.size())
                throw ContractError("triangle " + std::to_string(t) + " references vertex " + std::to_string(i) +
                                    " of " + std::to_string(vertices.size()));
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw ContractError("triangle " + std::to_string(t) + " is degenerate");
    }
}

MeshFormat parse_mesh_format(const std::string& name)
{
    if (name == "obj") return MeshFormat::obj;
    if (name == "stl" || name == "stl_binary") return MeshFormat::stl_binary;
    if (name == "stl_ascii") return MeshFormat::stl_ascii;
    if (name == "auto" || name.empty()) return MeshFormat::automatic;
    throw FormatError("unknown mesh format '" + name + "' (expected obj, stl, stl_ascii or auto)");
}

const char* mesh_format_name(MeshFormat format)
{
    switch (format) {
    case MeshFormat::obj: return "obj";
    case MeshFormat::stl_ascii: return "stl_ascii";
    case MeshFormat::stl_binary: return "stl_binary";
    case MeshFormat::automatic: return "auto";
    }
    return "?";
}

MeshSurface parse_mesh(std::span<const std::uint8_t> bytes, MeshFormat format)
{
    bool blank = true;
    for (auto b : bytes)
        if (!std::isspace(b)) {
            blank = false;
            break;
        }
    if (blank) throw ParseError("no geometry: input is empty");

    switch (format) {
    case MeshFormat::stl_binary: return finish(read_binary_stl(bytes));
    case MeshFormat::stl_ascii: return finish(read_ascii_stl(bytes));
    case MeshFormat::obj: return finish(read_obj(bytes, nullptr));
    case MeshFormat::automatic: break;
    }
    if (is_binary_stl(bytes)) return finish(read_binary_stl(bytes));
    if (looks_like_ascii_stl(bytes)) return finish(read_ascii_stl(bytes));
    bool recognized = false;
    Soup soup = read_obj(bytes, &recognized);
    if (!recognized) throw FormatError("unrecognized mesh format (expected OBJ, ASCII STL or binary STL)");
    return finish(std::move(soup));
}

std::vector<std::uint8_t> export_mesh(const MeshSurface& mesh, MeshFormat format)
{
    mesh.validate();
    std::vector<std::uint8_t> out;
    if (format == MeshFormat::obj) {
        std::string text = "# s2s mesh\n";
        char buf[160];
        for (const auto& v : mesh.vertices) {
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v[0], v[1], v[2]);
            text += buf;
        }
        for (const auto& t : mesh.triangles) {
            std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
            text += buf;
        }
        return std::vector<std::uint8_t>(text.begin(), text.end());
    }
    if (format != MeshFormat::stl_binary)
        throw FormatError(std::string("cannot export mesh as ") + mesh_format_name(format));
    out.reserve(84 + 50 * mesh.triangles.size());
    std::string header = "s2s binary STL";
    header.resize(80, ' ');
    out.insert(out.end(), header.begin(), header.end());
    put_u32(out, std::uint32_t(mesh.triangles.size()));
    for (const auto& t : mesh.triangles) {
        const Vec3d& a = mesh.vertices[t[0]];
        const Vec3d& b = mesh.vertices[t[1]];
        const Vec3d& c = mesh.vertices[t[2]];
        Vec3d n = cross(sub(b, a), sub(c, a));
        const double len = norm(n);
        if (len > 0) n = mul(n, 1.0 / len);
        for (double x : n) put_f32(out, float(x));
        for (const Vec3d* p : {&a, &b, &c})
            for (double x : *p) put_f32(out, float(x));
        out.push_back(0);
        out.push_back(0);
    }
    return out;
}

MeshSurface weld_vertices(const MeshSurface& mesh, double tolerance)
{
    // Hash grid with cell size = tolerance; a match can only sit in one of
    // the 27 neighbouring cells.
    struct Key {
        long long x, y, z;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const
        {
            return std::size_t(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
        }
    };
    auto cell = [&](const Vec3d& p) {
        return Key{(long long)std::floor(p[0] / tolerance), (long long)std::floor(p[1] / tolerance),
                   (long long)std::floor(p[2] / tolerance)};
    };
    std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> grid;
    MeshSurface out;
    std::vector<std::uint32_t> remap(mesh.vertices.size());
    const double tol2 = tolerance * tolerance;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3d& p = mesh.vertices[i];
        const Key k = cell(p);
        std::uint32_t found = std::numeric_limits<std::uint32_t>::max();
        for (long long dx = -1; dx <= 1 && found == std::numeric_limits<std::uint32_t>::max(); ++dx)
            for (long long dy = -1; dy <= 1 && found == std::numeric_limits<std::uint32_t>::max(); ++dy)
                for (long long dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find(Key{k.x + dx, k.y + dy, k.z + dz});
                    if (it == grid.end()) continue;
                    for (auto j : it->second) {
                        const Vec3d d = sub(out.vertices[j], p);
                        if (dot(d, d) <= tol2) {
                            found = j;
                            break;
                        }
                    }
                    if (found != std::numeric_limits<std::uint32_t>::max()) break;
                }
        if (found == std::numeric_limits<std::uint32_t>::max()) {
            found = std::uint32_t(out.vertices.size());
            out.vertices.push_back(p);
            grid[k].push_back(found);
        }
        remap[i] = found;
    }
    for (const auto& t : mesh.triangles) {
        const Triangle r{remap[t[0]], remap[t[1]], remap[t[2]]};
        if (r[0] == r[1] || r[1] == r[2] || r[0] == r[2]) continue;
        out.triangles.push_back(r);
    }
    return out;
}

double BoundingBox::max_extent() const
{
    const auto e = extent();
    return std::max({e[0], e[1], e[2]});
}

BoundingBox bounding_box(const MeshSurface& mesh)
{
    if (mesh.vertices.empty()) throw ContractError("bounding box of an empty mesh");
    BoundingBox box{mesh.vertices[0], mesh.vertices[0]};
    for (const auto& v : mesh.vertices)
        for (std::size_t k = 0; k < 3; ++k) {
            box.lo[k] = std::min(box.lo[k], v[k]);
            box.hi[k] = std::max(box.hi[k], v[k]);
        }
    return box;
}

Vec3d UnitCubeTransform::to_model(const Vec3d& p) const { return add(mul(p, scale), offset); }
Vec3d UnitCubeTransform::to_unit(const Vec3d& p) const { return mul(sub(p, offset), 1.0 / scale); }

MeshSurface normalize_to_unit_cube(const MeshSurface& mesh, UnitCubeTransform* transform)
{
    const auto box = bounding_box(mesh);
    const double size = box.max_extent();
    if (!(size > 0)) throw ContractError("cannot normalize a mesh with zero extent");
    UnitCubeTransform t;
    t.scale = size;
    // Center the box inside the unit cube.
    for (std::size_t k = 0; k < 3; ++k) t.offset[k] = 0.5 * (box.lo[k] + box.hi[k]) - 0.5 * size;
    MeshSurface out = mesh;
    for (auto& v : out.vertices) v = t.to_unit(v);
    if (transform) *transform = t;
    return out;
}

MeshSurface apply_transform(const MeshSurface& mesh, const UnitCubeTransform& transform)
{
    MeshSurface out = mesh;
    for (auto& v : out.vertices) v = transform.to_model(v);
    return out;
}

MeshSurface make_icosphere(double radius, int subdivisions, const Vec3d& center)
{
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3d> v{{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                         {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& p : v) p = mul(p, 1.0 / norm(p));
    std::vector<Triangle> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                            {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            Vec3d m = mul(add(v[a], v[b]), 0.5);
            m = mul(m, 1.0 / norm(m));
            const auto id = std::uint32_t(v.size());
            v.push_back(m);
            mid.emplace(key, id);
            return id;
        };
        std::vector<Triangle> next;
        next.reserve(f.size() * 4);
        for (const auto& t : f) {
            const auto a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
            next.push_back({t[0], a, c});
            next.push_back({t[1], b, a});
            next.push_back({t[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    MeshSurface mesh;
    for (const auto& p : v) mesh.vertices.push_back(add(mul(p, radius), center));
    mesh.triangles = std::move(f);
    return mesh;
}

MeshSurface make_box(const Vec3d& lo, const Vec3d& hi)
{
    MeshSurface m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? hi[0] : lo[0], (i & 2) ? hi[1] : lo[1], (i & 4) ? hi[2] : lo[2]});
    m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                   {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

double surface_area(const MeshSurface& mesh)
{
    double total = 0;
    for (const auto& t : mesh.triangles)
        total += 0.5 * norm(cross(sub(mesh.vertices[t[1]], mesh.vertices[t[0]]),
                                  sub(mesh.vertices[t[2]], mesh.vertices[t[0]])));
    return total;
}

double signed_volume(const MeshSurface& mesh)
{
    double total = 0;
    for (const auto& t : mesh.triangles)
        total += dot(mesh.vertices[t[0]], cross(mesh.vertices[t[1]], mesh.vertices[t[2]])) / 6.0;
    return total;
}

EdgeReport edge_report(const MeshSurface& mesh)
{
    // Per undirected edge: use count and net direction.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<int, int>> uses;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const auto a = t[std::size_t(k)], b = t[std::size_t((k + 1) % 3)];
            auto& u = uses[std::minmax(a, b)];
            ++u.first;
            u.second += a < b ? 1 : -1;
        }
    EdgeReport r;
    r.edges = uses.size();
    for (const auto& [_, u] : uses) {
        if (u.first == 1) ++r.boundary_edges;
        if (u.first >= 3) ++r.nonmanifold_edges;
        if (u.first == 2 && u.second != 0) ++r.misoriented_edges;
    }
    return r;
}

long euler_characteristic(const MeshSurface& mesh)
{
    std::vector<bool> used(mesh.vertices.size(), false);
    for (const auto& t : mesh.triangles)
        for (auto i : t) used[i] = true;
    const long v = long(std::count(used.begin(), used.end(), true));
    return v - long(edge_report(mesh).edges) + long(mesh.triangles.size());
}

double point_triangle_distance(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c)
{
    // Closest point by Voronoi-region classification.
    const Vec3d ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return norm(ap);
    const Vec3d bp = sub(p, b);
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return norm(bp);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return norm(sub(p, add(a, mul(ab, d1 / (d1 - d3)))));
    const Vec3d cp = sub(p, c);
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return norm(cp);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return norm(sub(p, add(a, mul(ac, d2 / (d2 - d6)))));
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return norm(sub(p, add(b, mul(sub(c, b), w))));
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return norm(sub(p, add(a, add(mul(ab, v), mul(ac, w)))));
}

namespace {

std::vector<Vec3d> surface_samples(const MeshSurface& m)
{
    std::vector<Vec3d> pts = m.vertices;
    for (const auto& t : m.triangles) {
        const Vec3d &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
        pts.push_back(mul(add(add(a, b), c), 1.0 / 3.0));
        pts.push_back(mul(add(a, b), 0.5));
    }
    return pts;
}

// Largest distance from any sample of `from` to the surface `to`, with a
// uniform grid over `to`'s triangles for pruning.
double directed_distance(const MeshSurface& from, const MeshSurface& to)
{
    const auto box = bounding_box(to);
    const std::size_t cells = std::max<std::size_t>(1, std::size_t(std::cbrt(double(to.triangles.size()) / 2)));
    const double size = std::max(box.max_extent(), 1e-12) / double(cells);
    auto cell_of = [&](double x, std::size_t k) {
        return std::clamp<long>(long(std::floor((x - box.lo[k]) / size)), 0, long(cells) - 1);
    };
    std::vector<std::vector<std::uint32_t>> grid(cells * cells * cells);
    for (std::uint32_t t = 0; t < to.triangles.size(); ++t) {
        Vec3d lo = to.vertices[to.triangles[t][0]], hi = lo;
        for (auto i : to.triangles[t])
            for (std::size_t k = 0; k < 3; ++k) {
                lo[k] = std::min(lo[k], to.vertices[i][k]);
                hi[k] = std::max(hi[k], to.vertices[i][k]);
            }
        for (long x = cell_of(lo[0], 0); x <= cell_of(hi[0], 0); ++x)
            for (long y = cell_of(lo[1], 1); y <= cell_of(hi[1], 1); ++y)
                for (long z = cell_of(lo[2], 2); z <= cell_of(hi[2], 2); ++z)
                    grid[std::size_t((z * long(cells) + y) * long(cells) + x)].push_back(t);
    }

    double worst = 0;
    for (const auto& p : surface_samples(from)) {
        double best = std::numeric_limits<double>::infinity();
        const long cx = cell_of(p[0], 0), cy = cell_of(p[1], 1), cz = cell_of(p[2], 2);
        // Grow the search shell until no unvisited cell can hold a closer triangle.
        for (long r = 0; r <= long(cells); ++r) {
            for (long z = cz - r; z <= cz + r; ++z)
                for (long y = cy - r; y <= cy + r; ++y)
                    for (long x = cx - r; x <= cx + r; ++x) {
                        if (std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)}) != r) continue;
                        if (x < 0 || y < 0 || z < 0 || x >= long(cells) || y >= long(cells) || z >= long(cells))
                            continue;
                        for (auto t : grid[std::size_t((z * long(cells) + y) * long(cells) + x)]) {
                            const auto& tri = to.triangles[t];
                            best = std::min(best, point_triangle_distance(p, to.vertices[tri[0]], to.vertices[tri[1]],
                                                                          to.vertices[tri[2]]));
                        }
                    }
            // Unvisited cells are at least r cell widths away from p.
            if (best <= double(r) * size) break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

double hausdorff_distance(const MeshSurface& a, const MeshSurface& b)
{
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    return std::max(directed_distance(a, b), directed_distance(b, a));
}

} // namespace s2s
