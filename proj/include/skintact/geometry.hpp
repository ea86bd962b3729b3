#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "skintact/errors.hpp"
#include "skintact/rng.hpp"

namespace skintact {

// All coordinates are millimeters.
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

// Minimum area accepted before a triangle counts as degenerate (mm^2).
inline constexpr double kMinTriangleArea = 1e-9;

// Triangle mesh of the skin's outer surface. Edges are derived from the
// triangles: each undirected vertex pair appears exactly once, sorted
// lexicographically so the ordering is reproducible.
struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;
};

namespace detail {

inline std::vector<std::array<int, 2>> derive_edges(const std::vector<std::array<int, 3>>& tris) {
    std::vector<std::array<int, 2>> edges;
    edges.reserve(tris.size() * 3);
    for (const auto& t : tris) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            edges.push_back({std::min(a, b), std::max(a, b)});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace detail

// Validates vertices/triangles and derives the edge list. `where` prefixes
// error messages (a file path, or a caller-supplied tag for in-memory meshes).
inline SurfaceMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
                             const std::string& where = "mesh") {
    const int nv = static_cast<int>(vertices.size());
    for (int i = 0; i < nv; ++i) {
        if (!vertices[i].finite())
            throw SchemaError(where + ": vertex " + std::to_string(i) + " is not finite");
    }
    for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
        const auto& t = triangles[ti];
        for (int idx : t) {
            if (idx < 0 || idx >= nv)
                throw SchemaError(where + ": triangle " + std::to_string(ti) + " references vertex " +
                                  std::to_string(idx + 1) + " out of range (" + std::to_string(nv) +
                                  " vertices)");
        }
        double area = triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if (!(area > kMinTriangleArea))
            throw SchemaError(where + ": triangle " + std::to_string(ti) + " is degenerate (area " +
                              std::to_string(area) + " mm^2)");
    }
    SurfaceMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.triangles = std::move(triangles);
    mesh.edges = detail::derive_edges(mesh.triangles);
    return mesh;
}

// Text mesh format: `v <x> <y> <z>` (mm) and `f <i> <j> <k>` (1-based vertex
// indices). `#` starts a comment, blank lines are ignored, nothing else is
// accepted. Errors name the offending line.
inline SurfaceMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file: " + path);

    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> face_lines;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;  // blank or comment-only line

        const std::string at = path + ":" + std::to_string(line_no);
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw SchemaError(at + ": malformed vertex line");
            if (!v.finite()) throw SchemaError(at + ": non-finite vertex coordinate");
            std::string extra;
            if (ls >> extra) throw SchemaError(at + ": trailing tokens after vertex");
            vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> f{};
            if (!(ls >> f[0] >> f[1] >> f[2]))
                throw SchemaError(at + ": malformed face line");
            std::string extra;
            if (ls >> extra) throw SchemaError(at + ": trailing tokens after face");
            triangles.push_back({f[0] - 1, f[1] - 1, f[2] - 1});
            face_lines.push_back(line_no);
        } else {
            throw SchemaError(at + ": unknown line type '" + tag + "'");
        }
    }

    const int nv = static_cast<int>(vertices.size());
    for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
        const std::string at = path + ":" + std::to_string(face_lines[ti]);
        for (int idx : triangles[ti]) {
            if (idx < 0 || idx >= nv)
                throw SchemaError(at + ": face index " + std::to_string(idx + 1) +
                                  " out of range (" + std::to_string(nv) + " vertices)");
        }
        const auto& t = triangles[ti];
        double area = triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if (!(area > kMinTriangleArea))
            throw SchemaError(at + ": degenerate face (area " + std::to_string(area) + " mm^2)");
    }

    SurfaceMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.triangles = std::move(triangles);
    mesh.edges = detail::derive_edges(mesh.triangles);
    return mesh;
}

inline void write_mesh(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file: " + path);
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!out) throw IoError("write failed: " + path);
}

// Closest point on triangle abc to p (Ericson's region test).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

// Distance from p to the nearest point on any mesh triangle.
inline double distance_to_surface(const SurfaceMesh& mesh, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles) {
        Vec3 q = closest_point_on_triangle(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                           mesh.vertices[t[2]]);
        best = std::min(best, (p - q).norm2());
    }
    return std::sqrt(best);
}

inline Vec3 project_to_surface(const SurfaceMesh& mesh, const Vec3& p) {
    Vec3 best{};
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles) {
        Vec3 q = closest_point_on_triangle(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                           mesh.vertices[t[2]]);
        double d2 = (p - q).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = q;
        }
    }
    return best;
}

// Discrete points on the mesh surface with target spacing (mm). Order is
// deterministic for a given mesh + spacing.
struct SurfacePointSet {
    std::vector<Vec3> points;
    double spacing = 0.0;
};

// Sub-triangle centroid rule: each triangle is split into a barycentric grid
// of resolution ceil(longest_edge / spacing) and the centroid of every cell
// is emitted, ordered by (triangle index, grid row, grid column, up/down).
// Any surface point is within (2/3)*spacing of a cell centroid, so the
// covering radius stays below `spacing`.
inline SurfacePointSet discretize_surface(const SurfaceMesh& mesh, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("discretize_surface: spacing must be > 0");
    SurfacePointSet set;
    set.spacing = spacing;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        double longest = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
        double resolution = std::ceil(longest / spacing);
        if (!(resolution < 1e6))
            throw std::invalid_argument(
                "discretize_surface: spacing too small for this mesh (per-triangle resolution " +
                std::to_string(resolution) + ")");
        int r = std::max(1, static_cast<int>(resolution));
        const double inv_r = 1.0 / r;
        auto lattice = [&](int i, int j) {
            return a + (b - a) * (i * inv_r) + (c - a) * (j * inv_r);
        };
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r - i; ++j) {
                Vec3 up = (lattice(i, j) + lattice(i + 1, j) + lattice(i, j + 1)) / 3.0;
                set.points.push_back(up);
                if (i + j <= r - 2) {
                    Vec3 down = (lattice(i + 1, j) + lattice(i + 1, j + 1) + lattice(i, j + 1)) / 3.0;
                    set.points.push_back(down);
                }
            }
        }
    }
    return set;
}

// Result of projecting a query onto a SurfacePointSet.
struct SurfaceProjection {
    int index = -1;
    Vec3 point{};
    double distance = 0.0;
};

// Set element with minimum Euclidean distance to the query; ties go to the
// lowest index.
inline SurfaceProjection nearest_surface_point(const Vec3& query, const SurfacePointSet& set) {
    if (set.points.empty())
        throw std::invalid_argument("nearest_surface_point: empty surface point set");
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        double d2 = (query - set.points[i]).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(i);
        }
    }
    return {best, set.points[best], std::sqrt(best_d2)};
}

// Point at parameter t in [0, 1] along edge `edge_index` of the mesh.
inline Vec3 edge_point(const SurfaceMesh& mesh, std::size_t edge_index, double t) {
    if (edge_index >= mesh.edges.size())
        throw std::invalid_argument("edge_point: edge index out of range");
    const auto& e = mesh.edges[edge_index];
    const Vec3& a = mesh.vertices[e[0]];
    const Vec3& b = mesh.vertices[e[1]];
    return a + (b - a) * t;
}

// Uniform over the edge list, then uniform along the chosen edge.
// Intentionally not length-weighted: "randomly selected edge" is read as a
// uniform pick among edges.
inline Vec3 sample_random_edge_point(const SurfaceMesh& mesh, Rng& rng) {
    if (mesh.edges.empty())
        throw std::invalid_argument("sample_random_edge_point: mesh has no edges");
    std::size_t e = rng.uniform_index(mesh.edges.size());
    double t = rng.uniform01();
    return edge_point(mesh, e, t);
}

// Area-weighted centroid of the mesh surface.
inline Vec3 surface_centroid(const SurfaceMesh& mesh) {
    Vec3 acc{};
    double total_area = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        double area = triangle_area(a, b, c);
        acc = acc + (a + b + c) * (area / 3.0);
        total_area += area;
    }
    return acc / total_area;
}

// Greedy max-min (farthest point) subsample of a point list. Returns chosen
// indices in pick order plus each pick's distance to the previously chosen
// set (insertion_dist[0] is +inf for the seed).
struct FpsResult {
    std::vector<int> indices;
    std::vector<double> insertion_dist;
};

inline FpsResult farthest_point_sample(const std::vector<Vec3>& pts, int n, int seed_index) {
    if (n < 1) throw std::invalid_argument("farthest_point_sample: n must be >= 1");
    if (pts.empty() || n > static_cast<int>(pts.size()))
        throw std::invalid_argument("farthest_point_sample: need at least n candidate points");

    FpsResult res;
    res.indices.reserve(n);
    res.insertion_dist.reserve(n);
    std::vector<double> min_d2(pts.size(), std::numeric_limits<double>::infinity());

    int current = seed_index;
    res.indices.push_back(current);
    res.insertion_dist.push_back(std::numeric_limits<double>::infinity());
    for (int k = 1; k < n; ++k) {
        int far_idx = 0;
        double far_d2 = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double d2 = (pts[i] - pts[current]).norm2();
            if (d2 < min_d2[i]) min_d2[i] = d2;
            if (min_d2[i] > far_d2) {  // strict > keeps the lowest index on ties
                far_d2 = min_d2[i];
                far_idx = static_cast<int>(i);
            }
        }
        current = far_idx;
        res.indices.push_back(current);
        res.insertion_dist.push_back(std::sqrt(far_d2));
    }
    return res;
}

// Exactly n near-uniform points on the surface: greedy max-min subsample of a
// dense discretization, seeded at the dense point nearest the surface
// centroid. Deterministic for fixed inputs.
inline std::vector<Vec3> sample_even_spacing(const SurfaceMesh& mesh, int n,
                                             double dense_spacing = 2.0) {
    if (n < 1) throw std::invalid_argument("sample_even_spacing: n must be >= 1");
    SurfacePointSet dense = discretize_surface(mesh, dense_spacing);
    if (n > static_cast<int>(dense.points.size()))
        throw std::invalid_argument(
            "sample_even_spacing: n exceeds dense discretization size (" +
            std::to_string(dense.points.size()) + " points at spacing " +
            std::to_string(dense_spacing) + " mm)");

    Vec3 centroid = surface_centroid(mesh);
    int seed_index = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dense.points.size(); ++i) {
        double d2 = (dense.points[i] - centroid).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            seed_index = static_cast<int>(i);
        }
    }

    FpsResult fps = farthest_point_sample(dense.points, n, seed_index);
    std::vector<Vec3> out;
    out.reserve(n);
    for (int idx : fps.indices) out.push_back(dense.points[idx]);
    return out;
}

}  // namespace skintact
