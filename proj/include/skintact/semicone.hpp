#pragma once

#include <functional>

#include "skintact/geometry.hpp"

namespace skintact {

// Mapping from a unit parameter square to points on a surface. u and v are
// in [0, 1]; what they mean is up to the chart.
using SurfaceChart = std::function<Vec3(double, double)>;

// Truncated half-cone over a half-elliptical footprint. The flat cut lies in
// the y=0 plane, the base half-ellipse spans x in [-width/2, width/2] and
// y in [0, depth], and the cross-section shrinks linearly with height by
// `taper`. Default dims give a 142 x 164 x 81 mm bounding box.
struct SemiconeSpec {
    double width = 142.0;
    double depth = 164.0;
    double height = 81.0;
    double taper = 0.6;  // top cross-section scale = 1 - taper
    int segments_u = 48; // along height
    int segments_v = 64; // along the arc; even so the arc midpoint is a vertex
};

// u in [0,1]: base to top. v in [0,1]: arc angle 0..pi.
inline Vec3 semicone_point(const SemiconeSpec& spec, double u, double v) {
    double s = 1.0 - spec.taper * u;
    double ang = 3.1415926535897932384626433832795 * v;
    return {0.5 * spec.width * s * std::cos(ang), spec.depth * s * std::sin(ang),
            spec.height * u};
}

inline SurfaceChart semicone_chart(const SemiconeSpec& spec) {
    return [spec](double u, double v) { return semicone_point(spec, u, v); };
}

// Regular (segments_u+1) x (segments_v+1) parameter grid, two triangles per
// quad. The lateral surface only; base, top and back are open.
inline SurfaceMesh semicone_mesh(const SemiconeSpec& spec) {
    if (!(spec.width > 0.0 && spec.depth > 0.0 && spec.height > 0.0))
        throw std::invalid_argument("semicone_mesh: dims must be positive");
    if (!(spec.taper > 0.0 && spec.taper < 1.0))
        throw std::invalid_argument("semicone_mesh: taper must be in (0, 1)");
    if (spec.segments_u < 1 || spec.segments_v < 2)
        throw std::invalid_argument("semicone_mesh: too few segments");

    const int nu = spec.segments_u, nv = spec.segments_v;
    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>(nu + 1) * (nv + 1));
    for (int i = 0; i <= nu; ++i)
        for (int j = 0; j <= nv; ++j)
            vertices.push_back(semicone_point(spec, static_cast<double>(i) / nu,
                                              static_cast<double>(j) / nv));

    auto vid = [nv](int i, int j) { return i * (nv + 1) + j; };
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(nu) * nv * 2);
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    return make_mesh(std::move(vertices), std::move(triangles), "semicone");
}

}  // namespace skintact
