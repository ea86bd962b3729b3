#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "skintact/calibration.hpp"
#include "skintact/geometry.hpp"
#include "skintact/rng.hpp"
#include "skintact/semicone.hpp"

namespace skintact {

// Ranges for the per-sensor response parameters, drawn from the layout seed.
// Raw units are arbitrary; only ratios and the learned mapping consume them.
struct SkinConfig {
    double baseline_min = 900.0;
    double baseline_max = 1100.0;
    double sensitivity_min = 80.0;
    double sensitivity_max = 120.0;
    double kernel_sigma = 8.0;  // spatial falloff width, mm
};

// Per-sample Gaussian read noise on raw values. The default keeps the
// simulated per-sensor SNR of a 100-log calibration under 30 dB.
struct NoiseSpec {
    double sigma_read = 2.5;
    std::uint64_t seed = 0;
};

struct TouchStimulus {
    Vec3 location{};
    double finger_sigma = 5.0;  // effective contact spread, mm
};

// The latent sensor layout. This is the simulator's secret: the localizer is
// trained from point logs alone and never sees these positions.
struct SensorGrid {
    std::array<Vec3, kSensorCount> positions{};  // sensor index = 8*tx + rx
    std::array<double, kSensorCount> baseline{};
    std::array<double, kSensorCount> sensitivity{};
    double kernel_sigma = 8.0;
    std::uint64_t layout_seed = 0;
};

// Places 8 TX and 8 RX iso-parameter curves over the chart and takes their 64
// intersections, projected onto the mesh. Curve k sits at parameter
// (k + 0.5)/8, so the grid stays away from the surface boundary. On a curved
// chart equal parameter steps map to unequal arc lengths, which is what makes
// the physical spacing non-uniform.
inline SensorGrid build_skin(const SurfaceMesh& mesh, const SurfaceChart& chart,
                             std::uint64_t layout_seed, const SkinConfig& config = {}) {
    if (!(config.baseline_min > 0.0 && config.baseline_max >= config.baseline_min))
        throw std::invalid_argument("build_skin: bad baseline range");
    if (!(config.sensitivity_min > 0.0 && config.sensitivity_max >= config.sensitivity_min))
        throw std::invalid_argument("build_skin: bad sensitivity range");
    if (!(config.kernel_sigma > 0.0))
        throw std::invalid_argument("build_skin: kernel_sigma must be > 0");

    SensorGrid grid;
    grid.kernel_sigma = config.kernel_sigma;
    grid.layout_seed = layout_seed;
    for (int tx = 0; tx < 8; ++tx) {
        double u = (tx + 0.5) / 8.0;
        for (int rx = 0; rx < 8; ++rx) {
            double v = (rx + 0.5) / 8.0;
            grid.positions[8 * tx + rx] = project_to_surface(mesh, chart(u, v));
        }
    }
    for (int i = 0; i < kSensorCount; ++i)
        for (int j = i + 1; j < kSensorCount; ++j)
            if (distance(grid.positions[i], grid.positions[j]) < 1.0)
                throw std::invalid_argument(
                    "build_skin: mesh too small to host an 8x8 grid (sensors " +
                    std::to_string(i) + " and " + std::to_string(j) + " closer than 1 mm)");

    Rng rng(layout_seed);
    for (int i = 0; i < kSensorCount; ++i)
        grid.baseline[i] = rng.uniform(config.baseline_min, config.baseline_max);
    for (int i = 0; i < kSensorCount; ++i)
        grid.sensitivity[i] = rng.uniform(config.sensitivity_min, config.sensitivity_max);
    return grid;
}

inline SensorGrid build_semicone_skin(const SurfaceMesh& mesh, const SemiconeSpec& spec,
                                      std::uint64_t layout_seed, const SkinConfig& config = {}) {
    return build_skin(mesh, semicone_chart(spec), layout_seed, config);
}

// A grounded contact pulls raw capacitance down with a Gaussian falloff in
// Euclidean distance; kernel and finger widths add in quadrature.
//   values[i] = baseline[i] - sensitivity[i]*exp(-d_i^2 / (2*(ks^2 + fs^2))) + eps_i
inline CapacitanceFrame simulate_frame(const SensorGrid& grid,
                                       const std::optional<TouchStimulus>& touch,
                                       const NoiseSpec& noise, Rng& rng) {
    CapacitanceFrame frame{};
    double inv_two_var = 0.0;
    if (touch) {
        if (!(touch->finger_sigma > 0.0))
            throw std::invalid_argument("simulate_frame: finger_sigma must be > 0");
        inv_two_var =
            1.0 / (2.0 * (grid.kernel_sigma * grid.kernel_sigma +
                          touch->finger_sigma * touch->finger_sigma));
    }
    for (int i = 0; i < kSensorCount; ++i) {
        double value = grid.baseline[i];
        if (touch) {
            double d2 = (touch->location - grid.positions[i]).norm2();
            value -= grid.sensitivity[i] * std::exp(-d2 * inv_two_var);
        }
        if (noise.sigma_read > 0.0) value += rng.gaussian(0.0, noise.sigma_read);
        frame[i] = value;
    }
    return frame;
}

inline PointLog simulate_point_log(const SensorGrid& grid, const TouchStimulus& touch,
                                   int frame_count, const NoiseSpec& noise, Rng& rng) {
    if (frame_count < 1) throw std::invalid_argument("simulate_point_log: frame_count must be >= 1");
    PointLog log;
    log.location = touch.location;
    log.frames.reserve(frame_count);
    for (int k = 0; k < frame_count; ++k) log.frames.push_back(simulate_frame(grid, touch, noise, rng));
    return log;
}

// Grid files exist for experiment reproducibility only. They hold the latent
// layout and must never feed the localizer.
inline void save_grid(const SensorGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write grid file: " + path);
    nlohmann::json positions = nlohmann::json::array();
    for (const auto& p : grid.positions) positions.push_back({p.x, p.y, p.z});
    nlohmann::json j{{"schema", "sensorgrid-v1"},
                     {"layout_seed", grid.layout_seed},
                     {"kernel_sigma", grid.kernel_sigma},
                     {"positions", positions},
                     {"baseline", grid.baseline},
                     {"sensitivity", grid.sensitivity}};
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline SensorGrid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ": invalid JSON: " + e.what());
    }
    if (!j.contains("schema") || j["schema"] != "sensorgrid-v1")
        throw SchemaError(path + ": missing or unsupported schema tag (expected 'sensorgrid-v1')");
    SensorGrid grid;
    grid.layout_seed = j.at("layout_seed").get<std::uint64_t>();
    grid.kernel_sigma = j.at("kernel_sigma").get<double>();
    const auto& pos = j.at("positions");
    if (!pos.is_array() || pos.size() != kSensorCount)
        throw SchemaError(path + ": positions must hold 64 entries");
    for (int i = 0; i < kSensorCount; ++i)
        grid.positions[i] = {pos[i][0].get<double>(), pos[i][1].get<double>(),
                             pos[i][2].get<double>()};
    grid.baseline = detail::json_to_array<kSensorCount>(j.at("baseline"), path);
    grid.sensitivity = detail::json_to_array<kSensorCount>(j.at("sensitivity"), path);
    return grid;
}

}  // namespace skintact
