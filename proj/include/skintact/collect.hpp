#pragma once

#include "skintact/calibration.hpp"
#include "skintact/geometry.hpp"
#include "skintact/skinsim.hpp"

namespace skintact {

// Knobs for simulated dataset collection. Frame counts default to the 50
// readings captured per measurement.
struct CollectConfig {
    int frames_per_log = 50;
    int baseline_frames = 50;
    double finger_sigma = 5.0;
    double dense_spacing = 2.0;  // dense grid behind even-spacing targets
};

inline BaselineStats collect_baseline(const SensorGrid& grid, const NoiseSpec& noise, Rng& rng,
                                      int frame_count = 50) {
    if (frame_count < 2)
        throw std::invalid_argument("collect_baseline: frame_count must be >= 2");
    std::vector<CapacitanceFrame> frames;
    frames.reserve(frame_count);
    for (int k = 0; k < frame_count; ++k)
        frames.push_back(simulate_frame(grid, std::nullopt, noise, rng));
    return baseline_from_frames(frames);
}

// Collects the baseline once, then n point logs at locations chosen by the
// strategy. The whole collection runs off one stream seeded from noise.seed,
// which is also what the dataset records.
inline CalibrationDataset collect_dataset(const SurfaceMesh& mesh, const SensorGrid& grid,
                                          SamplingStrategy strategy, int n,
                                          const NoiseSpec& noise,
                                          const CollectConfig& config = {}) {
    if (n < 1) throw std::invalid_argument("collect_dataset: n must be >= 1");

    Rng rng(noise.seed);
    CalibrationDataset dataset;
    dataset.strategy = strategy;
    dataset.seed = noise.seed;
    dataset.baseline = collect_baseline(grid, noise, rng, config.baseline_frames);

    std::vector<Vec3> locations;
    if (strategy == SamplingStrategy::even_spacing) {
        locations = sample_even_spacing(mesh, n, config.dense_spacing);
    } else {
        locations.reserve(n);
        for (int k = 0; k < n; ++k) locations.push_back(sample_random_edge_point(mesh, rng));
    }

    dataset.point_logs.reserve(n);
    for (const Vec3& loc : locations) {
        TouchStimulus touch{loc, config.finger_sigma};
        dataset.point_logs.push_back(
            simulate_point_log(grid, touch, config.frames_per_log, noise, rng));
    }
    return dataset;
}

}  // namespace skintact
