#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skintact/errors.hpp"
#include "skintact/geometry.hpp"

namespace skintact {

// 8 TX x 8 RX wire intersections.
inline constexpr int kSensorCount = 64;

// One raw capacitance reading per sensor, ordered by sensor index (8*tx + rx).
using CapacitanceFrame = std::array<double, kSensorCount>;

// One calibration sample: a ground-truth touch location plus the raw frames
// captured while the touch was held.
struct PointLog {
    Vec3 location{};
    std::vector<CapacitanceFrame> frames;
};

// Per-sensor mean contact signal for one point log: mean over frames of
// (baseline - raw). Touch lowers raw capacitance, so values are positive near
// the contact.
struct SensorImage {
    std::array<double, kSensorCount> values{};
};

// No-contact statistics per sensor. sigma0 uses the population (N)
// denominator, fixed for test determinism.
struct BaselineStats {
    std::array<double, kSensorCount> s0{};
    std::array<double, kSensorCount> sigma0{};
    int frame_count = 0;
};

enum class SamplingStrategy { random_edge, even_spacing };

inline const char* to_string(SamplingStrategy s) {
    return s == SamplingStrategy::random_edge ? "random_edge" : "even_spacing";
}

inline SamplingStrategy strategy_from_string(const std::string& s) {
    if (s == "random_edge") return SamplingStrategy::random_edge;
    if (s == "even_spacing") return SamplingStrategy::even_spacing;
    throw SchemaError("unknown sampling strategy '" + s + "'");
}

struct CalibrationDataset {
    std::vector<PointLog> point_logs;
    BaselineStats baseline{};
    SamplingStrategy strategy = SamplingStrategy::random_edge;
    std::uint64_t seed = 0;
};

// Per-sensor SNR in dB. Sensors whose peak mean contact signal is <= 0 (never
// stimulated) or whose sigma0 is 0 carry no value; the mean covers defined
// entries only.
struct SnrReport {
    std::array<std::optional<double>, kSensorCount> per_sensor_db{};
    double mean_db = std::numeric_limits<double>::quiet_NaN();
    int defined_count = 0;
};

inline BaselineStats baseline_from_frames(const std::vector<CapacitanceFrame>& frames) {
    if (frames.size() < 2)
        throw std::invalid_argument("baseline needs at least 2 frames");
    BaselineStats stats;
    stats.frame_count = static_cast<int>(frames.size());
    const double inv_n = 1.0 / static_cast<double>(frames.size());
    for (int i = 0; i < kSensorCount; ++i) {
        // Shifted mean: exact when all samples are equal, well conditioned
        // around the large raw offsets otherwise.
        const double ref = frames[0][i];
        double sum = 0.0;
        for (const auto& f : frames) sum += f[i] - ref;
        double mean = ref + sum * inv_n;
        double sq = 0.0;
        for (const auto& f : frames) {
            double d = f[i] - mean;
            sq += d * d;
        }
        stats.s0[i] = mean;
        stats.sigma0[i] = std::sqrt(sq * inv_n);
    }
    return stats;
}

inline SensorImage sensor_image(const PointLog& log, const BaselineStats& baseline) {
    if (log.frames.empty()) throw std::invalid_argument("sensor_image: point log has no frames");
    SensorImage img;
    const double inv_n = 1.0 / static_cast<double>(log.frames.size());
    for (int i = 0; i < kSensorCount; ++i) {
        double sum = 0.0;
        for (const auto& f : log.frames) sum += baseline.s0[i] - f[i];
        img.values[i] = sum * inv_n;
    }
    return img;
}

// SNR_i = 20*log10(peak_i / sigma0_i), where peak_i is the maximum over the
// dataset's point logs of sensor i's mean contact signal. The contact-signal
// (drop) convention makes the numerator positive for stimulated sensors; in
// raw units it equals max over logs of mean raw minus s0, negated.
inline SnrReport compute_snr(const CalibrationDataset& dataset) {
    if (dataset.point_logs.empty())
        throw std::invalid_argument("compute_snr: dataset has no point logs");
    std::array<double, kSensorCount> peak;
    peak.fill(-std::numeric_limits<double>::infinity());
    for (const auto& log : dataset.point_logs) {
        SensorImage img = sensor_image(log, dataset.baseline);
        for (int i = 0; i < kSensorCount; ++i) peak[i] = std::max(peak[i], img.values[i]);
    }

    SnrReport report;
    double sum = 0.0;
    for (int i = 0; i < kSensorCount; ++i) {
        double sigma = dataset.baseline.sigma0[i];
        if (peak[i] > 0.0 && sigma > 0.0) {
            double db = 20.0 * std::log10(peak[i] / sigma);
            report.per_sensor_db[i] = db;
            sum += db;
            ++report.defined_count;
        }
    }
    if (report.defined_count > 0) report.mean_db = sum / report.defined_count;
    return report;
}

// --- JSONL dataset files ---------------------------------------------------
//
// Line 1 is a header object:
//   {"schema":"pointlog-v1","strategy":...,"seed":...,
//    "baseline_s0":[64],"baseline_sigma0":[64],"baseline_frames":N}
// and every following line is one point log:
//   {"loc":[x,y,z],"frames":[[64 reals] x K]}

namespace detail {

template <std::size_t N>
inline std::array<double, N> json_to_array(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != N)
        throw SchemaError(where + ": expected array of " + std::to_string(N) + " numbers" +
                          (j.is_array() ? " (got " + std::to_string(j.size()) + ")" : ""));
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
    return out;
}

}  // namespace detail

inline void export_jsonl(const CalibrationDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);

    nlohmann::json header{{"schema", "pointlog-v1"},
                          {"strategy", to_string(dataset.strategy)},
                          {"seed", dataset.seed},
                          {"baseline_s0", dataset.baseline.s0},
                          {"baseline_sigma0", dataset.baseline.sigma0},
                          {"baseline_frames", dataset.baseline.frame_count}};
    out << header.dump() << "\n";

    for (const auto& log : dataset.point_logs) {
        nlohmann::json j{{"loc", {log.location.x, log.location.y, log.location.z}},
                         {"frames", log.frames}};
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline CalibrationDataset import_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);

    CalibrationDataset dataset;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string at = path + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(at + ": invalid JSON: " + e.what());
        }
        if (!header_seen) {
            if (!j.contains("schema") || j["schema"] != "pointlog-v1")
                throw SchemaError(at + ": missing or unsupported schema tag (expected 'pointlog-v1')");
            dataset.strategy = strategy_from_string(j.at("strategy").get<std::string>());
            dataset.seed = j.at("seed").get<std::uint64_t>();
            dataset.baseline.s0 = detail::json_to_array<kSensorCount>(j.at("baseline_s0"), at);
            dataset.baseline.sigma0 = detail::json_to_array<kSensorCount>(j.at("baseline_sigma0"), at);
            dataset.baseline.frame_count = j.at("baseline_frames").get<int>();
            if (dataset.baseline.frame_count < 2)
                throw SchemaError(at + ": baseline_frames must be >= 2");
            header_seen = true;
            continue;
        }
        if (!j.contains("loc") || !j["loc"].is_array() || j["loc"].size() != 3)
            throw SchemaError(at + ": point log needs a 3-element 'loc'");
        if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty())
            throw SchemaError(at + ": point log needs a non-empty 'frames' array");
        PointLog log;
        log.location = {j["loc"][0].get<double>(), j["loc"][1].get<double>(),
                        j["loc"][2].get<double>()};
        for (std::size_t fi = 0; fi < j["frames"].size(); ++fi) {
            log.frames.push_back(detail::json_to_array<kSensorCount>(
                j["frames"][fi], at + ": frame " + std::to_string(fi)));
        }
        dataset.point_logs.push_back(std::move(log));
    }
    if (!header_seen) throw SchemaError(path + ": missing header line");
    if (dataset.point_logs.empty()) throw SchemaError(path + ": dataset has no point logs");
    return dataset;
}

}  // namespace skintact
