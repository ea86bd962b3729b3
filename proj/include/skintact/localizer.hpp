#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skintact/calibration.hpp"
#include "skintact/errors.hpp"
#include "skintact/geometry.hpp"
#include "skintact/rng.hpp"

namespace skintact {

inline constexpr int kInputSize = kSensorCount;  // 64
inline constexpr int kHiddenSize = 32;
inline constexpr int kOutputSize = 3;

enum class Activation { relu, tanh_ };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh_;
    throw SchemaError("unknown activation '" + s + "'");
}

// 64 -> 32 -> 3 fully connected network. Weights are row-major:
// w1[h * kInputSize + i], w2[o * kHiddenSize + h].
struct MlpParams {
    std::array<double, kHiddenSize * kInputSize> w1{};
    std::array<double, kHiddenSize> b1{};
    std::array<double, kOutputSize * kHiddenSize> w2{};
    std::array<double, kOutputSize> b2{};
    Activation activation = Activation::relu;
};

// Gradient of the loss with respect to every parameter, same layout.
struct MlpGrad {
    std::array<double, kHiddenSize * kInputSize> w1{};
    std::array<double, kHiddenSize> b1{};
    std::array<double, kOutputSize * kHiddenSize> w2{};
    std::array<double, kOutputSize> b2{};
};

// Per-input standardization applied to sensor images before the network.
struct NormStats {
    std::array<double, kInputSize> mean{};
    std::array<double, kInputSize> scale{};
};

inline constexpr double kScaleFloor = 1e-9;

enum class BatchMode { full_batch };

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 2000;
    BatchMode batch = BatchMode::full_batch;
    std::uint64_t seed = 1;
    double init_scale = 1.0;
    Activation activation = Activation::relu;
};

struct TrainedLocalizer {
    MlpParams params;
    NormStats norm;
    SurfacePointSet surface;
    std::vector<double> loss_history;    // loss at the start of each epoch
    std::vector<int> floored_inputs;     // sensors whose scale hit kScaleFloor
};

namespace detail {

inline double activate(Activation a, double x) {
    if (a == Activation::relu) return x > 0.0 ? x : 0.0;
    return std::tanh(x);
}

// relu'(0) is taken as 0.
inline double activate_deriv(Activation a, double pre, double post) {
    if (a == Activation::relu) return pre > 0.0 ? 1.0 : 0.0;
    return 1.0 - post * post;
}

inline void standardize(const NormStats& norm, const SensorImage& image,
                        std::array<double, kInputSize>& out) {
    for (int i = 0; i < kInputSize; ++i) out[i] = (image.values[i] - norm.mean[i]) / norm.scale[i];
}

}  // namespace detail

inline Vec3 forward(const MlpParams& params, const NormStats& norm, const SensorImage& image) {
    for (double v : image.values)
        if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite sensor image");

    std::array<double, kInputSize> z;
    detail::standardize(norm, image, z);

    std::array<double, kHiddenSize> h;
    for (int j = 0; j < kHiddenSize; ++j) {
        double pre = params.b1[j];
        const double* row = params.w1.data() + j * kInputSize;
        for (int i = 0; i < kInputSize; ++i) pre += row[i] * z[i];
        h[j] = detail::activate(params.activation, pre);
    }

    std::array<double, kOutputSize> y;
    for (int o = 0; o < kOutputSize; ++o) {
        double acc = params.b2[o];
        const double* row = params.w2.data() + o * kHiddenSize;
        for (int j = 0; j < kHiddenSize; ++j) acc += row[j] * h[j];
        y[o] = acc;
    }
    return {y[0], y[1], y[2]};
}

// Mean over samples of the squared Euclidean distance between prediction and
// target, so the reported loss is mm^2.
inline double mse_loss(const MlpParams& params, const NormStats& norm,
                       const std::vector<SensorImage>& images, const std::vector<Vec3>& targets) {
    if (images.empty()) throw std::invalid_argument("mse_loss: empty batch");
    if (images.size() != targets.size())
        throw std::invalid_argument("mse_loss: images/targets length mismatch");
    double acc = 0.0;
    for (std::size_t s = 0; s < images.size(); ++s)
        acc += (forward(params, norm, images[s]) - targets[s]).norm2();
    return acc / static_cast<double>(images.size());
}

// Analytic gradient of mse_loss. Returns the loss at the current parameters
// (the backward pass shares the forward computation).
inline double grad(const MlpParams& params, const NormStats& norm,
                   const std::vector<SensorImage>& images, const std::vector<Vec3>& targets,
                   MlpGrad& out) {
    if (images.empty()) throw std::invalid_argument("grad: empty batch");
    if (images.size() != targets.size())
        throw std::invalid_argument("grad: images/targets length mismatch");

    out = MlpGrad{};
    const double inv_n = 1.0 / static_cast<double>(images.size());
    double loss = 0.0;

    std::array<double, kInputSize> z;
    std::array<double, kHiddenSize> pre, h;
    for (std::size_t s = 0; s < images.size(); ++s) {
        detail::standardize(norm, images[s], z);
        for (int j = 0; j < kHiddenSize; ++j) {
            double p = params.b1[j];
            const double* row = params.w1.data() + j * kInputSize;
            for (int i = 0; i < kInputSize; ++i) p += row[i] * z[i];
            pre[j] = p;
            h[j] = detail::activate(params.activation, p);
        }
        std::array<double, kOutputSize> res;
        const Vec3& target = targets[s];
        for (int o = 0; o < kOutputSize; ++o) {
            double acc = params.b2[o];
            const double* row = params.w2.data() + o * kHiddenSize;
            for (int j = 0; j < kHiddenSize; ++j) acc += row[j] * h[j];
            res[o] = acc - (o == 0 ? target.x : o == 1 ? target.y : target.z);
            loss += res[o] * res[o] * inv_n;
        }

        // dL/dy_o = 2 * res_o / N
        std::array<double, kHiddenSize> dh{};
        for (int o = 0; o < kOutputSize; ++o) {
            double dy = 2.0 * res[o] * inv_n;
            double* gw2 = out.w2.data() + o * kHiddenSize;
            const double* w2row = params.w2.data() + o * kHiddenSize;
            for (int j = 0; j < kHiddenSize; ++j) {
                gw2[j] += dy * h[j];
                dh[j] += dy * w2row[j];
            }
            out.b2[o] += dy;
        }
        for (int j = 0; j < kHiddenSize; ++j) {
            double dpre = dh[j] * detail::activate_deriv(params.activation, pre[j], h[j]);
            if (dpre == 0.0) continue;
            double* gw1 = out.w1.data() + j * kInputSize;
            for (int i = 0; i < kInputSize; ++i) gw1[i] += dpre * z[i];
            out.b1[j] += dpre;
        }
    }
    return loss;
}

// Seeded uniform init in +/- init_scale/sqrt(fan_in), drawn in a fixed order
// (w1 row-major, b1, w2 row-major, b2).
inline MlpParams init_params(std::uint64_t seed, double init_scale, Activation activation) {
    if (!(init_scale > 0.0)) throw std::invalid_argument("init_params: init_scale must be > 0");
    MlpParams p;
    p.activation = activation;
    Rng rng(seed);
    const double a1 = init_scale / std::sqrt(static_cast<double>(kInputSize));
    const double a2 = init_scale / std::sqrt(static_cast<double>(kHiddenSize));
    for (auto& w : p.w1) w = rng.uniform(-a1, a1);
    for (auto& b : p.b1) b = rng.uniform(-a1, a1);
    for (auto& w : p.w2) w = rng.uniform(-a2, a2);
    for (auto& b : p.b2) b = rng.uniform(-a2, a2);
    return p;
}

// Per-sensor mean/std over the training images, std floored at kScaleFloor.
// Floored sensor indices (constant inputs) are reported through `floored`.
inline NormStats compute_norm_stats(const std::vector<SensorImage>& images,
                                    std::vector<int>* floored = nullptr) {
    if (images.empty()) throw std::invalid_argument("compute_norm_stats: no images");
    NormStats norm;
    const double inv_n = 1.0 / static_cast<double>(images.size());
    for (int i = 0; i < kInputSize; ++i) {
        double sum = 0.0;
        for (const auto& img : images) sum += img.values[i];
        double mean = sum * inv_n;
        double sq = 0.0;
        for (const auto& img : images) {
            double d = img.values[i] - mean;
            sq += d * d;
        }
        double sd = std::sqrt(sq * inv_n);
        norm.mean[i] = mean;
        if (sd < kScaleFloor) {
            sd = kScaleFloor;
            if (floored) floored->push_back(i);
        }
        norm.scale[i] = sd;
    }
    return norm;
}

// Full-batch gradient descent on the point-log sensor images. One training
// sample per point log (the frame mean), targets are the ground-truth touch
// locations.
inline TrainedLocalizer train(const CalibrationDataset& dataset, const SurfacePointSet& surface,
                              const TrainConfig& config) {
    if (dataset.point_logs.empty()) throw std::invalid_argument("train: dataset has no point logs");
    if (surface.points.empty()) throw std::invalid_argument("train: empty surface point set");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

    std::vector<SensorImage> images;
    std::vector<Vec3> targets;
    images.reserve(dataset.point_logs.size());
    targets.reserve(dataset.point_logs.size());
    for (const auto& log : dataset.point_logs) {
        images.push_back(sensor_image(log, dataset.baseline));
        targets.push_back(log.location);
    }

    TrainedLocalizer loc;
    loc.surface = surface;
    loc.norm = compute_norm_stats(images, &loc.floored_inputs);
    loc.params = init_params(config.seed, config.init_scale, config.activation);
    loc.loss_history.reserve(config.epochs);

    MlpGrad g;
    const double lr = config.learning_rate;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double loss = grad(loc.params, loc.norm, images, targets, g);
        loc.loss_history.push_back(loss);
        for (std::size_t k = 0; k < g.w1.size(); ++k) loc.params.w1[k] -= lr * g.w1[k];
        for (std::size_t k = 0; k < g.b1.size(); ++k) loc.params.b1[k] -= lr * g.b1[k];
        for (std::size_t k = 0; k < g.w2.size(); ++k) loc.params.w2[k] -= lr * g.w2[k];
        for (std::size_t k = 0; k < g.b2.size(); ++k) loc.params.b2[k] -= lr * g.b2[k];
    }
    return loc;
}

// Forward pass, then projection onto the localizer's surface point set. The
// result is always an element of that set.
inline SurfaceProjection predict(const TrainedLocalizer& localizer, const SensorImage& image) {
    Vec3 raw = forward(localizer.params, localizer.norm, image);
    return nearest_surface_point(raw, localizer.surface);
}

// --- model files -------------------------------------------------------------

inline constexpr const char* kModelVersion = "v1";

inline void save_localizer(const TrainedLocalizer& loc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    nlohmann::json surface_points = nlohmann::json::array();
    for (const auto& p : loc.surface.points) surface_points.push_back({p.x, p.y, p.z});
    nlohmann::json j{{"version", kModelVersion},
                     {"params",
                      {{"activation", to_string(loc.params.activation)},
                       {"w1", loc.params.w1},
                       {"b1", loc.params.b1},
                       {"w2", loc.params.w2},
                       {"b2", loc.params.b2}}},
                     {"norm", {{"mean", loc.norm.mean}, {"scale", loc.norm.scale}}},
                     {"surface_spacing", loc.surface.spacing},
                     {"surface_points", std::move(surface_points)},
                     {"loss_history", loc.loss_history}};
    out << j.dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline TrainedLocalizer load_localizer(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path + ": corrupt model file: " + e.what());
    }
    if (!j.contains("version"))
        throw SchemaError(path + ": corrupt model file: missing version");
    if (j["version"] != kModelVersion)
        throw SchemaError(path + ": unsupported model version '" +
                          j["version"].get<std::string>() + "' (expected '" + kModelVersion +
                          "')");
    TrainedLocalizer loc;
    try {
        const auto& params = j.at("params");
        loc.params.activation = activation_from_string(params.at("activation").get<std::string>());
        loc.params.w1 = detail::json_to_array<kHiddenSize * kInputSize>(params.at("w1"), path);
        loc.params.b1 = detail::json_to_array<kHiddenSize>(params.at("b1"), path);
        loc.params.w2 = detail::json_to_array<kOutputSize * kHiddenSize>(params.at("w2"), path);
        loc.params.b2 = detail::json_to_array<kOutputSize>(params.at("b2"), path);
        loc.norm.mean = detail::json_to_array<kInputSize>(j.at("norm").at("mean"), path);
        loc.norm.scale = detail::json_to_array<kInputSize>(j.at("norm").at("scale"), path);
        loc.surface.spacing = j.at("surface_spacing").get<double>();
        for (const auto& p : j.at("surface_points"))
            loc.surface.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        loc.loss_history = j.at("loss_history").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path + ": corrupt model file: " + e.what());
    }
    if (loc.surface.points.empty())
        throw SchemaError(path + ": corrupt model file: empty surface point set");
    return loc;
}

}  // namespace skintact
