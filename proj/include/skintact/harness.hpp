#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "skintact/collect.hpp"
#include "skintact/localizer.hpp"

namespace skintact {

// Sweep protocol: for each replicate seed, collect one shared validation set
// and training datasets of each size, train a localizer per size, and report
// localization error and dataset SNR per (size, seed) cell.
struct ExperimentConfig {
    std::vector<int> train_sizes{20, 50, 80, 100};
    int validation_size = 20;
    SamplingStrategy train_strategy = SamplingStrategy::random_edge;
    // Nested mode makes each size's logs a prefix of the largest dataset, so
    // the SNR-vs-size trend is exact instead of statistical. Independent mode
    // collects every size from scratch.
    bool nested = true;
    std::vector<std::uint64_t> replicate_seeds{101, 102, 103, 104, 105};
    std::uint64_t layout_seed = 7;
    SkinConfig skin{};
    NoiseSpec noise{};  // noise.seed is ignored; per-replicate seeds are derived
    CollectConfig collect{};
    TrainConfig train{};
    double surface_spacing = 1.0;
};

// One trained model evaluated on the shared validation set.
struct ErrorEntry {
    int train_size = 0;
    std::uint64_t replicate_seed = 0;
    double mean_error_mm = 0.0;
    double std_error_mm = 0.0;  // population std
    std::vector<double> per_sample_errors;
};

struct ErrorReport {
    std::vector<ErrorEntry> per_model;  // ordered by (replicate, size)
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double pearson_r = 0.0;
    bool r_defined = true;  // false when ys have zero variance (r reported as 0)
};

struct SnrSweepReport {
    struct SizeSnr {
        int train_size = 0;
        double mean_snr_db = 0.0;  // mean over replicates of dataset mean SNR
    };
    std::vector<SizeSnr> per_size;
    LinearFit fit;  // mean SNR vs train size
};

struct SweepResult {
    ErrorReport errors;
    SnrSweepReport snr;
};

inline ErrorEntry localization_error(const TrainedLocalizer& localizer,
                                     const CalibrationDataset& validation) {
    if (validation.point_logs.empty())
        throw std::invalid_argument("localization_error: empty validation set");
    ErrorEntry entry;
    entry.per_sample_errors.reserve(validation.point_logs.size());
    double sum = 0.0;
    for (const auto& log : validation.point_logs) {
        SensorImage img = sensor_image(log, validation.baseline);
        SurfaceProjection proj = predict(localizer, img);
        double err = distance(proj.point, log.location);
        entry.per_sample_errors.push_back(err);
        sum += err;
    }
    const double n = static_cast<double>(entry.per_sample_errors.size());
    entry.mean_error_mm = sum / n;
    double sq = 0.0;
    for (double e : entry.per_sample_errors) {
        double d = e - entry.mean_error_mm;
        sq += d * d;
    }
    entry.std_error_mm = std::sqrt(sq / n);
    return entry;
}

// Ordinary least squares fit of ys on xs with the Pearson correlation.
inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("linear_fit: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("linear_fit: need at least 2 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("linear_fit: all xs equal");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        fit.pearson_r = sxy / std::sqrt(sxx * syy);
        fit.pearson_r = std::clamp(fit.pearson_r, -1.0, 1.0);
    } else {
        fit.pearson_r = 0.0;
        fit.r_defined = false;
    }
    return fit;
}

namespace detail {

inline CalibrationDataset dataset_prefix(const CalibrationDataset& master, int n) {
    CalibrationDataset sub;
    sub.point_logs.assign(master.point_logs.begin(), master.point_logs.begin() + n);
    sub.baseline = master.baseline;
    sub.strategy = master.strategy;
    sub.seed = master.seed;
    return sub;
}

inline void check_validation_isolation(const CalibrationDataset& training,
                                       const CalibrationDataset& validation) {
    for (const auto& t : training.point_logs)
        for (const auto& v : validation.point_logs)
            if (t.location == v.location)
                throw std::runtime_error(
                    "sweep: validation location coincides with a training location");
}

}  // namespace detail

inline SweepResult run_size_sweep(const SurfaceMesh& mesh, const SurfaceChart& chart,
                                  const ExperimentConfig& config) {
    if (config.train_sizes.empty())
        throw std::invalid_argument("run_size_sweep: train_sizes is empty");
    if (!std::is_sorted(config.train_sizes.begin(), config.train_sizes.end()) ||
        config.train_sizes.front() < 1)
        throw std::invalid_argument("run_size_sweep: train_sizes must be ascending and positive");
    if (config.validation_size < 1)
        throw std::invalid_argument("run_size_sweep: validation_size must be >= 1");
    if (config.replicate_seeds.empty())
        throw std::invalid_argument("run_size_sweep: need at least one replicate seed");
    if (config.nested && config.train_strategy != SamplingStrategy::random_edge)
        throw std::invalid_argument(
            "run_size_sweep: nested datasets require the random_edge strategy");

    const SurfacePointSet surface = discretize_surface(mesh, config.surface_spacing);
    const SensorGrid grid = build_skin(mesh, chart, config.layout_seed, config.skin);
    const int max_size = config.train_sizes.back();

    SweepResult result;
    std::vector<std::vector<double>> snr_cells(config.train_sizes.size());

    for (std::uint64_t rep_seed : config.replicate_seeds) {
        NoiseSpec val_noise = config.noise;
        val_noise.seed = derive_seed(rep_seed, "validation");
        CalibrationDataset validation =
            collect_dataset(mesh, grid, SamplingStrategy::random_edge, config.validation_size,
                            val_noise, config.collect);

        CalibrationDataset master;
        if (config.nested) {
            NoiseSpec train_noise = config.noise;
            train_noise.seed = derive_seed(rep_seed, "training");
            master = collect_dataset(mesh, grid, config.train_strategy, max_size, train_noise,
                                     config.collect);
        }

        for (std::size_t si = 0; si < config.train_sizes.size(); ++si) {
            const int n = config.train_sizes[si];
            CalibrationDataset training;
            if (config.nested) {
                training = detail::dataset_prefix(master, n);
            } else {
                NoiseSpec train_noise = config.noise;
                train_noise.seed = derive_seed(rep_seed, "training-" + std::to_string(n));
                training = collect_dataset(mesh, grid, config.train_strategy, n, train_noise,
                                           config.collect);
            }
            detail::check_validation_isolation(training, validation);

            TrainConfig tc = config.train;
            tc.seed = derive_seed(rep_seed, "init");
            TrainedLocalizer model = train(training, surface, tc);

            ErrorEntry entry = localization_error(model, validation);
            entry.train_size = n;
            entry.replicate_seed = rep_seed;
            result.errors.per_model.push_back(std::move(entry));

            snr_cells[si].push_back(compute_snr(training).mean_db);
        }
    }

    std::vector<double> xs, ys;
    for (std::size_t si = 0; si < config.train_sizes.size(); ++si) {
        double mean = 0.0;
        for (double v : snr_cells[si]) mean += v;
        mean /= static_cast<double>(snr_cells[si].size());
        result.snr.per_size.push_back({config.train_sizes[si], mean});
        xs.push_back(static_cast<double>(config.train_sizes[si]));
        ys.push_back(mean);
    }
    if (xs.size() >= 2) result.snr.fit = linear_fit(xs, ys);
    return result;
}

// --- reports -----------------------------------------------------------------

enum class ReportFormat { csv, json };

namespace detail {

struct SizeSummary {
    int train_size;
    double mean_error_mm;  // pooled over replicates (equal cell sizes)
    double std_error_mm;   // population std of the pooled per-sample errors
    double mean_snr_db;
};

inline std::vector<SizeSummary> summarize(const SweepResult& result) {
    std::vector<SizeSummary> rows;
    for (const auto& size_snr : result.snr.per_size) {
        std::vector<double> pooled;
        for (const auto& entry : result.errors.per_model)
            if (entry.train_size == size_snr.train_size)
                pooled.insert(pooled.end(), entry.per_sample_errors.begin(),
                              entry.per_sample_errors.end());
        double mean = 0.0;
        for (double e : pooled) mean += e;
        mean /= static_cast<double>(pooled.size());
        double sq = 0.0;
        for (double e : pooled) sq += (e - mean) * (e - mean);
        rows.push_back({size_snr.train_size, mean,
                        std::sqrt(sq / static_cast<double>(pooled.size())), size_snr.mean_snr_db});
    }
    return rows;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void emit_report(const SweepResult& result, const std::string& path, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report file: " + path);

    const auto rows = detail::summarize(result);
    if (format == ReportFormat::csv) {
        out << "train_size,mean_error_mm,std_error_mm,mean_snr_db\n";
        for (const auto& r : rows)
            out << r.train_size << "," << detail::format_double(r.mean_error_mm) << ","
                << detail::format_double(r.std_error_mm) << ","
                << detail::format_double(r.mean_snr_db) << "\n";
    } else {
        nlohmann::json sizes = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json per_model = nlohmann::json::array();
            for (const auto& entry : result.errors.per_model) {
                if (entry.train_size != r.train_size) continue;
                per_model.push_back({{"replicate_seed", entry.replicate_seed},
                                     {"mean_error_mm", entry.mean_error_mm},
                                     {"std_error_mm", entry.std_error_mm},
                                     {"per_sample_errors", entry.per_sample_errors}});
            }
            sizes.push_back({{"train_size", r.train_size},
                             {"mean_error_mm", r.mean_error_mm},
                             {"std_error_mm", r.std_error_mm},
                             {"mean_snr_db", r.mean_snr_db},
                             {"per_model", std::move(per_model)}});
        }
        nlohmann::json j{{"schema", "sweep-report-v1"},
                         {"sizes", std::move(sizes)},
                         {"snr_fit",
                          {{"slope", result.snr.fit.slope},
                           {"intercept", result.snr.fit.intercept},
                           {"pearson_r", result.snr.fit.pearson_r},
                           {"r_defined", result.snr.fit.r_defined}}}};
        // Descriptive leveling-off indicator: error change across the last two
        // sizes vs the first two. Reported, never asserted.
        if (rows.size() >= 3) {
            j["leveling"] = {
                {"early_delta_mm", rows[1].mean_error_mm - rows[0].mean_error_mm},
                {"late_delta_mm",
                 rows[rows.size() - 1].mean_error_mm - rows[rows.size() - 2].mean_error_mm}};
        }
        out << j.dump(2) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace skintact
